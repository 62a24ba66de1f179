//! Decay of the sesquilinear-form consistency error under refinement.

use edgefem::experiments::{run_probe, ExperimentConfig, ProbeCoefficients, ProbeSpec, QuadratureSpec, PROBE_SEED};

fn main() -> edgefem::error::Result<()> {
    for (q2, m) in [("pt1_offcenter", 0), ("pt1_centroid", 1), ("pt4", 2)] {
        let cfg = ExperimentConfig {
            meshes: Some(vec![2, 4, 8]),
            quadrature: QuadratureSpec::labels("pt1_centroid", q2, q2),
            probe: Some(ProbeSpec::Consistency {
                coefficients: ProbeCoefficients::Smooth,
                seed: PROBE_SEED,
            }),
            ..Default::default()
        };
        let rep = run_probe(&cfg, None)?;
        let errors: Vec<String> = rep.points.iter().map(|p| format!("{:.2e}", p.error)).collect();
        println!("q2 = {q2:<13} (m = {m})  errors {}  slope {:.2}", errors.join(" "), rep.fit.map_or(f64::NAN, |f| f.slope));
    }
    Ok(())
}
