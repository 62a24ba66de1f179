//! Local quadrature error on shrinking quadratic tetrahedra.

use edgefem::analysis::CurvedMode;
use edgefem::experiments::{run_probe, ExperimentConfig, ProbeSpec, RuleSpec, PROBE_SEED};

fn main() -> edgefem::error::Result<()> {
    for mode in [CurvedMode::Mass, CurvedMode::CurlCurl, CurvedMode::Load] {
        for rule in ["pt1_centroid", "pt4", "pt5", "keast11", "pt15"] {
            let cfg = ExperimentConfig {
                probe: Some(ProbeSpec::Curved {
                    mode,
                    rule: RuleSpec::Label(rule.into()),
                    scales: vec![1.0, 0.5, 0.25, 0.125],
                    seed: PROBE_SEED,
                }),
                ..Default::default()
            };
            let rep = run_probe(&cfg, None)?;
            println!("{mode:?} k=1 {rule:<13} slope {:.2}", rep.fit.map_or(f64::NAN, |f| f.slope));
        }
    }
    Ok(())
}
