//! Convergence with a compliant and a reduced mass rule (lowest order).

use edgefem::experiments::{run_convergence, ExperimentConfig, QuadratureSpec};

fn main() -> edgefem::error::Result<()> {
    for (name, q2) in [("centroid mass rule", "pt1_centroid"), ("off-center mass rule", "pt1_offcenter")] {
        let cfg = ExperimentConfig {
            meshes: Some(vec![2, 4, 6, 8, 12]),
            quadrature: QuadratureSpec::labels("pt1_offcenter", q2, "pt1_offcenter"),
            ..Default::default()
        };
        let report = run_convergence(&cfg, None)?;
        println!("{name}");
        for r in &report.records {
            println!("  n = {:>2}  dofs = {:>6}  error = {:.4e}", r.n, r.dofs, r.hcurl_error);
        }
        if let Some(fit) = report.fit {
            println!("  slope vs dofs {:.3}", fit.slope);
        }
    }
    Ok(())
}
