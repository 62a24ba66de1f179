use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use edgefem::experiments::{run_convergence, run_preasymptotic, run_probe, run_quadcheck, ExperimentConfig};

#[derive(Parser)]
#[command(name = "edgefem", version, about = "Edge element Maxwell solver with configurable quadrature")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify every built-in quadrature rule (and optional custom rules).
    QuadCheck(Common),
    /// Convergence study on the manufactured cube problem.
    Convergence(Common),
    /// Plateau study for oscillatory permittivity.
    Preasymptotic(Common),
    /// Consistency or curved-element quadrature probe.
    Probe(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit with code 2 when a configured expectation is violated.
    #[arg(long)]
    assert: bool,
}

fn run(cmd: &Command) -> edgefem::error::Result<(Vec<String>, bool)> {
    let common = match cmd {
        Command::QuadCheck(c) | Command::Convergence(c) | Command::Preasymptotic(c) | Command::Probe(c) => c,
    };
    let cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let out = common
        .out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let violations = match cmd {
        Command::QuadCheck(_) => {
            let r = run_quadcheck(&cfg, Some(&out))?;
            for c in &r.rules {
                println!("{:<16} degree {:>2} exact={} tight={}", c.label, c.declared, c.passes_declared, c.tight);
            }
            r.violations
        }
        Command::Convergence(_) => {
            let r = run_convergence(&cfg, Some(&out))?;
            for rec in &r.records {
                println!("n={:<3} dofs={:<7} hcurl={:.6e} iters={}", rec.n, rec.dofs, rec.hcurl_error, rec.iters);
            }
            if let Some(f) = r.fit {
                println!("slope vs dofs: {:.4}", f.slope);
            }
            r.violations
        }
        Command::Preasymptotic(_) => {
            let r = run_preasymptotic(&cfg, Some(&out))?;
            for rec in &r.records {
                println!("n={:<3} dofs={:<7} hcurl={:.6e}", rec.n, rec.dofs, rec.hcurl_error);
            }
            println!("plateau exit: {:?}", r.plateau_exit);
            r.violations
        }
        Command::Probe(_) => {
            let r = run_probe(&cfg, Some(&out))?;
            for p in &r.points {
                println!("{:.6e} {:.6e}", p.x, p.error);
            }
            match (r.exact, r.fit) {
                (true, _) => println!("slope: exact"),
                (false, Some(f)) => println!("slope: {:.4}", f.slope),
                (false, None) => println!("slope: unavailable"),
            }
            r.violations
        }
    };
    println!("results written to {}", out.display());
    Ok((violations, common.assert))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok((violations, assert)) => {
            for v in &violations {
                eprintln!("violation: {v}");
            }
            if assert && !violations.is_empty() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
