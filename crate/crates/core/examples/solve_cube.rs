//! Assemble and solve the manufactured cube problem once, then measure the
//! H(curl) error of the discrete solution.

use edgefem::analysis::hcurl_error;
use edgefem::assembly::{assemble, QuadratureConfig};
use edgefem::catalog::{problem, ProblemId};
use edgefem::mesh::structured_cube_mesh;
use edgefem::quadrature::builtin_rule;
use edgefem::solver::{solve, DEFAULT_TOL};

fn main() -> edgefem::error::Result<()> {
    let entry = problem(ProblemId::CubePoly)?;
    let mesh = structured_cube_mesh(8);
    let quad = QuadratureConfig {
        q1: builtin_rule("pt1_centroid")?,
        q2: builtin_rule("pt1_centroid")?,
        q3: builtin_rule("pt4")?,
    };
    let system = assemble(&mesh, 1, &entry.coeffs, &quad)?;
    let (sol, report) = solve(&system, DEFAULT_TOL, 10_000)?;
    let err = hcurl_error(&sol, |x| entry.exact(x), |x| entry.exact_curl(x), 6);
    println!("{} free DOFs, CG {} iterations, residual {:.2e}", system.n_free(), report.iterations, report.relative_residual);
    println!("L2 error {:.4e}, curl error {:.4e}, H(curl) error {:.4e}", err.l2, err.curl, err.hcurl());
    Ok(())
}
