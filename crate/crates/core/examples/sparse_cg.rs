//! Jacobi-preconditioned CG against dense LU on an assembled system.

use edgefem::assembly::{assemble, QuadratureConfig};
use edgefem::catalog::{problem, ProblemId};
use edgefem::mesh::structured_cube_mesh;
use edgefem::quadrature::builtin_rule;
use edgefem::solver::{cg, dense};

fn main() -> edgefem::error::Result<()> {
    let entry = problem(ProblemId::CubeOscillatory(10))?;
    let mesh = structured_cube_mesh(4);
    let system = assemble(&mesh, 1, &entry.coeffs, &QuadratureConfig::uniform(builtin_rule("pt4")?))?;
    let a = &system.matrix;
    println!("{} unknowns, {} nonzeros, Hermitian defect {:.1e}", a.dim(), a.nnz(), a.hermitian_defect());
    let (x, report) = cg(a, &system.rhs, 1e-12, 5_000)?;
    let y = dense(a, &system.rhs)?;
    let diff = x.iter().zip(&y).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt();
    let norm = y.iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt();
    println!("CG: {} iterations, relative residual {:.1e}", report.iterations, report.relative_residual);
    println!("CG vs dense LU relative difference {:.1e}", diff / norm);
    Ok(())
}
