//! Jacobi-preconditioned conjugate gradients and a dense LU fallback.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::assembly::{SolutionField, SparseSystem};
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DENSE_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    JacobiCg,
    DenseLu,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// `‖b − Ax‖ / ‖b‖`, recomputed from the returned iterate.
    pub relative_residual: f64,
    pub converged: bool,
    pub method: SolveMethod,
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn residual(a: &CsrMatrix, x: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.mul_vec(x).iter().zip(b).map(|(ax, bi)| bi - ax).collect()
}

/// Solves `A x = b` for Hermitian positive-definite `A`.
///
/// The loop stops on the recursive residual, then the true residual is
/// recomputed; if rounding let the two drift apart CG restarts from the
/// current iterate.
pub fn cg(a: &CsrMatrix, b: &[Complex64], tol: f64, max_iter: usize) -> Result<(Vec<Complex64>, SolveReport)> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    let zero = Complex64::new(0.0, 0.0);
    let mut x = vec![zero; n];
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok((
            x,
            SolveReport {
                iterations: 0,
                relative_residual: 0.0,
                converged: true,
                method: SolveMethod::JacobiCg,
            },
        ));
    }
    let mut inv_diag = Vec::with_capacity(n);
    for (i, d) in a.diagonal().into_iter().enumerate() {
        if !(d.re > 0.0) {
            return Err(Error::NotHpd(d.re, i));
        }
        inv_diag.push(1.0 / d.re);
    }

    let mut iterations = 0;
    let mut true_rel;
    loop {
        let mut r = residual(a, &x, b);
        true_rel = norm(&r) / b_norm;
        if true_rel <= tol || iterations >= max_iter {
            break;
        }
        let mut z: Vec<Complex64> = r.iter().zip(&inv_diag).map(|(ri, d)| ri * d).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z).re;
        while iterations < max_iter {
            iterations += 1;
            let ap = a.mul_vec(&p);
            let curvature = dot(&p, &ap).re;
            if !(curvature > 0.0) {
                return Err(Error::NotHpd(curvature, iterations));
            }
            let alpha = rz / curvature;
            for i in 0..n {
                x[i] += p[i] * alpha;
                r[i] -= ap[i] * alpha;
            }
            if norm(&r) / b_norm <= tol {
                break;
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_new = dot(&r, &z).re;
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + p[i] * beta;
            }
        }
    }
    let report = SolveReport {
        iterations,
        relative_residual: true_rel,
        converged: true_rel <= tol,
        method: SolveMethod::JacobiCg,
    };
    if report.converged {
        Ok((x, report))
    } else {
        Err(Error::NotConverged(report))
    }
}

/// Pivoted LU on the dense copy of `a`.
pub fn dense(a: &CsrMatrix, b: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = a.dim();
    if n > DENSE_LIMIT {
        return Err(Error::TooLarge {
            size: n,
            limit: DENSE_LIMIT,
        });
    }
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    dense_solve(a.to_dense(), b)
}

pub(crate) fn dense_solve(m: DMatrix<Complex64>, b: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let lu = m.lu();
    let u = lu.u();
    let min_pivot = (0..n).map(|i| u[(i, i)].norm()).fold(f64::INFINITY, f64::min);
    if scale == 0.0 || min_pivot <= 1e-14 * scale {
        return Err(Error::SingularMatrix);
    }
    lu.solve(&DVector::from_column_slice(b))
        .map(|x| x.as_slice().to_vec())
        .ok_or(Error::SingularMatrix)
}

/// CG solve of the free system; constrained DOFs come back as zeros.
pub fn solve<'m>(system: &SparseSystem<'m>, tol: f64, max_iter: usize) -> Result<(SolutionField<'m>, SolveReport)> {
    let (x, report) = cg(&system.matrix, &system.rhs, tol, max_iter)?;
    Ok((system.expand(&x), report))
}

/// Dense direct solve of the free system.
pub fn solve_dense<'m>(system: &SparseSystem<'m>) -> Result<SolutionField<'m>> {
    let x = dense(&system.matrix, &system.rhs)?;
    Ok(system.expand(&x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn random_hpd(n: usize, seed: u64) -> CsrMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let b = DMatrix::<Complex64>::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let a = b.adjoint() * &b + DMatrix::identity(n, n) * c(n as f64 * 0.1);
        let t: Vec<_> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| (i, j, a[(i, j)])).collect();
        CsrMatrix::from_triplets(n, &t)
    }

    #[test]
    fn scalar_system_one_iteration() {
        let a = CsrMatrix::from_triplets(1, &[(0, 0, c(4.0))]);
        let (x, rep) = cg(&a, &[c(2.0)], 1e-12, 10).unwrap();
        assert_eq!(x[0], c(0.5));
        assert_eq!(rep.iterations, 1);
        assert!(rep.converged);
    }

    #[test]
    fn diagonal_system_converges_immediately() {
        let n = 8;
        let t: Vec<_> = (0..n).map(|i| (i, i, c(1.0 + i as f64))).collect();
        let a = CsrMatrix::from_triplets(n, &t);
        let b: Vec<_> = (0..n).map(|i| c(i as f64 - 3.0)).collect();
        let (x, rep) = cg(&a, &b, 1e-14, n).unwrap();
        assert!(rep.iterations <= n);
        for i in 0..n {
            assert!((x[i] - b[i] / (1.0 + i as f64)).norm() < 1e-14);
        }
    }

    #[test]
    fn identity_dense() {
        let a = CsrMatrix::identity(5);
        let b: Vec<_> = (0..5).map(|i| Complex64::new(i as f64, -1.0)).collect();
        assert_eq!(dense(&a, &b).unwrap(), b);
    }

    #[test]
    fn cg_matches_dense_on_random_hpd() {
        let a = random_hpd(50, 7);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let b: Vec<_> = (0..50).map(|_| Complex64::new(rng.gen(), rng.gen())).collect();
        let xd = dense(&a, &b).unwrap();
        let (xc, rep) = cg(&a, &b, 1e-12, 1000).unwrap();
        let diff: Vec<_> = xd.iter().zip(&xc).map(|(p, q)| p - q).collect();
        assert!(norm(&diff) / norm(&xd) <= 1e-9);
        let r = residual(&a, &xc, &b);
        assert!((norm(&r) / norm(&b) - rep.relative_residual).abs() <= 1e-13);
    }

    #[test]
    fn singular_dense_rejected() {
        let a = CsrMatrix::from_triplets(2, &[(0, 0, c(1.0)), (0, 1, c(2.0))]);
        assert!(matches!(dense(&a, &[c(1.0), c(1.0)]), Err(Error::SingularMatrix)));
    }

    #[test]
    fn indefinite_detected() {
        let a = CsrMatrix::from_triplets(2, &[(0, 0, c(1.0)), (1, 1, c(1.0)), (0, 1, c(3.0)), (1, 0, c(3.0))]);
        assert!(matches!(cg(&a, &[c(1.0), c(-1.0)], 1e-12, 10), Err(Error::NotHpd(..))));
        let neg = CsrMatrix::from_triplets(1, &[(0, 0, c(-1.0))]);
        assert!(matches!(cg(&neg, &[c(1.0)], 1e-12, 10), Err(Error::NotHpd(..))));
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let a = random_hpd(30, 1);
        let b = vec![c(1.0); 30];
        match cg(&a, &b, 1e-14, 2) {
            Err(Error::NotConverged(rep)) => {
                assert!(!rep.converged);
                assert_eq!(rep.iterations, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
