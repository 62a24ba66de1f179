//! Manufactured test problems on `[−1, 1]³`.
//!
//! Both problems share the field `E = (y² − 1)(z² − 1) e_x`, which has
//! vanishing tangential trace on the cube boundary, together with
//!
//! ```text
//! curl E      = (0, 2z(y² − 1), −2y(z² − 1))
//! curl curl E = (4 − 2y² − 2z²) e_x
//! ```
//!
//! The source is derived from the field rather than taken from a formula:
//! `J = (i/ω)(μ⁻¹ curl curl E − ω² ε E)`, so `−iωJ` is real and so is the
//! discrete solution. Coefficients are isotropic scalars times the identity.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::Vector3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::assembly::{CVector3, Coefficients, MatrixCoeff, VectorCoeff};
use crate::error::{Error, Result};

pub const MU0: f64 = 10.0;
pub const EPS0: f64 = -10.0;
pub const OMEGA: f64 = 1.0;

/// Seed of the self-check sample points.
const SELF_CHECK_SEED: u64 = 2024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ProblemId {
    /// `μ⁻¹ = 1/10`, `ε = −10`, `ω = 1`.
    CubePoly,
    /// `μ⁻¹ = 1/10`, `ε = −10 − 9 sin(mπz)`, `ω = 1`.
    CubeOscillatory(u32),
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemId::CubePoly => f.write_str("cube_poly"),
            ProblemId::CubeOscillatory(m) => write!(f, "cube_oscillatory({m})"),
        }
    }
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "cube_poly" {
            return Ok(ProblemId::CubePoly);
        }
        s.strip_prefix("cube_oscillatory(")
            .and_then(|r| r.strip_suffix(')'))
            .and_then(|m| m.trim().parse().ok())
            .map(ProblemId::CubeOscillatory)
            .ok_or_else(|| Error::Config(format!("unknown problem `{s}`")))
    }
}

impl TryFrom<String> for ProblemId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ProblemId> for String {
    fn from(p: ProblemId) -> String {
        p.to_string()
    }
}

pub fn exact_field(x: &Vector3<f64>) -> Vector3<f64> {
    Vector3::new((x.y * x.y - 1.0) * (x.z * x.z - 1.0), 0.0, 0.0)
}

pub fn exact_curl(x: &Vector3<f64>) -> Vector3<f64> {
    Vector3::new(0.0, 2.0 * x.z * (x.y * x.y - 1.0), -2.0 * x.y * (x.z * x.z - 1.0))
}

pub fn exact_curl_curl(x: &Vector3<f64>) -> Vector3<f64> {
    Vector3::new(4.0 - 2.0 * x.y * x.y - 2.0 * x.z * x.z, 0.0, 0.0)
}

fn complex(v: Vector3<f64>) -> CVector3 {
    v.map(|c| Complex64::new(c, 0.0))
}

type ScalarFn = Arc<dyn Fn(&Vector3<f64>) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct ProblemCatalogEntry {
    pub id: ProblemId,
    pub coeffs: Coefficients,
    eps: ScalarFn,
}

impl fmt::Debug for ProblemCatalogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemCatalogEntry")
            .field("id", &self.id)
            .field("coeffs", &self.coeffs)
            .finish_non_exhaustive()
    }
}

impl ProblemCatalogEntry {
    /// Builds the entry and runs the PDE residual self-check.
    pub fn new(id: ProblemId) -> Result<Self> {
        let eps: ScalarFn = match id {
            ProblemId::CubePoly => Arc::new(|_| EPS0),
            ProblemId::CubeOscillatory(m) => {
                let k = m as f64 * std::f64::consts::PI;
                Arc::new(move |x: &Vector3<f64>| EPS0 - 9.0 * (k * x.z).sin())
            }
        };
        let (eps_coeff, current_degree) = match id {
            ProblemId::CubePoly => (MatrixCoeff::scalar(EPS0), Some(4)),
            ProblemId::CubeOscillatory(_) => {
                let e = eps.clone();
                (MatrixCoeff::isotropic(move |x| e(x), None), None)
            }
        };
        let e = eps.clone();
        let current = VectorCoeff::field(
            move |x| {
                let r = exact_curl_curl(x) / MU0 - exact_field(x) * (OMEGA * OMEGA * e(x));
                complex(r) * Complex64::new(0.0, 1.0 / OMEGA)
            },
            current_degree,
        );
        let entry = Self {
            id,
            coeffs: Coefficients {
                mu_inv: MatrixCoeff::scalar(1.0 / MU0),
                eps: eps_coeff,
                omega: OMEGA,
                current,
            },
            eps,
        };
        let residual = entry.self_check();
        if !(residual <= 1e-10) {
            return Err(Error::CatalogSelfCheck {
                problem: id.to_string(),
                residual,
            });
        }
        Ok(entry)
    }

    pub fn exact(&self, x: &Vector3<f64>) -> CVector3 {
        complex(exact_field(x))
    }

    pub fn exact_curl(&self, x: &Vector3<f64>) -> CVector3 {
        complex(exact_curl(x))
    }

    pub fn eps(&self, x: &Vector3<f64>) -> f64 {
        (self.eps)(x)
    }

    /// Largest `|curl μ⁻¹ curl E − ω² ε E + iω J|` over 50 seeded points.
    pub fn self_check(&self) -> f64 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(SELF_CHECK_SEED);
        let c = &self.coeffs;
        (0..50)
            .map(|_| {
                let x = Vector3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
                let lhs = c.mu_inv.at(&x) * complex(exact_curl_curl(&x))
                    - c.eps.at(&x) * complex(exact_field(&x)) * Complex64::new(c.omega * c.omega, 0.0)
                    + c.current.at(&x) * Complex64::new(0.0, c.omega);
                lhs.norm()
            })
            .fold(0.0, f64::max)
    }
}

pub fn problem(id: ProblemId) -> Result<ProblemCatalogEntry> {
    ProblemCatalogEntry::new(id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fd_curl(f: fn(&Vector3<f64>) -> Vector3<f64>, x: &Vector3<f64>) -> Vector3<f64> {
        let h = 1e-5;
        let d = |i: usize| {
            let e = Vector3::ith(i, h);
            (f(&(x + e)) - f(&(x - e))) / (2.0 * h)
        };
        let (dx, dy, dz) = (d(0), d(1), d(2));
        Vector3::new(dy.z - dz.y, dz.x - dx.z, dx.y - dy.x)
    }

    #[test]
    fn closed_form_curls_match_finite_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let x = Vector3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
            assert_relative_eq!(fd_curl(exact_field, &x), exact_curl(&x), epsilon = 1e-8);
            assert_relative_eq!(fd_curl(exact_curl, &x), exact_curl_curl(&x), epsilon = 1e-8);
        }
    }

    #[test]
    fn tangential_trace_vanishes_on_boundary() {
        for (x, n) in [
            (Vector3::new(0.3, 1.0, 0.2), Vector3::y()),
            (Vector3::new(-0.7, 0.1, -1.0), Vector3::z()),
            (Vector3::new(1.0, 0.4, 0.5), Vector3::x()),
        ] {
            assert!(exact_field(&x).cross(&n).norm() < 1e-15);
        }
    }

    #[test]
    fn self_check_passes_for_all_problems() {
        for id in [ProblemId::CubePoly, ProblemId::CubeOscillatory(10), ProblemId::CubeOscillatory(20)] {
            let p = problem(id).unwrap();
            assert!(p.self_check() <= 1e-10);
        }
    }

    #[test]
    fn source_is_imaginary_so_load_is_real() {
        let p = problem(ProblemId::CubeOscillatory(10)).unwrap();
        let j = p.coeffs.current.at(&Vector3::new(0.1, 0.2, 0.3));
        assert!(j.iter().all(|c| c.re == 0.0));
        // −iωJ = μ⁻¹ curl curl E − ω² ε E at this point.
        let x = Vector3::new(0.1, 0.2, 0.3);
        let expected = exact_curl_curl(&x).x / MU0 - p.eps(&x) * exact_field(&x).x;
        assert_relative_eq!((j.x * Complex64::new(0.0, -1.0)).re, expected, epsilon = 1e-14);
    }

    #[test]
    fn ids_round_trip() {
        for s in ["cube_poly", "cube_oscillatory(10)", "cube_oscillatory(20)"] {
            assert_eq!(s.parse::<ProblemId>().unwrap().to_string(), s);
        }
        assert!("cube".parse::<ProblemId>().is_err());
    }
}
