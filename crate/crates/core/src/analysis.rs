//! Error norms, log-log rate fits and quadrature consistency probes.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::{combine, evaluate_forms, physical_basis, CVector3, Coefficients, MatrixCoeff, QuadratureConfig, SolutionField, VectorCoeff};
use crate::error::{Error, Result};
use crate::mesh::{element_map, CurvedMap, TetMesh, TET_EDGES};
use crate::quadrature::{rule_for_degree, tensorized_gl, RefQuadratureRule};
use crate::reference_element::{orientation_key, CurlBasis, REF_VERTICES};

/// `L²` and curl errors of a discrete field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HcurlError {
    pub l2: f64,
    pub curl: f64,
}

impl HcurlError {
    pub fn hcurl(&self) -> f64 {
        self.l2.hypot(self.curl)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub n: usize,
    pub h: f64,
    /// Free (unconstrained) DOFs.
    pub dofs: usize,
    pub l2_error: f64,
    pub curl_error: f64,
    pub hcurl_error: f64,
    pub iters: usize,
}

impl ErrorRecord {
    pub fn new(n: usize, h: f64, dofs: usize, err: HcurlError, iters: usize) -> Self {
        Self {
            n,
            h,
            dofs,
            l2_error: err.l2,
            curl_error: err.curl,
            hcurl_error: err.hcurl(),
            iters,
        }
    }
}

/// Element-wise integration of `|E − E_h|²` and `|curl E − curl E_h|²` with
/// a rule of certified degree `≥ quad_degree`.
pub fn hcurl_error<E, C>(sol: &SolutionField, exact: E, exact_curl: C, quad_degree: usize) -> HcurlError
where
    E: Fn(&Vector3<f64>) -> CVector3 + Sync,
    C: Fn(&Vector3<f64>) -> CVector3 + Sync,
{
    let mesh = sol.mesh();
    let k = sol.order();
    let rule = rule_for_degree(quad_degree);
    let basis = CurlBasis::new(k).expect("solution order is valid");
    let tables: Vec<_> = rule.points().iter().map(|p| basis.eval_both(p)).collect();
    let per_tet: Vec<(f64, f64)> = (0..mesh.n_tets())
        .into_par_iter()
        .map(|t| {
            let map = element_map(mesh, t).expect("mesh tets are non-degenerate");
            let key = orientation_key(mesh.tets()[t]);
            let coef = sol.element_dofs(t);
            let vol = map.det().abs();
            let mut acc = (0.0, 0.0);
            for ((p, w), (v, c)) in rule.points().iter().zip(rule.weights()).zip(&tables) {
                let (bv, bc) = physical_basis(k, &key, &map, v, c);
                let (e, ce) = combine(&coef, &bv, &bc);
                let x = map.apply(p);
                acc.0 += (exact(&x) - e).norm_squared() * w * vol;
                acc.1 += (exact_curl(&x) - ce).norm_squared() * w * vol;
            }
            acc
        })
        .collect();
    let (l2, curl) = per_tet.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    HcurlError {
        l2: l2.sqrt(),
        curl: curl.sqrt(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
}

/// Least-squares line through `(log x, log y)`.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<RateFit> {
    let n = xs.len().min(ys.len());
    if n < 3 {
        return Err(Error::TooFewPoints(n));
    }
    let lx: Vec<f64> = xs[..n].iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys[..n].iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n as f64;
    let my = ly.iter().sum::<f64>() / n as f64;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / n as f64)
        .sqrt();
    Ok(RateFit {
        slope,
        intercept,
        points: n,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateAxis {
    H,
    Dofs,
}

/// Fit of the H(curl) error against `h` or free DOFs over the last `window` records.
pub fn fit_rate(records: &[ErrorRecord], axis: RateAxis, window: usize) -> Result<RateFit> {
    if window < 3 || records.len() < window {
        return Err(Error::TooFewPoints(window.min(records.len())));
    }
    let tail = &records[records.len() - window..];
    let xs: Vec<f64> = tail
        .iter()
        .map(|r| match axis {
            RateAxis::H => r.h,
            RateAxis::Dofs => r.dofs as f64,
        })
        .collect();
    let ys: Vec<f64> = tail.iter().map(|r| r.hcurl_error).collect();
    fit_loglog(&xs, &ys)
}

/// First index `i ≥ 1` with `err[i] ≤ 0.8 err[i − 1]`.
pub fn plateau_exit(records: &[ErrorRecord]) -> Option<usize> {
    (1..records.len()).find(|&i| records[i].hcurl_error <= 0.8 * records[i - 1].hcurl_error)
}

/// `|Φ(U,V) − Φ̃_h(U,V)|` and `|F(V) − F̃_h(V)|`, with `Φ, F` evaluated by
/// [`QuadratureConfig::reference`] rules.
pub fn consistency_error(
    mesh: &TetMesh,
    k: usize,
    coeffs: &Coefficients,
    config: &QuadratureConfig,
    u: &[Complex64],
    v: &[Complex64],
) -> Result<(f64, f64)> {
    let (phi_h, f_h) = evaluate_forms(mesh, k, coeffs, config, u, v)?;
    let (phi, f) = evaluate_forms(mesh, k, coeffs, &QuadratureConfig::reference(k, coeffs), u, v)?;
    Ok(((phi - phi_h).norm(), (f - f_h).norm()))
}

/// Discrete `‖U‖_{H(curl)}` computed exactly (degree-`2k` rule).
pub fn discrete_hcurl_norm(mesh: &TetMesh, k: usize, u: &[Complex64]) -> Result<f64> {
    let coeffs = Coefficients {
        mu_inv: MatrixCoeff::scalar(1.0),
        eps: MatrixCoeff::scalar(-1.0),
        omega: 1.0,
        current: VectorCoeff::Zero,
    };
    let (phi, _) = evaluate_forms(mesh, k, &coeffs, &QuadratureConfig::uniform(rule_for_degree(2 * k)), u, u)?;
    Ok(phi.re.max(0.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurvedMode {
    /// `∫ M U · V`.
    Mass,
    /// `∫ M curl U · curl V`.
    CurlCurl,
    /// `∫ J · V`.
    Load,
}

/// Integrand of the curved-element probe: trial/test fields are given by
/// reference DOF vectors pushed through the curved covariant Piola map.
#[derive(Debug, Clone)]
pub struct CurvedIntegrand {
    pub k: usize,
    pub mode: CurvedMode,
    pub coeff: MatrixCoeff,
    pub source: VectorCoeff,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvedError {
    /// `|∫ − Q|`.
    pub error: f64,
    /// `error` divided by the product of the natural norms of the mode
    /// (`‖U‖‖V‖`, `‖curl U‖‖curl V‖` or `‖J‖‖V‖`).
    pub normalized: f64,
}

struct CurvedSums {
    value: Complex64,
    norm_sq: [f64; 5],
}

fn curved_sums(map: &CurvedMap, f: &CurvedIntegrand, rule: &RefQuadratureRule) -> Result<CurvedSums> {
    let basis = CurlBasis::new(f.k)?;
    for w in [&f.u, &f.v] {
        if w.len() != basis.n_dofs() {
            return Err(Error::DimensionMismatch {
                expected: basis.n_dofs(),
                got: w.len(),
            });
        }
    }
    let mut value = Complex64::new(0.0, 0.0);
    let mut norm_sq = [0.0; 5];
    for (p, w) in rule.points().iter().zip(rule.weights()) {
        let jac = map.jacobian(p);
        let det = jac.determinant();
        if det <= 0.0 {
            return Err(Error::InvertedElement {
                det,
                point: [p.x, p.y, p.z],
            });
        }
        let inv_t: Matrix3<f64> = jac.try_inverse().ok_or(Error::SingularJacobian(det))?.transpose();
        let (vals, curls) = basis.eval_both(p);
        let field = |c: &[f64]| {
            let (v, cv) = vals
                .iter()
                .zip(&curls)
                .zip(c)
                .fold((Vector3::zeros(), Vector3::zeros()), |(a, b), ((v, cu), s)| (a + v * *s, b + cu * *s));
            (inv_t * v, jac * cv / det)
        };
        let (uu, cu) = field(&f.u);
        let (vv, cv) = field(&f.v);
        let x = map.apply(p);
        let dx = w * det;
        let cx = |v: Vector3<f64>| v.map(|c| Complex64::new(c, 0.0));
        let integrand = match f.mode {
            CurvedMode::Mass => (f.coeff.at(&x) * cx(uu)).dot(&cx(vv)),
            CurvedMode::CurlCurl => (f.coeff.at(&x) * cx(cu)).dot(&cx(cv)),
            CurvedMode::Load => f.source.at(&x).dot(&cx(vv)),
        };
        value += integrand * dx;
        let j = f.source.at(&x).norm_squared();
        for (acc, q) in norm_sq
            .iter_mut()
            .zip([uu.norm_squared(), vv.norm_squared(), cu.norm_squared(), cv.norm_squared(), j])
        {
            *acc += q * dx;
        }
    }
    Ok(CurvedSums { value, norm_sq })
}

/// Quadrature error of `rule` on a curved element against a
/// `tensorized_gl(10)` reference pushed through the same map.
pub fn curved_local_error(map: &CurvedMap, integrand: &CurvedIntegrand, rule: &RefQuadratureRule) -> Result<CurvedError> {
    let q = curved_sums(map, integrand, rule)?;
    let r = curved_sums(map, integrand, &tensorized_gl(10))?;
    let error = (r.value - q.value).norm();
    let [u, v, cu, cv, j] = r.norm_sq.map(f64::sqrt);
    let scale = match integrand.mode {
        CurvedMode::Mass => u * v,
        CurvedMode::CurlCurl => cu * cv,
        CurvedMode::Load => j * v,
    };
    Ok(CurvedError {
        error,
        normalized: if scale > 0.0 { error / scale } else { error },
    })
}

/// Member `s` of a shrinking family of quadratic tetrahedra with fixed
/// shape: `T_s(x̂) = x₀ + s A x̂ + s² B(x̂)`, where `B` displaces the
/// mid-edge nodes. The bulge shrinks like `s²`, so the curvature relative to
/// the element size stays bounded as required of a regular curved family.
pub fn curved_family(s: f64) -> Result<CurvedMap> {
    let x0 = Vector3::new(0.2, -0.1, 0.3);
    let a = Matrix3::new(1.0, 0.2, 0.1, 0.1, 0.9, 0.2, -0.1, 0.15, 1.1);
    let bulge = [
        Vector3::new(0.0, -0.08, 0.05),
        Vector3::new(0.06, 0.0, -0.04),
        Vector3::new(-0.05, 0.07, 0.0),
        Vector3::new(0.05, 0.05, 0.06),
        Vector3::new(0.04, -0.03, 0.05),
        Vector3::new(-0.03, 0.06, 0.04),
    ];
    let refv = REF_VERTICES.map(Vector3::from);
    let mut nodes = [Vector3::zeros(); 10];
    for i in 0..4 {
        nodes[i] = x0 + a * refv[i] * s;
    }
    for (e, [p, q]) in TET_EDGES.iter().enumerate() {
        nodes[4 + e] = x0 + a * ((refv[*p] + refv[*q]) * 0.5) * s + bulge[e] * (s * s);
    }
    CurvedMap::new(nodes)
}

/// CSV with header `n,h,dofs,l2_error,curl_error,hcurl_error,iters`, 17
/// significant digits.
pub fn records_csv(records: &[ErrorRecord]) -> String {
    let mut s = String::from("n,h,dofs,l2_error,curl_error,hcurl_error,iters\n");
    for r in records {
        writeln!(
            s,
            "{},{:.16e},{},{:.16e},{:.16e},{:.16e},{}",
            r.n, r.h, r.dofs, r.l2_error, r.curl_error, r.hcurl_error, r.iters
        )
        .unwrap();
    }
    s
}

/// Whitespace-separated columns for gnuplot, with a commented header.
pub fn records_dat(records: &[ErrorRecord]) -> String {
    let mut s = String::from("# n h dofs l2_error curl_error hcurl_error iters\n");
    for r in records {
        writeln!(
            s,
            "{} {:.16e} {} {:.16e} {:.16e} {:.16e} {}",
            r.n, r.h, r.dofs, r.l2_error, r.curl_error, r.hcurl_error, r.iters
        )
        .unwrap();
    }
    s
}

pub fn write_records_csv(records: &[ErrorRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, records_csv(records)).map_err(|e| Error::io(path, e))
}
