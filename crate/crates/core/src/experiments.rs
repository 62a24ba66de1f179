//! Experiment drivers behind the command-line tool: convergence studies,
//! the preasymptotic study, consistency and curved-element probes, and
//! quadrature certification.
//!
//! Each driver reads an [`ExperimentConfig`], writes its tables into an
//! output directory and returns a report whose `violations` list is empty
//! when every configured expectation holds.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::analysis::{
    curved_family, curved_local_error, discrete_hcurl_norm, consistency_error, fit_loglog, fit_rate, hcurl_error,
    plateau_exit, records_csv, records_dat, CurvedIntegrand, CurvedMode, ErrorRecord, RateAxis, RateFit,
};
use crate::assembly::{assemble, interpolate, CVector3, Coefficients, MatrixCoeff, QuadratureConfig, VectorCoeff};
use crate::catalog::{problem, ProblemId};
use crate::error::{Error, Result};
use crate::mesh::structured_cube_mesh;
use crate::quadrature::{
    builtin_rule, keast_degree4, parse_rules, rule_for_degree, tensorized_gl, verify_exactness, BuiltinRule,
    RefQuadratureRule,
};
use crate::reference_element::CurlBasis;
use crate::solver::{solve, DEFAULT_TOL};

/// Seed of every random probe field.
pub const PROBE_SEED: u64 = 20_240_917;

/// A quadrature rule by label (`"pt4"`, `"keast11"`), by minimal certified
/// degree (`{"degree": 3}`) or as a collapsed Gauss-Legendre product
/// (`{"tensorized": 2}`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum RuleSpec {
    Label(String),
    Degree { degree: usize },
    Tensorized { tensorized: usize },
}

impl RuleSpec {
    pub fn resolve(&self) -> Result<RefQuadratureRule> {
        match self {
            RuleSpec::Label(l) if l == "keast11" => Ok(keast_degree4()),
            RuleSpec::Label(l) => builtin_rule(l),
            RuleSpec::Degree { degree } => Ok(rule_for_degree(*degree)),
            RuleSpec::Tensorized { tensorized: 0 } => Err(Error::Config("tensorized rule needs n >= 1".into())),
            RuleSpec::Tensorized { tensorized } => Ok(tensorized_gl(*tensorized)),
        }
    }
}

/// Rules per form term. Missing entries default to the smallest
/// positive-weight rules meeting the affine degree conditions with `m = k`;
/// negative weights can make the mass matrix indefinite.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    #[serde(default)]
    pub q1: Option<RuleSpec>,
    #[serde(default)]
    pub q2: Option<RuleSpec>,
    #[serde(default)]
    pub q3: Option<RuleSpec>,
}

impl QuadratureSpec {
    pub fn labels(q1: &str, q2: &str, q3: &str) -> Self {
        let l = |s: &str| Some(RuleSpec::Label(s.to_string()));
        Self {
            q1: l(q1),
            q2: l(q2),
            q3: l(q3),
        }
    }

    pub fn resolve(&self, k: usize) -> Result<QuadratureConfig> {
        let pick = |spec: &Option<RuleSpec>, degree: usize| match spec {
            Some(s) => s.resolve(),
            None => Ok(positive_rule_for_degree(degree)),
        };
        Ok(QuadratureConfig {
            q1: pick(&self.q1, 2 * k - 2)?,
            q2: pick(&self.q2, 2 * k - 1)?,
            q3: pick(&self.q3, 2 * k - 1)?,
        })
    }
}

fn positive_rule_for_degree(degree: usize) -> RefQuadratureRule {
    (degree..)
        .map(rule_for_degree)
        .find(|r| r.weights().iter().all(|w| *w > 0.0))
        .expect("tensorized rules have positive weights")
}

/// Thresholds checked by the drivers; any violation is reported and makes
/// the binary exit with code 2 under `--assert`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    #[serde(default)]
    pub slope_min: Option<f64>,
    #[serde(default)]
    pub slope_max: Option<f64>,
    /// Preasymptotic study: no plateau exit while free DOFs are below this.
    #[serde(default)]
    pub plateau_min_dofs: Option<usize>,
    /// Preasymptotic study: plateau exit no later than this mesh index.
    #[serde(default)]
    pub plateau_max_index: Option<usize>,
    /// Consistency probe: every error at most this value.
    #[serde(default)]
    pub max_error: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeCoefficients {
    /// Smooth non-polynomial `ε` and source, constant `μ⁻¹`.
    #[default]
    Smooth,
    /// Constant `μ⁻¹`, `ε` and source.
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProbeSpec {
    /// `|Φ − Φ̃_h|` over the top-level `meshes` with the top-level rules.
    Consistency {
        #[serde(default)]
        coefficients: ProbeCoefficients,
        #[serde(default = "default_seed")]
        seed: u64,
    },
    /// Local error on a shrinking family of quadratic tetrahedra.
    Curved {
        mode: CurvedMode,
        rule: RuleSpec,
        #[serde(default = "default_scales")]
        scales: Vec<f64>,
        #[serde(default = "default_seed")]
        seed: u64,
    },
}

fn default_seed() -> u64 {
    PROBE_SEED
}

fn default_scales() -> Vec<f64> {
    vec![1.0, 0.5, 0.25, 0.125]
}

fn default_problem() -> ProblemId {
    ProblemId::CubePoly
}

fn default_order() -> usize {
    1
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn default_max_iter() -> usize {
    100_000
}

fn default_window() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_problem")]
    pub problem: ProblemId,
    #[serde(default = "default_order")]
    pub order: usize,
    /// Structured mesh parameters `n`; defaults depend on the order.
    #[serde(default)]
    pub meshes: Option<Vec<usize>>,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Number of finest meshes used by the rate fit.
    #[serde(default = "default_window")]
    pub fit_window: usize,
    /// Output directory, overridden by `--out`.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub expect: Expectation,
    #[serde(default)]
    pub probe: Option<ProbeSpec>,
    /// Extra rules for `quad-check`, in the dump format.
    #[serde(default)]
    pub rules_file: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.order) {
            return Err(Error::UnsupportedOrder(self.order));
        }
        let meshes = self.mesh_list();
        if meshes.is_empty() || meshes[0] == 0 || meshes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!("mesh list {meshes:?} must be strictly increasing and positive")));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config("solver tolerance must be positive".into()));
        }
        if let Some(ProbeSpec::Curved { scales, .. }) = &self.probe {
            if scales.iter().any(|s| !(*s > 0.0)) {
                return Err(Error::Config("curved probe scales must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn mesh_list(&self) -> Vec<usize> {
        match (&self.meshes, self.probe.as_ref()) {
            (Some(m), _) => m.clone(),
            (None, Some(ProbeSpec::Consistency { .. })) => vec![2, 4, 8, 16],
            (None, _) if self.order == 1 => vec![2, 4, 6, 8, 12, 16, 24],
            (None, _) => vec![2, 4, 6, 8, 12],
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn check_slope(expect: &Expectation, slope: f64, what: &str, violations: &mut Vec<String>) {
    if let Some(lo) = expect.slope_min {
        if !(slope >= lo) {
            violations.push(format!("{what} slope {slope:.4} below {lo}"));
        }
    }
    if let Some(hi) = expect.slope_max {
        if !(slope <= hi) {
            violations.push(format!("{what} slope {slope:.4} above {hi}"));
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub records: Vec<ErrorRecord>,
    /// H(curl) error against free DOFs over the last `fit_window` meshes.
    pub fit: Option<RateFit>,
    pub violations: Vec<String>,
}

/// Mesh, assemble, solve and measure for every `n`. The table in `out` is
/// rewritten after each mesh, so a failed solve leaves the rows computed so far.
fn sweep(cfg: &ExperimentConfig, out: Option<&Path>, stem: &str) -> Result<Vec<ErrorRecord>> {
    cfg.validate()?;
    let entry = problem(cfg.problem)?;
    let k = cfg.order;
    let quad = cfg.quadrature.resolve(k)?;
    let mut records = Vec::new();
    for n in cfg.mesh_list() {
        let mesh = structured_cube_mesh(n);
        let system = assemble(&mesh, k, &entry.coeffs, &quad)?;
        let (sol, report) = solve(&system, cfg.tol, cfg.max_iter)?;
        let err = hcurl_error(&sol, |x| entry.exact(x), |x| entry.exact_curl(x), 2 * k + 4);
        records.push(ErrorRecord::new(n, mesh.h(), system.n_free(), err, report.iterations));
        if let Some(dir) = out {
            write_file(&dir.join(format!("{stem}.csv")), &records_csv(&records))?;
        }
    }
    if let Some(dir) = out {
        write_file(&dir.join(format!("{stem}.dat")), &records_dat(&records))?;
    }
    Ok(records)
}

pub fn run_convergence(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<ConvergenceReport> {
    if let Some(dir) = out {
        create_dir(dir)?;
    }
    let records = sweep(cfg, out, "convergence")?;
    let fit = fit_rate(&records, RateAxis::Dofs, cfg.fit_window.min(records.len())).ok();
    let mut violations = Vec::new();
    match fit {
        Some(f) => check_slope(&cfg.expect, f.slope, "dofs", &mut violations),
        None if cfg.expect.slope_min.is_some() || cfg.expect.slope_max.is_some() => {
            violations.push("too few meshes for a rate fit".into())
        }
        None => {}
    }
    if let Some(dir) = out {
        let mut s = format!("problem {} order {}\n", cfg.problem, cfg.order);
        match fit {
            Some(f) => writeln!(s, "slope vs dofs {:.6} over {} meshes (residual {:.3e})", f.slope, f.points, f.residual).unwrap(),
            None => s.push_str("slope vs dofs unavailable\n"),
        }
        for v in &violations {
            writeln!(s, "violation: {v}").unwrap();
        }
        write_file(&dir.join("summary.txt"), &s)?;
    }
    Ok(ConvergenceReport {
        records,
        fit,
        violations,
    })
}

#[derive(Debug, Clone)]
pub struct PreasymptoticReport {
    pub records: Vec<ErrorRecord>,
    /// First mesh index whose error is at most 80% of the previous one.
    pub plateau_exit: Option<usize>,
    pub violations: Vec<String>,
}

pub fn run_preasymptotic(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<PreasymptoticReport> {
    if !matches!(cfg.problem, ProblemId::CubeOscillatory(_)) {
        return Err(Error::Config("preasymptotic study needs a cube_oscillatory problem".into()));
    }
    if let Some(dir) = out {
        create_dir(dir)?;
    }
    let records = sweep(cfg, out, "preasymptotic")?;
    let exit = plateau_exit(&records);
    let mut violations = Vec::new();
    if let Some(min) = cfg.expect.plateau_min_dofs {
        if let Some(i) = exit.filter(|&i| records[i].dofs <= min) {
            violations.push(format!("error dropped by 20% at {} free DOFs (index {i}), expected none up to {min}", records[i].dofs));
        }
    }
    if let Some(max) = cfg.expect.plateau_max_index {
        if exit.is_none_or(|i| i > max) {
            violations.push(format!("plateau exit {exit:?} later than index {max}"));
        }
    }
    if let Some(dir) = out {
        let mut s = format!("problem {} order {} q2 {}\n", cfg.problem, cfg.order, cfg.quadrature.resolve(cfg.order)?.q2.label());
        match exit {
            Some(i) => writeln!(s, "plateau exit at mesh index {i} (n = {}, {} free DOFs)", records[i].n, records[i].dofs).unwrap(),
            None => s.push_str("no plateau exit within the mesh list\n"),
        }
        for v in &violations {
            writeln!(s, "violation: {v}").unwrap();
        }
        write_file(&dir.join("summary.txt"), &s)?;
    }
    Ok(PreasymptoticReport {
        records,
        plateau_exit: exit,
        violations,
    })
}

/// Smooth vector field built from a few seeded trigonometric modes.
pub fn random_smooth_field(seed: u64) -> impl Fn(&Vector3<f64>) -> CVector3 + Sync + Clone {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<(Vector3<f64>, Vector3<f64>, f64, f64)> = (0..4)
        .map(|_| {
            let freq = Vector3::from_fn(|_, _| rng.gen_range(-2.0..2.0));
            let amp = Vector3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
            (freq, amp, rng.gen_range(0.0..std::f64::consts::TAU), rng.gen_range(-1.0..1.0))
        })
        .collect();
    move |x| {
        modes.iter().fold(CVector3::zeros(), |acc, (f, a, phase, im)| {
            let s = (f.dot(x) + phase).sin();
            acc + a.map(|c| Complex64::new(c * s, c * s * im))
        })
    }
}

/// Coefficients of the consistency probe.
pub fn probe_coefficients(kind: ProbeCoefficients) -> Coefficients {
    match kind {
        ProbeCoefficients::Constant => Coefficients {
            mu_inv: MatrixCoeff::scalar(0.1),
            eps: MatrixCoeff::scalar(-10.0),
            omega: 1.0,
            current: VectorCoeff::field(|_| Vector3::new(1.0, -0.5, 0.25).map(|c| Complex64::new(0.0, c)), Some(0)),
        },
        ProbeCoefficients::Smooth => Coefficients {
            mu_inv: MatrixCoeff::scalar(0.1),
            eps: MatrixCoeff::isotropic(|x| -10.0 - 9.0 * (1.5 * x.z + 0.3).sin(), None),
            omega: 1.0,
            current: VectorCoeff::field(
                |x| Vector3::new(x.y.sin(), (x.z + x.x).cos(), (2.0 * x.x).sin()).map(|c| Complex64::new(0.0, c)),
                None,
            ),
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbePoint {
    /// `h` for the consistency probe, shrink factor `s` for the curved one.
    pub x: f64,
    pub error: f64,
    /// Load error for the consistency probe; raw (unnormalized) error for the curved one.
    pub secondary: f64,
}

#[derive(Debug, Clone)]
pub struct ProbeReport {
    pub points: Vec<ProbePoint>,
    pub fit: Option<RateFit>,
    /// Every error is below `1e-10`; the slope is then meaningless.
    pub exact: bool,
    pub violations: Vec<String>,
}

fn consistency_sweep(cfg: &ExperimentConfig, kind: ProbeCoefficients, seed: u64) -> Result<Vec<ProbePoint>> {
    let k = cfg.order;
    let coeffs = probe_coefficients(kind);
    let quad = cfg.quadrature.resolve(k)?;
    let fu = random_smooth_field(seed);
    let fv = random_smooth_field(seed.wrapping_add(1));
    cfg.mesh_list()
        .into_iter()
        .map(|n| {
            let mesh = structured_cube_mesh(n);
            let normalized = |f: &(dyn Fn(&Vector3<f64>) -> CVector3 + Sync)| -> Result<Vec<Complex64>> {
                let mut d = interpolate(&mesh, k, f)?;
                let norm = discrete_hcurl_norm(&mesh, k, &d)?;
                d.iter_mut().for_each(|z| *z /= norm);
                Ok(d)
            };
            let u = normalized(&fu)?;
            let v = normalized(&fv)?;
            let (phi, load) = consistency_error(&mesh, k, &coeffs, &quad, &u, &v)?;
            Ok(ProbePoint {
                x: mesh.h(),
                error: phi,
                secondary: load,
            })
        })
        .collect()
}

/// Smooth symmetric positive-definite matrix coefficient of the curved probe.
fn curved_matrix() -> MatrixCoeff {
    MatrixCoeff::field(
        |x| {
            let s = 2.0 + (x.x + 0.5 * x.y).sin() * (0.7 * x.z).cos();
            let o = 0.3 * (x.y - x.z).sin();
            Matrix3::new(s, o, 0.1, o, s + 0.5, 0.2 * x.x.cos(), 0.1, 0.2 * x.x.cos(), s + 1.0)
                .map(|c| Complex64::new(c, 0.0))
        },
        None,
    )
}

fn curved_sweep(k: usize, mode: CurvedMode, rule: &RefQuadratureRule, scales: &[f64], seed: u64) -> Result<Vec<ProbePoint>> {
    let n = CurlBasis::new(k)?.n_dofs();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let integrand = CurvedIntegrand {
        k,
        mode,
        coeff: curved_matrix(),
        source: VectorCoeff::field(
            |x| Vector3::new((x.y + 0.3).sin(), (x.z - x.x).cos(), (1.5 * x.x).sin() + x.y).map(|c| Complex64::new(c, 0.0)),
            None,
        ),
        u,
        v,
    };
    scales
        .iter()
        .map(|&s| {
            let e = curved_local_error(&curved_family(s)?, &integrand, rule)?;
            Ok(ProbePoint {
                x: s,
                error: e.normalized,
                secondary: e.error,
            })
        })
        .collect()
}

pub fn run_probe(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<ProbeReport> {
    cfg.validate()?;
    let spec = cfg
        .probe
        .clone()
        .ok_or_else(|| Error::Config("probe command needs a `probe` section".into()))?;
    let (points, header) = match &spec {
        ProbeSpec::Consistency { coefficients, seed } => {
            (consistency_sweep(cfg, *coefficients, *seed)?, "h,phi_error,f_error")
        }
        ProbeSpec::Curved {
            mode,
            rule,
            scales,
            seed,
        } => (curved_sweep(cfg.order, *mode, &rule.resolve()?, scales, *seed)?, "s,normalized_error,error"),
    };
    let exact = points.iter().all(|p| p.error <= 1e-10);
    let fit = if exact {
        None
    } else {
        let xs: Vec<f64> = points.iter().map(|p| p.x).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.error).collect();
        fit_loglog(&xs, &ys).ok()
    };
    let mut violations = Vec::new();
    if let Some(max) = cfg.expect.max_error {
        if let Some(p) = points.iter().find(|p| !(p.error <= max)) {
            violations.push(format!("error {:.3e} at {} exceeds {max:e}", p.error, p.x));
        }
    }
    match fit {
        Some(f) => check_slope(&cfg.expect, f.slope, "probe", &mut violations),
        None if !exact && (cfg.expect.slope_min.is_some() || cfg.expect.slope_max.is_some()) => {
            violations.push("too few points for a rate fit".into())
        }
        None => {}
    }
    if let Some(dir) = out {
        create_dir(dir)?;
        let mut csv = format!("{header}\n");
        for p in &points {
            writeln!(csv, "{:.16e},{:.16e},{:.16e}", p.x, p.error, p.secondary).unwrap();
        }
        write_file(&dir.join("probe.csv"), &csv)?;
        let mut s = String::new();
        match (exact, fit) {
            (true, _) => s.push_str("slope exact\n"),
            (false, Some(f)) => writeln!(s, "slope {:.6} over {} points (residual {:.3e})", f.slope, f.points, f.residual).unwrap(),
            (false, None) => s.push_str("slope unavailable\n"),
        }
        for v in &violations {
            writeln!(s, "violation: {v}").unwrap();
        }
        write_file(&dir.join("summary.txt"), &s)?;
    }
    Ok(ProbeReport {
        points,
        fit,
        exact,
        violations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleCheck {
    pub label: String,
    pub declared: usize,
    pub passes_declared: bool,
    /// Fails one degree above the declared one.
    pub tight: bool,
}

#[derive(Debug, Clone)]
pub struct QuadCheckReport {
    pub rules: Vec<RuleCheck>,
    /// No custom rules were supplied (or the file held none).
    pub builtin_only: bool,
    pub violations: Vec<String>,
}

fn check_rule(rule: &RefQuadratureRule, declared: usize) -> RuleCheck {
    RuleCheck {
        label: rule.label().to_string(),
        declared,
        passes_declared: verify_exactness(rule, declared).exact,
        tight: !verify_exactness(rule, declared + 1).exact,
    }
}

pub fn run_quadcheck(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<QuadCheckReport> {
    let mut rules = Vec::new();
    for b in BuiltinRule::ALL {
        rules.push(check_rule(&b.build()?, b.declared_degree()));
    }
    let mut custom = Vec::new();
    if let Some(path) = &cfg.rules_file {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        custom = parse_rules(&text)?;
    }
    for r in &custom {
        if let Some(d) = r.exactness_degree() {
            rules.push(check_rule(r, d));
        }
    }
    let violations: Vec<String> = rules
        .iter()
        .filter(|r| !(r.passes_declared && r.tight))
        .map(|r| format!("rule {} at degree {}: exact {}, tight {}", r.label, r.declared, r.passes_declared, r.tight))
        .collect();
    let builtin_only = custom.is_empty();
    if let Some(dir) = out {
        create_dir(dir)?;
        let mut s = String::new();
        for r in &rules {
            writeln!(
                s,
                "{:<16} degree {:>2}  {}  {}",
                r.label,
                r.declared,
                if r.passes_declared { "exact" } else { "NOT EXACT" },
                if r.tight { "tight" } else { "NOT TIGHT" }
            )
            .unwrap();
        }
        if builtin_only {
            s.push_str("builtin only\n");
        }
        write_file(&dir.join("quadcheck.txt"), &s)?;
    }
    Ok(QuadCheckReport {
        rules,
        builtin_only,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_validation() {
        let cfg = ExperimentConfig::from_json("{}").unwrap();
        assert_eq!(cfg.problem, ProblemId::CubePoly);
        assert_eq!(cfg.mesh_list(), vec![2, 4, 6, 8, 12, 16, 24]);
        let k2 = ExperimentConfig::from_json(r#"{"order": 2}"#).unwrap();
        assert_eq!(k2.mesh_list(), vec![2, 4, 6, 8, 12]);
        assert!(ExperimentConfig::from_json(r#"{"meshes": [4, 2]}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"order": 3}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"bogus": 1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"quadrature": {"q4": "pt4"}}"#).is_err());
    }

    #[test]
    fn rule_specs_parse() {
        let cfg = ExperimentConfig::from_json(
            r#"{"problem": "cube_oscillatory(10)", "quadrature": {"q1": {"tensorized": 2}, "q2": {"degree": 3}, "q3": "keast11"}}"#,
        )
        .unwrap();
        assert_eq!(cfg.problem, ProblemId::CubeOscillatory(10));
        let q = cfg.quadrature.resolve(1).unwrap();
        assert_eq!(q.q1.len(), 8);
        assert_eq!(q.q2.label(), "pt5");
        assert_eq!(q.q3.label(), "keast11");
        assert!(RuleSpec::Label("nope".into()).resolve().is_err());
        let probe = ExperimentConfig::from_json(r#"{"probe": {"kind": "curved", "mode": "curl_curl", "rule": "pt4"}}"#).unwrap();
        assert!(matches!(probe.probe, Some(ProbeSpec::Curved { mode: CurvedMode::CurlCurl, .. })));
    }

    #[test]
    fn default_rules_meet_degree_conditions() {
        for k in [1, 2] {
            let q = QuadratureSpec::default().resolve(k).unwrap();
            assert!(q.q1.exactness_degree().unwrap() >= 2 * k - 2);
            assert!(q.q2.exactness_degree().unwrap() >= 2 * k - 1);
            assert!(q.q3.exactness_degree().unwrap() >= 2 * k - 1);
            assert!(q.q2.weights().iter().all(|w| *w > 0.0));
        }
    }

    #[test]
    fn quadcheck_builtin_only() {
        let dir = tempfile::tempdir().unwrap();
        let empty = dir.path().join("rules.txt");
        std::fs::write(&empty, "").unwrap();
        let cfg = ExperimentConfig {
            rules_file: Some(empty),
            ..Default::default()
        };
        let rep = run_quadcheck(&cfg, Some(dir.path())).unwrap();
        assert!(rep.builtin_only);
        assert!(rep.violations.is_empty());
        let text = std::fs::read_to_string(dir.path().join("quadcheck.txt")).unwrap();
        assert!(text.contains("builtin only"));
    }

    #[test]
    fn small_convergence_run_is_deterministic() {
        let cfg = ExperimentConfig::from_json(r#"{"meshes": [1, 2, 3]}"#).unwrap();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ra = run_convergence(&cfg, Some(a.path())).unwrap();
        run_convergence(&cfg, Some(b.path())).unwrap();
        assert_eq!(ra.records.len(), 3);
        assert!(ra.fit.is_some());
        let read = |d: &Path| std::fs::read(d.join("convergence.csv")).unwrap();
        assert_eq!(read(a.path()), read(b.path()));
    }

    #[test]
    fn constant_probe_is_exact() {
        let cfg = ExperimentConfig::from_json(
            r#"{"meshes": [1, 2, 3], "quadrature": {"q1": "pt1_centroid", "q2": "pt4", "q3": "pt1_centroid"},
                "probe": {"kind": "consistency", "coefficients": "constant"}}"#,
        )
        .unwrap();
        let rep = run_probe(&cfg, None).unwrap();
        assert!(rep.exact, "{:?}", rep.points);
        assert!(rep.fit.is_none());
    }
}
