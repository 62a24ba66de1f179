//! Quadrature on the reference tetrahedron `conv{0, e1, e2, e3}`.
//!
//! Every rule carries an exactness degree that was *measured* by
//! [`verify_exactness`] against the closed-form monomial integrals
//! `∫ x^a y^b z^c = a! b! c! / (a+b+c+3)!`, never taken on trust from a
//! table. Rules map to physical elements through [`map_affine`] (constant
//! Jacobian) or [`map_curved`] (pointwise Jacobian of a quadratic map).

use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::Vector3;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::mesh::map::{AffineMap, CurvedMap};

/// Volume of the reference tetrahedron.
pub const REF_VOLUME: f64 = 1.0 / 6.0;

/// Relative tolerance of the exactness oracle.
pub const EXACTNESS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct RefQuadratureRule {
    label: String,
    points: Vec<Vector3<f64>>,
    weights: Vec<f64>,
    exactness_degree: Option<usize>,
}

impl RefQuadratureRule {
    /// Builds a rule from Cartesian points and certifies `declared_degree`.
    pub fn certified(
        label: impl Into<String>,
        points: Vec<Vector3<f64>>,
        weights: Vec<f64>,
        declared_degree: usize,
    ) -> Result<Self> {
        let mut rule = Self::uncertified(label, points, weights)?;
        let report = verify_exactness(&rule, declared_degree);
        if !report.exact {
            let worst = report.worst.expect("inexact report carries a monomial");
            return Err(Error::Certification {
                label: rule.label,
                degree: declared_degree,
                monomial: worst.exponents,
                error: worst.abs_error,
            });
        }
        rule.exactness_degree = Some(declared_degree);
        Ok(rule)
    }

    /// Builds a rule and measures its exactness degree by running the
    /// certifier upward until the first failure.
    pub fn measured(
        label: impl Into<String>,
        points: Vec<Vector3<f64>>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let mut rule = Self::uncertified(label, points, weights)?;
        rule.exactness_degree = measure_degree(&rule);
        Ok(rule)
    }

    /// Builds from barycentric `(λ0, λ1, λ2, λ3)` rows; `x = λ1, y = λ2, z = λ3`.
    pub fn from_barycentric(
        label: impl Into<String>,
        bary: &[[f64; 4]],
        weights: Vec<f64>,
        declared_degree: usize,
    ) -> Result<Self> {
        let points = bary
            .iter()
            .map(|l| Vector3::new(l[1], l[2], l[3]))
            .collect();
        Self::certified(label, points, weights, declared_degree)
    }

    fn uncertified(
        label: impl Into<String>,
        points: Vec<Vector3<f64>>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let label = label.into();
        if points.len() != weights.len() || points.is_empty() {
            return Err(Error::Config(format!(
                "rule `{label}`: {} points vs {} weights",
                points.len(),
                weights.len()
            )));
        }
        for p in &points {
            let l0 = 1.0 - p.x - p.y - p.z;
            if [l0, p.x, p.y, p.z].iter().any(|&l| !(-1e-14..=1.0 + 1e-14).contains(&l)) {
                return Err(Error::Config(format!(
                    "rule `{label}`: point ({}, {}, {}) outside the reference tetrahedron",
                    p.x, p.y, p.z
                )));
            }
        }
        Ok(Self {
            label,
            points,
            weights,
            exactness_degree: None,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `None` when the rule does not even integrate constants.
    pub fn exactness_degree(&self) -> Option<usize> {
        self.exactness_degree
    }

    /// Same points, weights multiplied by `factor`. The exactness degree is
    /// dropped unless `factor == 1`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            label: format!("{}*{factor}", self.label),
            points: self.points.clone(),
            weights: self.weights.iter().map(|w| w * factor).collect(),
            exactness_degree: if factor == 1.0 {
                self.exactness_degree
            } else {
                None
            },
        }
    }

    /// `Σ w̆_l f(b̆_l)`.
    pub fn integrate<T, F>(&self, f: F) -> T
    where
        T: Zero + std::ops::Mul<f64, Output = T>,
        F: Fn(&Vector3<f64>) -> T,
    {
        self.points
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (p, &w)| acc + f(p) * w)
    }
}

/// `Σ w̆_l f(b̆_l)` over the reference element.
pub fn integrate_ref<T, F>(rule: &RefQuadratureRule, f: F) -> T
where
    T: Zero + std::ops::Mul<f64, Output = T>,
    F: Fn(&Vector3<f64>) -> T,
{
    rule.integrate(f)
}

/// Exact `∫_K̆ x^a y^b z^c`.
pub fn monomial_integral(a: usize, b: usize, c: usize) -> f64 {
    let fact = |n: usize| (2..=n).fold(1.0, |acc, i| acc * i as f64);
    fact(a) * fact(b) * fact(c) / fact(a + b + c + 3)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonomialError {
    pub exponents: [usize; 3],
    pub quadrature: f64,
    pub exact: f64,
    pub abs_error: f64,
    /// `abs_error / max(1, |exact|)`, the quantity compared to the tolerance.
    pub scaled_error: f64,
    /// `abs_error / |exact|`.
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactnessReport {
    pub degree: usize,
    pub exact: bool,
    /// Monomial with the largest scaled error among those of degree `≤ degree`.
    pub worst: Option<MonomialError>,
}

fn monomial_errors(rule: &RefQuadratureRule, total: usize) -> impl Iterator<Item = MonomialError> + '_ {
    (0..=total).rev().flat_map(move |a| {
        (0..=total - a).rev().map(move |b| {
            let c = total - a - b;
            let q: f64 = rule.integrate(|p: &Vector3<f64>| {
                p.x.powi(a as i32) * p.y.powi(b as i32) * p.z.powi(c as i32)
            });
            let exact = monomial_integral(a, b, c);
            let abs_error = (q - exact).abs();
            MonomialError {
                exponents: [a, b, c],
                quadrature: q,
                exact,
                abs_error,
                scaled_error: abs_error / exact.abs().max(1.0),
                rel_error: abs_error / exact.abs(),
            }
        })
    })
}

/// Checks every monomial of total degree `≤ degree` against the closed form.
pub fn verify_exactness(rule: &RefQuadratureRule, degree: usize) -> ExactnessReport {
    let mut worst: Option<MonomialError> = None;
    for total in 0..=degree {
        for e in monomial_errors(rule, total) {
            if worst.is_none_or(|w| e.scaled_error > w.scaled_error) {
                worst = Some(e);
            }
        }
    }
    let exact = worst.is_none_or(|w| w.scaled_error <= EXACTNESS_TOL);
    ExactnessReport {
        degree,
        exact,
        worst,
    }
}

/// Largest relative error among monomials of exactly `degree`.
pub fn worst_at_degree(rule: &RefQuadratureRule, degree: usize) -> MonomialError {
    monomial_errors(rule, degree)
        .fold(None, |acc: Option<MonomialError>, e| match acc {
            Some(w) if w.rel_error >= e.rel_error => Some(w),
            _ => Some(e),
        })
        .expect("at least one monomial per degree")
}

fn measure_degree(rule: &RefQuadratureRule) -> Option<usize> {
    let mut degree = None;
    for d in 0.. {
        if monomial_errors(rule, d).all(|e| e.scaled_error <= EXACTNESS_TOL) {
            degree = Some(d);
        } else {
            break;
        }
    }
    degree
}

/// Built-in rule catalogue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BuiltinRule {
    /// One point at barycentric (0.2, 0.3, 0.3, 0.2); degree 0.
    Pt1Offcenter,
    /// One point at the centroid; degree 1.
    Pt1Centroid,
    /// Four-point symmetric rule; degree 2.
    Pt4,
    /// Five-point rule with a negative centroid weight; degree 3.
    Pt5,
    /// Keast 15-point rule; degree 5.
    Pt15,
    /// Keast 31-point rule; degree 7.
    High,
}

impl BuiltinRule {
    pub const ALL: [BuiltinRule; 6] = [
        BuiltinRule::Pt1Offcenter,
        BuiltinRule::Pt1Centroid,
        BuiltinRule::Pt4,
        BuiltinRule::Pt5,
        BuiltinRule::Pt15,
        BuiltinRule::High,
    ];

    pub fn label(self) -> &'static str {
        match self {
            BuiltinRule::Pt1Offcenter => "pt1_offcenter",
            BuiltinRule::Pt1Centroid => "pt1_centroid",
            BuiltinRule::Pt4 => "pt4",
            BuiltinRule::Pt5 => "pt5",
            BuiltinRule::Pt15 => "pt15",
            BuiltinRule::High => "high",
        }
    }

    pub fn declared_degree(self) -> usize {
        match self {
            BuiltinRule::Pt1Offcenter => 0,
            BuiltinRule::Pt1Centroid => 1,
            BuiltinRule::Pt4 => 2,
            BuiltinRule::Pt5 => 3,
            BuiltinRule::Pt15 => 5,
            BuiltinRule::High => 7,
        }
    }

    pub fn build(self) -> Result<RefQuadratureRule> {
        let label = self.label();
        let degree = self.declared_degree();
        match self {
            BuiltinRule::Pt1Offcenter => RefQuadratureRule::from_barycentric(
                label,
                &[[0.2, 0.3, 0.3, 0.2]],
                vec![REF_VOLUME],
                degree,
            ),
            BuiltinRule::Pt1Centroid => RefQuadratureRule::from_barycentric(
                label,
                &[[0.25; 4]],
                vec![REF_VOLUME],
                degree,
            ),
            BuiltinRule::Pt4 => {
                let a = (5.0 - 5f64.sqrt()) / 20.0;
                let (pts, w) = orbits(&[Orbit::S31(a, REF_VOLUME / 4.0)]);
                RefQuadratureRule::from_barycentric(label, &pts, w, degree)
            }
            BuiltinRule::Pt5 => {
                let (pts, w) = orbits(&[
                    Orbit::S4(-2.0 / 15.0),
                    Orbit::S31(1.0 / 6.0, 3.0 / 40.0),
                ]);
                RefQuadratureRule::from_barycentric(label, &pts, w, degree)
            }
            BuiltinRule::Pt15 => {
                let r15 = 15f64.sqrt();
                let (pts, w) = orbits(&[
                    Orbit::S4(8.0 / 405.0),
                    Orbit::S31((7.0 - r15) / 34.0, 0.011_989_513_963_169_770),
                    Orbit::S31((7.0 + r15) / 34.0, 0.011_511_367_871_045_398),
                    Orbit::S22((10.0 - 2.0 * r15) / 40.0, 5.0 / 567.0),
                ]);
                RefQuadratureRule::from_barycentric(label, &pts, w, degree)
            }
            BuiltinRule::High => {
                let (pts, w) = orbits(&[
                    Orbit::S4(0.018_264_223_466_108_820),
                    Orbit::S31(0.078_213_192_330_318_064, 0.010_599_941_524_413_687),
                    Orbit::S31(0.121_843_216_663_905_175, -0.062_517_740_114_331_852),
                    Orbit::S31(0.332_539_164_446_420_624, 0.004_891_425_263_073_499_4),
                    Orbit::S22(0.0, 0.000_970_017_636_684_303_35),
                    Orbit::S211(0.1, 0.2, 0.027_557_319_223_985_891),
                ]);
                RefQuadratureRule::from_barycentric(label, &pts, w, degree)
            }
        }
    }
}

impl FromStr for BuiltinRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BuiltinRule::ALL
            .into_iter()
            .find(|r| r.label() == s)
            .ok_or_else(|| Error::UnknownRule(s.to_string()))
    }
}

/// Symmetric orbits in barycentric coordinates, each with a per-point weight.
enum Orbit {
    S4(f64),
    S31(f64, f64),
    S22(f64, f64),
    S211(f64, f64, f64),
}

fn orbits(list: &[Orbit]) -> (Vec<[f64; 4]>, Vec<f64>) {
    let mut pts = Vec::new();
    let mut ws = Vec::new();
    for orbit in list {
        let (orbit_pts, w): (Vec<[f64; 4]>, f64) = match *orbit {
            Orbit::S4(w) => (vec![[0.25; 4]], w),
            Orbit::S31(a, w) => {
                let b = 1.0 - 3.0 * a;
                ((0..4).map(|j| std::array::from_fn(|i| if i == j { b } else { a })).collect(), w)
            }
            Orbit::S22(a, w) => {
                let b = 0.5 - a;
                let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
                (
                    pairs
                        .iter()
                        .map(|&(p, q)| std::array::from_fn(|i| if i == p || i == q { a } else { b }))
                        .collect(),
                    w,
                )
            }
            Orbit::S211(a, b, w) => {
                let c = 1.0 - 2.0 * a - b;
                let mut v = Vec::new();
                for ib in 0..4 {
                    for ic in 0..4 {
                        if ib != ic {
                            v.push(std::array::from_fn(|i| {
                                if i == ib {
                                    b
                                } else if i == ic {
                                    c
                                } else {
                                    a
                                }
                            }));
                        }
                    }
                }
                (v, w)
            }
        };
        ws.extend(std::iter::repeat_n(w, orbit_pts.len()));
        pts.extend(orbit_pts);
    }
    (pts, ws)
}

/// Keast 11-point rule of degree 4 (negative centroid weight).
///
/// Not part of the built-in catalogue; it fills the degree-4 gap between
/// `pt5` and `pt15` for sweeps that need a rule of exactly that degree.
pub fn keast_degree4() -> RefQuadratureRule {
    let r = (5.0f64 / 14.0).sqrt();
    let (pts, w) = orbits(&[
        Orbit::S4(-74.0 / 5625.0),
        Orbit::S31(1.0 / 14.0, 343.0 / 45000.0),
        Orbit::S22((1.0 - r) / 4.0, 56.0 / 2250.0),
    ]);
    RefQuadratureRule::from_barycentric("keast11", &pts, w, 4).expect("Keast 11-point rule certifies at degree 4")
}

pub fn builtin_rule(label: &str) -> Result<RefQuadratureRule> {
    label.parse::<BuiltinRule>()?.build()
}

/// Gauss-Legendre nodes and weights on `[0, 1]` (Golub-Welsch free Newton iteration).
pub fn gauss_legendre_01(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// `n³`-point Gauss-Legendre rule on the unit cube collapsed onto the
/// reference tetrahedron by `x = ξ(1-η)(1-ζ), y = η(1-ζ), z = ζ`.
pub fn tensorized_gl(n: usize) -> RefQuadratureRule {
    assert!(n >= 1, "tensorized_gl needs n >= 1");
    let (g, w) = gauss_legendre_01(n);
    let mut points = Vec::with_capacity(n * n * n);
    let mut weights = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let (xi, eta, zeta) = (g[i], g[j], g[k]);
                points.push(Vector3::new(
                    xi * (1.0 - eta) * (1.0 - zeta),
                    eta * (1.0 - zeta),
                    zeta,
                ));
                weights.push(w[i] * w[j] * w[k] * (1.0 - eta) * (1.0 - zeta).powi(2));
            }
        }
    }
    RefQuadratureRule::measured(format!("gl{n}x{n}x{n}"), points, weights)
        .expect("collapsed points lie inside the reference element")
}

/// Rule with certified degree `≥ degree` and the fewest points available.
pub fn rule_for_degree(degree: usize) -> RefQuadratureRule {
    // Off-center one-point shares the minimal size; the centroid wins ties.
    let builtin = [
        BuiltinRule::Pt1Centroid,
        BuiltinRule::Pt4,
        BuiltinRule::Pt5,
        BuiltinRule::Pt15,
        BuiltinRule::High,
    ]
    .into_iter()
    .find(|r| r.declared_degree() >= degree);
    if let Some(rule) = builtin {
        return rule.build().expect("built-in rules certify");
    }
    let mut n = (degree + 3).div_ceil(2);
    loop {
        let rule = tensorized_gl(n);
        if rule.exactness_degree().is_some_and(|d| d >= degree) {
            return rule;
        }
        n += 1;
    }
}

/// A rule mapped to a physical element.
#[derive(Debug, Clone, PartialEq)]
pub struct MappedQuadrature {
    pub points: Vec<Vector3<f64>>,
    pub weights: Vec<f64>,
}

impl MappedQuadrature {
    pub fn integrate<T, F>(&self, f: F) -> T
    where
        T: Zero + std::ops::Mul<f64, Output = T>,
        F: Fn(&Vector3<f64>) -> T,
    {
        self.points
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (p, &w)| acc + f(p) * w)
    }
}

/// `b_{l,K} = T_K(b̆_l)`, `w_{l,K} = |det J_K| w̆_l`.
pub fn map_affine(rule: &RefQuadratureRule, map: &AffineMap) -> Result<MappedQuadrature> {
    let det = map.det();
    if det == 0.0 || !det.is_finite() {
        return Err(Error::SingularJacobian(det));
    }
    Ok(MappedQuadrature {
        points: rule.points.iter().map(|p| map.apply(p)).collect(),
        weights: rule.weights.iter().map(|w| w * det.abs()).collect(),
    })
}

/// Pointwise-Jacobian mapping for curved elements.
pub fn map_curved(rule: &RefQuadratureRule, map: &CurvedMap) -> Result<MappedQuadrature> {
    let mut points = Vec::with_capacity(rule.len());
    let mut weights = Vec::with_capacity(rule.len());
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        let det = map.jacobian(p).determinant();
        if det <= 0.0 {
            return Err(Error::InvertedElement {
                det,
                point: [p.x, p.y, p.z],
            });
        }
        points.push(map.apply(p));
        weights.push(det * w);
    }
    Ok(MappedQuadrature { points, weights })
}

/// Plain-text dump: `label degree npoints`, then `x y z w` rows with 17
/// significant digits. A rule without exactness is written with degree -1.
pub fn dump_rule(rule: &RefQuadratureRule) -> String {
    let mut out = String::new();
    let degree = rule
        .exactness_degree
        .map_or_else(|| "-1".to_string(), |d| d.to_string());
    writeln!(out, "{} {} {}", rule.label, degree, rule.len()).unwrap();
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        writeln!(out, "{:.16e} {:.16e} {:.16e} {:.16e}", p.x, p.y, p.z, w).unwrap();
    }
    out
}

/// Parses zero or more dumped rules and certifies each at its declared degree.
pub fn parse_rules(text: &str) -> Result<Vec<RefQuadratureRule>> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let mut rules = Vec::new();
    while let Some(header) = lines.next() {
        let fields: Vec<&str> = header.split_whitespace().collect();
        let [label, degree, npoints] = fields[..] else {
            return Err(Error::Config(format!("bad rule header `{header}`")));
        };
        let degree: i64 = degree
            .parse()
            .map_err(|_| Error::Config(format!("bad degree in `{header}`")))?;
        let npoints: usize = npoints
            .parse()
            .map_err(|_| Error::Config(format!("bad point count in `{header}`")))?;
        let mut points = Vec::with_capacity(npoints);
        let mut weights = Vec::with_capacity(npoints);
        for _ in 0..npoints {
            let row = lines
                .next()
                .ok_or_else(|| Error::Config(format!("rule `{label}` truncated")))?;
            let v: Vec<f64> = row
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Config(format!("bad row `{row}` in rule `{label}`")))?;
            if v.len() != 4 {
                return Err(Error::Config(format!("bad row `{row}` in rule `{label}`")));
            }
            points.push(Vector3::new(v[0], v[1], v[2]));
            weights.push(v[3]);
        }
        let rule = if degree < 0 {
            RefQuadratureRule::uncertified(label, points, weights)?
        } else {
            RefQuadratureRule::certified(label, points, weights, degree as usize)?
        };
        rules.push(rule);
    }
    Ok(rules)
}
