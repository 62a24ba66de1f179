//! Curl-conforming shape functions on the reference tetrahedron.
//!
//! Order 1 is the Whitney edge family `λa∇λb − λb∇λa`. Order 2 is the
//! first-kind Nédélec space, built as the dual basis of 20 moment
//! functionals: two per edge (tangential moments against `1` and `2τ − 1`)
//! and two per face (tangential moments along the two face frame edges).
//! All functionals are written in terms of vertex positions, so they are
//! invariant under the covariant Piola map and can be reused on physical
//! entities for interpolation.

use std::ops::{Add, Mul};
use std::sync::OnceLock;

use nalgebra::{DMatrix, Matrix3, Vector3};
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::mesh::{TET_EDGES, TET_FACES};
use crate::quadrature::gauss_legendre_01;

const GRAD_LAMBDA: [[f64; 3]; 4] = [[-1.0, -1.0, -1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Reference vertex coordinates.
pub const REF_VERTICES: [[f64; 3]; 4] = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

pub fn barycentric(p: &Vector3<f64>) -> [f64; 4] {
    [1.0 - p.x - p.y - p.z, p.x, p.y, p.z]
}

pub fn grad_barycentric(i: usize) -> Vector3<f64> {
    Vector3::from(GRAD_LAMBDA[i])
}

/// Entity carrying a degree of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DofEntity {
    Edge { edge: usize, moment: usize },
    Face { face: usize, moment: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurlBasis {
    order: usize,
    entities: Vec<DofEntity>,
    /// Order 2 only: column `j` holds the coefficients of shape function `j`
    /// in the spanning family of [`candidates`].
    coeffs: Option<DMatrix<f64>>,
}

fn whitney(l: &[f64; 4], a: usize, b: usize) -> Vector3<f64> {
    grad_barycentric(b) * l[a] - grad_barycentric(a) * l[b]
}

fn whitney_curl(a: usize, b: usize) -> Vector3<f64> {
    grad_barycentric(a).cross(&grad_barycentric(b)) * 2.0
}

/// Spanning family for the order-2 space: `λa w_ab, λb w_ab` per edge and
/// `λc w_ab, λb w_ac` per face `(a, b, c)`. Returns values and curls.
fn candidates(p: &Vector3<f64>) -> ([Vector3<f64>; 20], [Vector3<f64>; 20]) {
    let l = barycentric(p);
    let mut val = [Vector3::zeros(); 20];
    let mut curl = [Vector3::zeros(); 20];
    let mut push = |k: usize, s: usize, a: usize, b: usize| {
        let w = whitney(&l, a, b);
        val[k] = w * l[s];
        curl[k] = grad_barycentric(s).cross(&w) + whitney_curl(a, b) * l[s];
    };
    for (e, &[a, b]) in TET_EDGES.iter().enumerate() {
        push(2 * e, a, a, b);
        push(2 * e + 1, b, a, b);
    }
    for (f, &[a, b, c]) in TET_FACES.iter().enumerate() {
        push(12 + 2 * f, c, a, b);
        push(12 + 2 * f + 1, b, a, c);
    }
    (val, curl)
}

fn edge_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let (x, w) = gauss_legendre_01(5);
        x.into_iter().zip(w).collect()
    })
}

/// Collapsed Gauss-Legendre rule on the unit triangle (weights sum to 1/2).
fn triangle_rule() -> &'static [(f64, f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let (x, w) = gauss_legendre_01(5);
        let mut out = Vec::with_capacity(25);
        for (xi, wi) in x.iter().zip(&w) {
            for (eta, we) in x.iter().zip(&w) {
                out.push((xi * (1.0 - eta), *eta, wi * we * (1.0 - eta)));
            }
        }
        out
    })
}

/// Tangential edge moments `∫₀¹ g(x(τ), t) dτ` and `∫₀¹ g(x(τ), t)(2τ − 1) dτ`
/// with `x(τ) = xa + τ t`, `t = xb − xa`. `g` is typically `u(x)·t`.
pub fn edge_moments<T, G>(xa: &Vector3<f64>, xb: &Vector3<f64>, g: G) -> [T; 2]
where
    T: Zero + Copy + Mul<f64, Output = T>,
    G: Fn(&Vector3<f64>, &Vector3<f64>) -> T,
{
    let t = xb - xa;
    let mut m = [T::zero(); 2];
    for &(tau, w) in edge_rule() {
        let v = g(&(xa + t * tau), &t);
        m[0] = m[0] + v * w;
        m[1] = m[1] + v * (w * (2.0 * tau - 1.0));
    }
    m
}

/// Face moments over the unit parameter triangle of
/// `x = xa + s(xb − xa) + t(xc − xa)`, against the tangents `xb − xa` and
/// `xc − xa` respectively.
pub fn face_moments<T, G>(xa: &Vector3<f64>, xb: &Vector3<f64>, xc: &Vector3<f64>, g: G) -> [T; 2]
where
    T: Zero + Copy + Mul<f64, Output = T>,
    G: Fn(&Vector3<f64>, &Vector3<f64>) -> T,
{
    let (t1, t2) = (xb - xa, xc - xa);
    let mut m = [T::zero(); 2];
    for &(s, t, w) in triangle_rule() {
        let x = xa + t1 * s + t2 * t;
        m[0] = m[0] + g(&x, &t1) * w;
        m[1] = m[1] + g(&x, &t2) * w;
    }
    m
}

/// Applies the reference DOF functionals of order `order` to `u`.
pub fn reference_dofs<F>(order: usize, u: F) -> Vec<f64>
where
    F: Fn(&Vector3<f64>) -> Vector3<f64>,
{
    let v = REF_VERTICES.map(Vector3::from);
    let moments = if order == 1 { 1 } else { 2 };
    let mut out = Vec::with_capacity(if order == 1 { 6 } else { 20 });
    for &[a, b] in &TET_EDGES {
        let m = edge_moments(&v[a], &v[b], |x, t| u(x).dot(t));
        out.extend_from_slice(&m[..moments]);
    }
    if order == 2 {
        for &[a, b, c] in &TET_FACES {
            out.extend(face_moments(&v[a], &v[b], &v[c], |x, t| u(x).dot(t)));
        }
    }
    out
}

fn candidate_dof_matrix() -> DMatrix<f64> {
    let mut d = DMatrix::zeros(20, 20);
    for j in 0..20 {
        let col = reference_dofs(2, |p| candidates(p).0[j]);
        for (i, v) in col.into_iter().enumerate() {
            d[(i, j)] = v;
        }
    }
    d
}

impl CurlBasis {
    pub fn new(order: usize) -> Result<Self> {
        let entities = match order {
            1 => (0..6).map(|edge| DofEntity::Edge { edge, moment: 0 }).collect(),
            2 => (0..6)
                .flat_map(|edge| (0..2).map(move |moment| DofEntity::Edge { edge, moment }))
                .chain((0..4).flat_map(|face| (0..2).map(move |moment| DofEntity::Face { face, moment })))
                .collect(),
            k => return Err(Error::UnsupportedOrder(k)),
        };
        let coeffs = (order == 2).then(|| {
            candidate_dof_matrix()
                .try_inverse()
                .expect("order-2 candidate family is unisolvent")
        });
        Ok(Self {
            order,
            entities,
            coeffs,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn n_dofs(&self) -> usize {
        self.entities.len()
    }

    pub fn dof_entities(&self) -> &[DofEntity] {
        &self.entities
    }

    /// Condition number (2-norm) of the order-2 candidate DOF matrix.
    pub fn dof_matrix_condition(&self) -> f64 {
        let d = match self.order {
            1 => return 1.0,
            _ => candidate_dof_matrix(),
        };
        let s = d.singular_values();
        s.max() / s.min()
    }

    /// Shape-function values and curls at `p`, written into the slices.
    pub fn eval_into(&self, p: &Vector3<f64>, values: &mut [Vector3<f64>], curls: &mut [Vector3<f64>]) {
        match &self.coeffs {
            None => {
                let l = barycentric(p);
                for (e, &[a, b]) in TET_EDGES.iter().enumerate() {
                    values[e] = whitney(&l, a, b);
                    curls[e] = whitney_curl(a, b);
                }
            }
            Some(x) => {
                let (cv, cc) = candidates(p);
                for j in 0..20 {
                    let mut v = Vector3::zeros();
                    let mut c = Vector3::zeros();
                    for k in 0..20 {
                        let a = x[(k, j)];
                        v += cv[k] * a;
                        c += cc[k] * a;
                    }
                    values[j] = v;
                    curls[j] = c;
                }
            }
        }
    }

    pub fn eval_basis(&self, p: &Vector3<f64>) -> Vec<Vector3<f64>> {
        self.eval_both(p).0
    }

    pub fn eval_curl_basis(&self, p: &Vector3<f64>) -> Vec<Vector3<f64>> {
        self.eval_both(p).1
    }

    pub fn eval_both(&self, p: &Vector3<f64>) -> (Vec<Vector3<f64>>, Vec<Vector3<f64>>) {
        let n = self.n_dofs();
        let mut v = vec![Vector3::zeros(); n];
        let mut c = vec![Vector3::zeros(); n];
        self.eval_into(p, &mut v, &mut c);
        (v, c)
    }
}

/// Covariant Piola push: values by `J⁻ᵀ`, curls by `J / det J`.
pub fn piola_push(
    values: &[Vector3<f64>],
    curls: &[Vector3<f64>],
    jac: &Matrix3<f64>,
) -> Result<(Vec<Vector3<f64>>, Vec<Vector3<f64>>)> {
    let det = jac.determinant();
    let inv_t = jac
        .try_inverse()
        .filter(|_| det != 0.0 && det.is_finite())
        .ok_or(Error::SingularJacobian(det))?
        .transpose();
    Ok((
        values.iter().map(|v| inv_t * v).collect(),
        curls.iter().map(|c| jac * c / det).collect(),
    ))
}

/// Per-element orientation data derived from global vertex ids.
///
/// Edge moment 0 changes sign with the edge direction; moment 1 (weight
/// `2τ − 1`) is invariant. Face moments are re-expressed in the frame that
/// starts at the smallest global id and runs to the next two in order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientationKey {
    pub edge_signs: [f64; 6],
    /// `face_transforms[f][j][k]`: global face function `j` is
    /// `Σ_k T[j][k]` times local face function `k`.
    pub face_transforms: [[[f64; 2]; 2]; 4],
}

pub fn orientation_key(ids: [usize; 4]) -> OrientationKey {
    let edge_signs = TET_EDGES.map(|[a, b]| if ids[a] < ids[b] { 1.0 } else { -1.0 });
    let face_transforms = TET_FACES.map(|local| {
        // Local face frame coordinates of its three vertices.
        const COORD: [[i32; 2]; 3] = [[0, 0], [1, 0], [0, 1]];
        let mut order = [0usize, 1, 2];
        order.sort_by_key(|&i| ids[local[i]]);
        let [pa, pb, pc] = order;
        let col = |p: usize| [COORD[p][0] - COORD[pa][0], COORD[p][1] - COORD[pa][1]];
        let (c0, c1) = (col(pb), col(pc));
        // C = [c0 c1]; the transform is C⁻¹ (det C = ±1).
        let det = c0[0] * c1[1] - c1[0] * c0[1];
        debug_assert!(det.abs() == 1);
        let inv = [[c1[1] * det, -c1[0] * det], [-c0[1] * det, c0[0] * det]];
        inv.map(|row| row.map(f64::from))
    });
    OrientationKey {
        edge_signs,
        face_transforms,
    }
}

impl OrientationKey {
    /// Converts a per-DOF table from local to global orientation in place.
    pub fn apply<T>(&self, order: usize, vals: &mut [T])
    where
        T: Copy + Mul<f64, Output = T> + Add<Output = T>,
    {
        if order == 1 {
            for (v, s) in vals.iter_mut().zip(&self.edge_signs) {
                *v = *v * *s;
            }
            return;
        }
        for (e, s) in self.edge_signs.iter().enumerate() {
            vals[2 * e] = vals[2 * e] * *s;
        }
        for (f, t) in self.face_transforms.iter().enumerate() {
            let (u, v) = (vals[12 + 2 * f], vals[13 + 2 * f]);
            vals[12 + 2 * f] = u * t[0][0] + v * t[0][1];
            vals[13 + 2 * f] = u * t[1][0] + v * t[1][1];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::AffineMap;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(seed)
    }

    fn interior_point(r: &mut impl Rng) -> Vector3<f64> {
        loop {
            let p = Vector3::new(r.gen_range(0.05..0.9), r.gen_range(0.05..0.9), r.gen_range(0.05..0.9));
            if p.sum() < 0.9 {
                return p;
            }
        }
    }

    fn fd_curl(f: impl Fn(&Vector3<f64>) -> Vector3<f64>, p: &Vector3<f64>, h: f64) -> Vector3<f64> {
        let d = |i: usize| {
            let e = Vector3::ith(i, h);
            (f(&(p + e)) - f(&(p - e))) / (2.0 * h)
        };
        let (dx, dy, dz) = (d(0), d(1), d(2));
        Vector3::new(dy.z - dz.y, dz.x - dx.z, dx.y - dy.x)
    }

    #[test]
    fn whitney_table_at_origin() {
        let b = CurlBasis::new(1).unwrap();
        let v = b.eval_basis(&Vector3::zeros());
        let expected = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0; 3], [0.0; 3], [0.0; 3]];
        for (vi, ei) in v.iter().zip(expected) {
            assert_eq!(*vi, Vector3::from(ei));
        }
    }

    #[test]
    fn whitney_curls_hand_derived_and_constant() {
        let b = CurlBasis::new(1).unwrap();
        let expected = [
            [0.0, -2.0, 2.0],
            [2.0, 0.0, -2.0],
            [-2.0, 2.0, 0.0],
            [0.0, 0.0, 2.0],
            [0.0, -2.0, 0.0],
            [2.0, 0.0, 0.0],
        ];
        let c1 = b.eval_curl_basis(&Vector3::new(0.1, 0.2, 0.3));
        let c2 = b.eval_curl_basis(&Vector3::new(0.6, 0.1, 0.05));
        for i in 0..6 {
            assert_eq!(c1[i], Vector3::from(expected[i]));
            assert_eq!(c1[i], c2[i]);
        }
    }

    #[test]
    fn dof_counts() {
        assert_eq!(CurlBasis::new(1).unwrap().n_dofs(), 6);
        assert_eq!(CurlBasis::new(2).unwrap().n_dofs(), 20);
        assert!(matches!(CurlBasis::new(3), Err(Error::UnsupportedOrder(3))));
    }

    #[test]
    fn duality_both_orders() {
        for k in [1, 2] {
            let b = CurlBasis::new(k).unwrap();
            for j in 0..b.n_dofs() {
                let dofs = reference_dofs(k, |p| b.eval_basis(p)[j]);
                for (i, d) in dofs.iter().enumerate() {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    assert!((d - delta).abs() < 1e-12, "k={k} dof {i} of fn {j}: {d}");
                }
            }
        }
    }

    #[test]
    fn order_two_candidate_matrix_well_conditioned() {
        let cond = CurlBasis::new(2).unwrap().dof_matrix_condition();
        assert!(cond < 1e3, "condition {cond}");
    }

    #[test]
    fn curls_match_finite_differences() {
        let mut r = rng(1);
        for k in [1, 2] {
            let b = CurlBasis::new(k).unwrap();
            for _ in 0..5 {
                let p = interior_point(&mut r);
                let c = b.eval_curl_basis(&p);
                for j in 0..b.n_dofs() {
                    let fd = fd_curl(|q| b.eval_basis(q)[j], &p, 1e-5);
                    assert!((fd - c[j]).norm() < 1e-7, "k={k} j={j}");
                }
            }
        }
    }

    #[test]
    fn order_two_curls_are_divergence_free() {
        let b = CurlBasis::new(2).unwrap();
        let mut r = rng(2);
        let h = 1e-4;
        for _ in 0..5 {
            let p = interior_point(&mut r);
            for j in 0..20 {
                let div: f64 = (0..3)
                    .map(|i| {
                        let e = Vector3::ith(i, h);
                        (b.eval_curl_basis(&(p + e))[j][i] - b.eval_curl_basis(&(p - e))[j][i]) / (2.0 * h)
                    })
                    .sum();
                assert!(div.abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn order_two_spans_first_kind_space() {
        // The full degree-1 vector space (12 dims) must be reproduced by
        // interpolation, as well as x × (linear) terms.
        let b = CurlBasis::new(2).unwrap();
        let fields: [fn(&Vector3<f64>) -> Vector3<f64>; 4] = [
            |p| Vector3::new(1.0 + p.y, p.z - 2.0 * p.x, 0.5),
            |p| Vector3::new(p.z, p.x, p.y),
            |p| p.cross(&Vector3::new(p.x, 0.0, 0.0)),
            |p| p.cross(&Vector3::new(p.y, p.z, -p.x)),
        ];
        let mut r = rng(3);
        for u in fields {
            let dofs = reference_dofs(2, u);
            for _ in 0..5 {
                let p = interior_point(&mut r);
                let v = b.eval_basis(&p);
                let interp = v.iter().zip(&dofs).fold(Vector3::zeros(), |acc, (vi, d)| acc + vi * *d);
                assert_relative_eq!(interp, u(&p), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn gradients_of_hat_functions_in_whitney_span() {
        let b = CurlBasis::new(1).unwrap();
        let mut r = rng(4);
        for i in 0..4 {
            let g = grad_barycentric(i);
            let coeffs = reference_dofs(1, |_| g);
            for _ in 0..5 {
                let p = interior_point(&mut r);
                let v = b.eval_basis(&p);
                let fit = v.iter().zip(&coeffs).fold(Vector3::zeros(), |acc, (vi, c)| acc + vi * *c);
                assert!((fit - g).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn piola_identity_and_scaling() {
        let b = CurlBasis::new(2).unwrap();
        let p = Vector3::new(0.2, 0.1, 0.3);
        let (v, c) = b.eval_both(&p);
        let (pv, pc) = piola_push(&v, &c, &Matrix3::identity()).unwrap();
        assert_eq!(pv, v);
        assert_eq!(pc, c);
        let s = 3.0;
        let (sv, sc) = piola_push(&v, &c, &(Matrix3::identity() * s)).unwrap();
        for j in 0..20 {
            assert_relative_eq!(sv[j], v[j] / s, epsilon = 1e-15);
            assert_relative_eq!(sc[j], c[j] / (s * s), epsilon = 1e-15);
        }
        assert!(piola_push(&v, &c, &Matrix3::zeros()).is_err());
    }

    #[test]
    fn pushed_curl_matches_finite_difference_after_affine_map() {
        let mut r = rng(5);
        for k in [1, 2] {
            let b = CurlBasis::new(k).unwrap();
            let jac = loop {
                let m = Matrix3::from_fn(|_, _| r.gen_range(-1.0..1.0));
                if m.determinant() > 0.2 {
                    break m;
                }
            };
            let map = AffineMap::new(Vector3::new(0.3, -0.2, 1.0), jac).unwrap();
            let pushed = |x: &Vector3<f64>| {
                let p = map.inverse_apply(x);
                let (v, c) = b.eval_both(&p);
                piola_push(&v, &c, map.jacobian()).unwrap()
            };
            for _ in 0..3 {
                let x = map.apply(&interior_point(&mut r));
                let (_, c) = pushed(&x);
                for j in 0..b.n_dofs() {
                    let fd = fd_curl(|y| pushed(y).0[j], &x, 1e-5);
                    assert!((fd - c[j]).norm() <= 1e-5, "k={k} j={j}");
                }
            }
        }
    }

    #[test]
    fn orientation_signs() {
        assert_eq!(orientation_key([0, 1, 2, 3]).edge_signs, [1.0; 6]);
        assert_eq!(orientation_key([3, 2, 1, 0]).edge_signs, [-1.0; 6]);
        let id = orientation_key([0, 1, 2, 3]).face_transforms;
        for t in id {
            assert_eq!(t, [[1.0, 0.0], [0.0, 1.0]]);
        }
    }

    /// Global key of a DOF: sorted global vertex ids of its entity plus the
    /// moment index.
    fn global_key(ids: [usize; 4], ent: DofEntity) -> (Vec<usize>, usize) {
        let (mut v, m) = match ent {
            DofEntity::Edge { edge, moment } => (TET_EDGES[edge].iter().map(|&a| ids[a]).collect::<Vec<_>>(), moment),
            DofEntity::Face { face, moment } => (TET_FACES[face].iter().map(|&a| ids[a]).collect(), moment),
        };
        v.sort_unstable();
        (v, m)
    }

    /// Oriented, pushed global basis of one element at physical point `x`.
    fn element_basis(
        b: &CurlBasis,
        ids: [usize; 4],
        verts: &[Vector3<f64>; 4],
        x: &Vector3<f64>,
    ) -> Vec<((Vec<usize>, usize), Vector3<f64>)> {
        let map = AffineMap::from_vertices(verts).unwrap();
        let (mut v, c) = b.eval_both(&map.inverse_apply(x));
        orientation_key(ids).apply(b.order(), &mut v);
        let (pv, _) = piola_push(&v, &c, map.jacobian()).unwrap();
        b.dof_entities()
            .iter()
            .zip(pv)
            .map(|(e, v)| (global_key(ids, *e), v))
            .collect()
    }

    #[test]
    fn tangential_conformity_across_shared_face() {
        let mut r = rng(6);
        for k in [1, 2] {
            let b = CurlBasis::new(k).unwrap();
            for trial in 0..6 {
                // Shared face {p, q, s} with apexes on either side.
                let pts: Vec<Vector3<f64>> = (0..3)
                    .map(|_| Vector3::from_fn(|_, _| r.gen_range(-1.0..1.0)))
                    .collect();
                let n = (pts[1] - pts[0]).cross(&(pts[2] - pts[0])).normalize();
                let centre = (pts[0] + pts[1] + pts[2]) / 3.0;
                let apex1 = centre + n * 0.7 + Vector3::from_fn(|_, _| r.gen_range(-0.2..0.2));
                let apex2 = centre - n * 0.6 + Vector3::from_fn(|_, _| r.gen_range(-0.2..0.2));
                // Random global ids, shared vertices keep the same id.
                let mut gid: Vec<usize> = (0..5).map(|i| 10 * i + trial).collect();
                for i in (1..5).rev() {
                    gid.swap(i, r.gen_range(0..=i));
                }
                let mut v1 = [pts[0], pts[1], pts[2], apex1];
                let mut id1 = [gid[0], gid[1], gid[2], gid[3]];
                if (v1[1] - v1[0]).dot(&(v1[2] - v1[0]).cross(&(v1[3] - v1[0]))) < 0.0 {
                    v1.swap(2, 3);
                    id1.swap(2, 3);
                }
                let mut v2 = [apex2, pts[2], pts[0], pts[1]];
                let mut id2 = [gid[4], gid[2], gid[0], gid[1]];
                if (v2[1] - v2[0]).dot(&(v2[2] - v2[0]).cross(&(v2[3] - v2[0]))) < 0.0 {
                    v2.swap(2, 3);
                    id2.swap(2, 3);
                }
                for _ in 0..10 {
                    let (s, t): (f64, f64) = (r.gen(), r.gen());
                    let (s, t) = if s + t > 1.0 { (1.0 - s, 1.0 - t) } else { (s, t) };
                    let x = pts[0] + (pts[1] - pts[0]) * s + (pts[2] - pts[0]) * t;
                    let e1 = element_basis(&b, id1, &v1, &x);
                    let e2 = element_basis(&b, id2, &v2, &x);
                    for (key, val) in &e1 {
                        let tan = val.cross(&n);
                        match e2.iter().find(|(k2, _)| k2 == key) {
                            Some((_, val2)) => assert!((tan - val2.cross(&n)).norm() <= 1e-10, "k={k} {key:?}"),
                            None => assert!(tan.norm() <= 1e-10, "k={k} {key:?} leaks onto face"),
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn shared_edge_direction_consistent() {
        // Both tets contain the edge {7, 9}; the pushed global function for
        // that edge must have tangential integral +1 along 7 → 9 in both.
        let x7 = Vector3::new(0.0, 0.0, 0.0);
        let x9 = Vector3::new(1.0, 0.2, 0.1);
        let tets = [
            ([9, 7, 3, 4], [x9, x7, Vector3::new(0.3, 1.0, 0.0), Vector3::new(0.2, 0.3, 1.0)]),
            ([7, 12, 9, 1], [x7, Vector3::new(0.5, -1.0, 0.2), x9, Vector3::new(0.4, 0.1, -1.0)]),
        ];
        let b = CurlBasis::new(1).unwrap();
        for (ids, mut verts) in tets {
            let mut ids = ids;
            if (verts[1] - verts[0]).dot(&(verts[2] - verts[0]).cross(&(verts[3] - verts[0]))) < 0.0 {
                verts.swap(2, 3);
                ids.swap(2, 3);
            }
            let e = TET_EDGES
                .iter()
                .position(|&[a, c]| {
                    let mut s = [ids[a], ids[c]];
                    s.sort();
                    s == [7, 9]
                })
                .unwrap();
            let m = edge_moments(&x7, &x9, |x, t| {
                let basis = element_basis(&b, ids, &verts, x);
                basis[e].1.dot(t)
            });
            assert_relative_eq!(m[0], 1.0, epsilon = 1e-12);
        }
    }
}
