//! Numeric sesquilinear and antilinear forms and their sparse assembly.
//!
//! The three integrals of the weak form each get their own reference rule:
//! `q1` for the curl-curl term, `q2` for the mass term, `q3` for the load.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{element_map, AffineMap, TetMesh};
use crate::quadrature::{rule_for_degree, RefQuadratureRule};
use crate::reference_element::{edge_moments, face_moments, orientation_key, CurlBasis, DofEntity, OrientationKey};
use crate::sparse::CsrMatrix;

pub type CVector3 = Vector3<Complex64>;
pub type CMatrix3 = Matrix3<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn to_complex(v: &Vector3<f64>) -> CVector3 {
    v.map(|x| Complex64::new(x, 0.0))
}

type MatrixFn = dyn Fn(&Vector3<f64>) -> CMatrix3 + Send + Sync;
type VectorFn = dyn Fn(&Vector3<f64>) -> CVector3 + Send + Sync;

/// Matrix-valued coefficient (`μ⁻¹` or `ε`).
#[derive(Clone)]
pub enum MatrixCoeff {
    Constant(CMatrix3),
    /// `degree` is the polynomial degree of the field, `None` if not polynomial.
    Field { f: Arc<MatrixFn>, degree: Option<usize> },
}

impl MatrixCoeff {
    pub fn scalar(c: f64) -> Self {
        MatrixCoeff::Constant(CMatrix3::identity() * Complex64::new(c, 0.0))
    }

    pub fn field<F>(f: F, degree: Option<usize>) -> Self
    where
        F: Fn(&Vector3<f64>) -> CMatrix3 + Send + Sync + 'static,
    {
        MatrixCoeff::Field { f: Arc::new(f), degree }
    }

    /// Isotropic field `s(x) I`.
    pub fn isotropic<F>(s: F, degree: Option<usize>) -> Self
    where
        F: Fn(&Vector3<f64>) -> f64 + Send + Sync + 'static,
    {
        Self::field(move |x| CMatrix3::identity() * Complex64::new(s(x), 0.0), degree)
    }

    pub fn at(&self, x: &Vector3<f64>) -> CMatrix3 {
        match self {
            MatrixCoeff::Constant(m) => *m,
            MatrixCoeff::Field { f, .. } => f(x),
        }
    }

    pub fn degree(&self) -> Option<usize> {
        match self {
            MatrixCoeff::Constant(_) => Some(0),
            MatrixCoeff::Field { degree, .. } => *degree,
        }
    }
}

impl fmt::Debug for MatrixCoeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixCoeff::Constant(m) => f.debug_tuple("Constant").field(m).finish(),
            MatrixCoeff::Field { degree, .. } => f.debug_struct("Field").field("degree", degree).finish(),
        }
    }
}

/// Vector-valued source `J`.
#[derive(Clone)]
pub enum VectorCoeff {
    Zero,
    Field { f: Arc<VectorFn>, degree: Option<usize> },
}

impl VectorCoeff {
    pub fn field<F>(f: F, degree: Option<usize>) -> Self
    where
        F: Fn(&Vector3<f64>) -> CVector3 + Send + Sync + 'static,
    {
        VectorCoeff::Field { f: Arc::new(f), degree }
    }

    pub fn at(&self, x: &Vector3<f64>) -> CVector3 {
        match self {
            VectorCoeff::Zero => CVector3::zeros(),
            VectorCoeff::Field { f, .. } => f(x),
        }
    }

    pub fn degree(&self) -> Option<usize> {
        match self {
            VectorCoeff::Zero => Some(0),
            VectorCoeff::Field { degree, .. } => *degree,
        }
    }
}

impl fmt::Debug for VectorCoeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VectorCoeff::Zero => f.write_str("Zero"),
            VectorCoeff::Field { degree, .. } => f.debug_struct("Field").field("degree", degree).finish(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Coefficients {
    pub mu_inv: MatrixCoeff,
    pub eps: MatrixCoeff,
    pub omega: f64,
    pub current: VectorCoeff,
}

impl Coefficients {
    /// `μ⁻¹ = I`, `ε = I`, `ω = 1`, no source.
    pub fn unit() -> Self {
        Self {
            mu_inv: MatrixCoeff::scalar(1.0),
            eps: MatrixCoeff::scalar(1.0),
            omega: 1.0,
            current: VectorCoeff::Zero,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureConfig {
    /// Curl-curl term.
    pub q1: RefQuadratureRule,
    /// Mass term.
    pub q2: RefQuadratureRule,
    /// Load term.
    pub q3: RefQuadratureRule,
}

/// Degree of the reference rule used to stand in for exact integration.
fn reference_degree(integrand: usize, coeff: Option<usize>) -> usize {
    match coeff {
        Some(d) => integrand + d + 2,
        None => (integrand + 2).max(10),
    }
}

impl QuadratureConfig {
    pub fn uniform(rule: RefQuadratureRule) -> Self {
        Self {
            q1: rule.clone(),
            q2: rule.clone(),
            q3: rule,
        }
    }

    /// Rules accurate enough to act as exact integration for order `k` and
    /// the given coefficients.
    pub fn reference(k: usize, coeffs: &Coefficients) -> Self {
        Self {
            q1: rule_for_degree(reference_degree(2 * (k - 1), coeffs.mu_inv.degree())),
            q2: rule_for_degree(reference_degree(2 * k, coeffs.eps.degree())),
            q3: rule_for_degree(reference_degree(k, coeffs.current.degree())),
        }
    }
}

/// Global numbering: one DOF per edge for `k = 1`; for `k = 2`, edge `e`
/// owns `2e, 2e + 1` and face `f` owns `2 n_edges + 2f, 2 n_edges + 2f + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofLayout {
    pub order: usize,
    pub n_edges: usize,
    pub n_faces: usize,
}

impl DofLayout {
    pub fn new(mesh: &TetMesh, order: usize) -> Result<Self> {
        if !(1..=2).contains(&order) {
            return Err(Error::UnsupportedOrder(order));
        }
        Ok(Self {
            order,
            n_edges: mesh.edges().len(),
            n_faces: mesh.faces().len(),
        })
    }

    pub fn n_dofs(&self) -> usize {
        match self.order {
            1 => self.n_edges,
            _ => 2 * (self.n_edges + self.n_faces),
        }
    }

    pub fn edge_dof(&self, edge: usize, moment: usize) -> usize {
        match self.order {
            1 => edge,
            _ => 2 * edge + moment,
        }
    }

    pub fn face_dof(&self, face: usize, moment: usize) -> usize {
        2 * self.n_edges + 2 * face + moment
    }

    /// Global DOFs of tet `t` in local basis order.
    pub fn element_dofs(&self, mesh: &TetMesh, basis: &CurlBasis, t: usize) -> Vec<usize> {
        let edges = &mesh.tet_edges()[t];
        let faces = &mesh.tet_faces()[t];
        basis
            .dof_entities()
            .iter()
            .map(|ent| match *ent {
                DofEntity::Edge { edge, moment } => self.edge_dof(edges[edge], moment),
                DofEntity::Face { face, moment } => self.face_dof(faces[face], moment),
            })
            .collect()
    }

    /// `true` for DOFs on boundary edges or faces.
    pub fn boundary_mask(&self, mesh: &TetMesh) -> Vec<bool> {
        let mut mask = vec![false; self.n_dofs()];
        let moments = if self.order == 1 { 1 } else { 2 };
        for &e in mesh.boundary_edges() {
            for m in 0..moments {
                mask[self.edge_dof(e, m)] = true;
            }
        }
        if self.order == 2 {
            for &f in mesh.boundary_faces() {
                for m in 0..2 {
                    mask[self.face_dof(f, m)] = true;
                }
            }
        }
        mask
    }
}

/// Reference basis values and curls tabulated at the points of a rule.
struct Tables {
    rule: RefQuadratureRule,
    values: Vec<Vec<Vector3<f64>>>,
    curls: Vec<Vec<Vector3<f64>>>,
}

impl Tables {
    fn new(basis: &CurlBasis, rule: &RefQuadratureRule) -> Self {
        let (values, curls) = rule.points().iter().map(|p| basis.eval_both(p)).unzip();
        Self {
            rule: rule.clone(),
            values,
            curls,
        }
    }
}

/// Oriented, Piola-pushed basis at one reference point of an affine element.
pub fn physical_basis(
    order: usize,
    key: &OrientationKey,
    map: &AffineMap,
    values: &[Vector3<f64>],
    curls: &[Vector3<f64>],
) -> (Vec<Vector3<f64>>, Vec<Vector3<f64>>) {
    let inv_t = map.inverse().transpose();
    let jac = map.jacobian() / map.det();
    let mut v: Vec<_> = values.iter().map(|x| inv_t * x).collect();
    let mut c: Vec<_> = curls.iter().map(|x| jac * x).collect();
    key.apply(order, &mut v);
    key.apply(order, &mut c);
    (v, c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementMatrices {
    /// `A[i][j] = Q¹(μ⁻¹ curl φ_j · curl φ_i)`.
    pub curl_curl: DMatrix<Complex64>,
    /// `M[i][j] = Q²(−ω² ε φ_j · φ_i)`.
    pub mass: DMatrix<Complex64>,
    /// `f[i] = Q³(−iω J · φ_i)`.
    pub load: DVector<Complex64>,
}

struct ElementAssembler {
    basis: CurlBasis,
    t1: Tables,
    t2: Tables,
    t3: Tables,
}

impl ElementAssembler {
    fn new(basis: &CurlBasis, config: &QuadratureConfig) -> Self {
        Self {
            basis: basis.clone(),
            t1: Tables::new(basis, &config.q1),
            t2: Tables::new(basis, &config.q2),
            t3: Tables::new(basis, &config.q3),
        }
    }

    fn compute(&self, map: &AffineMap, ids: [usize; 4], coeffs: &Coefficients) -> ElementMatrices {
        let n = self.basis.n_dofs();
        let k = self.basis.order();
        let key = orientation_key(ids);
        let vol = map.det().abs();
        let mut a = DMatrix::from_element(n, n, ZERO);
        let mut m = DMatrix::from_element(n, n, ZERO);
        let mut f = DVector::from_element(n, ZERO);

        for (q, (p, w)) in self.t1.rule.points().iter().zip(self.t1.rule.weights()).enumerate() {
            let (_, c) = physical_basis(k, &key, map, &self.t1.values[q], &self.t1.curls[q]);
            let mu = coeffs.mu_inv.at(&map.apply(p)) * Complex64::new(w * vol, 0.0);
            for j in 0..n {
                let mc = mu * to_complex(&c[j]);
                for i in 0..n {
                    a[(i, j)] += mc.dot(&to_complex(&c[i]));
                }
            }
        }
        let s = -coeffs.omega * coeffs.omega;
        for (q, (p, w)) in self.t2.rule.points().iter().zip(self.t2.rule.weights()).enumerate() {
            let (v, _) = physical_basis(k, &key, map, &self.t2.values[q], &self.t2.curls[q]);
            let eps = coeffs.eps.at(&map.apply(p)) * Complex64::new(s * w * vol, 0.0);
            for j in 0..n {
                let ev = eps * to_complex(&v[j]);
                for i in 0..n {
                    m[(i, j)] += ev.dot(&to_complex(&v[i]));
                }
            }
        }
        if !matches!(coeffs.current, VectorCoeff::Zero) {
            let s = Complex64::new(0.0, -coeffs.omega);
            for (q, (p, w)) in self.t3.rule.points().iter().zip(self.t3.rule.weights()).enumerate() {
                let (v, _) = physical_basis(k, &key, map, &self.t3.values[q], &self.t3.curls[q]);
                let j = coeffs.current.at(&map.apply(p)) * (s * (w * vol));
                for i in 0..n {
                    f[i] += j.dot(&to_complex(&v[i]));
                }
            }
        }
        ElementMatrices {
            curl_curl: a,
            mass: m,
            load: f,
        }
    }
}

/// Element blocks for an affine element with global vertex ids `ids`
/// (used for orientation).
pub fn element_matrices(
    map: &AffineMap,
    ids: [usize; 4],
    basis: &CurlBasis,
    coeffs: &Coefficients,
    config: &QuadratureConfig,
) -> Result<ElementMatrices> {
    if map.det() == 0.0 || !map.det().is_finite() {
        return Err(Error::SingularJacobian(map.det()));
    }
    Ok(ElementAssembler::new(basis, config).compute(map, ids, coeffs))
}

/// Scattered system before PEC elimination.
#[derive(Debug, Clone)]
pub struct FullSystem {
    pub layout: DofLayout,
    pub curl_curl: CsrMatrix,
    pub mass: CsrMatrix,
    pub rhs: Vec<Complex64>,
}

impl FullSystem {
    /// `A + M`.
    pub fn matrix(&self) -> CsrMatrix {
        let mut s = self.curl_curl.clone();
        s.add_scaled(Complex64::new(1.0, 0.0), &self.mass);
        s
    }
}

fn sparsity(mesh: &TetMesh, layout: &DofLayout, basis: &CurlBasis) -> CsrMatrix {
    let mut rows = vec![Vec::new(); layout.n_dofs()];
    for t in 0..mesh.n_tets() {
        let dofs = layout.element_dofs(mesh, basis, t);
        for &i in &dofs {
            rows[i].extend_from_slice(&dofs);
        }
    }
    CsrMatrix::from_pattern(rows)
}

/// Elements processed per parallel batch before the ordered scatter.
const BATCH: usize = 2048;

pub fn assemble_full(mesh: &TetMesh, k: usize, coeffs: &Coefficients, config: &QuadratureConfig) -> Result<FullSystem> {
    let basis = CurlBasis::new(k)?;
    let layout = DofLayout::new(mesh, k)?;
    let assembler = ElementAssembler::new(&basis, config);
    let mut a = sparsity(mesh, &layout, &basis);
    let mut m = a.clone();
    let mut rhs = vec![ZERO; layout.n_dofs()];
    let tets: Vec<usize> = (0..mesh.n_tets()).collect();
    for batch in tets.chunks(BATCH) {
        let blocks = batch
            .par_iter()
            .map(|&t| {
                let map = element_map(mesh, t)?;
                Ok(assembler.compute(&map, mesh.tets()[t], coeffs))
            })
            .collect::<Result<Vec<_>>>()?;
        for (&t, blk) in batch.iter().zip(&blocks) {
            let dofs = layout.element_dofs(mesh, &basis, t);
            for (j, &gj) in dofs.iter().enumerate() {
                for (i, &gi) in dofs.iter().enumerate() {
                    a.add(gi, gj, blk.curl_curl[(i, j)]);
                    m.add(gi, gj, blk.mass[(i, j)]);
                }
                rhs[gj] += blk.load[j];
            }
        }
    }
    Ok(FullSystem {
        layout,
        curl_curl: a,
        mass: m,
        rhs,
    })
}

/// PEC-constrained system: boundary DOFs removed.
#[derive(Debug, Clone)]
pub struct SparseSystem<'m> {
    pub mesh: &'m TetMesh,
    pub layout: DofLayout,
    pub matrix: CsrMatrix,
    pub rhs: Vec<Complex64>,
    /// Indexed by global DOF.
    pub constrained: Vec<bool>,
    /// Global DOF of each free unknown.
    pub free_dofs: Vec<usize>,
}

impl<'m> SparseSystem<'m> {
    pub fn n_free(&self) -> usize {
        self.free_dofs.len()
    }

    /// Full DOF vector from free values, zeros on constrained DOFs.
    pub fn expand(&self, free: &[Complex64]) -> SolutionField<'m> {
        let mut dofs = vec![ZERO; self.layout.n_dofs()];
        for (&g, &v) in self.free_dofs.iter().zip(free) {
            dofs[g] = v;
        }
        SolutionField::new(self.mesh, self.layout.order, dofs).expect("layout order is valid")
    }

    pub fn write_matrix(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.matrix.to_coordinate_text()).map_err(|e| Error::io(path, e))
    }
}

pub fn eliminate<'m>(mesh: &'m TetMesh, full: &FullSystem) -> SparseSystem<'m> {
    let constrained = full.layout.boundary_mask(mesh);
    let keep: Vec<bool> = constrained.iter().map(|c| !c).collect();
    let free_dofs: Vec<usize> = (0..keep.len()).filter(|&i| keep[i]).collect();
    SparseSystem {
        mesh,
        layout: full.layout,
        matrix: full.matrix().restrict(&keep),
        rhs: free_dofs.iter().map(|&g| full.rhs[g]).collect(),
        constrained,
        free_dofs,
    }
}

pub fn assemble<'m>(
    mesh: &'m TetMesh,
    k: usize,
    coeffs: &Coefficients,
    config: &QuadratureConfig,
) -> Result<SparseSystem<'m>> {
    let full = assemble_full(mesh, k, coeffs, config)?;
    Ok(eliminate(mesh, &full))
}

/// Discrete field `E_h` on a mesh.
#[derive(Debug, Clone)]
pub struct SolutionField<'m> {
    mesh: &'m TetMesh,
    basis: CurlBasis,
    layout: DofLayout,
    dofs: Vec<Complex64>,
}

impl<'m> SolutionField<'m> {
    pub fn new(mesh: &'m TetMesh, order: usize, dofs: Vec<Complex64>) -> Result<Self> {
        let layout = DofLayout::new(mesh, order)?;
        if dofs.len() != layout.n_dofs() {
            return Err(Error::DimensionMismatch {
                expected: layout.n_dofs(),
                got: dofs.len(),
            });
        }
        Ok(Self {
            mesh,
            basis: CurlBasis::new(order)?,
            layout,
            dofs,
        })
    }

    pub fn mesh(&self) -> &'m TetMesh {
        self.mesh
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn dofs(&self) -> &[Complex64] {
        &self.dofs
    }

    pub fn layout(&self) -> &DofLayout {
        &self.layout
    }

    /// Coefficients of the element's oriented local basis.
    pub fn element_dofs(&self, t: usize) -> Vec<Complex64> {
        self.layout
            .element_dofs(self.mesh, &self.basis, t)
            .into_iter()
            .map(|g| self.dofs[g])
            .collect()
    }

    /// `(E_h, curl E_h)` at reference point `p` of tet `t`.
    pub fn eval_in(&self, t: usize, p: &Vector3<f64>) -> (CVector3, CVector3) {
        let map = element_map(self.mesh, t).expect("mesh tets are non-degenerate");
        let (v, c) = self.basis.eval_both(p);
        let (v, c) = physical_basis(self.order(), &orientation_key(self.mesh.tets()[t]), &map, &v, &c);
        combine(&self.element_dofs(t), &v, &c)
    }

    /// Tet containing `x` (first match, with tolerance) and its reference point.
    pub fn locate(&self, x: &Vector3<f64>) -> Option<(usize, Vector3<f64>)> {
        (0..self.mesh.n_tets()).find_map(|t| {
            let map = element_map(self.mesh, t).ok()?;
            let p = map.inverse_apply(x);
            let tol = 1e-12;
            (p.min() >= -tol && p.sum() <= 1.0 + tol).then_some((t, p))
        })
    }

    /// `(E_h, curl E_h)` at physical point `x`, if inside the mesh.
    pub fn eval(&self, x: &Vector3<f64>) -> Option<(CVector3, CVector3)> {
        self.locate(x).map(|(t, p)| self.eval_in(t, &p))
    }
}

pub(crate) fn combine(coef: &[Complex64], v: &[Vector3<f64>], c: &[Vector3<f64>]) -> (CVector3, CVector3) {
    let mut e = CVector3::zeros();
    let mut ce = CVector3::zeros();
    for ((a, vi), ci) in coef.iter().zip(v).zip(c) {
        e += to_complex(vi) * *a;
        ce += to_complex(ci) * *a;
    }
    (e, ce)
}

/// Global DOFs of the canonical interpolant of `field`.
pub fn interpolate<F>(mesh: &TetMesh, k: usize, field: F) -> Result<Vec<Complex64>>
where
    F: Fn(&Vector3<f64>) -> CVector3 + Sync,
{
    let layout = DofLayout::new(mesh, k)?;
    let x = mesh.vertices();
    let tangential = |p: &Vector3<f64>, t: &Vector3<f64>| field(p).dot(&to_complex(t));
    let mut dofs = vec![ZERO; layout.n_dofs()];
    let edge_vals: Vec<[Complex64; 2]> = mesh
        .edges()
        .par_iter()
        .map(|&[a, b]| edge_moments(&x[a], &x[b], tangential))
        .collect();
    for (e, m) in edge_vals.iter().enumerate() {
        dofs[layout.edge_dof(e, 0)] = m[0];
        if k == 2 {
            dofs[layout.edge_dof(e, 1)] = m[1];
        }
    }
    if k == 2 {
        let face_vals: Vec<[Complex64; 2]> = mesh
            .faces()
            .par_iter()
            .map(|&[a, b, c]| face_moments(&x[a], &x[b], &x[c], tangential))
            .collect();
        for (f, m) in face_vals.iter().enumerate() {
            dofs[layout.face_dof(f, 0)] = m[0];
            dofs[layout.face_dof(f, 1)] = m[1];
        }
    }
    Ok(dofs)
}

/// `(Φ̃_h(U, V), F̃_h(V))` with the rules of `config`, evaluated from the
/// discrete fields at the quadrature points.
pub fn evaluate_forms(
    mesh: &TetMesh,
    k: usize,
    coeffs: &Coefficients,
    config: &QuadratureConfig,
    u: &[Complex64],
    v: &[Complex64],
) -> Result<(Complex64, Complex64)> {
    let layout = DofLayout::new(mesh, k)?;
    for w in [u, v] {
        if w.len() != layout.n_dofs() {
            return Err(Error::DimensionMismatch {
                expected: layout.n_dofs(),
                got: w.len(),
            });
        }
    }
    let basis = CurlBasis::new(k)?;
    let tables = [&config.q1, &config.q2, &config.q3].map(|r| Tables::new(&basis, r));
    let s_mass = Complex64::new(-coeffs.omega * coeffs.omega, 0.0);
    let s_load = Complex64::new(0.0, -coeffs.omega);
    let per_tet = (0..mesh.n_tets())
        .into_par_iter()
        .map(|t| {
            let map = element_map(mesh, t)?;
            let key = orientation_key(mesh.tets()[t]);
            let dofs = layout.element_dofs(mesh, &basis, t);
            let ut: Vec<_> = dofs.iter().map(|&g| u[g]).collect();
            let vt: Vec<_> = dofs.iter().map(|&g| v[g]).collect();
            let vol = map.det().abs();
            let mut phi = ZERO;
            let mut load = ZERO;
            for (term, tab) in tables.iter().enumerate() {
                for (q, (p, w)) in tab.rule.points().iter().zip(tab.rule.weights()).enumerate() {
                    let x = map.apply(p);
                    let (bv, bc) = physical_basis(k, &key, &map, &tab.values[q], &tab.curls[q]);
                    let (eu, cu) = combine(&ut, &bv, &bc);
                    let (ev, cv) = combine(&vt, &bv, &bc);
                    let wq = w * vol;
                    match term {
                        0 => phi += (coeffs.mu_inv.at(&x) * cu).dot(&cv.conjugate()) * wq,
                        1 => phi += (coeffs.eps.at(&x) * eu).dot(&ev.conjugate()) * s_mass * wq,
                        _ => load += coeffs.current.at(&x).dot(&ev.conjugate()) * s_load * wq,
                    }
                }
            }
            Ok((phi, load))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_tet
        .into_iter()
        .fold((ZERO, ZERO), |(a, b), (p, l)| (a + p, b + l)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::structured_cube_mesh;
    use crate::quadrature::{builtin_rule, tensorized_gl};
    use crate::reference_element::grad_barycentric;
    use rand::{Rng, SeedableRng};

    fn random_dofs(n: usize, seed: u64) -> Vec<Complex64> {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
            .collect()
    }

    fn random_map(seed: u64) -> AffineMap {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        loop {
            let j = Matrix3::from_fn(|_, _| r.gen_range(-1.0..1.0));
            if j.determinant() > 0.2 {
                return AffineMap::new(Vector3::new(0.1, 0.2, -0.3), j).unwrap();
            }
        }
    }

    fn frob(m: &DMatrix<Complex64>) -> f64 {
        m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn whitney_curl_curl_exact_with_one_point() {
        let basis = CurlBasis::new(1).unwrap();
        let map = random_map(1);
        let coeffs = Coefficients::unit();
        let lo = element_matrices(&map, [0, 1, 2, 3], &basis, &coeffs, &QuadratureConfig::uniform(builtin_rule("pt1_offcenter").unwrap())).unwrap();
        let hi = element_matrices(&map, [0, 1, 2, 3], &basis, &coeffs, &QuadratureConfig::uniform(tensorized_gl(6))).unwrap();
        assert!(frob(&(&lo.curl_curl - &hi.curl_curl)) <= 1e-12 * frob(&hi.curl_curl));
        assert!(lo.load.iter().all(|z| *z == ZERO));
    }

    #[test]
    fn exact_rules_reproduce_reference_matrices() {
        let coeffs = Coefficients::unit();
        for (k, q1, q2) in [(1, "pt1_offcenter", "pt4"), (2, "pt4", "pt15")] {
            let basis = CurlBasis::new(k).unwrap();
            let map = random_map(k as u64 + 10);
            let cfg = QuadratureConfig {
                q1: builtin_rule(q1).unwrap(),
                q2: builtin_rule(q2).unwrap(),
                q3: builtin_rule(q2).unwrap(),
            };
            let got = element_matrices(&map, [4, 1, 7, 2], &basis, &coeffs, &cfg).unwrap();
            let reference = element_matrices(&map, [4, 1, 7, 2], &basis, &coeffs, &QuadratureConfig::uniform(tensorized_gl(8))).unwrap();
            assert!(frob(&(&got.curl_curl - &reference.curl_curl)) <= 1e-11 * frob(&reference.curl_curl));
            assert!(frob(&(&got.mass - &reference.mass)) <= 1e-11 * frob(&reference.mass));
        }
    }

    #[test]
    fn centroid_mass_error_shrinks_like_h_squared() {
        let basis = CurlBasis::new(1).unwrap();
        let coeffs = Coefficients::unit();
        let lo = QuadratureConfig::uniform(builtin_rule("pt1_centroid").unwrap());
        let hi = QuadratureConfig::uniform(tensorized_gl(6));
        let base = random_map(3);
        let mut rel = Vec::new();
        for s in [1.0, 0.5, 0.25] {
            let map = AffineMap::new(*base.origin(), base.jacobian() * s).unwrap();
            let a = element_matrices(&map, [0, 1, 2, 3], &basis, &coeffs, &lo).unwrap();
            let b = element_matrices(&map, [0, 1, 2, 3], &basis, &coeffs, &hi).unwrap();
            rel.push(frob(&(&a.mass - &b.mass)) / frob(&b.mass));
        }
        // Unit coefficients: the relative error is scale invariant but nonzero.
        assert!(rel[0] > 1e-3);
        assert!((rel[1] - rel[0]).abs() < 1e-10 && (rel[2] - rel[0]).abs() < 1e-10);
    }

    #[test]
    fn curl_curl_annihilates_gradients() {
        let basis = CurlBasis::new(1).unwrap();
        let map = random_map(4);
        let ids = [5, 2, 9, 0];
        let coeffs = Coefficients::unit();
        let m = element_matrices(&map, ids, &basis, &coeffs, &QuadratureConfig::uniform(builtin_rule("pt4").unwrap())).unwrap();
        let key = orientation_key(ids);
        for i in 0..4 {
            // Reference DOFs of ∇λ_i, then converted to the global orientation.
            let g = grad_barycentric(i);
            let mut d: Vec<f64> = crate::mesh::TET_EDGES.iter().map(|&[a, b]| {
                let (va, vb) = (Vector3::from(crate::reference_element::REF_VERTICES[a]), Vector3::from(crate::reference_element::REF_VERTICES[b]));
                g.dot(&(vb - va))
            }).collect();
            key.apply(1, &mut d);
            let u = DVector::from_iterator(6, d.iter().map(|x| Complex64::new(*x, 0.0)));
            assert!((&m.curl_curl * u).norm() <= 1e-10);
        }
    }

    #[test]
    fn single_cube_has_one_free_dof() {
        let mesh = structured_cube_mesh(1);
        let sys = assemble(&mesh, 1, &Coefficients::unit(), &QuadratureConfig::uniform(builtin_rule("pt4").unwrap())).unwrap();
        assert_eq!(sys.layout.n_dofs(), 19);
        assert_eq!(sys.constrained.iter().filter(|c| **c).count(), 18);
        assert_eq!(sys.n_free(), 1);
    }

    #[test]
    fn scaled_mass_rule_doubles_mass() {
        let mesh = structured_cube_mesh(2);
        let coeffs = Coefficients::unit();
        let r = builtin_rule("pt5").unwrap();
        let base = QuadratureConfig::uniform(r.clone());
        let doubled = QuadratureConfig {
            q2: r.scaled(2.0),
            ..base.clone()
        };
        let a = assemble_full(&mesh, 2, &coeffs, &base).unwrap();
        let b = assemble_full(&mesh, 2, &coeffs, &doubled).unwrap();
        let mut expected = a.curl_curl.clone();
        expected.add_scaled(Complex64::new(2.0, 0.0), &a.mass);
        let got = b.matrix();
        for (x, y) in got.values().iter().zip(expected.values()) {
            assert!((x - y).norm() <= 1e-12 * (1.0 + y.norm()));
        }
    }

    #[test]
    fn assembly_is_bit_identical() {
        let mesh = structured_cube_mesh(3);
        let coeffs = Coefficients::unit();
        let cfg = QuadratureConfig::uniform(builtin_rule("pt4").unwrap());
        let a = assemble(&mesh, 2, &coeffs, &cfg).unwrap();
        let b = assemble(&mesh, 2, &coeffs, &cfg).unwrap();
        assert_eq!(a.matrix, b.matrix);
        assert!(a.matrix.is_structurally_symmetric());
    }

    #[test]
    fn forms_match_scattered_matrix_and_are_hermitian() {
        let mesh = structured_cube_mesh(2);
        let coeffs = Coefficients {
            mu_inv: MatrixCoeff::isotropic(|x| 1.0 + 0.3 * x.x * x.y, Some(2)),
            eps: MatrixCoeff::isotropic(|x| -2.0 + x.z.sin(), None),
            omega: 1.3,
            current: VectorCoeff::field(|x| Vector3::new(x.y, 1.0, x.x * x.z).map(|c| Complex64::new(c, 0.5 * c)), Some(2)),
        };
        for k in [1, 2] {
            let cfg = QuadratureConfig {
                q1: builtin_rule("pt4").unwrap(),
                q2: builtin_rule("pt5").unwrap(),
                q3: builtin_rule("pt15").unwrap(),
            };
            let full = assemble_full(&mesh, k, &coeffs, &cfg).unwrap();
            let n = full.layout.n_dofs();
            let u = random_dofs(n, 1);
            let v = random_dofs(n, 2);
            let (phi, load) = evaluate_forms(&mesh, k, &coeffs, &cfg, &u, &v).unwrap();
            let direct = full.matrix().form(&u, &v);
            assert!((phi - direct).norm() <= 1e-11 * direct.norm());
            let f: Complex64 = full.rhs.iter().zip(&v).map(|(f, vi)| vi.conj() * f).sum();
            assert!((load - f).norm() <= 1e-11 * f.norm());
            let (phi_t, _) = evaluate_forms(&mesh, k, &coeffs, &cfg, &v, &u).unwrap();
            assert!((phi - phi_t.conj()).norm() <= 1e-11 * phi.norm());
            let zero = vec![ZERO; n];
            assert_eq!(evaluate_forms(&mesh, k, &coeffs, &cfg, &zero, &zero).unwrap(), (ZERO, ZERO));
        }
    }

    #[test]
    fn interpolation_reproduces_discrete_fields() {
        let mesh = structured_cube_mesh(2);
        for k in [1, 2] {
            let layout = DofLayout::new(&mesh, k).unwrap();
            let dofs = random_dofs(layout.n_dofs(), 3);
            let field = SolutionField::new(&mesh, k, dofs.clone()).unwrap();
            let back = interpolate(&mesh, k, |x| field.eval(x).unwrap().0).unwrap();
            // Points on shared entities may be located in either neighbour;
            // conformity makes the tangential moments agree anyway.
            for (a, b) in back.iter().zip(&dofs) {
                assert!((a - b).norm() <= 1e-10, "k={k}");
            }
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let mesh = structured_cube_mesh(1);
        let cfg = QuadratureConfig::uniform(builtin_rule("pt4").unwrap());
        let r = evaluate_forms(&mesh, 1, &Coefficients::unit(), &cfg, &[ZERO; 3], &[ZERO; 19]);
        assert!(matches!(r, Err(Error::DimensionMismatch { expected: 19, got: 3 })));
    }
}
