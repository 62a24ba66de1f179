//! Reference-to-physical element maps.

use nalgebra::{Matrix3, Vector3};

use super::{TetMesh, TET_EDGES};
use crate::error::{Error, Result};

/// `T(x̂) = origin + J x̂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    origin: Vector3<f64>,
    jac: Matrix3<f64>,
    det: f64,
    inv: Matrix3<f64>,
}

impl AffineMap {
    pub fn new(origin: Vector3<f64>, jac: Matrix3<f64>) -> Result<Self> {
        let det = jac.determinant();
        let scale = jac.amax().powi(3);
        if !det.is_finite() || det.abs() <= 1e-14 * scale || scale == 0.0 {
            return Err(Error::SingularJacobian(det));
        }
        let inv = jac.try_inverse().ok_or(Error::SingularJacobian(det))?;
        Ok(Self {
            origin,
            jac,
            det,
            inv,
        })
    }

    /// Columns of `J` are `v1 - v0, v2 - v0, v3 - v0`.
    pub fn from_vertices(v: &[Vector3<f64>; 4]) -> Result<Self> {
        Self::new(v[0], Matrix3::from_columns(&[v[1] - v[0], v[2] - v[0], v[3] - v[0]]))
    }

    pub fn identity() -> Self {
        Self::new(Vector3::zeros(), Matrix3::identity()).unwrap()
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.origin + self.jac * p
    }

    pub fn inverse_apply(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.inv * (x - self.origin)
    }

    pub fn jacobian(&self) -> &Matrix3<f64> {
        &self.jac
    }

    pub fn inverse(&self) -> &Matrix3<f64> {
        &self.inv
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn origin(&self) -> &Vector3<f64> {
        &self.origin
    }
}

pub fn element_map(mesh: &TetMesh, t: usize) -> Result<AffineMap> {
    AffineMap::from_vertices(&mesh.tet_vertices(t)).map_err(|_| Error::DegenerateTet(t))
}

/// Quadratic (10-node Lagrange) tetrahedron map. Nodes are the four vertices
/// followed by the six mid-edge nodes in [`TET_EDGES`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvedMap {
    nodes: [Vector3<f64>; 10],
}

fn barycentric(p: &Vector3<f64>) -> [f64; 4] {
    [1.0 - p.x - p.y - p.z, p.x, p.y, p.z]
}

const GRAD_LAMBDA: [[f64; 3]; 4] = [[-1.0, -1.0, -1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Sampling lattice used to validate curved maps (order 4, 35 points).
fn sampling_lattice() -> Vec<Vector3<f64>> {
    let n = 4;
    let mut pts = Vec::new();
    for i in 0..=n {
        for j in 0..=n - i {
            for k in 0..=n - i - j {
                pts.push(Vector3::new(i as f64, j as f64, k as f64) / n as f64);
            }
        }
    }
    pts
}

impl CurvedMap {
    /// Polynomial degree of the map.
    pub const DEGREE: usize = 2;

    pub fn new(nodes: [Vector3<f64>; 10]) -> Result<Self> {
        let map = Self { nodes };
        for p in sampling_lattice() {
            let det = map.jacobian(&p).determinant();
            if !(det > 0.0) {
                return Err(Error::InvertedElement {
                    det,
                    point: [p.x, p.y, p.z],
                });
            }
        }
        Ok(map)
    }

    /// Straight element: mid-edge nodes at the affine edge midpoints.
    pub fn from_affine(map: &AffineMap) -> Result<Self> {
        let refv = [Vector3::zeros(), Vector3::x(), Vector3::y(), Vector3::z()];
        let mut nodes = [Vector3::zeros(); 10];
        for (i, v) in refv.iter().enumerate() {
            nodes[i] = map.apply(v);
        }
        for (e, [a, b]) in TET_EDGES.iter().enumerate() {
            nodes[4 + e] = map.apply(&((refv[*a] + refv[*b]) * 0.5));
        }
        Self::new(nodes)
    }

    pub fn nodes(&self) -> &[Vector3<f64>; 10] {
        &self.nodes
    }

    fn shape(p: &Vector3<f64>) -> [f64; 10] {
        let l = barycentric(p);
        let mut n = [0.0; 10];
        for i in 0..4 {
            n[i] = l[i] * (2.0 * l[i] - 1.0);
        }
        for (e, [a, b]) in TET_EDGES.iter().enumerate() {
            n[4 + e] = 4.0 * l[*a] * l[*b];
        }
        n
    }

    fn shape_gradients(p: &Vector3<f64>) -> [Vector3<f64>; 10] {
        let l = barycentric(p);
        let g = GRAD_LAMBDA.map(Vector3::from);
        let mut d = [Vector3::zeros(); 10];
        for i in 0..4 {
            d[i] = g[i] * (4.0 * l[i] - 1.0);
        }
        for (e, [a, b]) in TET_EDGES.iter().enumerate() {
            d[4 + e] = (g[*b] * l[*a] + g[*a] * l[*b]) * 4.0;
        }
        d
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        Self::shape(p)
            .iter()
            .zip(&self.nodes)
            .fold(Vector3::zeros(), |acc, (n, x)| acc + x * *n)
    }

    /// `J_ij = ∂x_i / ∂x̂_j` at `p`.
    pub fn jacobian(&self, p: &Vector3<f64>) -> Matrix3<f64> {
        Self::shape_gradients(p)
            .iter()
            .zip(&self.nodes)
            .fold(Matrix3::zeros(), |acc, (g, x)| acc + x * g.transpose())
    }
}

/// Affine or curved element map.
#[derive(Debug, Clone, PartialEq)]
pub enum ElementMap {
    Affine(AffineMap),
    Curved(CurvedMap),
}

impl ElementMap {
    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        match self {
            ElementMap::Affine(m) => m.apply(p),
            ElementMap::Curved(m) => m.apply(p),
        }
    }

    pub fn jacobian(&self, p: &Vector3<f64>) -> Matrix3<f64> {
        match self {
            ElementMap::Affine(m) => *m.jacobian(),
            ElementMap::Curved(m) => m.jacobian(p),
        }
    }
}

impl From<AffineMap> for ElementMap {
    fn from(m: AffineMap) -> Self {
        ElementMap::Affine(m)
    }
}

impl From<CurvedMap> for ElementMap {
    fn from(m: CurvedMap) -> Self {
        ElementMap::Curved(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::structured_cube_mesh;
    use approx::assert_relative_eq;

    fn random_tet(seed: u64) -> [Vector3<f64>; 4] {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        loop {
            let v: [Vector3<f64>; 4] =
                std::array::from_fn(|_| Vector3::from_fn(|_, _| rng.gen_range(-1.0..1.0)));
            let vol = (v[1] - v[0]).dot(&(v[2] - v[0]).cross(&(v[3] - v[0])));
            if vol > 0.1 {
                return v;
            }
        }
    }

    #[test]
    fn reference_vertices_give_identity() {
        let m = AffineMap::from_vertices(&[Vector3::zeros(), Vector3::x(), Vector3::y(), Vector3::z()]).unwrap();
        assert_eq!(*m.jacobian(), Matrix3::identity());
        assert_eq!(m.det(), 1.0);
        let scaled = AffineMap::from_vertices(&[
            Vector3::zeros(),
            Vector3::x() * 2.0,
            Vector3::y() * 2.0,
            Vector3::z() * 2.0,
        ])
        .unwrap();
        assert_eq!(scaled.det(), 8.0);
    }

    #[test]
    fn affine_map_interpolates_vertices() {
        for seed in 0..10 {
            let v = random_tet(seed);
            let m = AffineMap::from_vertices(&v).unwrap();
            let refv = [Vector3::zeros(), Vector3::x(), Vector3::y(), Vector3::z()];
            for i in 0..4 {
                assert_relative_eq!(m.apply(&refv[i]), v[i], epsilon = 1e-15);
            }
            let x = Vector3::new(0.1, 0.2, 0.3);
            assert_relative_eq!(m.inverse_apply(&m.apply(&x)), x, epsilon = 1e-12);
        }
    }

    #[test]
    fn det_is_six_times_volume() {
        let mesh = structured_cube_mesh(2);
        for t in 0..mesh.n_tets() {
            let m = element_map(&mesh, t).unwrap();
            assert_relative_eq!(m.det().abs(), 6.0 * mesh.volume(t), epsilon = 1e-13);
        }
    }

    #[test]
    fn straight_curved_map_is_affine() {
        let v = random_tet(3);
        let a = AffineMap::from_vertices(&v).unwrap();
        let c = CurvedMap::from_affine(&a).unwrap();
        for p in sampling_lattice() {
            assert_relative_eq!(c.apply(&p), a.apply(&p), epsilon = 1e-14);
            assert_relative_eq!(c.jacobian(&p), *a.jacobian(), epsilon = 1e-13);
        }
    }

    #[test]
    fn displaced_mid_edge_node_gives_linear_det_along_edge() {
        // Node of edge (0,1) moved by δ along y: T = x̂ + 4δ λ0 λ1 e_y, so
        // det J = 1 + ∂ŷ(4δ λ0 λ1) = 1 - 4δ λ1 = 1 - 4δ x̂.
        let a = AffineMap::identity();
        let mut nodes = *CurvedMap::from_affine(&a).unwrap().nodes();
        let delta = 0.1;
        nodes[4].y += delta;
        let c = CurvedMap::new(nodes).unwrap();
        for i in 0..=10 {
            let x = i as f64 / 10.0;
            let det = c.jacobian(&Vector3::new(x, 0.0, 0.0)).determinant();
            assert_relative_eq!(det, 1.0 - 4.0 * delta * x, epsilon = 1e-14);
        }
    }

    #[test]
    fn inverted_configuration_rejected() {
        let a = AffineMap::identity();
        let mut nodes = *CurvedMap::from_affine(&a).unwrap().nodes();
        nodes[4].y += 1.0;
        assert!(matches!(CurvedMap::new(nodes), Err(Error::InvertedElement { .. })));
    }
}
