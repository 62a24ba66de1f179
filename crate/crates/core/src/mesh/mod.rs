//! Tetrahedral meshes with derived edge/face topology.

pub mod gmsh;
pub mod map;

use nalgebra::Vector3;

use crate::error::{Error, Result};
pub use map::{element_map, AffineMap, CurvedMap, ElementMap};

/// Local edges of a tetrahedron as pairs of local vertex indices.
pub const TET_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

/// Local faces; face `i` is opposite local vertex `i`.
pub const TET_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

#[derive(Debug, Clone, PartialEq)]
pub struct TetMesh {
    vertices: Vec<Vector3<f64>>,
    tets: Vec<[usize; 4]>,
    edges: Vec<[usize; 2]>,
    faces: Vec<[usize; 3]>,
    tet_edges: Vec<[usize; 6]>,
    tet_faces: Vec<[usize; 4]>,
    boundary_faces: Vec<usize>,
    boundary_edges: Vec<usize>,
    h: f64,
}

fn signed_volume(v: &[Vector3<f64>], t: &[usize; 4]) -> f64 {
    (v[t[1]] - v[t[0]]).dot(&(v[t[2]] - v[t[0]]).cross(&(v[t[3]] - v[t[0]]))) / 6.0
}

fn sorted<const N: usize>(mut a: [usize; N]) -> [usize; N] {
    a.sort_unstable();
    a
}

impl TetMesh {
    /// Builds the mesh and its topology. Negatively oriented tets are
    /// reordered (last two vertices swapped); degenerate tets are rejected.
    pub fn new(vertices: Vec<Vector3<f64>>, mut tets: Vec<[usize; 4]>) -> Result<Self> {
        if tets.is_empty() {
            return Err(Error::InvalidMesh("mesh contains no tetrahedra".into()));
        }
        let scale = vertices
            .iter()
            .fold(0.0f64, |m, v| m.max(v.amax()))
            .max(1e-300);
        for (i, t) in tets.iter_mut().enumerate() {
            if t.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh(format!("tet {i} references a missing vertex")));
            }
            if sorted(*t).windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidMesh(format!("tet {i} repeats a vertex")));
            }
            let vol = signed_volume(&vertices, t);
            if vol.abs() <= 1e-14 * scale.powi(3) {
                return Err(Error::DegenerateTet(i));
            }
            if vol < 0.0 {
                t.swap(2, 3);
            }
        }

        let mut edges: Vec<[usize; 2]> = tets
            .iter()
            .flat_map(|t| TET_EDGES.map(|[a, b]| sorted([t[a], t[b]])))
            .collect();
        edges.sort_unstable();
        edges.dedup();

        let mut all_faces: Vec<[usize; 3]> = tets
            .iter()
            .flat_map(|t| TET_FACES.map(|[a, b, c]| sorted([t[a], t[b], t[c]])))
            .collect();
        all_faces.sort_unstable();
        let mut faces = Vec::with_capacity(all_faces.len() / 2 + 1);
        let mut multiplicity = Vec::with_capacity(all_faces.len() / 2 + 1);
        for f in all_faces {
            if faces.last() == Some(&f) {
                *multiplicity.last_mut().unwrap() += 1;
            } else {
                faces.push(f);
                multiplicity.push(1usize);
            }
        }
        if let Some(i) = multiplicity.iter().position(|&m| m > 2) {
            return Err(Error::InvalidMesh(format!(
                "face {:?} shared by {} tets",
                faces[i], multiplicity[i]
            )));
        }

        let tet_edges: Vec<[usize; 6]> = tets
            .iter()
            .map(|t| {
                TET_EDGES.map(|[a, b]| {
                    edges
                        .binary_search(&sorted([t[a], t[b]]))
                        .expect("edge registered")
                })
            })
            .collect();
        let tet_faces: Vec<[usize; 4]> = tets
            .iter()
            .map(|t| {
                TET_FACES.map(|[a, b, c]| {
                    faces
                        .binary_search(&sorted([t[a], t[b], t[c]]))
                        .expect("face registered")
                })
            })
            .collect();

        let boundary_faces: Vec<usize> = (0..faces.len()).filter(|&f| multiplicity[f] == 1).collect();
        let mut boundary_edges: Vec<usize> = boundary_faces
            .iter()
            .flat_map(|&f| {
                let [a, b, c] = faces[f];
                [[a, b], [a, c], [b, c]]
            })
            .map(|e| edges.binary_search(&e).expect("face edge registered"))
            .collect();
        boundary_edges.sort_unstable();
        boundary_edges.dedup();

        let mut mesh = Self {
            vertices,
            tets,
            edges,
            faces,
            tet_edges,
            tet_faces,
            boundary_faces,
            boundary_edges,
            h: 0.0,
        };
        mesh.h = (0..mesh.tets.len())
            .map(|t| mesh.diameter(t))
            .fold(0.0, f64::max);
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    /// Ascending vertex pairs, sorted lexicographically.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Ascending vertex triples, sorted lexicographically.
    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    /// Global edge index of each local edge (see [`TET_EDGES`]).
    pub fn tet_edges(&self) -> &[[usize; 6]] {
        &self.tet_edges
    }

    /// Global face index of each local face (see [`TET_FACES`]).
    pub fn tet_faces(&self) -> &[[usize; 4]] {
        &self.tet_faces
    }

    pub fn boundary_faces(&self) -> &[usize] {
        &self.boundary_faces
    }

    pub fn boundary_edges(&self) -> &[usize] {
        &self.boundary_edges
    }

    pub fn n_tets(&self) -> usize {
        self.tets.len()
    }

    /// Maximum element diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn tet_vertices(&self, t: usize) -> [Vector3<f64>; 4] {
        self.tets[t].map(|v| self.vertices[v])
    }

    pub fn volume(&self, t: usize) -> f64 {
        signed_volume(&self.vertices, &self.tets[t])
    }

    pub fn diameter(&self, t: usize) -> f64 {
        let v = self.tet_vertices(t);
        TET_EDGES
            .iter()
            .map(|&[a, b]| (v[b] - v[a]).norm())
            .fold(0.0, f64::max)
    }

    /// Diameter of the inscribed sphere, `6V / Σ face areas`.
    pub fn insphere_diameter(&self, t: usize) -> f64 {
        let v = self.tet_vertices(t);
        let area: f64 = TET_FACES
            .iter()
            .map(|&[a, b, c]| 0.5 * (v[b] - v[a]).cross(&(v[c] - v[a])).norm())
            .sum();
        6.0 * self.volume(t) / area
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshMetrics {
    pub h: f64,
    pub h_min: f64,
    /// max over tets of diameter / insphere diameter
    pub shape_regularity: f64,
}

pub fn mesh_metrics(mesh: &TetMesh) -> MeshMetrics {
    let mut h_min = f64::INFINITY;
    let mut ratio = 0.0f64;
    for t in 0..mesh.n_tets() {
        let d = mesh.diameter(t);
        h_min = h_min.min(d);
        ratio = ratio.max(d / mesh.insphere_diameter(t));
    }
    MeshMetrics {
        h: mesh.h(),
        h_min,
        shape_regularity: ratio,
    }
}

/// `[-1, 1]³` split into `n³` cubes of six Kuhn tetrahedra each. All cubes
/// share the main diagonal direction, so neighbouring faces match.
pub fn structured_cube_mesh(n: usize) -> TetMesh {
    assert!(n >= 1, "structured_cube_mesh needs n >= 1");
    let step = 2.0 / n as f64;
    let np = n + 1;
    let id = |i: usize, j: usize, k: usize| i + np * (j + np * k);
    let mut vertices = Vec::with_capacity(np * np * np);
    for k in 0..np {
        for j in 0..np {
            for i in 0..np {
                vertices.push(Vector3::new(
                    -1.0 + step * i as f64,
                    -1.0 + step * j as f64,
                    -1.0 + step * k as f64,
                ));
            }
        }
    }
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut tets = Vec::with_capacity(6 * n * n * n);
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                for perm in PERMS {
                    // Monotone lattice path from (i,j,k) to (i+1,j+1,k+1).
                    let mut c = [i, j, k];
                    let mut tet = [id(c[0], c[1], c[2]); 4];
                    for (s, &axis) in perm.iter().enumerate() {
                        c[axis] += 1;
                        tet[s + 1] = id(c[0], c[1], c[2]);
                    }
                    tets.push(tet);
                }
            }
        }
    }
    TetMesh::new(vertices, tets).expect("Kuhn split is valid")
}
