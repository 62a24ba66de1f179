use std::path::PathBuf;

use crate::solver::SolveReport;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unknown quadrature rule label `{0}`")]
    UnknownRule(String),

    #[error("quadrature rule `{label}` failed certification at degree {degree}: worst monomial x^{}y^{}z^{} off by {error:.3e}", monomial[0], monomial[1], monomial[2])]
    Certification {
        label: String,
        degree: usize,
        monomial: [usize; 3],
        error: f64,
    },

    #[error("singular Jacobian (det = {0:e})")]
    SingularJacobian(f64),

    #[error("non-positive Jacobian determinant {det:e} at reference point ({x}, {y}, {z})", x = point[0], y = point[1], z = point[2])]
    InvertedElement { det: f64, point: [f64; 3] },

    #[error("degenerate tetrahedron {0} (zero volume)")]
    DegenerateTet(usize),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("gmsh parse error in section {section} (line {line}): {message}")]
    Gmsh {
        section: String,
        line: usize,
        message: String,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unsupported element order {0} (expected 1 or 2)")]
    UnsupportedOrder(usize),

    #[error("conjugate gradient did not converge: {0:?}")]
    NotConverged(SolveReport),

    #[error("matrix is not Hermitian positive definite (curvature {0:e} at iteration {1}); use the dense solver")]
    NotHpd(f64, usize),

    #[error("singular matrix")]
    SingularMatrix,

    #[error("dense solve limited to {limit} unknowns, system has {size}")]
    TooLarge { size: usize, limit: usize },

    #[error("rate fit needs at least 3 points, got {0}")]
    TooFewPoints(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("catalog self-check failed for {problem}: residual {residual:e}")]
    CatalogSelfCheck { problem: String, residual: f64 },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
