//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid discretization parameter n = {n}")]
    InvalidResolution { n: usize },
    #[error("cell {cell} is not counter-clockwise (non-positive signed area)")]
    Orientation { cell: usize },
    #[error("edge {edge:?} is shared by more than two cells")]
    NonManifoldEdge { edge: (usize, usize) },
    #[error("Euler characteristic is {chi}, expected 1 (triangulated disk)")]
    Euler { chi: i64 },
    #[error("declared boundary edges do not match the cell incidence")]
    BoundaryMismatch,
    #[error("boundary edges do not form a single closed loop")]
    BoundaryNotLoop,
}

#[derive(Debug, Error)]
pub enum FeError {
    #[error("unsupported polynomial order {order} (supported: 1, 2, 3)")]
    UnsupportedOrder { order: usize },
    #[error("value shape mismatch: expected {expected} components, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("operation requires a {required} space")]
    WrongValueShape { required: &'static str },
    #[error("point ({x}, {y}) lies outside the mesh")]
    PointOutsideMesh { x: f64, y: f64 },
}

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("unsupported quadrature degree {degree} (supported: 1..=8)")]
    UnsupportedQuadratureDegree { degree: usize },
    #[error("form {form} is incompatible with the given value shapes")]
    IncompatibleForm { form: &'static str },
}

#[derive(Debug, Error)]
pub enum LinAlgError {
    #[error("{solver} did not converge in {iterations} iterations (relative residual {residual:.3e})")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error(
        "{solver} stagnated for {stalled} iterations at relative residual {residual:.3e}; \
         the system is likely singular (missing mean-zero or rigid-motion constraints?)"
    )]
    Stagnation {
        solver: &'static str,
        stalled: usize,
        residual: f64,
    },
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },
    #[error("eigen-iteration failed to converge")]
    EigenFailure,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fe(#[from] FeError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    LinAlg(#[from] LinAlgError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Config(String),
}
