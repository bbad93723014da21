use std::path::PathBuf;

use thiserror::Error;

/// Identifies one side of a failed separation check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HoleRef {
    Hole(usize),
    /// A periodic image of a hole in a neighbouring cell.
    Image(usize),
    CellBoundary,
}

impl std::fmt::Display for HoleRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HoleRef::Hole(k) => write!(f, "hole {k}"),
            HoleRef::Image(k) => write!(f, "periodic image of hole {k}"),
            HoleRef::CellBoundary => write!(f, "cell boundary"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("separation violated between {first} and {second}: gap {gap:.6}, required {required:.6}")]
    SeparationViolation {
        first: HoleRef,
        second: HoleRef,
        gap: f64,
        required: f64,
    },

    #[error("scaled hole {hole} is {distance:.6} from the outer boundary, below kappa*eps = {required:.6}")]
    ClearanceViolation {
        hole: usize,
        distance: f64,
        required: f64,
    },

    #[error("mesh generation failed: {0}")]
    MeshFailure(String),

    #[error("assembly failed: {0}")]
    AssemblyError(String),

    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular system: zero diagonal at unknown {0}")]
    SingularSystem(usize),

    #[error("region contains no triangles")]
    EmptyRegion,

    #[error("field and mesh do not match: {0}")]
    MeshMismatch(String),

    #[error("the matrix phase of the cell is not connected")]
    DegenerateCell,

    #[error("flux data b_{i}{j} has mean {mean:.3e}, the homogenized tensor is inconsistent with the correctors")]
    NonZeroMean { i: usize, j: usize, mean: f64 },

    #[error("source point is closer than {min:.3e} to a hole or the boundary")]
    SourceTooClose { min: f64 },

    #[error("boundary norm {0:.3e} is too small to form a ratio")]
    DegenerateBoundaryNorm(f64),

    #[error("rate fit needs positive values, got {0}")]
    NonPositiveValue(f64),

    #[error("configuration error: {0}")]
    ConfigError(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
