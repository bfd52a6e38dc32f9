use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure class, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed or inconsistent input data or parameters.
    Validation,
    /// A numeric procedure could not produce a usable result.
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("missing file: {0}")]
    MissingFile(PathBuf),

    #[error("row-count mismatch in {what}: expected {expected}, found {found}")]
    RowCountMismatch {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in layer `{layer}` at row {row}, column {col}")]
    NonFinite {
        layer: String,
        row: usize,
        col: usize,
    },

    #[error("npy format error in {path}: {reason}")]
    Npy { path: PathBuf, reason: String },

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("requested {k} clusters but only {n} points are available")]
    TooManyClusters { k: usize, n: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("non-finite input point at row {row}, column {col}")]
    NonFiniteInput { row: usize, col: usize },

    #[error("covariance of component {component} is not positive-definite after regularization")]
    SingularCovariance { component: usize },

    #[error("mixture component {component} received no training points; reduce k or change the seed")]
    EmptyComponent { component: usize },

    #[error("cluster id {id} out of range for layer {layer} with {k} clusters")]
    ClusterOutOfRange { layer: usize, id: i32, k: usize },

    #[error("path contains the sentinel at layer {layer}")]
    SentinelInPath { layer: usize },

    #[error("label source `{0}` is not present in the bundle")]
    MissingLabelSource(&'static str),

    #[error("no epsilon in the grid keeps the held-out flag rate at or below {bound}")]
    NoFeasibleEpsilon { bound: f64 },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::SingularCovariance { .. } | Error::EmptyComponent { .. } => ErrorKind::Numeric,
            _ => ErrorKind::Validation,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path)
        } else {
            Error::Io { path, source }
        }
    }
}
