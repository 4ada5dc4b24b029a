use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid shape: {0}")]
    InvalidShape(String),

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("point {index} at {point:?} lies outside the domain {dims:?}")]
    PointOutsideDomain {
        index: usize,
        point: Vec<f64>,
        dims: Vec<usize>,
    },

    #[error("enclosing circle/sphere does not fit: need a domain of at least {required:?} nodes")]
    DomainTooSmall { required: Vec<usize> },

    #[error("shape `{kind}` violates the {margin}-cell margin of the domain")]
    MarginViolation { kind: String, margin: f64 },

    #[error("no bracketing interval for the angle equation")]
    NoBracket,

    #[error("non-finite field at iteration {iteration}")]
    NonFiniteIterate { iteration: usize },

    #[error("divergent at iteration {iteration} (try smaller r3)")]
    Divergent { iteration: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
