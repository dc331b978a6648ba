use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} of {dim})")]
    NotPositiveDefinite { pivot: usize, dim: usize },

    #[error("every log weight is -inf; no feasible outcome")]
    AllNegInfinite,

    #[error("cluster has no members")]
    EmptyCluster,

    #[error("cannot-link violated: point with label {label} sent to cluster tagged {tag}")]
    ConstraintViolation { label: u32, tag: u32 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("class {class} has {count} members, fewer than {folds} folds")]
    ClassTooSmall { class: u32, count: usize, folds: usize },

    #[error("component {component} collapsed (responsibility mass {mass:e})")]
    DegenerateComponent { component: usize, mass: f64 },

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
