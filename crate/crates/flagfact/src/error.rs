//! Library error type.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum FlagFactError {
    #[error("elements belong to different algebra instances")]
    InstanceMismatch,

    #[error("element is not invertible (relative smallest singular value {sigma_min:.3e}{})",
            .grid_index.map(|i| format!(", worst grid sample {i}")).unwrap_or_default())]
    NotInvertible {
        sigma_min: f64,
        grid_index: Option<usize>,
    },

    #[error("element does not lie in the corner pAp (residual {residual:.3e})")]
    NotInCorner { residual: f64 },

    #[error("idempotents are not equivalent")]
    NotEquivalent,

    #[error("corner {0} is not invertible")]
    CornerNotInvertible(usize),

    #[error("element is not positive; offending spectrum points {0:?}")]
    NotPositive(Vec<(f64, f64)>),

    #[error("invalid flag: {0}")]
    InvalidFlag(String),

    #[error("invalid partition: {0}")]
    BadPartition(String),

    #[error("invalid counterexample witness: {0}")]
    BadWitness(String),

    #[error("point left the chart domain (corner {0} singular)")]
    OutOfChart(usize),

    #[error("dimension mismatch: {0}")]
    Shape(String),

    #[error("numerical kernel failed: {0}")]
    Numerical(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, FlagFactError>;
