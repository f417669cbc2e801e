use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QinfoError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid subsystem: {0}")]
    InvalidSubsystem(String),
    #[error("matrix is not hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("nonphysical operation: {0}")]
    Nonphysical(String),
    #[error("operation has zero probability on this input (trace {0:e})")]
    ZeroProbability(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("probe basis is singular")]
    SingularBasis,
    #[error("unphysical tomography data: {0}")]
    UnphysicalData(String),
    #[error("operation is not reversible on this input: {0}")]
    NotReversible(String),
    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("rate too small: {0}")]
    RateTooSmall(String),
    #[error("sources are not entropy distinct: {0}")]
    EntropyMargin(String),
    #[error("unknown code {0:?}")]
    UnknownCode(String),
    #[error("optimizer failure: {0}")]
    Optimizer(String),
}

pub type Result<T> = std::result::Result<T, QinfoError>;
