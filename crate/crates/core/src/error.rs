use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("precision budget exhausted: {0}")]
    PrecisionExhausted(String),

    #[error("division by zero in Q(beta)")]
    DivisionByZero,

    #[error("root refinement did not converge after {0} iterations")]
    NoConvergence(usize),

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error("operands belong to different contexts")]
    ContextMismatch,
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by a configured size or iteration budget.
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::ResourceCap(_) | Error::PrecisionExhausted(_))
    }
}
