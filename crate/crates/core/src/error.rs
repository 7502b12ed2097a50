use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("expected {expected} samples, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("Lebesgue exponent must be >= 1, got {0}")]
    Exponent(f64),
    #[error("field must be real-valued for this operation")]
    NotReal,
    #[error("integration blew up at step {step}")]
    Blowup { step: usize },
    #[error("scale ratio {0} is not a power of two")]
    NonDyadicScale(f64),
    #[error("frequency support outside block {block}")]
    Support { block: usize },
    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
