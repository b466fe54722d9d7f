use thiserror::Error;

#[derive(Debug, Error)]
pub enum GonError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("matrix is singular")]
    Singular,
    #[error("division by zero")]
    DivisionByZero,
    #[error("vector is not primitive")]
    NotPrimitive,
    #[error("no determinant-one completion exists for {0}")]
    NoSpecialCompletion(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("enumeration exceeded its cap ({0})")]
    EnumerationCap(String),
    #[error("undecidable at current precision: {0}")]
    Undecidable(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, GonError>;
