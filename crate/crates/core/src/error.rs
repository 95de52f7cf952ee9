use thiserror::Error;

/// Errors raised by the toolkit. Resource and precision problems are typed so
/// callers can tell a bad request apart from a numerical limit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("resource cap exceeded: {what} needs {needed}, cap is {cap}")]
    ResourceCap {
        what: &'static str,
        needed: u128,
        cap: u128,
    },

    #[error("precision error: {0}")]
    Precision(String),

    #[error("undefined exponent: {0}")]
    UndefinedExponent(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("series diverged: {0}")]
    Diverged(String),

    #[error("construction cap reached: {0}")]
    ConstructionCap(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
