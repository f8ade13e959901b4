use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("action error: {0}")]
    Action(String),

    #[error("shape error: {0}")]
    Shape(String),

    /// A tensor or scalar went NaN/inf. Carries the offending tensor name.
    #[error("non-finite value in {0}")]
    Numeric(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
