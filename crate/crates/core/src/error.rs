use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("eta configuration does not produce the given syndrome")]
    SyndromeMismatch,
    #[error("parameter out of domain: {0}")]
    Domain(String),
    #[error("problem too large: {0}")]
    TooLarge(String),
    #[error("state annihilated by projector on site {site}")]
    Annihilated { site: usize },
    #[error("numerical fault: {0}")]
    Numerical(String),
    #[error("channel expansion is not invertible: {0}")]
    NonInvertible(String),
    #[error("linear algebra failure: {0}")]
    Linalg(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
