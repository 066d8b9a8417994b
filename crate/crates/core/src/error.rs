use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not a simplex point: {0}")]
    NotOnSimplex(String),

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by the caller's input rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Degenerate(_) | Error::Numerical(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
