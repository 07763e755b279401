use thiserror::Error;

/// Errors produced by the newsvendor library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value for {0}")]
    NonFinite(&'static str),

    #[error("demand must be non-negative, got {0}")]
    NegativeDemand(f64),

    #[error("dimension mismatch: expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("singular design matrix; column `{column}` is collinear with {depends_on:?}")]
    SingularDesign { column: String, depends_on: Vec<String> },

    #[error("objective is not finite at p={p}, q={q}")]
    NonFiniteObjective { p: f64, q: f64 },

    #[error("stable-point iteration cycles through {0:?}")]
    StableCycle(Vec<(f64, f64)>),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("malformed input at line {line}: {message}")]
    Malformed { line: u64, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map(|p| p.line()).unwrap_or(0);
        match e.kind() {
            csv::ErrorKind::Io(_) => Error::Io(e.to_string()),
            _ => Error::Malformed {
                line,
                message: e.to_string(),
            },
        }
    }
}
