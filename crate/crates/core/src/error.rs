use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid length {len}: expected a power of two >= 2")]
    InvalidLength { len: usize },
    #[error("invalid decomposition depth j0 = {j0} for signal length {len}")]
    InvalidDepth { j0: usize, len: usize },
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid penalty: lambda = {0} must be finite and nonnegative")]
    InvalidPenalty(f64),
    #[error("too few observations: n = {n} < C = {components}")]
    TooFewObservations { n: usize, components: usize },
    #[error("degenerate component {component}: {reason}")]
    DegenerateComponent { component: usize, reason: String },
    #[error("numerical failure at EM iteration {iteration}: {reason}")]
    NumericalFailure {
        iteration: usize,
        reason: String,
        trace: Vec<f64>,
    },
    #[error("invalid design: {0}")]
    InvalidDesign(String),
    #[error("invalid R^2 target {0}: must lie in (0, 1)")]
    InvalidTarget(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("parse error at row {row}, column {col}: {msg}")]
    ParseError { row: usize, col: usize, msg: String },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("metric undefined: {0}")]
    UndefinedMetric(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Coarse category used for process exit codes.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::NumericalFailure { .. } | Error::DegenerateComponent { .. } => {
                ErrorKind::Numerical
            }
            Error::InvalidConfig(_) | Error::InvalidPenalty(_) | Error::InvalidTarget(_) => {
                ErrorKind::Usage
            }
            _ => ErrorKind::Data,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Numerical,
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
