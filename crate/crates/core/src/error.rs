use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("eta = {0} outside (0, 1/2)")]
    EtaOutOfRange(f64),
    #[error("eps = {0} outside (0, 1]")]
    EpsOutOfRange(f64),
    #[error("offset {offset:?} of cell {cell:?} outside Q(0,1/2)")]
    OffsetOutOfRange { cell: [i64; 3], offset: [f64; 3] },
    #[error("hole shape circumradius {0} exceeds 1/8")]
    ShapeTooLarge(f64),
    #[error("invalid hole shape: {0}")]
    InvalidShape(String),
    #[error("holes not resolved: smallest diameter {diameter} < 4h = {four_h}")]
    UnresolvedHoles { diameter: f64, four_h: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid exponent p = {0}")]
    InvalidExponent(f64),
    #[error("not converged after {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("truncation radius {radius} below 8 x circumradius {circumradius}")]
    TruncationTooSmall { radius: f64, circumradius: f64 },
    #[error("shape not resolved by the exterior grid: {0}")]
    UnresolvedShape(String),
    #[error("no profile for the hole shape of cell {0:?}")]
    MissingProfile([i64; 3]),
    #[error("field shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid arguments: {0}")]
    InvalidArguments(String),
    #[error("empty trial family")]
    EmptyTrials,
    #[error("at least 3 points required, got {0}")]
    TooFewPoints(usize),
    #[error("non-positive data point ({0}, {1})")]
    NonpositiveData(f64, f64),
    #[error("snapshot format: {0}")]
    Snapshot(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
