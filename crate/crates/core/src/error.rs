use std::fmt;
use std::io;
use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

/// Where in an input a parse problem was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Line(usize),
    Offset(u64),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Line(n) => write!(f, "line {n}"),
            Location::Offset(n) => write!(f, "byte offset {n}"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("{message} at {location}")]
    Parse { location: Location, message: String },

    #[error("invalid projection: {0}")]
    InvalidProjection(String),

    #[error("invalid frequency table: {0}")]
    InvalidFrequencies(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value at position {0}")]
    NonFinite(usize),

    #[error("degenerate projection: every word vector and bias is zero")]
    DegenerateProjection,

    #[error("explicit bound {explicit} is below the max augmented row norm {max_row_norm}")]
    BoundTooSmall { explicit: f64, max_row_norm: f64 },

    #[error("inconsistent bound: radicand {radicand} for word {id} is below tolerance")]
    InconsistentBound { id: usize, radicand: f64 },

    #[error("invalid graph parameters: {0}")]
    InvalidParams(String),

    #[error("k = {k} out of range 1..={n}")]
    KOutOfRange { k: usize, n: usize },

    #[error("ef_search = {ef} must be at least k = {k}")]
    EfTooSmall { ef: usize, k: usize },

    #[error("word id {id} out of range for vocabulary of {n}")]
    IdOutOfRange { id: usize, n: usize },

    #[error("bad index file: {0}")]
    Format(String),

    #[error("index file truncated at byte offset {0}")]
    Truncated(u64),

    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },

    #[error("epsilon bound violated: epsilon {epsilon} must satisfy 0 < epsilon < {bound}")]
    EpsilonBound { epsilon: f64, bound: f64 },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("query {index}: {source}")]
    Query { index: usize, source: Box<Error> },

    #[error("K mismatch: approximate result has {approx}, exact result has {exact}")]
    KMismatch { approx: usize, exact: usize },

    #[error("{0}")]
    Empty(&'static str),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(location: Location, message: impl Into<String>) -> Self {
        Error::Parse { location, message: message.into() }
    }
}
