use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("length mismatch: {left} weights vs {right} rewards")]
    LengthMismatch { left: usize, right: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("deterministic policy has no density; supply a KernelConfig")]
    DeterministicDensity,

    #[error("sample {index}: logging density must be positive, got {value}")]
    NonPositiveDensity { index: usize, value: f64 },

    #[error(
        "sample {index}: stored logging density disagrees with logging policy (|Δlog| = {delta:e})"
    )]
    PropensityMismatch { index: usize, delta: f64 },

    #[error("empty input")]
    Empty,

    #[error("weights must be nonnegative, found {0}")]
    NegativeWeight(f64),

    #[error("zero effective mass under target policy")]
    ZeroMass,

    #[error("degenerate effective sample size (n_eff = {0})")]
    DegenerateEss(f64),

    #[error("effective sample size {ess} outside [1, {n}]")]
    EssOutOfRange { ess: f64, n: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite objective value at {0:?}")]
    NonFiniteObjective(Vec<f64>),

    #[error("initial point has degenerate effective sample size; widen kernel or change init")]
    DegenerateInit,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: unsupported schema_version {version} (expected {expected})")]
    Schema {
        path: PathBuf,
        version: i64,
        expected: i64,
    },
}

impl Error {
    /// True for failures of the filesystem itself, as opposed to bad input.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
