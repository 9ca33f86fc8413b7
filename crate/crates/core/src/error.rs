use std::path::PathBuf;

/// Errors raised across the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("matrix is not Hermitian (asymmetry {asymmetry:.3e}, allowed {allowed:.3e})")]
    NotHermitian { asymmetry: f64, allowed: f64 },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("theta {0} outside [0, pi/2)")]
    ThetaOutOfRange(f64),

    #[error("n = {n} exceeds the configured qubit cap of {cap}")]
    NTooLarge { n: usize, cap: usize },

    #[error("not a density matrix: {0}")]
    NotDensityMatrix(String),

    #[error("invalid qubit count {0}")]
    InvalidN(usize),

    #[error("operation requires {expected} noise mode")]
    WrongMode { expected: &'static str },

    #[error("effect count {effects} does not match state count {states}")]
    IndexCountMismatch { effects: usize, states: usize },

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("enumeration size {size} exceeds cap {cap}")]
    SizeOverflow { size: u128, cap: usize },

    #[error("invalid sweep spec: {0}")]
    InvalidSpec(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("malformed POVM file: {0}")]
    Parse(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
