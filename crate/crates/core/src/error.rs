use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{name} = {value} is not a valid probability")]
    InvalidProbability { name: &'static str, value: f64 },
    #[error("erasure observed on a channel without an erasure symbol")]
    ErasureOnNonErasureChannel,
    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("not a permutation: {0}")]
    InvalidPermutation(String),
    #[error("dimension k = {k} exceeds the {available} usable positions")]
    DimensionTooLarge { k: usize, available: usize },
    #[error("cannot puncture {np} of {n} positions")]
    TooManyPunctured { np: usize, n: usize },
    #[error("output alphabet of size {size} exceeds the cap {cap}")]
    AlphabetOverflow { size: usize, cap: usize },
    #[error("invalid channel table: {0}")]
    InvalidChannel(String),
    #[error("invalid crossbar configuration: {0}")]
    InvalidConfig(String),
    #[error("linear solve did not reach tolerance: relative residual {residual:e}")]
    SolverNonConvergence { residual: f64 },
    #[error("training set too small or malformed: {0}")]
    InvalidTraining(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
