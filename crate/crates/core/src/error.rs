use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("distribution matrix is not square ({rows} rows, row {row} has {len} entries)")]
    NonSquare { rows: usize, row: usize, len: usize },
    #[error("alphabet size must be between 2 and 256, got {0}")]
    AlphabetSize(usize),
    #[error("negative or non-finite probability {value} at ({x}, {y})")]
    NegativeEntry { x: usize, y: usize, value: f64 },
    #[error("probabilities sum to {0}, expected 1 within 1e-6")]
    NotNormalized(f64),
    #[error("matrix is not symmetric with zero diagonal at ({0}, {1})")]
    AsymmetricInput(usize, usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid vertex count {0}")]
    InvalidN(usize),
    #[error("not a permutation: {0}")]
    InvalidLabeling(String),
    #[error("seed count gamma * n = {0} is not an integer in [0, n]")]
    NonIntegralSeedCount(f64),
    #[error("invalid probability {0}")]
    InvalidProbability(f64),
    #[error("invalid family parameters: {0}")]
    InvalidFamilyParams(String),
    #[error("P_U and P_V differ: P_U(1) = {0}, P_V(1) = {1}")]
    UnequalMarginals(f64, f64),
    #[error("ambiguity matrix misses the true label of vertex {0}")]
    MissingTrueLabel(usize),
    #[error("size {n} exceeds the limit {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("alpha {0} is outside [0, 1]")]
    AlphaOutOfRange(f64),
    #[error("invalid scenario parameters: {0}")]
    InvalidScenarioParams(String),
    #[error("decay exponent {0} must lie strictly between 0 and 1")]
    DecayExponentOutOfRange(f64),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("config error: {0}")]
    ConfigParse(String),
    #[error("every trial exhausted the search budget")]
    BudgetExhaustedEverywhere,
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
