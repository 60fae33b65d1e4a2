use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),
    #[error("admissibility table is {rows}x{cols}, expected {expected}x{expected}")]
    DimensionMismatch {
        rows: usize,
        cols: usize,
        expected: usize,
    },
    #[error("symbol `{symbol}` has an empty {which}")]
    EmptyRowOrColumn { symbol: String, which: &'static str },
    #[error("admissibility graph is not strongly connected")]
    NotIrreducible,
    #[error("a priori weight of `{symbol}` is {weight}, must be positive and finite")]
    NonPositiveWeight { symbol: String, weight: f64 },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("word length must be at least 1")]
    LengthZero,
    #[error("word lengths differ ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("word {0} is not admissible")]
    InadmissibleWord(String),
    #[error("potential has no entry for admissible word {0}")]
    MissingPotentialEntry(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("zero row in a component block during periodic iteration")]
    NonPrimitiveBlock,
    #[error("numerical overflow: {0}")]
    NumericalOverflow(String),
    #[error("depth {got} is too small, need at least {required}")]
    DepthTooSmall { required: usize, got: usize },
    #[error("model has period {period}; operation requires an aperiodic model")]
    PeriodicModel { period: usize },
    #[error("candidate function has a non-positive or non-finite entry")]
    NonPositiveCandidate,
    #[error("trial measure is not shift-invariant (deviation {deviation:e})")]
    NonInvariantTrial { deviation: f64 },
    #[error("sweep has {got} temperatures, need at least {required}")]
    InsufficientSweep { required: usize, got: usize },
    #[error("temperatures must be positive and strictly increasing")]
    InvalidTemperatures,
    #[error("junction ({0}) is not admissible")]
    InadmissibleConfiguration(String),
    #[error("involution kernel does not cover this model/potential")]
    KernelNotBuilt,
    #[error("eigendata for the potential and its dual has not been attached")]
    EigendataMissing,
    #[error("tail is not aggregable: {0}")]
    NonAggregableTail(String),
    #[error("finite section at level {level} is not irreducible: {reason}")]
    SectionNotIrreducible { level: usize, reason: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
}
