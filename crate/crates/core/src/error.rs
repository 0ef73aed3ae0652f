use thiserror::Error;

/// Everything that can go wrong while validating, estimating, learning or scoring.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("{what} is not stochastic: {detail}")]
    NotStochastic { what: &'static str, detail: String },

    #[error("initial distribution entry {index} is {value}, must be strictly positive")]
    ZeroPriorEntry { index: usize, value: f64 },

    #[error("{which} is rank deficient (smallest/largest singular value = {ratio:e})")]
    RankDeficient { which: &'static str, ratio: f64 },

    #[error("symbol {symbol} outside alphabet 1..={n}")]
    SymbolOutOfRange { symbol: usize, n: usize },

    #[error("alphabet mismatch: expected n={expected}, found n={found}")]
    AlphabetMismatch { expected: usize, found: usize },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("no sequence is long enough to contribute a triple")]
    NoTriples,

    #[error("refusing to normalize counts with a zero total")]
    DivisionByZeroGuard,

    #[error("moment matrix is identically zero")]
    ZeroMatrix,

    #[error("requested rank {requested} is invalid for dimension {dim}")]
    InvalidRank { requested: usize, dim: usize },

    #[error("pseudoinverse is degenerate: every singular value is below the cutoff")]
    PinvDegenerate,

    #[error("basis does not span the emission range (residual {residual:e})")]
    BasisMismatch { residual: f64 },

    #[error("projected emission matrix is singular")]
    SingularUO,

    #[error("initial belief has non-positive normalizer {normalizer:e}")]
    InvalidInit { normalizer: f64 },

    #[error("belief state is invalid (failed at step {step})")]
    InvalidState { step: usize },

    #[error("sequence of length {len} exceeds the direct-product limit {limit}")]
    SequenceTooLong { len: usize, limit: usize },

    #[error("enumerating {n}^{t} sequences exceeds the limit of {limit}")]
    EnumerationTooLarge { n: usize, t: usize, limit: usize },

    #[error("distribution tables have different key sets")]
    KeyMismatch,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::NotStochastic { .. } => "NotStochastic",
            Error::ZeroPriorEntry { .. } => "ZeroPriorEntry",
            Error::RankDeficient { .. } => "RankDeficient",
            Error::SymbolOutOfRange { .. } => "SymbolOutOfRange",
            Error::AlphabetMismatch { .. } => "AlphabetMismatch",
            Error::EmptyCorpus => "EmptyCorpus",
            Error::NoTriples => "NoTriples",
            Error::DivisionByZeroGuard => "DivisionByZeroGuard",
            Error::ZeroMatrix => "ZeroMatrix",
            Error::InvalidRank { .. } => "InvalidRank",
            Error::PinvDegenerate => "PinvDegenerate",
            Error::BasisMismatch { .. } => "BasisMismatch",
            Error::SingularUO => "SingularUO",
            Error::InvalidInit { .. } => "InvalidInit",
            Error::InvalidState { .. } => "InvalidState",
            Error::SequenceTooLong { .. } => "SequenceTooLong",
            Error::EnumerationTooLarge { .. } => "EnumerationTooLarge",
            Error::KeyMismatch => "KeyMismatch",
            Error::NonFinite(_) => "NonFinite",
            Error::Parse(_) => "Parse",
            Error::Io(_) => "Io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
