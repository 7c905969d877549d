use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point has dimension {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("coordinate {value} outside [0, 1)")]
    CoordinateOutOfRange { value: f64 },

    #[error("Gauss map is undefined at x = 0")]
    GaussAtZero,

    #[error("selector has no cell containing omega = {omega}")]
    SelectorGap { omega: f64 },

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("invalid observation: {0}")]
    InvalidObservation(String),

    #[error("need at least 2 orbits or sequences, got {0}")]
    KTooSmall(usize),

    #[error("n = {n} exceeds available length {len}")]
    NTooLarge { n: usize, len: usize },

    #[error("need at least {needed} points, got {found}")]
    TooFewPoints { needed: usize, found: usize },

    #[error("invalid radii ladder: {0}")]
    InvalidLadder(String),

    #[error("no usable radii for the regression: {0}")]
    NoUsableRadii(String),

    #[error("invalid stochastic matrix: {0}")]
    InvalidMatrix(String),

    #[error("Markov chain is not irreducible")]
    NotIrreducible,

    #[error("Markov chain is periodic (period {period})")]
    NotAperiodic { period: usize },

    #[error("power iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("invalid probability vector: {0}")]
    InvalidDistribution(String),

    #[error("symbol {symbol} outside alphabet of size {alphabet}")]
    SymbolOutOfRange { symbol: u8, alphabet: usize },

    #[error("cylinder length {len} exceeds sequence length {seq_len}")]
    CylinderTooLong { len: usize, seq_len: usize },

    #[error("cylinder table is empty")]
    EmptyTable,

    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),

    #[error("encoded sequence has length {len}, need at least {needed}")]
    EncodedTooShort { len: usize, needed: usize },

    #[error("scrabble weights must have gcd 1, got gcd {gcd}")]
    GcdNotOne { gcd: u32 },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid config: {0}")]
    ConfigInvalid(String),

    #[error("at n = {n}, replica {replica}: {source}")]
    Replica {
        n: usize,
        replica: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, err: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            message: err.to_string(),
        }
    }
}
