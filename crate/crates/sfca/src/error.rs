//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SfcaError {
    #[error("empty trace: no observed values")]
    EmptyTrace,

    #[error("series too short: need at least {need}, got {got}")]
    SeriesTooShort { need: usize, got: usize },

    #[error("negative smoothing penalty: {0}")]
    NegativePenalty(f64),

    #[error("non-finite value in input at index {0}")]
    NonFinite(usize),

    #[error("no traces for day-of-week {0}")]
    MissingDow(String),

    #[error("wavelet level {level} infeasible for length {len} (filter length {filter_len})")]
    InfeasibleWaveletLevel {
        level: usize,
        len: usize,
        filter_len: usize,
    },

    #[error("feature schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("zero-width activity window for {city_id} year {year}")]
    ZeroWidthActivity { city_id: String, year: i32 },

    #[error("outcome time {value} outside grid domain [0,1440) for {city_id}")]
    InclusionViolation { city_id: String, value: f64 },

    #[error("coordinate descent did not converge after {iterations} sweeps")]
    NotConverged { iterations: usize },

    #[error("invalid model specification: {0}")]
    InvalidModelSpec(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("no transition found in score trace")]
    NoTransitionFound,

    #[error("too few usable scores: need at least {need}, got {got}")]
    TooFewScores { need: usize, got: usize },

    #[error("population filter > {threshold} leaves no records")]
    EmptyFilter { threshold: u64 },

    #[error("need at least {need} cities for cross-validation, got {got}")]
    TooFewCities { need: usize, got: usize },

    #[error("geometric mean requires positive values, got {0}")]
    NonPositiveGeometricMean(f64),

    #[error("invalid generator parameters: {0}")]
    InvalidGenParams(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("csv parse error at line {line}: {message}")]
    CsvFormat { line: usize, message: String },

    #[error("model format error: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SfcaError>;
