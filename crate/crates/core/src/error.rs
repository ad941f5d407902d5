use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid rule number {0}: elementary rules are 0..=255")]
    InvalidRule(u32),

    #[error("value {0} lies outside [0, 1]")]
    Domain(f64),

    #[error("shape mismatch: expected length {expected}, found {found}")]
    Shape { expected: usize, found: usize },

    #[error("exact basin census is limited to {limit} cells (got {cells}); use trajectory mode")]
    ResourceLimit { cells: usize, limit: usize },

    #[error("illegal symbol {symbol:?} at position {position}")]
    IllegalSymbol { position: usize, symbol: char },

    #[error("window of length {found} is too short (need at least {needed})")]
    InsufficientLength { needed: usize, found: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("training failed: {0}")]
    TrainingFailure(String),

    #[error("sequence of length {sequence} is shorter than the window length {window}")]
    Scan { sequence: usize, window: usize },

    #[error("class {class:?} has {count} examples, fewer than the {folds} folds requested")]
    Stratification { class: String, count: usize, folds: usize },

    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("unsupported model format version {0}")]
    Version(u32),

    #[error("model file is truncated")]
    Truncated,

    #[error("malformed model file: {0}")]
    Malformed(String),

    #[error("cannot emit report: {0}")]
    Emit(String),
}
