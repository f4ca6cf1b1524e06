use thiserror::Error;

/// Errors produced by the term revealing library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("bitwidth {0} outside supported range 2..=8")]
    InvalidBitwidth(u32),
    #[error("non-finite input at element {index}")]
    NonFinite { index: usize },
    #[error("empty matrix")]
    EmptyMatrix,
    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("value {value} out of range for {bits}-bit encoding")]
    OutOfRange { value: i64, bits: u32 },
    #[error("group size {0} outside allowed range")]
    InvalidGroupSize(usize),
    #[error("invalid group budget {0}")]
    InvalidBudget(usize),
    #[error("invalid data term count {0}")]
    InvalidDataTerms(usize),
    #[error("coefficient counter overflow at exponent {exponent}")]
    CounterOverflow { exponent: usize },
    #[error("term pair count {pairs} exceeds synchronized bound {bound}")]
    PairBoundExceeded { pairs: u64, bound: u64 },
    #[error("invalid control registers: {0}")]
    InvalidRegisters(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("work ratio denominator is zero")]
    ZeroWork,
    #[error("invalid distribution parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable kind used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidBitwidth(_) => "invalid_bitwidth",
            Error::NonFinite { .. } => "non_finite",
            Error::EmptyMatrix => "empty_matrix",
            Error::ShapeMismatch { .. } => "shape_mismatch",
            Error::OutOfRange { .. } => "out_of_range",
            Error::InvalidGroupSize(_) => "invalid_group_size",
            Error::InvalidBudget(_) => "invalid_budget",
            Error::InvalidDataTerms(_) => "invalid_data_terms",
            Error::CounterOverflow { .. } => "counter_overflow",
            Error::PairBoundExceeded { .. } => "pair_bound_exceeded",
            Error::InvalidRegisters(_) => "invalid_registers",
            Error::InvalidConfig(_) => "invalid_config",
            Error::ZeroWork => "zero_work",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
