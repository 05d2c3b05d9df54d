use thiserror::Error;

/// Errors raised by the synthesis library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("matrix not invertible")]
    Singular,
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("circuit contains non-CNOT gate `{0}`")]
    NonLinearGate(String),
    #[error("matrix is not {0} triangular with unit diagonal")]
    NotTriangular(&'static str),
    #[error("parity table has rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("no block table available for k = {0}")]
    MissingTable(usize),
    #[error("unsupported block size k = {0}")]
    UnsupportedK(usize),
    #[error("unknown method `{0}`")]
    UnknownMethod(String),
    #[error("no method produced a circuit")]
    NoMethodSucceeded,
    #[error("invalid block table file: {0}")]
    BadTableFile(String),
}

pub type Result<T> = std::result::Result<T, Error>;
