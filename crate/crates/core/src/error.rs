use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("field mismatch: GF({left}) vs GF({right})")]
    FieldMismatch { left: u32, right: u32 },
    #[error("division by zero in GF({0})")]
    DivisionByZero(u32),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("index out of range: {what} = {value}, expected {lo}..={hi}")]
    OutOfRange {
        what: &'static str,
        value: usize,
        lo: usize,
        hi: usize,
    },
    #[error("field size {q} is smaller than code length {n}")]
    FieldTooSmall { q: u32, n: usize },
    #[error("generator is not MDS: columns {columns:?} form a singular submatrix")]
    NotMds { columns: Vec<usize> },
    #[error("strategy is not a member of the {0} alphabet")]
    UnknownStrategy(String),
    #[error("resource guard: {what} needs {needed} units, limit is {limit}")]
    TooLarge {
        what: &'static str,
        needed: u128,
        limit: u128,
    },
    #[error("invalid probability mass function: {0}")]
    InvalidPmf(String),
    #[error("non-positive download cost {0}")]
    NonPositiveCost(f64),
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex iteration limit {0} reached")]
    IterationLimit(usize),
    #[error("scheme is not time-shared: server {0} sees a different query distribution than server 1")]
    NotTimeShared(usize),
    #[error("no target in the download-cost grid is feasible")]
    AllInfeasible,
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("desired file is unrecoverable: {undetermined} of its symbols are not determined by the answers")]
    Unrecoverable { undetermined: usize },
    #[error("answers are inconsistent with the stored code")]
    InconsistentAnswers,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
