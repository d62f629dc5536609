use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("index must be >= 1, got {0}")]
    NonPositiveIndex(i64),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("vector is not in span{{x_1..x_{n}}}: residual has {residual_len} nonzero coordinates")]
    NotInSpan { n: usize, residual_len: usize },
    #[error("m = {m} exceeds support size {support}")]
    MTooLarge { m: usize, support: usize },
    #[error("invalid greedy selection: {0}")]
    InvalidSelection(String),
    #[error("{what} = {value} exceeds cap {cap}")]
    TooLarge { what: &'static str, value: usize, cap: usize },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("block {block} has inner index {inner} outside 1..={block}")]
    InnerIndexOutOfRange { block: usize, inner: usize },
    #[error("malformed global index: {0}")]
    MalformedIndex(String),
    #[error("witness list is empty")]
    EmptyWitnessList,
    #[error("empty vector: ratio undefined")]
    EmptyVector,
}

pub type Result<T> = std::result::Result<T, Error>;
