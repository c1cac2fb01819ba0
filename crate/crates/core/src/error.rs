use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("fan-in violation at node {node}: {message}")]
    FanIn { node: usize, message: String },
    #[error("fan-out violation: gate {node} feeds {count} parents")]
    FanOut { node: usize, count: usize },
    #[error("cycle detected through node {node}")]
    Cycle { node: usize },
    #[error("dangling reference to node {node}")]
    Dangling { node: usize },
    #[error("unassigned variable {0}")]
    Unassigned(String),
    #[error("expansion cap exceeded ({estimate} terms > cap {cap})")]
    ExpansionCap { estimate: u128, cap: u128 },
    #[error("field element {value:#x} does not fit GF(2^{d})")]
    NotInField { value: u32, d: u32 },
    #[error("field width d = {d} exceeds the supported maximum of 16")]
    FieldTooWide { d: u32 },
    #[error("division by zero in GF(2^d)")]
    ZeroInverse,
    #[error("dimension mismatch: {0}")]
    Mismatch(String),
    #[error("k = {k} exceeds the supported bound {max}")]
    DimensionTooLarge { k: u32, max: u32 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("exhaustive check cap exceeded ({count} > {cap})")]
    CheckCap { count: u128, cap: u128 },
    #[error("formula is not S-read-once: {0}")]
    NotSReadOnce(String),
    #[error("format error at line {line}: {message}")]
    Format { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
