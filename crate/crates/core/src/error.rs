use thiserror::Error;

use crate::tree::Vertex;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("arity must lie in 1..=99, got {0}")]
    InvalidArity(usize),

    #[error("a vertex is a non-empty label sequence starting with 1")]
    NotRooted,

    #[error("label {label} outside 1..={m}")]
    ArityViolation { label: usize, m: usize },

    #[error("vertex {0} is present but its mother is not")]
    OrphanVertex(Vertex),

    #[error("arity mismatch: {left} vs {right}")]
    ArityMismatch { left: usize, right: usize },

    #[error("tree of depth {depth} exceeds depth cap {cap}")]
    DepthExceedsCap { depth: usize, cap: usize },

    #[error("depth mismatch: expected {expected}, found {found}")]
    DepthMismatch { expected: usize, found: usize },

    #[error("enumeration too large: {0} trees (limit 10^7)")]
    EnumerationTooLarge(String),

    #[error("generation {generation} outside weight table 1..={len}")]
    GenerationOutOfRange { generation: usize, len: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sample is empty")]
    EmptySample,

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("metric is not CLT-safe: z = {z} must be below m^(-3/2) = {bound}")]
    CltUnsafe { z: f64, bound: f64 },

    #[error("{0}")]
    Unsupported(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("bad file: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
