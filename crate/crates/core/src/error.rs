use thiserror::Error;

/// Syntax or lowering error in the operator grammar, located by line/column (1-based).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub fn at(src: &[u8], pos: usize, message: impl Into<String>) -> Self {
        let pos = pos.min(src.len());
        let before = &src[..pos];
        let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
        let column = pos - before.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1) + 1;
        Self { line, column, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("dimension mismatch: {0}x{0} matrix combined with {1}x{1} matrix")]
    DimensionMismatch(usize, usize),
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("generator `{0}` needs an index in 1..=3")]
    MissingIndex(String),
    #[error("generator `{0}` takes no index")]
    UnexpectedIndex(String),
    #[error("index {0} out of range 1..=3")]
    IndexOutOfRange(u8),
    #[error("unknown catalog operator `{0}`")]
    UnknownOperator(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("stencil reaches radius {radius:.4}, inside the excluded core r <= {limit}")]
    StencilTooClose { radius: f64, limit: f64 },
    #[error("invalid oracle configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RadialError {
    #[error("supercritical coupling: a = {a} >= |k| = {k}")]
    Supercritical { a: f64, k: i32 },
    #[error("sector k must be nonzero")]
    ZeroSector,
    #[error("no bound states found for a = {a}, k = {k}")]
    NoBoundState { a: f64, k: i32 },
    #[error("found {found} bound states in sector k = {k}, {wanted} requested")]
    TooFewStates { k: i32, found: usize, wanted: usize },
    #[error("grid refinement did not converge: error estimate {estimate:e} exceeds {tolerance:e}")]
    NotConverged { estimate: f64, tolerance: f64 },
    #[error("invalid radial problem: {0}")]
    Invalid(String),
}
