use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("Gaussian width must be positive, got {0}")]
    NonPositiveWidth(f64),

    #[error("Gaussian envelope is {edge_value:e} at the grid edge; enlarge the grid")]
    EnvelopeClipped { edge_value: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("state carries weight {edge_weight:e} near the grid boundary")]
    GridInadequate { edge_weight: f64 },

    #[error("grid centered at {center} is not symmetric under q -> -q")]
    AsymmetricGrid { center: f64 },

    #[error("angle {radians} rad is degenerate (|sin| <= {tolerance:e})")]
    DegenerateAngle { radians: f64, tolerance: f64 },

    #[error("mask index {k} out of range for d = {d}")]
    IndexOutOfRange { k: usize, d: usize },

    #[error("invalid mask: {0}")]
    InvalidMask(String),

    #[error("mask {k} annihilates the state (residual norm^2 {norm_sq:e})")]
    EmptyProjection { k: usize, norm_sq: f64 },

    #[error("wave functions live on different grids")]
    GridMismatch,

    #[error("m = {m} is not a valid unbiasedness index for d = {d}")]
    InvalidM { m: u64, d: usize },

    #[error("directions {i} and {j} are parallel")]
    ParallelDirections { i: usize, j: usize },

    #[error("excluded angle: {0}")]
    ExcludedAngle(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("invalid length: {0}")]
    InvalidLength(String),

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("P has mass where Q vanishes (index {index})")]
    AbsoluteContinuityViolated { index: usize },

    #[error("empty sample")]
    EmptySample,

    #[error("no counts were registered")]
    NoCounts,

    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
}

/// Failure while reading textual input (angles, configs, tables, bench stages).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
