use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid interval: lo = {lo} exceeds hi = {hi}")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("empty sum")]
    EmptySum,

    #[error("invalid plant: {0}")]
    InvalidPlant(String),

    #[error("history length {got} does not match plant order {expected}")]
    HistoryLength { expected: usize, got: usize },

    #[error("vertex index {index} out of range for a plant of order {order}")]
    VertexIndex { index: usize, order: usize },

    #[error("invalid quantizer: {0}")]
    InvalidQuantizer(String),

    #[error("quantizer saturated: input {x} lies outside [-1/2, 1/2]")]
    Saturation { x: f64 },

    #[error("symbol {symbol} out of range 1..={cells}")]
    InvalidSymbol { symbol: usize, cells: usize },

    #[error("assumption 1 violated: |a_n*| - eps_n = {margin} must exceed 1")]
    AssumptionViolated { margin: f64 },

    #[error("quantizer cannot contract: denominator {denominator} is not positive")]
    NonContracting { denominator: f64 },

    #[error("spectral radius did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("saturation at step {step}: |y| = {y_abs} exceeds sigma/2 = {half_sigma}")]
    SimulationSaturation {
        step: usize,
        y_abs: f64,
        half_sigma: f64,
    },

    #[error("line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("config has no [{0}] section")]
    MissingSection(&'static str),

    #[error("no cases")]
    NoCases,

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
