use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid shift: {0}")]
    InvalidSft(String),

    #[error("symbol {symbol} out of range for alphabet of size {k}")]
    SymbolOutOfRange { symbol: u8, k: usize },

    #[error("word is not admissible at position {position}")]
    NotAdmissible { position: usize },

    #[error("need at least {needed} symbols, have {available}")]
    InsufficientLength { needed: usize, available: usize },

    #[error("shift is not primitive (not topologically mixing)")]
    NotPrimitive,

    #[error("no admissible bridge of length {gap} from {from} to {to}")]
    NoBridge { from: u8, to: u8, gap: usize },

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("potential has negative value {value}")]
    NegativePotential { value: f64 },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid target: {0}")]
    InvalidTarget(String),

    #[error("{what} would need {needed} items, cap is {cap}")]
    CapExceeded { what: &'static str, needed: u128, cap: u64 },

    #[error("power iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("schedule infeasible: {0}")]
    Infeasible(String),

    #[error("no typical words of length {n} within eta = {eta}")]
    EmptyTypicalSet { n: usize, eta: f64 },

    #[error("series unclassifiable: {0}")]
    Unclassifiable(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}
