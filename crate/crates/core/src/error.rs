use thiserror::Error;

/// Errors raised by model construction, lattice building and the solver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("invalid market state: {0}")]
    InvalidState(String),

    #[error("horizon cost did not converge: {0}")]
    NonConvergent(String),

    #[error("empty conditional support at t={t}: {detail}")]
    EmptySupport { t: usize, detail: String },

    #[error("lattice layer {t} has {nodes} nodes, above the cap of {cap}")]
    Explosion { t: usize, nodes: usize, cap: usize },

    #[error("negative payoff coordinate at terminal node {node}: {value}")]
    NegativePayoff { node: usize, value: f64 },

    #[error("claim is not hedgeable: {0}")]
    NotHedgeable(String),

    #[error("degenerate radius at t={t}, node {node}: sphere infimum {infimum} and no fallback radius")]
    RadiusDegenerate { t: usize, node: usize, infimum: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("enumeration too large: {0}")]
    TooLarge(String),

    #[error("arbitrage in binomial parameters: {0}")]
    ArbitrageParams(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid payoff: {0}")]
    InvalidPayoff(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
