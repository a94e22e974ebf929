use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid system configuration: {0}")]
    InvalidConfig(String),

    #[error("user index {index} out of range for {users} users")]
    InvalidUser { index: usize, users: usize },

    #[error("transmit SNR must be positive and finite, got {0}")]
    NonPositiveGamma(f64),

    #[error("training length {tau} outside [{min}, {max}]")]
    TauOutOfRange { tau: usize, min: usize, max: usize },

    #[error("training length required for imperfect CSI")]
    MissingTau,

    #[error("invalid interference profile: {0}")]
    InvalidProfile(String),

    #[error("invalid rate target: {0}")]
    InvalidTarget(String),

    #[error("rate {rate} bpcu is not below the feasibility limit {limit} bpcu (supremum {supremum})")]
    Infeasible {
        rate: f64,
        limit: f64,
        supremum: f64,
    },

    #[error("bracket [{lo}, {hi}] does not enclose the target {target} (rate at ends: {rate_lo}, {rate_hi})")]
    BracketFailure {
        lo: f64,
        hi: f64,
        target: f64,
        rate_lo: f64,
        rate_hi: f64,
    },

    #[error("interference bracket expansion hit the cap {cap} without reaching {target} bpcu")]
    BracketCap { cap: f64, target: f64 },

    #[error("bisection did not reach tolerance {tol} in {iterations} iterations (residual {residual})")]
    NoConvergence {
        iterations: usize,
        tol: f64,
        residual: f64,
    },

    #[error("invalid solver settings: {0}")]
    InvalidSettings(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("scenario mismatch: {0}")]
    ScenarioMismatch(String),

    #[error("config line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0}")]
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

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
