use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid utility function: {0}")]
    InvalidUtility(String),

    #[error("incentive slope {slope} exceeds the maximal slope 1")]
    SlopeViolation { slope: f64 },

    #[error("incentive scheme is not convex: {0}")]
    Nonconvex(String),

    #[error("invalid incentive scheme: {0}")]
    InvalidIncentive(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{method} did not converge within {iterations} iterations")]
    Convergence { method: &'static str, iterations: usize },

    #[error("degenerate market: market price of risk is zero, use the driftless construction")]
    DegenerateMarket,

    #[error("time {t} outside [0, {horizon})")]
    TimeOutOfRange { t: f64, horizon: f64 },

    #[error("initial wealth {x} outside the open interval (0, {upper})")]
    InvalidRange { x: f64, upper: f64 },

    #[error("invalid market: {0}")]
    InvalidMarket(String),

    #[error("Gramian of the market prices of risk is singular (determinant {det:e})")]
    GramianSingular { det: f64 },

    #[error("Feller condition 2*kappa*theta > xi^2 violated: 2*{kappa}*{theta} <= {xi}^2")]
    FellerViolation { kappa: f64, theta: f64, xi: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("cannot estimate from an empty sample")]
    EmptySample,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

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
