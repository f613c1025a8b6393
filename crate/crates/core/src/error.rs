use thiserror::Error;

/// Errors raised by the solvers, the contract engine and the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("unbounded supremum: {0}")]
    Unbounded(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("numeric failure at step {step}: {detail}")]
    Numeric { step: usize, detail: String },

    #[error("construction error: {0}")]
    Construction(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("concavity violated at y = {y}: second derivative {second} is not negative")]
    Concavity { y: f64, second: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("root not bracketed: G({lo:e}) = {g_lo:e}, G({hi:e}) = {g_hi:e}")]
    RootBracket { lo: f64, hi: f64, g_lo: f64, g_hi: f64 },

    #[error("horizon truncation: {alive} of {n_paths} paths still alive at t_cap = {t_cap}; increase t_cap")]
    Horizon { alive: usize, n_paths: usize, t_cap: f64 },

    #[error("audit failed: {0}")]
    Audit(String),

    #[error("io error: {0}")]
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
