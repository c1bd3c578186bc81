use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid function descriptor: {0}")]
    Descriptor(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("quadrature tolerance not met: estimate {estimate:e}, error estimate {error:e}")]
    Accuracy { estimate: f64, error: f64 },

    #[error("root not bracketed on [{lo}, {hi}]: g(lo) = {g_lo:e}, g(hi) = {g_hi:e}")]
    Bracket { lo: f64, hi: f64, g_lo: f64, g_hi: f64 },

    #[error("root finder did not converge after {0} iterations")]
    Iteration(usize),

    #[error("computation failed: {0}")]
    Computation(String),

    #[error("resource guard: {0}")]
    Resource(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed sheet file: {0}")]
    SheetFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
