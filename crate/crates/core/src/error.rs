use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("matrix is singular to working precision (pivot magnitude {pivot:e})")]
    Singular { pivot: f64 },

    #[error("integration fault at t = {t}: derivative component {component} is not finite")]
    Integration { t: f64, component: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("state left the flight envelope: {0}")]
    OutOfEnvelope(String),

    #[error(
        "regulator equations have no solution (sylvester residual {sylvester:e}, output residual {output:e})"
    )]
    NoRegulatorSolution { sylvester: f64, output: f64 },

    #[error("gain certification failed: {0}")]
    Certification(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("malformed log: {0}")]
    Log(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Contract(msg()))
    }
}

pub(crate) fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}
