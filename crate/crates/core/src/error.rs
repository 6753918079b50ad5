use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("missing analytic derivative channel: {0}")]
    MissingDerivative(&'static str),

    #[error("analytic and finite-difference D^m disagree: discrepancy {discrepancy:.3e} > tolerance {tolerance:.3e}")]
    CrossCheck { discrepancy: f64, tolerance: f64 },

    #[error("regulated quadrature did not converge: error estimate {err:.3e} > tolerance {tol:.3e}")]
    NonConvergence { err: f64, tol: f64 },

    #[error("finite-difference stencil at d = {d} crosses a light-cone window")]
    StepCollision { d: f64 },

    #[error("mode budget exceeded: {modes} modes requested, budget {budget}")]
    ModeBudget { modes: u64, budget: u64 },

    #[error("empty input: {0}")]
    Empty(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

/// Rejects non-finite or non-positive values.
pub(crate) fn require_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(domain(format!("{name} must be finite and > 0, got {value}")))
    }
}

pub(crate) fn require_nonnegative(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(domain(format!("{name} must be finite and >= 0, got {value}")))
    }
}
