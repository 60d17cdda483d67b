use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A documented precondition of an operation was not met.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The request would need more memory than the exhaustive representation allows.
    #[error("resource limit: {0}")]
    Resource(String),

    /// Norm drift or step-halving failure inside a propagator.
    #[error("integrator failure: {0}")]
    Integrator(String),

    /// An iterative eigensolver did not reach the residual tolerance.
    #[error("iterative eigensolver did not converge (worst residual {worst_residual:.3e})")]
    NotConverged { worst_residual: f64 },

    /// A schedule derivative was requested from a non-smooth control.
    #[error("schedule control `{0}` is not twice differentiable")]
    NotDifferentiable(String),

    /// The band gap vanished (or fell below the numerical floor) at some grid point.
    #[error("singular gap {gap:.3e} at s = {s}")]
    SingularGap { s: f64, gap: f64 },

    /// A QAOA layer with both angles zero has no duration.
    #[error("degenerate QAOA layer {0}: |gamma| + |beta| = 0")]
    DegenerateLayer(usize),

    /// Floating-point overflow or other non-finite intermediate.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("serialization: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Contract(msg()))
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
