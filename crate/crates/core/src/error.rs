use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failures raised by the numerical engines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("integrand is not finite at node {at:?}")]
    NonFiniteIntegrand { at: Vec<f64> },

    #[error(
        "moment generating function underflowed (E{{exp(-theta*T*R)}} = {mgf:e}); \
         use the log-domain (log-sum-exp) evaluation path instead"
    )]
    MgfUnderflow { mgf: f64 },

    #[error("no threshold in [{lo:e}, {hi:e}] meets the average power {target} of user {user}")]
    BracketFailure { user: usize, lo: f64, hi: f64, target: f64 },

    #[error("{what} did not converge after {iterations} iterations (last change {residual:e})")]
    NotConverged { what: &'static str, iterations: usize, residual: f64 },

    #[error(
        "insufficient tail data: {exceedances} exceedances at the lower fit edge, need {needed}; \
         simulate at least {required_frames} frames"
    )]
    InsufficientTail { exceedances: usize, needed: usize, required_frames: u64 },

    #[error("{0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { field, reason: reason.into() }
    }

    /// Prefix an outer integration coordinate onto a non-finite node report.
    pub(crate) fn at_outer(self, z: f64) -> Self {
        match self {
            Error::NonFiniteIntegrand { mut at } => {
                at.insert(0, z);
                Error::NonFiniteIntegrand { at }
            }
            other => other,
        }
    }
}
