use thiserror::Error;

/// Errors raised by the simulator and the analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid chain length {0}: must be even and at least 2")]
    InvalidLength(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("density matrix violates `{invariant}` (deviation {deviation:e})")]
    InvalidState {
        invariant: &'static str,
        deviation: f64,
    },

    #[error("steady state is not unique: null space of the Liouvillian has dimension {nullity}")]
    DegenerateSteadyState { nullity: usize },

    #[error("steady state not reached: residual {residual:e} > {tol:e} after {steps} steps")]
    SteadyStateNotReached { residual: f64, tol: f64, steps: usize },

    #[error("relaxing bath leaves mode k={k:.6} with ground population {population:.6} < {required}")]
    NotGroundState {
        k: f64,
        population: f64,
        required: f64,
    },

    #[error("limit cycle did not converge: A-state change {change:e} after {cycles} cycles")]
    LimitCycleNotConverged { change: f64, cycles: usize },

    #[error("analytic formula not valid here: {0}")]
    OutsideRegime(String),

    #[error("bath rates violate the bound's assumption: {0}")]
    RateAssumption(String),

    #[error("fit window unusable: {0}")]
    FitWindow(String),

    #[error("division by zero: {0}")]
    ZeroDivision(&'static str),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
