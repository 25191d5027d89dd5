use thiserror::Error;

/// Errors raised by the analysis and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The two resident coefficients coincide (`a0 == a1`, or `d0 == d1` for
    /// species x), so the Beta representation of the invariant measure does
    /// not apply. Use the Monte Carlo estimators instead.
    #[error("degenerate switched logistic: {0}, closed form unavailable")]
    DegenerateLogistic(&'static str),

    #[error("chart mismatch: expected weights ({expected0}, {expected1}), got ({got0}, {got1})")]
    ChartMismatch {
        expected0: f64,
        expected1: f64,
        got0: f64,
        got1: f64,
    },

    /// `u` in {0, 1} or `v == 0` encodes a limit regime, not a process.
    #[error("chart boundary (u = {u}, v = {v}) does not correspond to finite jump rates")]
    ChartBoundary { u: f64, v: f64 },

    #[error("internal contract violated: {0}")]
    InternalContract(String),

    #[error("integrator blow-up at t = {t}: state ({x}, {y}) left the admissible box; reduce dt_max")]
    IntegratorBlowUp { t: f64, x: f64, y: f64 },

    #[error("t_max = {t_max} is too short for the mode chain to mix (need at least {required})")]
    InsufficientMixing { t_max: f64, required: f64 },
}

impl Error {
    /// Short machine-parsable code, used by the command line front end.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::DegenerateLogistic(_) => "degenerate-logistic",
            Error::ChartMismatch { .. } => "chart-mismatch",
            Error::ChartBoundary { .. } => "chart-boundary",
            Error::InternalContract(_) => "internal-contract",
            Error::IntegratorBlowUp { .. } => "integrator-blow-up",
            Error::InsufficientMixing { .. } => "insufficient-mixing",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
