use thiserror::Error;

/// Errors raised by the solvers, the simulation and the batch drivers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("polynomial has no nonzero coefficient")]
    DegeneratePolynomial,

    #[error("polynomial degree {0} exceeds the supported maximum of 4")]
    DegreeTooHigh(usize),

    #[error("non-finite coefficient {value} at index {index}")]
    NonFiniteCoefficient { index: usize, value: f64 },

    #[error("expected exactly one sign change in the coefficients, found {0}")]
    SignChanges(usize),

    #[error("no sign change found before the positive root bound {bound}")]
    NoRoot { bound: f64 },

    #[error("root iteration did not converge in {iterations} iterations, best bracket [{lo}, {hi}]")]
    NoConvergence { iterations: usize, lo: f64, hi: f64 },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("Kelly fraction undefined: total variance is zero")]
    ZeroVariance,

    #[error("equilibrium is inconsistent: {0}")]
    Inconsistent(String),

    #[error("sensitivity is defined only for interior equilibria")]
    BoundaryEquilibrium,

    #[error("boundary status differs between the two perturbed problems")]
    BoundaryFlip,

    #[error("asymptotic limits require a variance-dominated market (delta = {0} >= 0)")]
    NotVarianceDominated(f64),

    #[error("period {t}: {source}")]
    Step { t: u64, source: Box<Error> },

    #[error("need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter { name, value, reason }
    }

    /// True for errors that come from a numerical solve rather than from bad input.
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::SignChanges(_)
            | Error::NoRoot { .. }
            | Error::NoConvergence { .. }
            | Error::Inconsistent(_)
            | Error::BoundaryFlip
            | Error::BoundaryEquilibrium => true,
            Error::Step { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
