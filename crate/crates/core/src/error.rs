//! Error type shared by all analytics modules.

use thiserror::Error;

/// Errors produced by the analytics library.
#[derive(Debug, Error)]
pub enum Error {
    /// A loan violates a basic invariant (non-positive EAD, negative payment, ...).
    #[error("loan {loan_id}: {reason}")]
    InvalidLoan { loan_id: String, reason: String },

    /// A month index lies past the configured workout horizon.
    #[error("month {t} is past the workout horizon of {horizon} months")]
    OutOfHorizon { t: u32, horizon: u32 },

    /// An operation that needs at least one loan received none.
    #[error("portfolio contains no loans")]
    EmptyPortfolio,

    /// The empirical curve cannot be fitted (e.g. already fully recovered).
    #[error("curve cannot be fitted: {0}")]
    NotFittable(String),

    /// The per-month time estimate is undefined at this month for the given theta.
    #[error("month {month}: recovery level is degenerate for this theta (log of a non-positive value)")]
    DegeneratePoint { month: u32 },

    /// Fewer than two usable months remain in the fit objective.
    #[error("fewer than two usable months in the fit objective")]
    InsufficientData,

    /// A loan has no pre-default LGD and no segment fallback was configured.
    #[error("loan {loan_id}: no pre-default LGD available (set lgd_wd on the loan or a segment fallback)")]
    MissingLgdWd { loan_id: String },

    /// The raw posterior estimate is undefined at t = 0.
    #[error("posterior recovery estimate is undefined at t = 0; the blend handles t = 0 via the prior")]
    UndefinedAtZero,

    /// A scalar parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An observation lies outside the likelihood support of a conjugate family.
    #[error("observation outside the likelihood support: {0}")]
    OutOfSupport(String),

    /// A prior or posterior mean does not exist for the given hyperparameters.
    #[error("undefined mean: {0}")]
    UndefinedMean(String),

    /// The synthetic portfolio spec is inconsistent.
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    /// The segment configuration is inconsistent.
    #[error("invalid segment config: {0}")]
    InvalidConfig(String),
}
