//! In-default LGD analytics for portfolios of defaulted loans.
//!
//! The library computes three views of loss given default during the
//! workout period:
//!
//! - **Exact**: realized LGD paths from discounted recovery cash flows
//!   ([`cashflow`]).
//! - **Fitted**: segment-level mean recovery time and asymptotic recovery
//!   from the exponential recovery law ([`curve`]).
//! - **Forecast**: per-loan Bayesian LGD forecasts that blend a pre-default
//!   prior with the repayments observed so far ([`bayes`], backed by the
//!   conjugate-family machinery in [`conjugate`]).
//!
//! [`generator`] builds seeded synthetic portfolios from the recovery law
//! and [`eval`] compares the three views on a common monthly grid.

#![forbid(unsafe_code)]

pub mod bayes;
pub mod cashflow;
pub mod conjugate;
pub mod curve;
pub mod error;
pub mod eval;
pub mod generator;

pub use bayes::LoanForecast;
pub use cashflow::{DiscountedSeries, LgdPath, LoanRecord, SegmentConfig};
pub use conjugate::{ConjugateModel, MeanDecomposition};
pub use curve::{EmpiricalCurve, RecoveryCurveFit, WeightScheme};
pub use error::Error;
pub use eval::EvaluationReport;
pub use generator::GeneratorSpec;
