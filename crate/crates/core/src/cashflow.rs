//! Recovery cash-flow discounting and realized in-default LGD paths.
//!
//! A defaulted loan is described by its exposure at default, its lending
//! rate, and the undiscounted repayments observed in the months after the
//! default date. Repayments are discounted back to the default date with
//! annual compounding, expressed as fractions of the (cost-loaded) exposure,
//! and combined into the realized LGD path: a non-decreasing step function
//! that starts at the at-default LGD and reaches 100% at the workout horizon
//! for incompletely recovered loans.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Error;

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// One defaulted loan with its observed post-default repayments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoanRecord {
    pub loan_id: String,
    /// Exposure at default, in money units. Strictly positive.
    pub ead: f64,
    /// Annual lending/discount rate as a decimal fraction (0.12 = 12%).
    pub annual_rate: f64,
    /// Undiscounted repayments as `(month_after_default, amount)` pairs,
    /// aggregated per month and sorted by month. Months start at 1.
    pub recoveries: Vec<(u32, f64)>,
    /// Pre-default model LGD used as the forecast prior, in [0, 1].
    pub lgd_wd: Option<f64>,
}

impl LoanRecord {
    /// Builds a validated loan. Payments landing in the same month are
    /// summed; a month-0 payment is counted as month 1.
    pub fn new(
        loan_id: impl Into<String>,
        ead: f64,
        annual_rate: f64,
        payments: &[(u32, f64)],
        lgd_wd: Option<f64>,
    ) -> Result<Self, Error> {
        let loan_id = loan_id.into();
        let invalid = |reason: &str| Error::InvalidLoan {
            loan_id: loan_id.clone(),
            reason: reason.to_string(),
        };
        if !ead.is_finite() || ead <= 0.0 {
            return Err(invalid("EAD must be strictly positive"));
        }
        if !annual_rate.is_finite() || annual_rate < 0.0 {
            return Err(invalid("annual rate must be non-negative"));
        }
        if let Some(p) = lgd_wd {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(invalid("lgd_wd must lie in [0, 1]"));
            }
        }
        let mut by_month: BTreeMap<u32, f64> = BTreeMap::new();
        for &(month, amount) in payments {
            if !amount.is_finite() || amount < 0.0 {
                return Err(invalid("recovery amounts must be non-negative"));
            }
            *by_month.entry(month.max(1)).or_insert(0.0) += amount;
        }
        Ok(Self {
            loan_id,
            ead,
            annual_rate,
            recoveries: by_month.into_iter().collect(),
            lgd_wd,
        })
    }
}

/// Segment-level workout settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentConfig {
    /// Maximum workout horizon N, in months after default.
    pub horizon_months: u32,
    /// Collection-cost loading applied as `ead * (1 + cost_fraction)`.
    pub cost_fraction: f64,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            horizon_months: 124,
            cost_fraction: 0.0,
        }
    }
}

impl SegmentConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.horizon_months < 1 {
            return Err(Error::InvalidConfig("horizon_months must be >= 1".into()));
        }
        if !self.cost_fraction.is_finite() || self.cost_fraction < 0.0 {
            return Err(Error::InvalidConfig(
                "cost_fraction must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Cost-loaded exposure at default.
    pub fn loaded_ead(&self, ead: f64) -> f64 {
        ead * (1.0 + self.cost_fraction)
    }
}

/// Discounted recoveries of one loan, as fractions of the cost-loaded EAD.
///
/// The cumulative series is capped at 1.0: the payment that crosses full
/// recovery is truncated and later payments are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscountedSeries {
    /// `(month, discounted fraction)` in month order, after capping.
    fractions: Vec<(u32, f64)>,
    /// Running sum of `fractions` at the same months.
    cumulative: Vec<(u32, f64)>,
    loaded_ead: f64,
    horizon: u32,
}

impl DiscountedSeries {
    /// Per-month discounted recovery fractions.
    pub fn fractions(&self) -> &[(u32, f64)] {
        &self.fractions
    }

    /// Cumulative discounted recovery at each payment month.
    pub fn cumulative(&self) -> &[(u32, f64)] {
        &self.cumulative
    }

    /// Cumulative discounted recovery fraction at month `t` (step function).
    pub fn cumulative_at(&self, t: u32) -> f64 {
        match self.cumulative.partition_point(|&(m, _)| m <= t) {
            0 => 0.0,
            i => self.cumulative[i - 1].1,
        }
    }

    /// Total discounted recovery over the whole horizon.
    pub fn total(&self) -> f64 {
        self.cumulative.last().map_or(0.0, |&(_, c)| c)
    }

    /// True when the capped cumulative recovery reached 1.0 (loan cured).
    pub fn is_complete(&self) -> bool {
        self.total() >= 1.0
    }

    pub fn loaded_ead(&self) -> f64 {
        self.loaded_ead
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    /// Builds a series directly from discounted fractions (unit exposure).
    /// Used by simulation and test harnesses; applies the same month
    /// aggregation and 1.0 cap as [`discount_recoveries`].
    pub fn from_fractions(horizon: u32, fractions: &[(u32, f64)]) -> Result<Self, Error> {
        let mut by_month: BTreeMap<u32, f64> = BTreeMap::new();
        for &(month, f) in fractions {
            if !f.is_finite() || f < 0.0 {
                return Err(Error::InvalidParameter(
                    "discounted fractions must be non-negative".into(),
                ));
            }
            if month <= horizon {
                *by_month.entry(month.max(1)).or_insert(0.0) += f;
            }
        }
        Ok(Self::assemble(by_month, 1.0, horizon))
    }

    fn assemble(by_month: BTreeMap<u32, f64>, loaded_ead: f64, horizon: u32) -> Self {
        let mut fractions = Vec::with_capacity(by_month.len());
        let mut cumulative = Vec::with_capacity(by_month.len());
        let mut cum = 0.0_f64;
        for (month, frac) in by_month {
            let step = if cum + frac >= 1.0 { 1.0 - cum } else { frac };
            cum += step;
            fractions.push((month, step));
            cumulative.push((month, cum));
            if cum >= 1.0 {
                break;
            }
        }
        Self {
            fractions,
            cumulative,
            loaded_ead,
            horizon,
        }
    }
}

/// Realized LGD as a step function of months after default.
#[derive(Debug, Clone, PartialEq)]
pub struct LgdPath {
    values: Vec<f64>,
    cured: bool,
}

impl LgdPath {
    /// LGD at month `t`; past the horizon it stays at 1.0 (or 0.0 for a
    /// cured loan).
    pub fn at(&self, t: u32) -> f64 {
        match self.values.get(t as usize) {
            Some(&v) => v,
            None if self.cured => 0.0,
            None => 1.0,
        }
    }

    /// Values on the monthly grid `0..=horizon`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn horizon(&self) -> u32 {
        (self.values.len() - 1) as u32
    }

    /// Whether the loan recovered its full cost-loaded exposure.
    pub fn cured(&self) -> bool {
        self.cured
    }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Annual-compounding discount factor for a cash flow `months` after default.
pub fn discount_factor(annual_rate: f64, months: f64) -> f64 {
    (1.0 + annual_rate).powf(months / 12.0)
}

/// Discounts a loan's recoveries to the default date and expresses them as
/// fractions of the cost-loaded EAD. Payments past the horizon are dropped;
/// the cumulative series is capped at 1.0.
pub fn discount_recoveries(
    loan: &LoanRecord,
    cfg: &SegmentConfig,
) -> Result<DiscountedSeries, Error> {
    cfg.validate()?;
    let invalid = |reason: &str| Error::InvalidLoan {
        loan_id: loan.loan_id.clone(),
        reason: reason.to_string(),
    };
    if !loan.ead.is_finite() || loan.ead <= 0.0 {
        return Err(invalid("EAD must be strictly positive"));
    }
    if !loan.annual_rate.is_finite() || loan.annual_rate < 0.0 {
        return Err(invalid("annual rate must be non-negative"));
    }
    let loaded_ead = cfg.loaded_ead(loan.ead);
    let mut by_month: BTreeMap<u32, f64> = BTreeMap::new();
    for &(month, amount) in &loan.recoveries {
        if !amount.is_finite() || amount < 0.0 {
            return Err(invalid("recovery amounts must be non-negative"));
        }
        let month = month.max(1);
        if month > cfg.horizon_months {
            continue;
        }
        let frac = (amount / loaded_ead) / discount_factor(loan.annual_rate, f64::from(month));
        *by_month.entry(month).or_insert(0.0) += frac;
    }
    Ok(DiscountedSeries::assemble(
        by_month,
        loaded_ead,
        cfg.horizon_months,
    ))
}

/// Realized LGD at the default date: `max(0, 1 - R(N))`.
pub fn exact_lgd_at_default(series: &DiscountedSeries) -> f64 {
    (1.0 - series.total()).max(0.0)
}

/// Outstanding exposure at month `t`: recoveries to date are discounted to
/// the default date, netted against the cost-loaded exposure, and the
/// remainder is compounded forward to `t`. Floored at zero.
pub fn outstanding_exposure(
    loan: &LoanRecord,
    series: &DiscountedSeries,
    t: u32,
) -> Result<f64, Error> {
    if t > series.horizon() {
        return Err(Error::OutOfHorizon {
            t,
            horizon: series.horizon(),
        });
    }
    let remaining = series.loaded_ead() * (1.0 - series.cumulative_at(t));
    Ok((discount_factor(loan.annual_rate, f64::from(t)) * remaining).max(0.0))
}

/// Realized LGD path on the monthly grid `0..=horizon`.
///
/// If the loan recovered its full cost-loaded exposure over the horizon the
/// whole path is zero. Otherwise `LGD(t) = LGD(0) / (1 - R(t))`, which is
/// non-decreasing and reaches 1.0 at the horizon.
pub fn exact_lgd_path(loan: &LoanRecord, cfg: &SegmentConfig) -> Result<LgdPath, Error> {
    let series = discount_recoveries(loan, cfg)?;
    let n = cfg.horizon_months as usize;
    if series.is_complete() {
        return Ok(LgdPath {
            values: vec![0.0; n + 1],
            cured: true,
        });
    }
    let lgd0 = exact_lgd_at_default(&series);
    let mut values = Vec::with_capacity(n + 1);
    for t in 0..=cfg.horizon_months {
        let lgd = lgd0 / (1.0 - series.cumulative_at(t));
        values.push(lgd.clamp(0.0, 1.0));
    }
    Ok(LgdPath {
        values,
        cured: false,
    })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
