//! Per-loan posterior recovery estimation and forecast LGD paths.
//!
//! The observed discounted repayments of a defaulted loan feed a running
//! estimate of its asymptotic recovery. That raw estimate is volatile early
//! in the workout, so it is blended with the pre-default prior
//! `1 - lgd_wd` under the weight `1/(1 + t/T)`: prior-only at the default
//! date, data-dominated as the workout ages. The blended asymptote then
//! yields the forecast recovery level and the forecast in-default LGD.

use serde::{Deserialize, Serialize};

use crate::cashflow::{DiscountedSeries, LoanRecord};
use crate::conjugate::lgd_blend_weight;
use crate::curve::recovery_law;
use crate::error::Error;

// ---------------------------------------------------------------------------
// Point operations
// ---------------------------------------------------------------------------

/// Raw posterior estimate of the asymptotic recovery at month `t >= 1`:
/// `sum RR_k + (1/t) * sum RR_k * (T - t_k)` over payments at months
/// `t_k <= t`. Can overshoot 1 early in the workout; floored at 0.
pub fn raw_posterior_r_inf(
    series: &DiscountedSeries,
    mean_time: f64,
    t: u32,
) -> Result<f64, Error> {
    if t == 0 {
        return Err(Error::UndefinedAtZero);
    }
    if !mean_time.is_finite() || mean_time <= 0.0 {
        return Err(Error::InvalidParameter(
            "mean recovery time must be strictly positive".into(),
        ));
    }
    let mut level = 0.0;
    let mut drift = 0.0;
    for &(month, rr) in series.fractions() {
        if month > t {
            break;
        }
        level += rr;
        drift += rr * (mean_time - f64::from(month));
    }
    Ok((level + drift / f64::from(t)).max(0.0))
}

/// Posterior asymptotic recovery blended with the pre-default prior,
/// clamped to [0, 1]. At `t = 0` this is exactly `1 - lgd_wd`.
pub fn blended_r_inf(
    loan: &LoanRecord,
    series: &DiscountedSeries,
    mean_time: f64,
    t: u32,
) -> Result<f64, Error> {
    let lgd_wd = loan.lgd_wd.ok_or_else(|| Error::MissingLgdWd {
        loan_id: loan.loan_id.clone(),
    })?;
    let prior = 1.0 - lgd_wd;
    if t == 0 {
        return Ok(prior.clamp(0.0, 1.0));
    }
    let w = lgd_blend_weight(f64::from(t), mean_time)?;
    let raw = raw_posterior_r_inf(series, mean_time, t)?;
    Ok((w * prior + (1.0 - w) * raw).clamp(0.0, 1.0))
}

/// Forecast cumulative recovery at `t` given the blended asymptote.
pub fn forecast_recovery(blended_r_inf: f64, mean_time: f64, t: u32) -> f64 {
    recovery_law(blended_r_inf, mean_time, f64::from(t))
}

/// Forecast in-default LGD from the blended asymptote and the forecast
/// recovery: `(1 - R_inf) / (1 - R)`, zero once full recovery is expected.
pub fn forecast_lgd(blended_r_inf: f64, forecast_recovery: f64) -> f64 {
    if blended_r_inf >= 1.0 {
        return 0.0;
    }
    if forecast_recovery >= 1.0 {
        // Unreachable when forecast_recovery <= blended_r_inf < 1.
        return 1.0;
    }
    ((1.0 - blended_r_inf) / (1.0 - forecast_recovery)).clamp(0.0, 1.0)
}

/// Covariate-free baseline: the segment-average recovery level run through
/// the recovery law.
pub fn segment_average_recovery(rr_bar: f64, mean_time: f64, t: u32) -> f64 {
    recovery_law(rr_bar, mean_time, f64::from(t))
}

// ---------------------------------------------------------------------------
// Per-loan forecast paths
// ---------------------------------------------------------------------------

/// Forecast time series for one loan on the monthly grid `0..=horizon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoanForecast {
    pub loan_id: String,
    /// Raw posterior asymptote at months `1..=horizon` (index `t - 1`).
    /// May exceed 1 early in the workout.
    pub raw_posterior: Vec<f64>,
    /// Blended asymptote at months `0..=horizon`, clamped to [0, 1].
    pub blended: Vec<f64>,
    /// Forecast cumulative recovery at months `0..=horizon`.
    pub forecast_recovery: Vec<f64>,
    /// Forecast LGD at months `0..=horizon`; equals `lgd_wd` exactly at 0.
    pub forecast_lgd: Vec<f64>,
}

impl LoanForecast {
    pub fn horizon(&self) -> u32 {
        (self.blended.len() - 1) as u32
    }

    /// Raw posterior at month `t` (undefined at 0).
    pub fn raw_at(&self, t: u32) -> Option<f64> {
        if t == 0 {
            None
        } else {
            self.raw_posterior.get((t - 1) as usize).copied()
        }
    }
}

/// Scores one loan over `0..=horizon` months after default.
///
/// The running payment sums are advanced month by month, which reproduces
/// the point operations exactly on the whole grid in one pass.
pub fn score_loan(
    loan: &LoanRecord,
    series: &DiscountedSeries,
    mean_time: f64,
    horizon: u32,
) -> Result<LoanForecast, Error> {
    let lgd_wd = loan.lgd_wd.ok_or_else(|| Error::MissingLgdWd {
        loan_id: loan.loan_id.clone(),
    })?;
    if !mean_time.is_finite() || mean_time <= 0.0 {
        return Err(Error::InvalidParameter(
            "mean recovery time must be strictly positive".into(),
        ));
    }
    let prior = 1.0 - lgd_wd;
    let n = horizon as usize;

    let mut raw_posterior = Vec::with_capacity(n);
    let mut blended = Vec::with_capacity(n + 1);
    let mut recovery = Vec::with_capacity(n + 1);
    let mut lgd = Vec::with_capacity(n + 1);

    // t = 0: prior only, zero forecast recovery, LGD pinned to the prior.
    blended.push(prior.clamp(0.0, 1.0));
    recovery.push(0.0);
    lgd.push(lgd_wd);

    let mut level = 0.0_f64;
    let mut drift = 0.0_f64;
    let mut payments = series.fractions().iter().peekable();
    for t in 1..=horizon {
        while let Some(&&(month, rr)) = payments.peek() {
            if month <= t {
                level += rr;
                drift += rr * (mean_time - f64::from(month));
                payments.next();
            } else {
                break;
            }
        }
        let raw = (level + drift / f64::from(t)).max(0.0);
        let w = lgd_blend_weight(f64::from(t), mean_time)?;
        let blend = (w * prior + (1.0 - w) * raw).clamp(0.0, 1.0);
        let rec = forecast_recovery(blend, mean_time, t);
        raw_posterior.push(raw);
        blended.push(blend);
        recovery.push(rec);
        lgd.push(forecast_lgd(blend, rec));
    }

    Ok(LoanForecast {
        loan_id: loan.loan_id.clone(),
        raw_posterior,
        blended,
        forecast_recovery: recovery,
        forecast_lgd: lgd,
    })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cashflow::{discount_recoveries, SegmentConfig};
    use approx::assert_abs_diff_eq;

    fn series_of(fractions: &[(u32, f64)], horizon: u32) -> DiscountedSeries {
        DiscountedSeries::from_fractions(horizon, fractions).unwrap()
    }

    /// Exact exponential-law increments up to `horizon`.
    fn law_increments(r_inf: f64, mean_time: f64, horizon: u32) -> Vec<(u32, f64)> {
        (1..=horizon)
            .map(|n| {
                let prev = (-(f64::from(n) - 1.0) / mean_time).exp();
                let cur = (-f64::from(n) / mean_time).exp();
                (n, r_inf * (prev - cur))
            })
            .collect()
    }

    #[test]
    fn raw_posterior_is_zero_without_payments() {
        let series = series_of(&[(40, 0.3)], 120);
        assert_eq!(raw_posterior_r_inf(&series, 12.0, 10).unwrap(), 0.0);
    }

    #[test]
    fn raw_posterior_single_payment_overshoots() {
        // RR = 0.2 at month 1, T = 12, t = 1: 0.2 + 0.2 * 11 = 2.4.
        let series = series_of(&[(1, 0.2)], 120);
        assert_abs_diff_eq!(
            raw_posterior_r_inf(&series, 12.0, 1).unwrap(),
            2.4,
            epsilon = 1e-12
        );
    }

    #[test]
    fn raw_posterior_undefined_at_zero() {
        let series = series_of(&[(1, 0.2)], 120);
        assert!(matches!(
            raw_posterior_r_inf(&series, 12.0, 0),
            Err(Error::UndefinedAtZero)
        ));
    }

    #[test]
    fn raw_posterior_converges_on_law_increments() {
        let (r_inf, mean_time) = (0.4, 12.0);
        let series = series_of(&law_increments(r_inf, mean_time, 200), 200);
        let estimate = raw_posterior_r_inf(&series, mean_time, 120).unwrap();
        assert!((estimate - r_inf).abs() <= 0.01 * r_inf);
    }

    fn loan_with_prior(lgd_wd: f64) -> LoanRecord {
        LoanRecord::new("L1", 100.0, 0.0, &[], Some(lgd_wd)).unwrap()
    }

    #[test]
    fn blend_is_prior_only_at_default() {
        let loan = loan_with_prior(0.6);
        let series = series_of(&[], 120);
        assert_eq!(blended_r_inf(&loan, &series, 12.0, 0).unwrap(), 0.4);
    }

    #[test]
    fn blend_is_even_at_one_mean_time() {
        // Payment of 0.6 exactly at month T: raw = 0.6, prior = 0.4, w = 1/2.
        let loan = LoanRecord::new("L1", 100.0, 0.0, &[(10, 60.0)], Some(0.6)).unwrap();
        let series = discount_recoveries(&loan, &SegmentConfig::default()).unwrap();
        assert_abs_diff_eq!(
            blended_r_inf(&loan, &series, 10.0, 10).unwrap(),
            0.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn blend_forgets_the_prior_at_large_t() {
        let (r_inf, mean_time) = (0.3, 10.0);
        let loan = LoanRecord::new("L1", 100.0, 0.0, &[], Some(0.9)).unwrap();
        let series = series_of(&law_increments(r_inf, mean_time, 5000), 5000);
        let blended = blended_r_inf(&loan, &series, mean_time, 5000).unwrap();
        assert!((blended - r_inf).abs() <= 2e-3);
    }

    #[test]
    fn blend_requires_a_prior() {
        let loan = LoanRecord::new("L1", 100.0, 0.0, &[], None).unwrap();
        let series = series_of(&[], 120);
        assert!(matches!(
            blended_r_inf(&loan, &series, 12.0, 3),
            Err(Error::MissingLgdWd { .. })
        ));
    }

    #[test]
    fn forecast_recovery_examples() {
        assert_eq!(forecast_recovery(0.5, 12.0, 0), 0.0);
        let one_mean_time = forecast_recovery(0.396, 23.47, 23);
        // At t close to T the level is near R_inf * (1 - 1/e) ~ 0.2503.
        assert_abs_diff_eq!(
            forecast_recovery(0.396, 1.0, 1),
            0.396 * (1.0 - (-1.0f64).exp()),
            epsilon = 1e-15
        );
        assert!(one_mean_time > 0.24 && one_mean_time < 0.26);
        assert_abs_diff_eq!(forecast_recovery(0.7, 5.0, 5000), 0.7, epsilon = 1e-12);
    }

    #[test]
    fn forecast_lgd_examples() {
        assert_eq!(forecast_lgd(1.0, 0.3), 0.0);
        assert_eq!(forecast_lgd(1.2, 0.3), 0.0);
        // t = 0 substitution: R = 0, R_inf = 1 - lgd_wd.
        assert_abs_diff_eq!(forecast_lgd(0.4, 0.0), 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(
            forecast_lgd(0.4, 0.2503),
            0.6 / 0.7497,
            epsilon = 1e-12
        );
        assert_eq!(forecast_lgd(0.9, 1.0), 1.0);
    }

    #[test]
    fn segment_average_examples() {
        assert_eq!(segment_average_recovery(0.132, 11.3, 0), 0.0);
        assert_abs_diff_eq!(
            segment_average_recovery(0.28, 23.47, 10000),
            0.28,
            epsilon = 1e-12
        );
        let at_mean_time = segment_average_recovery(0.28, 23.47, 23);
        assert!(at_mean_time > 0.17 && at_mean_time < 0.18);
    }

    #[test]
    fn score_pins_the_prior_at_default() {
        for lgd_wd in [0.0, 1e-300, 0.37, 0.6, 1.0] {
            let loan = LoanRecord::new("L1", 100.0, 0.05, &[(3, 10.0)], Some(lgd_wd)).unwrap();
            let series = discount_recoveries(&loan, &SegmentConfig::default()).unwrap();
            let forecast = score_loan(&loan, &series, 12.0, 124).unwrap();
            assert!(forecast.forecast_lgd[0] == lgd_wd, "lgd_wd = {lgd_wd}");
            assert_eq!(forecast.forecast_recovery[0], 0.0);
        }
    }

    #[test]
    fn score_matches_point_operations() {
        let loan =
            LoanRecord::new("L1", 1000.0, 0.15, &[(2, 100.0), (9, 300.0)], Some(0.55)).unwrap();
        let series = discount_recoveries(&loan, &SegmentConfig::default()).unwrap();
        let forecast = score_loan(&loan, &series, 14.0, 60).unwrap();
        for t in 1..=60 {
            let raw = raw_posterior_r_inf(&series, 14.0, t).unwrap();
            let blend = blended_r_inf(&loan, &series, 14.0, t).unwrap();
            assert_eq!(forecast.raw_at(t).unwrap(), raw);
            assert_eq!(forecast.blended[t as usize], blend);
            assert_eq!(
                forecast.forecast_lgd[t as usize],
                forecast_lgd(blend, forecast_recovery(blend, 14.0, t))
            );
            assert!(forecast.forecast_recovery[t as usize] <= blend);
        }
    }

    #[test]
    fn forecast_lgd_approaches_one_for_incomplete_recovery() {
        let (r_inf, mean_time) = (0.35, 9.0);
        let horizon = 124;
        let loan = LoanRecord::new("L1", 100.0, 0.0, &[], Some(1.0 - r_inf)).unwrap();
        let series = series_of(&law_increments(r_inf, mean_time, horizon), horizon);
        let t = (50.0 * mean_time).ceil() as u32;
        let blend = blended_r_inf(&loan, &series, mean_time, t).unwrap();
        let lgd = forecast_lgd(blend, forecast_recovery(blend, mean_time, t));
        assert!((lgd - 1.0).abs() <= 1e-3, "lgd = {lgd}");
    }

    #[test]
    fn splitting_a_payment_within_a_month_changes_nothing() {
        let whole = LoanRecord::new("L1", 100.0, 0.1, &[(4, 30.0)], Some(0.5)).unwrap();
        let split =
            LoanRecord::new("L1", 100.0, 0.1, &[(4, 12.0), (4, 18.0)], Some(0.5)).unwrap();
        let cfg = SegmentConfig::default();
        let a = score_loan(&whole, &discount_recoveries(&whole, &cfg).unwrap(), 12.0, 60).unwrap();
        let b = score_loan(&split, &discount_recoveries(&split, &cfg).unwrap(), 12.0, 60).unwrap();
        assert_eq!(a, b);
    }
}
