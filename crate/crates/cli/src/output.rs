//! Output documents and atomic file writing.
//!
//! Every artifact stamps a schema version, is written through a temp file
//! and renamed into place (no partial outputs on failure), and is checked
//! for non-finite numbers before anything touches disk.

use std::path::{Path, PathBuf};

use lgdid_core::{EvaluationReport, LoanForecast, RecoveryCurveFit};
use serde::Serialize;

use crate::error::CliError;

pub const FIT_SCHEMA: &str = "lgdid.fit.v1";
pub const SCORE_SCHEMA: &str = "lgdid.score.v1";
pub const CURVES_SCHEMA: &str = "lgdid.curves.v1";
pub const EVAL_SCHEMA: &str = "lgdid.eval.v1";

/// Writes via a sibling temp file plus rename, so a failed run never leaves
/// a partial artifact behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut tmp_name = path.as_os_str().to_owned();
    tmp_name.push(".tmp");
    let tmp = PathBuf::from(tmp_name);
    std::fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

fn ensure_finite(context: &str, values: &[f64]) -> Result<(), CliError> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CliError::NonFinite {
            context: context.to_string(),
        });
    }
    Ok(())
}

fn fit_fields(fit: &RecoveryCurveFit) -> [f64; 5] {
    [fit.mean_time, fit.sigma_t, fit.r_inf, fit.theta_star, fit.mad]
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct SchemeFits {
    pub uniform: RecoveryCurveFit,
    pub front_loaded: RecoveryCurveFit,
    pub back_loaded: RecoveryCurveFit,
}

#[derive(Debug, Serialize)]
pub struct FitDocument {
    pub schema_version: &'static str,
    pub horizon_months: u32,
    /// Terminal value of the empirical curve the fits were computed on.
    pub terminal_recovery: f64,
    pub fits: SchemeFits,
    /// Scheme the conservative rule selects (minimal asymptote).
    pub conservative_scheme: String,
    /// Scheme requested on the command line / config.
    pub selected_scheme: String,
    pub selected: RecoveryCurveFit,
}

pub fn write_fit_json(path: &Path, doc: &FitDocument) -> Result<(), CliError> {
    for fit in [
        &doc.fits.uniform,
        &doc.fits.front_loaded,
        &doc.fits.back_loaded,
        &doc.selected,
    ] {
        ensure_finite("fit document", &fit_fields(fit))?;
    }
    ensure_finite("fit document", &[doc.terminal_recovery])?;
    let mut text = serde_json::to_string_pretty(doc)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

// ---------------------------------------------------------------------------
// score
// ---------------------------------------------------------------------------

/// Per-loan forecast paths as long-format CSV. The raw posterior is
/// undefined at month 0 and left empty there.
pub fn write_score_csv(path: &Path, forecasts: &[LoanForecast]) -> Result<(), CliError> {
    let mut text = format!(
        "# lgdid-schema: {SCORE_SCHEMA}\nloan_id,month,raw_posterior,blended_r_inf,forecast_recovery,forecast_lgd\n"
    );
    for forecast in forecasts {
        for t in 0..=forecast.horizon() {
            let i = t as usize;
            let raw = match forecast.raw_at(t) {
                Some(v) => {
                    ensure_finite("score raw posterior", &[v])?;
                    v.to_string()
                }
                None => String::new(),
            };
            let row = [
                forecast.blended[i],
                forecast.forecast_recovery[i],
                forecast.forecast_lgd[i],
            ];
            ensure_finite("score document", &row)?;
            text.push_str(&format!(
                "{},{},{},{},{},{}\n",
                forecast.loan_id, t, raw, row[0], row[1], row[2]
            ));
        }
    }
    write_atomic(path, text.as_bytes())
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct EvalSummary {
    pub schema_version: &'static str,
    pub n_loans: usize,
    pub horizon_months: u32,
    pub selected_scheme: String,
    pub fit: RecoveryCurveFit,
    pub rr_bar: f64,
    pub monotonicity_violation_rate: f64,
    pub lgd_exact_final: f64,
    pub lgd_forecast_final: f64,
    pub lgd_average_final: f64,
}

pub fn write_report_csv(path: &Path, report: &EvaluationReport) -> Result<(), CliError> {
    let mut text = format!(
        "# lgdid-schema: {CURVES_SCHEMA}\nmonth,lgd_exact,lgd_forecast,lgd_average,r1,r2\n"
    );
    for t in 0..=report.horizon as usize {
        let row = [
            report.lgd_exact[t],
            report.lgd_forecast[t],
            report.lgd_average[t],
            report.r1[t],
            report.r2[t],
        ];
        ensure_finite("evaluation curves", &row)?;
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            t, row[0], row[1], row[2], row[3], row[4]
        ));
    }
    write_atomic(path, text.as_bytes())
}

pub fn write_eval_summary(path: &Path, summary: &EvalSummary) -> Result<(), CliError> {
    ensure_finite("evaluation summary", &fit_fields(&summary.fit))?;
    ensure_finite(
        "evaluation summary",
        &[
            summary.rr_bar,
            summary.monotonicity_violation_rate,
            summary.lgd_exact_final,
            summary.lgd_forecast_final,
            summary.lgd_average_final,
        ],
    )?;
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}
