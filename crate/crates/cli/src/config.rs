//! TOML run configuration: segment settings, scheme selection, the optional
//! pre-default LGD fallback, and the synthetic-portfolio generator section.

use std::path::Path;

use clap::ValueEnum;
use lgdid_core::{GeneratorSpec, SegmentConfig, WeightScheme};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Weighting-scheme selection, including the conservative meta-choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SchemeChoice {
    Uniform,
    Front,
    Back,
    Conservative,
}

impl SchemeChoice {
    /// The concrete scheme, or `None` for the conservative selection.
    pub fn scheme(&self) -> Option<WeightScheme> {
        match self {
            SchemeChoice::Uniform => Some(WeightScheme::Uniform),
            SchemeChoice::Front => Some(WeightScheme::FrontLoaded),
            SchemeChoice::Back => Some(WeightScheme::BackLoaded),
            SchemeChoice::Conservative => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SchemeChoice::Uniform => "uniform",
            SchemeChoice::Front => "front",
            SchemeChoice::Back => "back",
            SchemeChoice::Conservative => "conservative",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub horizon_months: u32,
    pub cost_fraction: f64,
    pub weight_scheme: SchemeChoice,
    /// Segment-level pre-default LGD used for loans without their own.
    pub lgd_wd_fallback: Option<f64>,
    pub generator: GeneratorConfig,
}

impl Default for AppConfig {
    fn default() -> Self {
        Self {
            horizon_months: 124,
            cost_fraction: 0.0,
            weight_scheme: SchemeChoice::Conservative,
            lgd_wd_fallback: None,
            generator: GeneratorConfig::default(),
        }
    }
}

impl AppConfig {
    /// Loads the TOML config, or the defaults when no path is given.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let cfg: AppConfig = toml::from_str(&text).map_err(|e| CliError::Config {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        if let Some(p) = cfg.lgd_wd_fallback {
            if !(0.0..=1.0).contains(&p) {
                return Err(CliError::Config {
                    path: path.display().to_string(),
                    reason: format!("lgd_wd_fallback must lie in [0, 1], got {p}"),
                });
            }
        }
        Ok(cfg)
    }

    pub fn segment(&self) -> SegmentConfig {
        SegmentConfig {
            horizon_months: self.horizon_months,
            cost_fraction: self.cost_fraction,
        }
    }
}

/// `[generator]` section driving the `simulate` subcommand.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub n_loans: usize,
    pub mean_time: f64,
    pub r_inf_mean: f64,
    pub r_inf_dispersion: f64,
    pub ead_min: f64,
    pub ead_max: f64,
    pub rate_min: f64,
    pub rate_max: f64,
    pub horizon: u32,
    pub payment_noise: f64,
    pub cure_fraction: f64,
    pub prior_bias: f64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        let spec = GeneratorSpec::default();
        Self {
            n_loans: spec.n_loans,
            mean_time: spec.mean_time,
            r_inf_mean: spec.r_inf_mean,
            r_inf_dispersion: spec.r_inf_dispersion,
            ead_min: spec.ead_range.0,
            ead_max: spec.ead_range.1,
            rate_min: spec.rate_range.0,
            rate_max: spec.rate_range.1,
            horizon: spec.horizon,
            payment_noise: spec.payment_noise,
            cure_fraction: spec.cure_fraction,
            prior_bias: spec.prior_bias,
            seed: spec.seed,
        }
    }
}

impl GeneratorConfig {
    pub fn to_spec(&self, seed_override: Option<u64>) -> GeneratorSpec {
        GeneratorSpec {
            n_loans: self.n_loans,
            mean_time: self.mean_time,
            r_inf_mean: self.r_inf_mean,
            r_inf_dispersion: self.r_inf_dispersion,
            ead_range: (self.ead_min, self.ead_max),
            rate_range: (self.rate_min, self.rate_max),
            horizon: self.horizon,
            payment_noise: self.payment_noise,
            cure_fraction: self.cure_fraction,
            prior_bias: self.prior_bias,
            seed: seed_override.unwrap_or(self.seed),
        }
    }
}
