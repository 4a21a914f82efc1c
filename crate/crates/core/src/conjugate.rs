//! Conjugate prior/likelihood families with closed-form posterior means.
//!
//! Seven classical conjugate pairs are supported. Each model carries its
//! prior hyperparameters, the known constants of the sampling model, and the
//! sufficient statistics of the observations folded in so far, so that
//! updating twice with two batches is exactly the same as updating once with
//! their concatenation.
//!
//! Every family exposes the posterior-mean decomposition
//! `posterior_mean = w * prior_mean + (1 - w) * data_mean`, with `data_mean`
//! a data-only estimator (sample mean, inverse sample mean, max statistic,
//! ...). The weights are derived from the closed-form posterior means so the
//! identity holds to machine precision; published tabulations of these
//! weights are not always self-consistent, and where they differ the derived
//! form is used.
//!
//! Note on the uniform/Pareto pair: with the max statistic as `data_mean`,
//! the solved weight can leave (0, 1] when the sample maximum exceeds what
//! the prior mean anticipates — the posterior mean of that family always
//! sits strictly above the max statistic, so the decomposition is exact but
//! not always a convex combination.

use serde::{Deserialize, Serialize};

use crate::error::Error;

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

/// Conjugate family labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    NormalKnownVariance,
    ExponentialGamma,
    UniformPareto,
    PoissonGamma,
    BinomialBeta,
    NegBinomialBeta,
    ParetoGamma,
}

/// A conjugate model: prior hyperparameters, likelihood constants, and the
/// sufficient statistics of observations absorbed so far.
#[derive(Debug, Clone, PartialEq)]
pub enum ConjugateModel {
    /// Normal observations with known variance, normal prior on the mean.
    NormalKnownVariance {
        prior_mean: f64,
        prior_var: f64,
        obs_var: f64,
        n: u64,
        sum: f64,
    },
    /// Exponential observations, gamma prior on the rate.
    ExponentialGamma { shape: f64, rate: f64, n: u64, sum: f64 },
    /// Uniform [0, theta] observations, Pareto prior on theta.
    UniformPareto { shape: f64, scale: f64, n: u64, max: f64 },
    /// Poisson counts, gamma prior on the intensity.
    PoissonGamma { shape: f64, rate: f64, n: u64, sum: f64 },
    /// Binomial successes out of a known number of trials, beta prior.
    BinomialBeta {
        a: f64,
        b: f64,
        trials: u64,
        n: u64,
        sum: f64,
    },
    /// Negative-binomial trial counts for a known success target, beta prior.
    NegBinomialBeta {
        a: f64,
        b: f64,
        successes: u64,
        n: u64,
        sum: f64,
    },
    /// Pareto observations with known lower bound, gamma prior on the shape.
    ParetoGamma {
        shape: f64,
        rate: f64,
        x_min: f64,
        n: u64,
        sum_log: f64,
    },
}

/// Posterior distribution parameters, per family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PosteriorParams {
    Normal { mean: f64, variance: f64 },
    Gamma { shape: f64, rate: f64 },
    Pareto { shape: f64, scale: f64 },
    Beta { a: f64, b: f64 },
}

/// Posterior mean split into prior and data contributions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanDecomposition {
    /// Prior weight; 1 with no observations, shrinking as data accumulates.
    pub weight: f64,
    pub prior_mean: f64,
    /// Data-only estimator blended against the prior (0 with no data).
    pub data_mean: f64,
    pub posterior_mean: f64,
}

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

fn require_positive(name: &str, v: f64) -> Result<(), Error> {
    if !v.is_finite() || v <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "{name} must be strictly positive, got {v}"
        )));
    }
    Ok(())
}

impl ConjugateModel {
    pub fn normal_known_variance(
        prior_mean: f64,
        prior_var: f64,
        obs_var: f64,
    ) -> Result<Self, Error> {
        require_positive("prior variance", prior_var)?;
        require_positive("observation variance", obs_var)?;
        if !prior_mean.is_finite() {
            return Err(Error::InvalidParameter("prior mean must be finite".into()));
        }
        Ok(Self::NormalKnownVariance {
            prior_mean,
            prior_var,
            obs_var,
            n: 0,
            sum: 0.0,
        })
    }

    pub fn exponential_gamma(shape: f64, rate: f64) -> Result<Self, Error> {
        require_positive("shape", shape)?;
        require_positive("rate", rate)?;
        Ok(Self::ExponentialGamma {
            shape,
            rate,
            n: 0,
            sum: 0.0,
        })
    }

    pub fn uniform_pareto(shape: f64, scale: f64) -> Result<Self, Error> {
        require_positive("shape", shape)?;
        require_positive("scale", scale)?;
        Ok(Self::UniformPareto {
            shape,
            scale,
            n: 0,
            max: scale,
        })
    }

    pub fn poisson_gamma(shape: f64, rate: f64) -> Result<Self, Error> {
        require_positive("shape", shape)?;
        require_positive("rate", rate)?;
        Ok(Self::PoissonGamma {
            shape,
            rate,
            n: 0,
            sum: 0.0,
        })
    }

    pub fn binomial_beta(a: f64, b: f64, trials: u64) -> Result<Self, Error> {
        require_positive("a", a)?;
        require_positive("b", b)?;
        if trials == 0 {
            return Err(Error::InvalidParameter("trials must be >= 1".into()));
        }
        Ok(Self::BinomialBeta {
            a,
            b,
            trials,
            n: 0,
            sum: 0.0,
        })
    }

    pub fn neg_binomial_beta(a: f64, b: f64, successes: u64) -> Result<Self, Error> {
        require_positive("a", a)?;
        require_positive("b", b)?;
        if successes == 0 {
            return Err(Error::InvalidParameter("successes must be >= 1".into()));
        }
        Ok(Self::NegBinomialBeta {
            a,
            b,
            successes,
            n: 0,
            sum: 0.0,
        })
    }

    pub fn pareto_gamma(shape: f64, rate: f64, x_min: f64) -> Result<Self, Error> {
        require_positive("shape", shape)?;
        require_positive("rate", rate)?;
        require_positive("x_min", x_min)?;
        Ok(Self::ParetoGamma {
            shape,
            rate,
            x_min,
            n: 0,
            sum_log: 0.0,
        })
    }

    pub fn family(&self) -> Family {
        match self {
            Self::NormalKnownVariance { .. } => Family::NormalKnownVariance,
            Self::ExponentialGamma { .. } => Family::ExponentialGamma,
            Self::UniformPareto { .. } => Family::UniformPareto,
            Self::PoissonGamma { .. } => Family::PoissonGamma,
            Self::BinomialBeta { .. } => Family::BinomialBeta,
            Self::NegBinomialBeta { .. } => Family::NegBinomialBeta,
            Self::ParetoGamma { .. } => Family::ParetoGamma,
        }
    }

    /// Number of observations absorbed so far.
    pub fn n_observations(&self) -> u64 {
        match *self {
            Self::NormalKnownVariance { n, .. }
            | Self::ExponentialGamma { n, .. }
            | Self::UniformPareto { n, .. }
            | Self::PoissonGamma { n, .. }
            | Self::BinomialBeta { n, .. }
            | Self::NegBinomialBeta { n, .. }
            | Self::ParetoGamma { n, .. } => n,
        }
    }
}

// ---------------------------------------------------------------------------
// Updating and means
// ---------------------------------------------------------------------------

fn check_count(name: &str, x: f64, min: f64, max: Option<f64>) -> Result<(), Error> {
    let in_range = x >= min && max.is_none_or(|m| x <= m) && x.fract() == 0.0;
    if !x.is_finite() || !in_range {
        return Err(Error::OutOfSupport(format!("{name}: {x}")));
    }
    Ok(())
}

impl ConjugateModel {
    /// Absorbs a batch of observations, validating the family support.
    /// Conjugacy: the returned model is in the same family with the
    /// sufficient statistics advanced.
    pub fn update(&self, data: &[f64]) -> Result<Self, Error> {
        let mut next = self.clone();
        match &mut next {
            Self::NormalKnownVariance { n, sum, .. } => {
                for &x in data {
                    if !x.is_finite() {
                        return Err(Error::OutOfSupport(format!("normal observation: {x}")));
                    }
                    *n += 1;
                    *sum += x;
                }
            }
            Self::ExponentialGamma { n, sum, .. } => {
                for &x in data {
                    if !x.is_finite() || x < 0.0 {
                        return Err(Error::OutOfSupport(format!(
                            "exponential observation must be >= 0: {x}"
                        )));
                    }
                    *n += 1;
                    *sum += x;
                }
            }
            Self::UniformPareto { n, max, .. } => {
                for &x in data {
                    if !x.is_finite() || x < 0.0 {
                        return Err(Error::OutOfSupport(format!(
                            "uniform observation must be >= 0: {x}"
                        )));
                    }
                    *n += 1;
                    *max = max.max(x);
                }
            }
            Self::PoissonGamma { n, sum, .. } => {
                for &x in data {
                    check_count("poisson count", x, 0.0, None)?;
                    *n += 1;
                    *sum += x;
                }
            }
            Self::BinomialBeta { trials, n, sum, .. } => {
                for &x in data {
                    check_count("binomial successes", x, 0.0, Some(*trials as f64))?;
                    *n += 1;
                    *sum += x;
                }
            }
            Self::NegBinomialBeta {
                successes, n, sum, ..
            } => {
                for &x in data {
                    check_count("negative-binomial trials", x, *successes as f64, None)?;
                    *n += 1;
                    *sum += x;
                }
            }
            Self::ParetoGamma { x_min, n, sum_log, .. } => {
                for &x in data {
                    if !x.is_finite() || x < *x_min {
                        return Err(Error::OutOfSupport(format!(
                            "pareto observation must be >= {x_min}: {x}"
                        )));
                    }
                    *n += 1;
                    *sum_log += (x / *x_min).ln();
                }
            }
        }
        Ok(next)
    }

    /// Posterior hyperparameters implied by the absorbed observations.
    pub fn posterior_params(&self) -> PosteriorParams {
        match *self {
            Self::NormalKnownVariance {
                prior_mean,
                prior_var,
                obs_var,
                n,
                sum,
            } => {
                // Precision-weighted combination; reduces to the prior at n = 0.
                let precision = 1.0 / prior_var + n as f64 / obs_var;
                PosteriorParams::Normal {
                    mean: (prior_mean / prior_var + sum / obs_var) / precision,
                    variance: 1.0 / precision,
                }
            }
            Self::ExponentialGamma { shape, rate, n, sum } => PosteriorParams::Gamma {
                shape: shape + n as f64,
                rate: rate + sum,
            },
            Self::UniformPareto { shape, n, max, .. } => PosteriorParams::Pareto {
                shape: shape + n as f64,
                scale: max,
            },
            Self::PoissonGamma { shape, rate, n, sum } => PosteriorParams::Gamma {
                shape: shape + sum,
                rate: rate + n as f64,
            },
            Self::BinomialBeta {
                a, b, trials, n, sum,
            } => PosteriorParams::Beta {
                a: a + sum,
                b: b + (n * trials) as f64 - sum,
            },
            Self::NegBinomialBeta {
                a, b, successes, n, sum,
            } => PosteriorParams::Beta {
                a: a + (n * successes) as f64,
                b: b + sum - (n * successes) as f64,
            },
            Self::ParetoGamma {
                shape, rate, n, sum_log, ..
            } => PosteriorParams::Gamma {
                shape: shape + n as f64,
                rate: rate + sum_log,
            },
        }
    }

    /// Mean of the prior distribution.
    pub fn prior_mean(&self) -> Result<f64, Error> {
        match *self {
            Self::NormalKnownVariance { prior_mean, .. } => Ok(prior_mean),
            Self::ExponentialGamma { shape, rate, .. }
            | Self::PoissonGamma { shape, rate, .. }
            | Self::ParetoGamma { shape, rate, .. } => Ok(shape / rate),
            Self::UniformPareto { shape, scale, .. } => {
                if shape <= 1.0 {
                    return Err(Error::UndefinedMean(
                        "Pareto prior mean needs shape > 1".into(),
                    ));
                }
                Ok(shape * scale / (shape - 1.0))
            }
            Self::BinomialBeta { a, b, .. } | Self::NegBinomialBeta { a, b, .. } => {
                Ok(a / (a + b))
            }
        }
    }

    /// Mean of the posterior distribution.
    pub fn posterior_mean(&self) -> Result<f64, Error> {
        match self.posterior_params() {
            PosteriorParams::Normal { mean, .. } => Ok(mean),
            PosteriorParams::Gamma { shape, rate } => {
                if rate <= 0.0 {
                    return Err(Error::UndefinedMean("gamma posterior rate is zero".into()));
                }
                Ok(shape / rate)
            }
            PosteriorParams::Pareto { shape, scale } => {
                if shape <= 1.0 {
                    return Err(Error::UndefinedMean(
                        "Pareto posterior mean needs shape > 1".into(),
                    ));
                }
                Ok(shape * scale / (shape - 1.0))
            }
            PosteriorParams::Beta { a, b } => Ok(a / (a + b)),
        }
    }

    /// Decomposes the posterior mean into prior and data contributions.
    ///
    /// With no observations the weight is exactly 1 and `data_mean` is
    /// reported as 0 (it carries no weight).
    pub fn mean_decomposition(&self) -> Result<MeanDecomposition, Error> {
        let prior_mean = self.prior_mean()?;
        let posterior_mean = self.posterior_mean()?;
        if self.n_observations() == 0 {
            return Ok(MeanDecomposition {
                weight: 1.0,
                prior_mean,
                data_mean: 0.0,
                posterior_mean,
            });
        }
        let (weight, data_mean) = match *self {
            Self::NormalKnownVariance {
                prior_var,
                obs_var,
                n,
                sum,
                ..
            } => (
                obs_var / (obs_var + n as f64 * prior_var),
                sum / n as f64,
            ),
            Self::ExponentialGamma { rate, n, sum, .. } => {
                if sum <= 0.0 {
                    return Err(Error::UndefinedMean(
                        "exponential data mean needs a positive sample sum".into(),
                    ));
                }
                (rate / (rate + sum), n as f64 / sum)
            }
            Self::UniformPareto { max, .. } => {
                // data_mean is the max statistic; solve the weight from the
                // identity. Degenerate when the prior mean equals the max.
                if (prior_mean - max).abs() <= f64::EPSILON * prior_mean.abs().max(1.0) {
                    return Err(Error::UndefinedMean(
                        "uniform/Pareto decomposition degenerates when the prior mean equals the max statistic"
                            .into(),
                    ));
                }
                ((posterior_mean - max) / (prior_mean - max), max)
            }
            Self::PoissonGamma { rate, n, sum, .. } => {
                (rate / (rate + n as f64), sum / n as f64)
            }
            Self::BinomialBeta {
                a, b, trials, n, sum,
            } => (
                (a + b) / (a + b + (n * trials) as f64),
                sum / (n * trials) as f64,
            ),
            Self::NegBinomialBeta {
                a, b, successes, n, sum,
            } => {
                if sum <= 0.0 {
                    return Err(Error::UndefinedMean(
                        "negative-binomial data mean needs a positive sample sum".into(),
                    ));
                }
                ((a + b) / (a + b + sum), (n * successes) as f64 / sum)
            }
            Self::ParetoGamma { rate, n, sum_log, .. } => {
                if sum_log <= 0.0 {
                    return Err(Error::UndefinedMean(
                        "Pareto data mean needs observations above the lower bound".into(),
                    ));
                }
                (rate / (rate + sum_log), n as f64 / sum_log)
            }
        };
        Ok(MeanDecomposition {
            weight,
            prior_mean,
            data_mean,
            posterior_mean,
        })
    }
}

/// Prior weight of the LGD forecast blend: `1 / (1 + t/T)`.
///
/// This is the normal-family weight with the workout age in units of the
/// mean recovery time; the posterior LGD blend uses exactly this function.
pub fn lgd_blend_weight(t: f64, mean_time: f64) -> Result<f64, Error> {
    if !mean_time.is_finite() || mean_time <= 0.0 {
        return Err(Error::InvalidParameter(
            "mean recovery time must be strictly positive".into(),
        ));
    }
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidParameter(
            "workout age must be non-negative".into(),
        ));
    }
    Ok(1.0 / (1.0 + t / mean_time))
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
