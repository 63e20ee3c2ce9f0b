use rand::Rng;
use rand_distr::{Beta, Distribution as _, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Post-sampling clamp. Draws outside `[lo, hi]` are moved to the nearest bound
/// and counted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClampRange {
    pub lo: f64,
    pub hi: f64,
}

impl ClampRange {
    pub fn at_least(lo: f64) -> Self {
        ClampRange {
            lo,
            hi: f64::INFINITY,
        }
    }
}

/// Parameters of a sampleable distribution, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Distribution {
    Constant {
        value: f64,
    },
    Normal {
        mean: f64,
        sd: f64,
    },
    /// Either log-space (`log_mean`, `log_sd`) or natural-space (`mean`, `sd`)
    /// parameters, not both.
    Lognormal {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        log_mean: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        log_sd: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mean: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sd: Option<f64>,
    },
    Beta {
        a: f64,
        b: f64,
    },
    /// Beta(a, b) mapped affinely onto `[lo, hi]`.
    ScaledBeta {
        a: f64,
        b: f64,
        lo: f64,
        hi: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    #[serde(flatten)]
    pub dist: Distribution,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clamp: Option<ClampRange>,
}

/// One draw and whether the clamp moved it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draw {
    pub value: f64,
    pub clamped: bool,
}

impl From<Distribution> for DistributionSpec {
    fn from(dist: Distribution) -> Self {
        DistributionSpec { dist, clamp: None }
    }
}

fn finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be finite, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<()> {
    finite(field, v)?;
    if v >= 0.0 {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be >= 0, got {v}")))
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    finite(field, v)?;
    if v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be > 0, got {v}")))
    }
}

/// Log-space parameters from a natural-space mean and standard deviation.
pub(crate) fn log_params_from_natural(mean: f64, sd: f64) -> Result<(f64, f64)> {
    positive("mean", mean)?;
    non_negative("sd", sd)?;
    let cv = sd / mean;
    let log_var = cv.mul_add(cv, 1.0).ln();
    Ok((mean.ln() - 0.5 * log_var, log_var.sqrt()))
}

/// Lognormal with natural-space mean `natural_mean` and standard deviation
/// `natural_sd`, expressed in log-space parameters.
pub fn lognormal_from_natural_moments(natural_mean: f64, natural_sd: f64) -> Result<DistributionSpec> {
    let (log_mean, log_sd) = log_params_from_natural(natural_mean, natural_sd)?;
    Ok(DistributionSpec::lognormal(log_mean, log_sd))
}

impl DistributionSpec {
    pub fn constant(value: f64) -> Self {
        Distribution::Constant { value }.into()
    }

    pub fn normal(mean: f64, sd: f64) -> Self {
        Distribution::Normal { mean, sd }.into()
    }

    pub fn lognormal(log_mean: f64, log_sd: f64) -> Self {
        Distribution::Lognormal {
            log_mean: Some(log_mean),
            log_sd: Some(log_sd),
            mean: None,
            sd: None,
        }
        .into()
    }

    pub fn beta(a: f64, b: f64) -> Self {
        Distribution::Beta { a, b }.into()
    }

    pub fn scaled_beta(a: f64, b: f64, lo: f64, hi: f64) -> Self {
        Distribution::ScaledBeta { a, b, lo, hi }.into()
    }

    pub fn with_clamp(mut self, clamp: ClampRange) -> Self {
        self.clamp = Some(clamp);
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.dist {
            Distribution::Constant { value } => finite("value", value)?,
            Distribution::Normal { mean, sd } => {
                finite("mean", mean)?;
                non_negative("sd", sd)?;
            }
            Distribution::Lognormal { .. } => {
                self.log_params()?;
            }
            Distribution::Beta { a, b } => {
                positive("a", a)?;
                positive("b", b)?;
            }
            Distribution::ScaledBeta { a, b, lo, hi } => {
                positive("a", a)?;
                positive("b", b)?;
                finite("lo", lo)?;
                finite("hi", hi)?;
                if lo > hi {
                    return Err(Error::config("lo", format!("must be <= hi ({lo} > {hi})")));
                }
            }
        }
        if let Some(ClampRange { lo, hi }) = self.clamp {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(Error::config(
                    "clamp",
                    format!("requires lo <= hi, got [{lo}, {hi}]"),
                ));
            }
        }
        Ok(())
    }

    /// `(mu, sigma)` of a lognormal spec, converting natural-space parameters if needed.
    pub fn log_params(&self) -> Result<(f64, f64)> {
        let Distribution::Lognormal {
            log_mean,
            log_sd,
            mean,
            sd,
        } = self.dist
        else {
            return Err(Error::Usage("not a lognormal distribution".into()));
        };
        match (log_mean, log_sd, mean, sd) {
            (Some(mu), Some(sigma), None, None) => {
                finite("log_mean", mu)?;
                non_negative("log_sd", sigma)?;
                Ok((mu, sigma))
            }
            (None, None, Some(m), Some(s)) => log_params_from_natural(m, s),
            _ => Err(Error::config(
                "kind",
                "lognormal needs exactly one of {log_mean, log_sd} or {mean, sd}",
            )),
        }
    }

    /// Draws one value. Normal and lognormal draws consume exactly one standard
    /// normal variate, so equal streams give common random numbers across
    /// parameter changes.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Draw {
        let raw = match self.dist {
            Distribution::Constant { value } => value,
            Distribution::Normal { mean, sd } => {
                let z: f64 = rng.sample(StandardNormal);
                sd.mul_add(z, mean)
            }
            Distribution::Lognormal { .. } => {
                let (mu, sigma) = self.log_params().expect("validated lognormal");
                let z: f64 = rng.sample(StandardNormal);
                sigma.mul_add(z, mu).exp()
            }
            Distribution::Beta { a, b } => Beta::new(a, b).expect("validated beta").sample(rng),
            Distribution::ScaledBeta { a, b, lo, hi } => {
                let x: f64 = Beta::new(a, b).expect("validated beta").sample(rng);
                (lo + (hi - lo) * x).clamp(lo, hi)
            }
        };
        match self.clamp {
            Some(ClampRange { lo, hi }) => {
                let value = raw.clamp(lo, hi);
                Draw {
                    value,
                    clamped: value != raw,
                }
            }
            None => Draw {
                value: raw,
                clamped: false,
            },
        }
    }

    /// Analytic mean of the unclamped distribution.
    pub fn mean(&self) -> Result<f64> {
        Ok(match self.dist {
            Distribution::Constant { value } => value,
            Distribution::Normal { mean, .. } => mean,
            Distribution::Lognormal { .. } => {
                let (mu, sigma) = self.log_params()?;
                (mu + 0.5 * sigma * sigma).exp()
            }
            Distribution::Beta { a, b } => a / (a + b),
            Distribution::ScaledBeta { a, b, lo, hi } => lo + (hi - lo) * a / (a + b),
        })
    }

    /// Analytic standard deviation of the unclamped distribution.
    pub fn sd(&self) -> Result<f64> {
        Ok(match self.dist {
            Distribution::Constant { .. } => 0.0,
            Distribution::Normal { sd, .. } => sd,
            Distribution::Lognormal { .. } => {
                let (mu, sigma) = self.log_params()?;
                let s2 = sigma * sigma;
                (s2.exp_m1() * (2.0 * mu + s2).exp()).sqrt()
            }
            Distribution::Beta { a, b } => beta_sd(a, b),
            Distribution::ScaledBeta { a, b, lo, hi } => (hi - lo) * beta_sd(a, b),
        })
    }

    /// Same shape moved to a new mean: location shift for constant, normal and
    /// scaled-beta; for lognormal the log-sd (or the natural sd, for
    /// natural-space specs) is kept.
    pub fn with_mean(&self, target: f64) -> Result<DistributionSpec> {
        let dist = match self.dist {
            Distribution::Constant { .. } => Distribution::Constant { value: target },
            Distribution::Normal { sd, .. } => Distribution::Normal { mean: target, sd },
            Distribution::Lognormal {
                log_sd: Some(sigma),
                ..
            } => {
                positive("mean", target)?;
                Distribution::Lognormal {
                    log_mean: Some(target.ln() - 0.5 * sigma * sigma),
                    log_sd: Some(sigma),
                    mean: None,
                    sd: None,
                }
            }
            Distribution::Lognormal { sd, .. } => Distribution::Lognormal {
                log_mean: None,
                log_sd: None,
                mean: Some(target),
                sd,
            },
            Distribution::ScaledBeta { a, b, lo, hi } => {
                let shift = target - self.mean()?;
                Distribution::ScaledBeta {
                    a,
                    b,
                    lo: lo + shift,
                    hi: hi + shift,
                }
            }
            Distribution::Beta { .. } => {
                return Err(Error::Usage(
                    "a beta distribution has fixed support; use scaled-beta to move its mean".into(),
                ))
            }
        };
        let spec = DistributionSpec {
            dist,
            clamp: self.clamp,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.dist, Distribution::Constant { .. })
    }
}

fn beta_sd(a: f64, b: f64) -> f64 {
    let s = a + b;
    (a * b / (s * s * (s + 1.0))).sqrt()
}
