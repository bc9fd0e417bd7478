//! Spike-and-slab signal prior and the scalar Bayesian estimator.
//!
//! Every estimator here works on the stacked scalar channel
//! `ybar = c * x + z`, `z ~ N(0, v)`, where `c` counts how often a sample has
//! been sensed and `v` is the accumulated noise variance. With a
//! Bernoulli-Gaussian prior `x = b * t`, `b ~ Bernoulli(delta)`,
//! `t ~ N(0, sigma_t2)`, the posterior is a two-component mixture and all
//! moments are available in closed form.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::quadrature::{integrate, QuadratureOptions};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PriorKind {
    BernoulliGaussian,
    PureGaussian,
    DegenerateZero,
}

/// Scalar signal law `x = b * t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prior {
    kind: PriorKind,
    delta: f64,
    sigma_t2: f64,
}

/// Stacked scalar channel `ybar = gain * x + N(0, noise_var)`.
///
/// `noise_var = 0` with a positive gain is accepted and treated as the
/// noiseless limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarChannel {
    pub gain: f64,
    pub noise_var: f64,
}

impl ScalarChannel {
    pub fn new(gain: f64, noise_var: f64) -> Result<Self> {
        if !(gain.is_finite() && gain >= 0.0) {
            return Err(Error::input(format!(
                "channel gain must be finite and >= 0, got {gain}"
            )));
        }
        if !(noise_var.is_finite() && noise_var >= 0.0) {
            return Err(Error::input(format!(
                "channel noise variance must be finite and >= 0, got {noise_var}"
            )));
        }
        Ok(Self { gain, noise_var })
    }
}

/// First two posterior moments and the slope of the posterior mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Posterior {
    pub mean: f64,
    pub variance: f64,
    /// `d mean / d ybar`; equals `gain / noise_var * variance`.
    pub derivative: f64,
}

/// Logistic function evaluated without overflow in either tail.
fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl Prior {
    pub fn bernoulli_gaussian(delta: f64, sigma_t2: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::input(format!(
                "sparsity must lie in [0, 1], got {delta}"
            )));
        }
        if !(sigma_t2.is_finite() && sigma_t2 >= 0.0) {
            return Err(Error::input(format!(
                "slab variance must be >= 0, got {sigma_t2}"
            )));
        }
        Ok(Self {
            kind: PriorKind::BernoulliGaussian,
            delta,
            sigma_t2,
        })
    }

    pub fn pure_gaussian(sigma_t2: f64) -> Result<Self> {
        let mut p = Self::bernoulli_gaussian(1.0, sigma_t2)?;
        p.kind = PriorKind::PureGaussian;
        Ok(p)
    }

    pub fn degenerate_zero() -> Self {
        Self {
            kind: PriorKind::DegenerateZero,
            delta: 0.0,
            sigma_t2: 0.0,
        }
    }

    pub fn kind(&self) -> PriorKind {
        self.kind
    }

    /// Probability of a nonzero sample.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn sigma_t2(&self) -> f64 {
        self.sigma_t2
    }

    /// `E[x^2] = delta * sigma_t2`.
    pub fn second_moment(&self) -> f64 {
        self.delta * self.sigma_t2
    }

    fn is_zero(&self) -> bool {
        self.delta == 0.0 || self.sigma_t2 == 0.0
    }

    pub fn sample_signal<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let sd = self.sigma_t2.sqrt();
        (0..n)
            .map(|_| {
                if self.delta > 0.0 && rng.random::<f64>() < self.delta {
                    sd * rng.sample::<f64, _>(StandardNormal)
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Posterior mean, variance and mean slope for one observation.
    pub fn posterior(&self, ybar: f64, ch: ScalarChannel) -> Result<Posterior> {
        if !ybar.is_finite() {
            return Err(Error::input(format!(
                "observation must be finite, got {ybar}"
            )));
        }
        let c = ch.gain;
        if c == 0.0 {
            return Ok(Posterior {
                mean: 0.0,
                variance: self.second_moment(),
                derivative: 0.0,
            });
        }
        if self.is_zero() {
            return Ok(Posterior {
                mean: 0.0,
                variance: 0.0,
                derivative: 0.0,
            });
        }
        let s = self.sigma_t2;
        let v = ch.noise_var;
        if v == 0.0 {
            return Ok(self.noiseless_posterior(ybar, c));
        }

        let total = c * c * s + v;
        let mu = c * s * ybar / total;
        let tau = s * v / total;
        let slope = c * s / total;

        let (pi, pi_c) = if self.delta >= 1.0 {
            (1.0, 0.0)
        } else {
            // log evidence ratio slab : spike
            let log_odds = self.delta.ln() - (-self.delta).ln_1p()
                + 0.5 * (v / total).ln()
                + 0.5 * ybar * ybar * (c * c * s) / (v * total);
            (sigmoid(log_odds), sigmoid(-log_odds))
        };

        let mix = pi * pi_c;
        Ok(Posterior {
            mean: pi * mu,
            variance: pi * tau + mix * mu * mu,
            derivative: pi * slope + mix * mu * ybar * (c * c * s) / (v * total),
        })
    }

    fn noiseless_posterior(&self, ybar: f64, c: f64) -> Posterior {
        // x = ybar / c exactly; the slab explains any nonzero observation.
        let active = ybar != 0.0 || self.delta >= 1.0;
        if active {
            Posterior {
                mean: ybar / c,
                variance: 0.0,
                derivative: 1.0 / c,
            }
        } else {
            Posterior {
                mean: 0.0,
                variance: 0.0,
                derivative: 0.0,
            }
        }
    }

    pub fn posterior_mean(&self, ybar: f64, ch: ScalarChannel) -> Result<f64> {
        self.posterior(ybar, ch).map(|p| p.mean)
    }

    pub fn posterior_variance(&self, ybar: f64, ch: ScalarChannel) -> Result<f64> {
        self.posterior(ybar, ch).map(|p| p.variance)
    }

    pub fn posterior_mean_derivative(&self, ybar: f64, ch: ScalarChannel) -> Result<f64> {
        self.posterior(ybar, ch).map(|p| p.derivative)
    }

    /// Expected squared error of the posterior-mean estimator on `ch`,
    /// `E_ybar[Var(x | ybar)]`, integrated separately over the spike and
    /// slab components of the marginal of `ybar`.
    pub fn scalar_mmse(&self, ch: ScalarChannel) -> Result<f64> {
        if ch.gain <= 0.0 {
            return Err(Error::input("scalar MMSE requires a positive channel gain"));
        }
        if self.is_zero() || ch.noise_var == 0.0 {
            return Ok(0.0);
        }
        let c = ch.gain;
        let s = self.sigma_t2;
        let v = ch.noise_var;
        if self.delta >= 1.0 {
            return Ok(s * v / (c * c * s + v));
        }

        let opts = QuadratureOptions::default();
        let branch = |sd: f64| -> Result<f64> {
            let f = |u: f64| {
                let density = (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
                // inputs are finite by construction
                density
                    * self
                        .posterior(sd * u, ch)
                        .map(|p| p.variance)
                        .unwrap_or(f64::NAN)
            };
            let lower = integrate(f, -12.0, 0.0, opts)?;
            let upper = integrate(f, 0.0, 12.0, opts)?;
            Ok(lower.value + upper.value)
        };
        let slab = branch((c * c * s + v).sqrt())?;
        let spike = branch(v.sqrt())?;
        Ok(self.delta * slab + (1.0 - self.delta) * spike)
    }
}
