//! Large-system characterisation of OAS.
//!
//! In the large-system limit every sensed sample sees an independent scalar
//! Gaussian channel per subframe. Stacking those outputs per sample gives the
//! stacked decoupled system, which this module simulates directly on a
//! population of scalar samples. The effective noise of the i.i.d. ensemble
//! comes from the replica-symmetric fixed point
//! `v = s2 + rho * mmse(v)`; the orthogonal ensemble decouples exactly and
//! sees only the measurement noise.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::engine::DistortionMode;
use crate::montecarlo::{derive_seed, TrialRng};
use crate::par;
use crate::priors::{Prior, ScalarChannel};
use crate::sensing::{adapt_threshold, adapt_topk};
use crate::{Error, Result};
use rand::SeedableRng;

const FP_REL_TOL: f64 = 1e-10;
const FP_MAX_ITER: usize = 10_000;
const CHUNK: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ensemble {
    /// Haar projections with worst-case top-`K` selection; no interference.
    Orthogonal,
    /// i.i.d. projections with threshold selection and fixed-point noise.
    IidGaussian,
}

/// How the per-observation noise of the i.i.d. ensemble is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubframeNoise {
    /// Fixed point at the subframe noise `M * sigma2` and the subframe load.
    #[default]
    SubframeFixedPoint,
    /// `M` times the fixed point at the full-duration noise `sigma2`.
    ScaledFullDuration,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoupledConfig {
    /// Inverse load `N / K`.
    pub rho: f64,
    /// Number of subframes.
    pub m: usize,
    pub sigma2: f64,
    /// Distortion threshold for the i.i.d. ensemble.
    pub d_th: f64,
    /// Size of the simulated sample population.
    pub n_samples: usize,
    pub ensemble: Ensemble,
    pub distortion_mode: DistortionMode,
    pub subframe_noise: SubframeNoise,
}

impl DecoupledConfig {
    /// Number of sensors the population corresponds to, `n_samples / rho`.
    pub fn effective_sensors(&self) -> f64 {
        self.n_samples as f64 / self.rho
    }

    fn validate(&self) -> Result<()> {
        if !(self.rho.is_finite() && self.rho > 0.0) {
            return Err(Error::config(format!(
                "inverse load must be positive, got {}",
                self.rho
            )));
        }
        if self.m == 0 || self.n_samples == 0 {
            return Err(Error::config(
                "M and the sample population must be positive",
            ));
        }
        if !(self.sigma2.is_finite() && self.sigma2 >= 0.0) {
            return Err(Error::config(format!(
                "noise variance must be >= 0, got {}",
                self.sigma2
            )));
        }
        if self.effective_sensors() < 1.0 {
            return Err(Error::config(format!(
                "population of {} samples at rho = {} leaves fewer than one sensor",
                self.n_samples, self.rho
            )));
        }
        if self.ensemble == Ensemble::IidGaussian && !(self.d_th > 0.0) {
            return Err(Error::config(format!(
                "threshold must be positive, got {}",
                self.d_th
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveNoise {
    pub variance: f64,
    pub iterations: usize,
}

/// Fixed point of `v = sigma2 + rho * mmse(prior, gain = 1, noise_var = v)`.
///
/// Starts from `sigma2 + rho * E x^2` (the no-estimation upper end) and
/// iterates; the step is damped by one half once the residual changes sign.
pub fn effective_noise_fixed_point(prior: &Prior, rho: f64, sigma2: f64) -> Result<EffectiveNoise> {
    if !(rho.is_finite() && rho >= 0.0) {
        return Err(Error::input(format!(
            "inverse load must be >= 0, got {rho}"
        )));
    }
    if !(sigma2.is_finite() && sigma2 >= 0.0) {
        return Err(Error::input(format!(
            "noise variance must be >= 0, got {sigma2}"
        )));
    }
    if rho == 0.0 || prior.second_moment() == 0.0 {
        return Ok(EffectiveNoise {
            variance: sigma2,
            iterations: 0,
        });
    }
    if sigma2 == 0.0 {
        return Err(Error::input(
            "the fixed point needs a positive noise variance when rho > 0",
        ));
    }

    let map = |v: f64| -> Result<f64> {
        Ok(sigma2 + rho * prior.scalar_mmse(ScalarChannel::new(1.0, v)?)?)
    };
    let mut v = sigma2 + rho * prior.second_moment();
    let mut damping = 1.0;
    let mut last_residual = 0.0;
    for it in 1..=FP_MAX_ITER {
        let residual = map(v)? - v;
        if residual * last_residual < 0.0 {
            damping = 0.5;
        }
        last_residual = residual;
        let next = (v + damping * residual).max(sigma2);
        if (next - v).abs() <= FP_REL_TOL * next {
            return Ok(EffectiveNoise {
                variance: next,
                iterations: it,
            });
        }
        v = next;
    }
    let residual = (map(v)? - v).abs();
    Err(Error::FixedPoint {
        iterations: FP_MAX_ITER,
        value: v,
        residual,
    })
}

/// MMSE of non-adaptive (`M = 1`) sensing at inverse load `rho`.
pub fn nonadaptive_mmse(prior: &Prior, rho: f64, sigma2: f64) -> Result<f64> {
    let v = effective_noise_fixed_point(prior, rho, sigma2)?.variance;
    if v == 0.0 {
        return Ok(0.0);
    }
    prior.scalar_mmse(ScalarChannel::new(1.0, v)?)
}

/// Per-subframe outcome of [`decoupled_oas_simulate`].
#[derive(Debug, Clone, PartialEq)]
pub struct DecoupledRun {
    pub mse: Vec<f64>,
    /// Monte Carlo standard error of each `mse` entry over the population.
    pub stderr: Vec<f64>,
    /// Number of samples sensed in each subframe.
    pub sensed: Vec<usize>,
    /// Per-observation noise variance used in each subframe.
    pub observation_noise: Vec<f64>,
}

struct Chunk {
    x: Vec<f64>,
    ybar: Vec<f64>,
    acc: Vec<f64>,
    count: Vec<u32>,
    recoveries: Vec<f64>,
    distortions: Vec<f64>,
    rng: TrialRng,
}

impl Chunk {
    fn sense(
        mut self,
        mask: &[bool],
        noise_var: f64,
        prior: &Prior,
        mode: DistortionMode,
    ) -> Result<Self> {
        let sd = noise_var.sqrt();
        for i in 0..self.x.len() {
            if !mask[i] {
                continue;
            }
            let z: f64 = self.rng.sample(StandardNormal);
            self.ybar[i] += self.x[i] + sd * z;
            self.acc[i] += noise_var;
            self.count[i] += 1;
            let post = prior.posterior(
                self.ybar[i],
                ScalarChannel::new(self.count[i] as f64, self.acc[i])?,
            )?;
            self.recoveries[i] = post.mean;
            self.distortions[i] = match mode {
                DistortionMode::PosteriorDerivative => post.derivative,
                DistortionMode::ExactVariance => post.variance,
            };
        }
        Ok(self)
    }

    fn squared_errors(&self) -> impl Iterator<Item = f64> + '_ {
        self.x
            .iter()
            .zip(&self.recoveries)
            .map(|(a, b)| (a - b) * (a - b))
    }
}

/// Simulate OAS over the stacked decoupled system.
///
/// Each subframe selects a sub-population (top-`K_eff` for
/// [`Ensemble::Orthogonal`], `d >= d_th` for [`Ensemble::IidGaussian`]) and
/// gives every selected sample a fresh observation `x + N(0, w)`. For the
/// orthogonal ensemble `w = M * sigma2`; for the i.i.d. one `w` is given by
/// [`SubframeNoise`] at the subframe load `|selected| / K_eff`. The population is split into
/// fixed-size chunks with their own streams, so the output does not depend on
/// the number of workers.
pub fn decoupled_oas_simulate<R: Rng + ?Sized>(
    cfg: &DecoupledConfig,
    prior: &Prior,
    rng: &mut R,
) -> Result<DecoupledRun> {
    cfg.validate()?;
    let base: u64 = rng.random();
    let n = cfg.n_samples;
    let k_eff = cfg.effective_sensors();
    let top_k = (k_eff.round() as usize).clamp(1, n);

    let n_chunks = n.div_ceil(CHUNK);
    let mut chunks: Vec<Chunk> = (0..n_chunks)
        .map(|c| {
            let len = CHUNK.min(n - c * CHUNK);
            let mut rng = TrialRng::seed_from_u64(derive_seed(base, &[c as u64]));
            let x = prior.sample_signal(len, &mut rng);
            Chunk {
                x,
                ybar: vec![0.0; len],
                acc: vec![0.0; len],
                count: vec![0; len],
                recoveries: vec![0.0; len],
                distortions: vec![f64::INFINITY; len],
                rng,
            }
        })
        .collect();

    let mut out = DecoupledRun {
        mse: Vec::with_capacity(cfg.m),
        stderr: Vec::with_capacity(cfg.m),
        sensed: Vec::with_capacity(cfg.m),
        observation_noise: Vec::with_capacity(cfg.m),
    };

    for _ in 0..cfg.m {
        let distortions: Vec<f64> = chunks
            .iter()
            .flat_map(|c| c.distortions.iter().copied())
            .collect();
        let selection = match cfg.ensemble {
            Ensemble::Orthogonal => adapt_topk(&distortions, top_k)?,
            Ensemble::IidGaussian => adapt_threshold(&distortions, cfg.d_th)?,
        };
        let m = cfg.m as f64;
        let load = selection.len() as f64 / k_eff;
        let noise_var = match (cfg.ensemble, cfg.subframe_noise) {
            (Ensemble::Orthogonal, _) => m * cfg.sigma2,
            (Ensemble::IidGaussian, SubframeNoise::SubframeFixedPoint) => {
                effective_noise_fixed_point(prior, load, m * cfg.sigma2)?.variance
            }
            (Ensemble::IidGaussian, SubframeNoise::ScaledFullDuration) => {
                m * effective_noise_fixed_point(prior, load, cfg.sigma2)?.variance
            }
        };

        let mut mask = vec![false; n];
        for &i in selection.indices() {
            mask[i] = true;
        }
        if !selection.is_empty() {
            let masked: Vec<(Chunk, Vec<bool>)> = chunks
                .into_iter()
                .enumerate()
                .map(|(c, chunk)| {
                    let lo = c * CHUNK;
                    let m = mask[lo..lo + chunk.x.len()].to_vec();
                    (chunk, m)
                })
                .collect();
            chunks = par::map_vec(masked, |(chunk, m)| {
                chunk.sense(&m, noise_var, prior, cfg.distortion_mode)
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        }

        let sq: Vec<f64> = chunks.iter().flat_map(|c| c.squared_errors()).collect();
        let mean = sq.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let ss: f64 = sq.iter().map(|e| (e - mean) * (e - mean)).sum();
            (ss / (n - 1) as f64 / n as f64).sqrt()
        } else {
            0.0
        };
        out.mse.push(mean);
        out.stderr.push(stderr);
        out.sensed.push(selection.len());
        out.observation_noise.push(noise_var);
    }
    Ok(out)
}
