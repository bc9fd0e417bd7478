//! Sequential OAS loops.
//!
//! Both algorithms keep a per-sample stacked observation `ybar_n`, a sensing
//! count `c_n` and an accumulated noise variance, so the recovery of every
//! sample reduces to the scalar estimator in [`crate::priors`] on the channel
//! `(gain = c_n, noise_var = acc_n)`. A trajectory is inherently sequential:
//! the selection in subframe `m` depends on the distortions after `m - 1`.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::priors::{Prior, ScalarChannel};
use crate::sensing::{adapt_threshold, adapt_topk, haar_orthogonal, iid_gaussian, SelectionSet};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Haar-orthogonal projections, exact decoupling by the transpose.
    Orthogonal,
    /// i.i.d. Gaussian projections, matched-filter decoupling.
    MatchedFilter,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Adaptation {
    /// Sense the `k` samples with the largest distortion.
    TopK,
    /// Sense every sample whose distortion is at least the threshold.
    Threshold(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistortionMode {
    /// Slope of the posterior mean with respect to the stacked observation.
    #[default]
    PosteriorDerivative,
    /// Posterior variance.
    ExactVariance,
}

/// Signal power assumed for the interference term of the matched filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceUpdate {
    /// `E x^2 = delta * sigma_t2`.
    #[default]
    SignalSecondMoment,
    /// `sigma_t2`, ignoring sparsity.
    SlabVariance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingConfig {
    /// Number of samples `N`.
    pub n: usize,
    /// Number of sensors `K`.
    pub k: usize,
    /// Number of subframes `M`.
    pub m: usize,
    /// Noise variance over the full sensing duration.
    pub sigma2: f64,
    pub adaptation: Adaptation,
    pub distortion_mode: DistortionMode,
    pub variance_update: VarianceUpdate,
}

impl SensingConfig {
    pub fn new(n: usize, k: usize, m: usize, sigma2: f64, adaptation: Adaptation) -> Self {
        Self {
            n,
            k,
            m,
            sigma2,
            adaptation,
            distortion_mode: DistortionMode::default(),
            variance_update: VarianceUpdate::default(),
        }
    }

    pub fn with_distortion_mode(mut self, mode: DistortionMode) -> Self {
        self.distortion_mode = mode;
        self
    }

    pub fn with_variance_update(mut self, update: VarianceUpdate) -> Self {
        self.variance_update = update;
        self
    }

    /// Noise variance of a single subframe, `M * sigma2`.
    pub fn subframe_noise_var(&self) -> f64 {
        self.m as f64 * self.sigma2
    }

    fn validate(&self, algorithm: Algorithm) -> Result<()> {
        if self.n == 0 || self.k == 0 || self.m == 0 {
            return Err(Error::config("N, K and M must all be positive"));
        }
        if !(self.sigma2.is_finite() && self.sigma2 >= 0.0) {
            return Err(Error::config(format!(
                "noise variance must be >= 0, got {}",
                self.sigma2
            )));
        }
        if algorithm == Algorithm::Orthogonal && self.k > self.n {
            return Err(Error::config(format!(
                "orthogonal sensing needs K <= N (K = {}, N = {})",
                self.k, self.n
            )));
        }
        if let Adaptation::Threshold(d) = self.adaptation {
            if !(d > 0.0) {
                return Err(Error::config(format!(
                    "threshold must be positive, got {d}"
                )));
            }
        }
        Ok(())
    }
}

/// Per-sample accumulated state of the stacked decoupled system.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedState {
    pub ybar: Vec<f64>,
    pub count: Vec<u32>,
    pub noise_var_acc: Vec<f64>,
}

impl StackedState {
    pub fn new(n: usize) -> Self {
        Self {
            ybar: vec![0.0; n],
            count: vec![0; n],
            noise_var_acc: vec![0.0; n],
        }
    }

    pub fn channel(&self, idx: usize) -> ScalarChannel {
        ScalarChannel {
            gain: self.count[idx] as f64,
            noise_var: self.noise_var_acc[idx],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubframeRecord {
    pub selection: SelectionSet,
    pub recoveries: Vec<f64>,
    pub distortions: Vec<f64>,
    pub mse: f64,
    /// Stacked state after this subframe's update.
    pub state: StackedState,
    /// `|M_m| / K`.
    pub load: f64,
    /// Squared column norms of the selected projections, aligned with
    /// `selection`; empty for orthogonal sensing where every norm is one.
    pub column_norms2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub signal: Vec<f64>,
    pub subframes: Vec<SubframeRecord>,
    pub recoveries: Vec<f64>,
    /// Subframe (1-based) at which the selection came back empty.
    pub early_stop: Option<usize>,
}

impl Trajectory {
    pub fn final_mse(&self) -> f64 {
        mean_squared_error(&self.signal, &self.recoveries)
    }

    /// MSE after each of the `m` subframes, repeating the frozen value after
    /// an early stop.
    pub fn mse_per_subframe(&self, m: usize) -> Vec<f64> {
        let frozen = self.final_mse();
        (0..m)
            .map(|i| self.subframes.get(i).map_or(frozen, |s| s.mse))
            .collect()
    }
}

pub fn mean_squared_error(x: &[f64], r: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), r.len());
    x.iter().zip(r).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / x.len() as f64
}

struct Estimates {
    recoveries: Vec<f64>,
    distortions: Vec<f64>,
}

impl Estimates {
    fn new(n: usize) -> Self {
        Self {
            recoveries: vec![0.0; n],
            distortions: vec![f64::INFINITY; n],
        }
    }

    fn refresh(
        &mut self,
        prior: &Prior,
        state: &StackedState,
        sel: &SelectionSet,
        mode: DistortionMode,
    ) -> Result<()> {
        for &j in sel.indices() {
            let post = prior.posterior(state.ybar[j], state.channel(j))?;
            self.recoveries[j] = post.mean;
            self.distortions[j] = match mode {
                DistortionMode::PosteriorDerivative => post.derivative,
                DistortionMode::ExactVariance => post.variance,
            };
        }
        Ok(())
    }
}

fn select(cfg: &SensingConfig, distortions: &[f64], cap: Option<usize>) -> Result<SelectionSet> {
    match cfg.adaptation {
        Adaptation::TopK => adapt_topk(distortions, cfg.k),
        Adaptation::Threshold(d_th) => {
            let above = adapt_threshold(distortions, d_th)?;
            match cap {
                Some(k) if above.len() > k => {
                    let masked: Vec<f64> = distortions
                        .iter()
                        .enumerate()
                        .map(|(i, &d)| {
                            if above.contains(i) {
                                d
                            } else {
                                f64::NEG_INFINITY
                            }
                        })
                        .collect();
                    adapt_topk(&masked, k)
                }
                _ => Ok(above),
            }
        }
    }
}

fn check_signal(cfg: &SensingConfig, x: &[f64]) -> Result<()> {
    if x.len() != cfg.n {
        return Err(Error::input(format!(
            "signal has length {}, expected {}",
            x.len(),
            cfg.n
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("signal contains non-finite entries"));
    }
    Ok(())
}

fn noise_vector<R: Rng + ?Sized>(k: usize, var: f64, rng: &mut R) -> DVector<f64> {
    let sd = var.sqrt();
    DVector::from_fn(k, |_, _| sd * rng.sample::<f64, _>(StandardNormal))
}

/// OAS via orthogonal observations.
///
/// Each subframe draws a fresh `K x K` Haar matrix, assigns its columns to the
/// selected samples in ascending index order, and decouples the observation
/// exactly with the transpose. With threshold adaptation at most `K` samples
/// are sensed and only the first `|M_m|` Haar columns are used.
pub fn run_orthogonal<R: Rng + ?Sized>(
    cfg: &SensingConfig,
    prior: &Prior,
    x: &[f64],
    rng: &mut R,
) -> Result<Trajectory> {
    cfg.validate(Algorithm::Orthogonal)?;
    check_signal(cfg, x)?;
    let n = cfg.n;
    let k = cfg.k;
    let noise_var = cfg.subframe_noise_var();

    let mut state = StackedState::new(n);
    let mut est = Estimates::new(n);
    let mut subframes = Vec::with_capacity(cfg.m);
    let mut early_stop = None;

    for m in 1..=cfg.m {
        let sel = select(cfg, &est.distortions, Some(k))?;
        if sel.is_empty() {
            early_stop = Some(m);
            break;
        }
        let u = haar_orthogonal(k, rng);
        let z = noise_vector(k, noise_var, rng);

        let mut y = z;
        for (col, &j) in sel.indices().iter().enumerate() {
            y.axpy(x[j], &u.column(col), 1.0);
        }
        for (col, &j) in sel.indices().iter().enumerate() {
            state.ybar[j] += u.column(col).dot(&y);
            state.count[j] += 1;
            state.noise_var_acc[j] += noise_var;
        }
        est.refresh(prior, &state, &sel, cfg.distortion_mode)?;

        subframes.push(SubframeRecord {
            mse: mean_squared_error(x, &est.recoveries),
            load: sel.len() as f64 / k as f64,
            selection: sel,
            recoveries: est.recoveries.clone(),
            distortions: est.distortions.clone(),
            state: state.clone(),
            column_norms2: Vec::new(),
        });
    }

    Ok(Trajectory {
        signal: x.to_vec(),
        subframes,
        recoveries: est.recoveries,
        early_stop,
    })
}

/// OAS via matched filtering.
///
/// Each subframe draws an i.i.d. `N(0, 1/K)` matrix and senses the selected
/// columns. The decoupled symbol of sample `n` is `a_n^T y / |a_n|^2`; the
/// other sensed samples are treated as Gaussian interference of variance
/// `rho_m * P + M * sigma2`, where `rho_m = |M_m| / K` and `P` is picked by
/// [`VarianceUpdate`]. An empty selection stops the loop and freezes the
/// estimates.
pub fn run_matched_filter<R: Rng + ?Sized>(
    cfg: &SensingConfig,
    prior: &Prior,
    x: &[f64],
    rng: &mut R,
) -> Result<Trajectory> {
    cfg.validate(Algorithm::MatchedFilter)?;
    check_signal(cfg, x)?;
    let n = cfg.n;
    let k = cfg.k;
    let noise_var = cfg.subframe_noise_var();
    let power = match cfg.variance_update {
        VarianceUpdate::SignalSecondMoment => prior.second_moment(),
        VarianceUpdate::SlabVariance => prior.sigma_t2(),
    };

    let mut state = StackedState::new(n);
    let mut est = Estimates::new(n);
    let mut subframes = Vec::with_capacity(cfg.m);
    let mut early_stop = None;

    for m in 1..=cfg.m {
        let sel = select(cfg, &est.distortions, None)?;
        if sel.is_empty() {
            early_stop = Some(m);
            break;
        }
        let a = iid_gaussian(k, n, rng);
        let z = noise_vector(k, noise_var, rng);
        let load = sel.len() as f64 / k as f64;
        let interference = load * power + noise_var;

        let mut y = z;
        for &j in sel.indices() {
            y.axpy(x[j], &a.column(j), 1.0);
        }
        let mut norms2 = Vec::with_capacity(sel.len());
        for &j in sel.indices() {
            let col = a.column(j);
            let norm2 = col.norm_squared();
            state.ybar[j] += col.dot(&y) / norm2;
            state.count[j] += 1;
            state.noise_var_acc[j] += interference / norm2;
            norms2.push(norm2);
        }
        est.refresh(prior, &state, &sel, cfg.distortion_mode)?;

        subframes.push(SubframeRecord {
            mse: mean_squared_error(x, &est.recoveries),
            load,
            selection: sel,
            recoveries: est.recoveries.clone(),
            distortions: est.distortions.clone(),
            state: state.clone(),
            column_norms2: norms2,
        });
    }

    Ok(Trajectory {
        signal: x.to_vec(),
        subframes,
        recoveries: est.recoveries,
        early_stop,
    })
}

pub fn run<R: Rng + ?Sized>(
    algorithm: Algorithm,
    cfg: &SensingConfig,
    prior: &Prior,
    x: &[f64],
    rng: &mut R,
) -> Result<Trajectory> {
    match algorithm {
        Algorithm::Orthogonal => run_orthogonal(cfg, prior, x, rng),
        Algorithm::MatchedFilter => run_matched_filter(cfg, prior, x, rng),
    }
}

/// Single-subframe sensing (`M = 1`), the non-adaptive reference.
pub fn run_nonadaptive<R: Rng + ?Sized>(
    algorithm: Algorithm,
    cfg: &SensingConfig,
    prior: &Prior,
    x: &[f64],
    rng: &mut R,
) -> Result<Trajectory> {
    let cfg = SensingConfig { m: 1, ..*cfg };
    run(algorithm, &cfg, prior, x, rng)
}
