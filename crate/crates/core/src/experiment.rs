//! Experiment sweeps: spec files, Monte Carlo aggregation and CSV output.
//!
//! A spec is a flat TOML table. Keys missing from the file take the defaults
//! of the chosen scenario; unknown keys are rejected.
//!
//! ```toml
//! scenario = "fig3-alg2"
//! rho_list = [1.25, 2.0, 4.0]
//! m_list = [12]
//! trials = 100
//! master_seed = 7
//! baselines = ["lasso", "mmse-bound"]
//! ```
//!
//! Seeds: the signal of trial `t` at inverse-load index `r` is drawn from
//! `derive_seed(master, [0, r, t])`, so every `M` and every baseline at the
//! same load sees the same signals. The sensing stream of the engine is
//! `derive_seed(master, [1, r, mi, t])` with `mi` the index into `m_list`, and
//! the LASSO baseline draws its matrix and noise from
//! `derive_seed(master, [2, r, t])`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{
    decoupled_oas_simulate, nonadaptive_mmse, DecoupledConfig, Ensemble, SubframeNoise,
};
use crate::baselines::{default_lambda_grid, lasso_oracle_lambda};
use crate::engine::{self, Adaptation, Algorithm, DistortionMode, SensingConfig, VarianceUpdate};
use crate::montecarlo::{run_trials, trial_rng, TrialStats};
use crate::priors::Prior;
use crate::sensing::{db_to_linear, iid_gaussian};
use crate::{Error, Result};

pub const CSV_HEADER: &str =
    "scenario,algorithm,rho,m,subframe,mse_mean,mse_stderr,trials,seed,wall_time_ms";

const STREAM_SIGNAL: u64 = 0;
const STREAM_ENGINE: u64 = 1;
const STREAM_LASSO: u64 = 2;

const LASSO_TOL: f64 = 1e-6;
const LASSO_MAX_ITER: usize = 5_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Fig1Decoupled,
    Fig2Alg1,
    Fig3Alg2,
    Custom,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Fig1Decoupled => "fig1-decoupled",
            Scenario::Fig2Alg1 => "fig2-alg1",
            Scenario::Fig3Alg2 => "fig3-alg2",
            Scenario::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fig1-decoupled" => Ok(Scenario::Fig1Decoupled),
            "fig2-alg1" => Ok(Scenario::Fig2Alg1),
            "fig3-alg2" => Ok(Scenario::Fig3Alg2),
            "custom" => Ok(Scenario::Custom),
            other => Err(Error::config(format!("unknown scenario '{other}'"))),
        }
    }
}

/// Engine driven by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAlgorithm {
    Alg1,
    Alg2,
    DecoupledIid,
    DecoupledOrthogonal,
}

impl SweepAlgorithm {
    pub fn label(self) -> &'static str {
        match self {
            SweepAlgorithm::Alg1 => "alg1-orthogonal",
            SweepAlgorithm::Alg2 => "alg2-matched-filter",
            SweepAlgorithm::DecoupledIid => "decoupled-iid",
            SweepAlgorithm::DecoupledOrthogonal => "decoupled-orthogonal",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "alg1" => Ok(SweepAlgorithm::Alg1),
            "alg2" => Ok(SweepAlgorithm::Alg2),
            "decoupled-iid" => Ok(SweepAlgorithm::DecoupledIid),
            "decoupled-orthogonal" => Ok(SweepAlgorithm::DecoupledOrthogonal),
            other => Err(Error::config(format!("unknown algorithm '{other}'"))),
        }
    }

    fn engine(self) -> Option<Algorithm> {
        match self {
            SweepAlgorithm::Alg1 => Some(Algorithm::Orthogonal),
            SweepAlgorithm::Alg2 => Some(Algorithm::MatchedFilter),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Baseline {
    /// Oracle-lambda LASSO on i.i.d. Gaussian instances.
    Lasso,
    /// Non-adaptive MMSE from the effective-noise fixed point.
    MmseBound,
    /// The scenario's own engine with a single subframe.
    Nonadaptive,
}

/// Fully resolved sweep definition.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    pub algorithm: SweepAlgorithm,
    pub delta: f64,
    pub sigma_t2: f64,
    pub sigma2: f64,
    /// Samples per trial (population size for the decoupled simulator).
    pub n: usize,
    pub m_list: Vec<usize>,
    pub rho_list: Vec<f64>,
    /// Distortion threshold in power dB.
    pub d_th_db: f64,
    pub trials: usize,
    pub master_seed: u64,
    pub baselines: Vec<Baseline>,
    pub distortion_mode: DistortionMode,
    pub variance_update: VarianceUpdate,
    pub subframe_noise: SubframeNoise,
    /// Fill `wall_time_ms`; off by default so output is byte-reproducible.
    pub record_timing: bool,
}

/// On-disk form: every key optional, unknown keys rejected.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub scenario: Option<Scenario>,
    pub algorithm: Option<SweepAlgorithm>,
    pub delta: Option<f64>,
    pub sigma_t2: Option<f64>,
    pub sigma2: Option<f64>,
    pub n: Option<usize>,
    pub m_list: Option<Vec<usize>>,
    pub rho_list: Option<Vec<f64>>,
    pub d_th_db: Option<f64>,
    pub trials: Option<usize>,
    pub master_seed: Option<u64>,
    pub baselines: Option<Vec<Baseline>>,
    pub distortion_mode: Option<DistortionMode>,
    pub variance_update: Option<VarianceUpdate>,
    pub subframe_noise: Option<SubframeNoise>,
    pub record_timing: Option<bool>,
}

impl ExperimentSpec {
    /// Defaults for each scenario, matching the published experiment setups.
    pub fn defaults(scenario: Scenario) -> Self {
        let base = ExperimentSpec {
            scenario,
            algorithm: SweepAlgorithm::Alg2,
            delta: 0.1,
            sigma_t2: 1.0,
            sigma2: 0.01,
            n: 200,
            m_list: vec![12],
            rho_list: vec![1.0, 1.25, 2.0, 2.5, 4.0, 5.0],
            d_th_db: -26.5,
            trials: 100,
            master_seed: 1,
            baselines: Vec::new(),
            distortion_mode: DistortionMode::PosteriorDerivative,
            variance_update: VarianceUpdate::SignalSecondMoment,
            subframe_noise: SubframeNoise::SubframeFixedPoint,
            record_timing: false,
        };
        match scenario {
            Scenario::Fig1Decoupled => ExperimentSpec {
                algorithm: SweepAlgorithm::DecoupledIid,
                n: 20_000,
                m_list: vec![4, 8, 12],
                rho_list: vec![1.0, 2.0, 3.0, 4.0, 5.0],
                trials: 5,
                baselines: vec![Baseline::MmseBound],
                ..base
            },
            Scenario::Fig2Alg1 => ExperimentSpec {
                algorithm: SweepAlgorithm::Alg1,
                m_list: vec![1, 2, 4, 8],
                rho_list: vec![1.0, 1.25, 2.0, 2.5, 4.0, 5.0, 8.0],
                baselines: vec![Baseline::Lasso],
                ..base
            },
            Scenario::Fig3Alg2 => ExperimentSpec {
                baselines: vec![Baseline::Lasso, Baseline::MmseBound],
                ..base
            },
            Scenario::Custom => base,
        }
    }

    pub fn from_spec_file(file: SpecFile) -> Result<Self> {
        let scenario = file.scenario.unwrap_or(Scenario::Custom);
        if scenario == Scenario::Custom && file.algorithm.is_none() {
            return Err(Error::config("custom scenarios must name an algorithm"));
        }
        let d = Self::defaults(scenario);
        let spec = ExperimentSpec {
            scenario,
            algorithm: file.algorithm.unwrap_or(d.algorithm),
            delta: file.delta.unwrap_or(d.delta),
            sigma_t2: file.sigma_t2.unwrap_or(d.sigma_t2),
            sigma2: file.sigma2.unwrap_or(d.sigma2),
            n: file.n.unwrap_or(d.n),
            m_list: file.m_list.unwrap_or(d.m_list),
            rho_list: file.rho_list.unwrap_or(d.rho_list),
            d_th_db: file.d_th_db.unwrap_or(d.d_th_db),
            trials: file.trials.unwrap_or(d.trials),
            master_seed: file.master_seed.unwrap_or(d.master_seed),
            baselines: file.baselines.unwrap_or(d.baselines),
            distortion_mode: file.distortion_mode.unwrap_or(d.distortion_mode),
            variance_update: file.variance_update.unwrap_or(d.variance_update),
            subframe_noise: file.subframe_noise.unwrap_or(d.subframe_noise),
            record_timing: file.record_timing.unwrap_or(d.record_timing),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: SpecFile = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        Self::from_spec_file(file)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: SpecFile = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_spec_file(file)
    }

    pub fn prior(&self) -> Result<Prior> {
        Prior::bernoulli_gaussian(self.delta, self.sigma_t2)
    }

    pub fn d_th(&self) -> f64 {
        db_to_linear(self.d_th_db)
    }

    /// Number of sensors for an engine run at inverse load `rho`.
    pub fn sensors(&self, rho: f64) -> Result<usize> {
        let k = self.n as f64 / rho;
        let rounded = k.round();
        if (k - rounded).abs() > 1e-9 * k.max(1.0) || rounded < 1.0 {
            return Err(Error::config(format!(
                "rho = {rho} does not give an integer number of sensors for N = {} (N / rho = {k})",
                self.n
            )));
        }
        Ok(rounded as usize)
    }

    pub fn validate(&self) -> Result<()> {
        self.prior().map_err(|e| Error::config(e.to_string()))?;
        if self.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        if self.n == 0 {
            return Err(Error::config("n must be positive"));
        }
        if !(self.sigma2.is_finite() && self.sigma2 >= 0.0) {
            return Err(Error::config(format!(
                "sigma2 must be >= 0, got {}",
                self.sigma2
            )));
        }
        if !self.d_th_db.is_finite() {
            return Err(Error::config("d_th_db must be finite"));
        }
        if self.m_list.is_empty() || self.m_list.contains(&0) {
            return Err(Error::config(
                "m_list must be non-empty with positive entries",
            ));
        }
        if self.rho_list.is_empty() {
            return Err(Error::config("rho_list must be non-empty"));
        }
        for &rho in &self.rho_list {
            if !(rho.is_finite() && rho > 0.0) {
                return Err(Error::config(format!("rho must be positive, got {rho}")));
            }
        }
        let needs_integer_k =
            self.algorithm.engine().is_some() || self.baselines.contains(&Baseline::Lasso);
        if needs_integer_k {
            for &rho in &self.rho_list {
                let k = self.sensors(rho)?;
                if self.algorithm == SweepAlgorithm::Alg1 && k > self.n {
                    return Err(Error::config(format!(
                        "rho = {rho} gives K = {k} > N = {}; orthogonal sensing needs rho >= 1",
                        self.n
                    )));
                }
            }
        } else {
            for &rho in &self.rho_list {
                if (self.n as f64) / rho < 1.0 {
                    return Err(Error::config(format!(
                        "rho = {rho} leaves fewer than one sensor for n = {}",
                        self.n
                    )));
                }
            }
        }
        if self.baselines.contains(&Baseline::MmseBound) && self.sigma2 == 0.0 {
            return Err(Error::config("the MMSE bound needs sigma2 > 0"));
        }
        Ok(())
    }
}

/// One CSV line.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scenario: String,
    pub algorithm: String,
    pub rho: f64,
    pub m: usize,
    pub subframe: usize,
    pub mse_mean: f64,
    pub mse_stderr: f64,
    pub trials: usize,
    pub seed: u64,
    pub wall_time_ms: u64,
}

struct Grouped {
    algorithm: String,
    rho: f64,
    m: usize,
    per_subframe: Vec<TrialStats>,
    elapsed_ms: u64,
}

fn elapsed_ms(start: Instant) -> u64 {
    start.elapsed().as_millis() as u64
}

fn aggregate(per_trial: &[Vec<f64>], m: usize) -> Vec<TrialStats> {
    (0..m)
        .map(|s| TrialStats::from_values(&per_trial.iter().map(|t| t[s]).collect::<Vec<_>>()))
        .collect()
}

fn run_engine(
    spec: &ExperimentSpec,
    algorithm: Algorithm,
    ri: usize,
    mi: u64,
    m: usize,
) -> Result<Vec<TrialStats>> {
    let prior = spec.prior()?;
    let rho = spec.rho_list[ri];
    let k = spec.sensors(rho)?;
    let adaptation = match algorithm {
        Algorithm::Orthogonal => Adaptation::TopK,
        Algorithm::MatchedFilter => Adaptation::Threshold(spec.d_th()),
    };
    let cfg = SensingConfig::new(spec.n, k, m, spec.sigma2, adaptation)
        .with_distortion_mode(spec.distortion_mode)
        .with_variance_update(spec.variance_update);
    let seed = spec.master_seed;
    let per_trial = run_trials(
        seed,
        &[STREAM_ENGINE, ri as u64, mi],
        spec.trials,
        |t, rng| {
            let x = prior.sample_signal(
                spec.n,
                &mut trial_rng(seed, &[STREAM_SIGNAL, ri as u64, t as u64]),
            );
            engine::run(algorithm, &cfg, &prior, &x, rng).map(|traj| traj.mse_per_subframe(m))
        },
    )
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(&per_trial, m))
}

fn run_decoupled(
    spec: &ExperimentSpec,
    ensemble: Ensemble,
    ri: usize,
    mi: u64,
    m: usize,
) -> Result<Vec<TrialStats>> {
    let prior = spec.prior()?;
    let cfg = DecoupledConfig {
        rho: spec.rho_list[ri],
        m,
        sigma2: spec.sigma2,
        d_th: spec.d_th(),
        n_samples: spec.n,
        ensemble,
        distortion_mode: spec.distortion_mode,
        subframe_noise: spec.subframe_noise,
    };
    let runs = run_trials(
        spec.master_seed,
        &[STREAM_ENGINE, ri as u64, mi],
        spec.trials,
        |_, rng| decoupled_oas_simulate(&cfg, &prior, rng),
    )
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    if let [single] = runs.as_slice() {
        // one trial: report the population standard error instead
        return Ok(single
            .mse
            .iter()
            .zip(&single.stderr)
            .map(|(&mean, &stderr)| TrialStats {
                mean,
                stderr,
                count: 1,
            })
            .collect());
    }
    let per_trial: Vec<Vec<f64>> = runs.into_iter().map(|r| r.mse).collect();
    Ok(aggregate(&per_trial, m))
}

/// Mean oracle-lambda LASSO MSE on i.i.d. `N(0, 1/K)` instances at full
/// duration noise `sigma2`, paired with the engine's signals.
fn run_lasso(spec: &ExperimentSpec, ri: usize) -> Result<TrialStats> {
    let prior = spec.prior()?;
    let rho = spec.rho_list[ri];
    let k = spec.sensors(rho)?;
    let seed = spec.master_seed;
    let grid = default_lambda_grid();
    let mses = run_trials(seed, &[STREAM_LASSO, ri as u64], spec.trials, |t, rng| {
        let x = prior.sample_signal(
            spec.n,
            &mut trial_rng(seed, &[STREAM_SIGNAL, ri as u64, t as u64]),
        );
        lasso_trial(&x, k, spec.sigma2, &grid, rng)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(TrialStats::from_values(&mses))
}

/// One paired LASSO trial: draw `A` and noise, return the oracle MSE.
pub fn lasso_trial<R: Rng + ?Sized>(
    x: &[f64],
    k: usize,
    sigma2: f64,
    grid: &[f64],
    rng: &mut R,
) -> Result<f64> {
    let a = iid_gaussian(k, x.len(), rng);
    let sd = sigma2.sqrt();
    let noise = DVector::from_fn(k, |_, _| sd * rng.sample::<f64, _>(StandardNormal));
    let y = &a * DVector::from_column_slice(x) + noise;
    Ok(lasso_oracle_lambda(&a, &y, x, grid, LASSO_TOL, LASSO_MAX_ITER)?.mse)
}

/// Run every `(rho, M)` cell of the sweep plus the requested baselines.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let prior = spec.prior()?;
    let mut groups: Vec<Grouped> = Vec::new();

    for (ri, &rho) in spec.rho_list.iter().enumerate() {
        for (mi, &m) in spec.m_list.iter().enumerate() {
            let start = Instant::now();
            let stats = match spec.algorithm {
                SweepAlgorithm::Alg1 | SweepAlgorithm::Alg2 => run_engine(
                    spec,
                    spec.algorithm.engine().expect("engine algorithm"),
                    ri,
                    mi as u64,
                    m,
                )?,
                SweepAlgorithm::DecoupledIid => {
                    run_decoupled(spec, Ensemble::IidGaussian, ri, mi as u64, m)?
                }
                SweepAlgorithm::DecoupledOrthogonal => {
                    run_decoupled(spec, Ensemble::Orthogonal, ri, mi as u64, m)?
                }
            };
            groups.push(Grouped {
                algorithm: spec.algorithm.label().to_string(),
                rho,
                m,
                per_subframe: stats,
                elapsed_ms: elapsed_ms(start),
            });
        }

        for baseline in &spec.baselines {
            let start = Instant::now();
            let (label, stats) = match baseline {
                Baseline::Lasso => ("lasso-oracle".to_string(), run_lasso(spec, ri)?),
                Baseline::MmseBound => {
                    let mean = nonadaptive_mmse(&prior, rho, spec.sigma2)?;
                    (
                        "mmse-bound".to_string(),
                        TrialStats {
                            mean,
                            stderr: 0.0,
                            count: 0,
                        },
                    )
                }
                Baseline::Nonadaptive => {
                    // index past m_list keeps the stream distinct from every sweep cell
                    let mi = spec.m_list.len() as u64;
                    let stats = match spec.algorithm {
                        SweepAlgorithm::Alg1 | SweepAlgorithm::Alg2 => run_engine(
                            spec,
                            spec.algorithm.engine().expect("engine algorithm"),
                            ri,
                            mi,
                            1,
                        )?,
                        SweepAlgorithm::DecoupledIid => {
                            run_decoupled(spec, Ensemble::IidGaussian, ri, mi, 1)?
                        }
                        SweepAlgorithm::DecoupledOrthogonal => {
                            run_decoupled(spec, Ensemble::Orthogonal, ri, mi, 1)?
                        }
                    };
                    (format!("nonadaptive-{}", spec.algorithm.label()), stats[0])
                }
            };
            groups.push(Grouped {
                algorithm: label,
                rho,
                m: 1,
                per_subframe: vec![stats],
                elapsed_ms: elapsed_ms(start),
            });
        }
    }

    let mut rows: Vec<ResultRow> = groups
        .into_iter()
        .flat_map(|g| {
            let wall = if spec.record_timing { g.elapsed_ms } else { 0 };
            let scenario = spec.scenario.name().to_string();
            let seed = spec.master_seed;
            g.per_subframe
                .into_iter()
                .enumerate()
                .map(move |(s, st)| ResultRow {
                    scenario: scenario.clone(),
                    algorithm: g.algorithm.clone(),
                    rho: g.rho,
                    m: g.m,
                    subframe: s + 1,
                    mse_mean: st.mean,
                    mse_stderr: st.stderr,
                    trials: st.count,
                    seed,
                    wall_time_ms: wall,
                })
        })
        .collect();
    rows.sort_by(|a, b| {
        a.scenario
            .cmp(&b.scenario)
            .then_with(|| a.algorithm.cmp(&b.algorithm))
            .then_with(|| a.rho.total_cmp(&b.rho))
            .then_with(|| a.m.cmp(&b.m))
            .then_with(|| a.subframe.cmp(&b.subframe))
            .then_with(|| a.seed.cmp(&b.seed))
    });
    Ok(rows)
}

/// Ten significant digits in scientific notation.
pub fn format_decimal(v: f64) -> String {
    format!("{v:.9e}")
}

pub fn rows_to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.scenario,
            r.algorithm,
            format_decimal(r.rho),
            r.m,
            r.subframe,
            format_decimal(r.mse_mean),
            format_decimal(r.mse_stderr),
            r.trials,
            r.seed,
            r.wall_time_ms
        );
    }
    out
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    write_text(path, &rows_to_csv(rows))
}

pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>> {
    let bad = |msg: String| Error::Parse {
        path: "<csv>".into(),
        message: msg,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| bad(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.join(",") != CSV_HEADER {
        return Err(bad(format!("unexpected header '{}'", header.join(","))));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let field = |i: usize| record.get(i).unwrap_or_default();
        fn num<T: std::str::FromStr>(s: &str, name: &str) -> std::result::Result<T, String> {
            s.parse().map_err(|_| format!("bad {name} '{s}'"))
        }
        let row = (|| -> std::result::Result<ResultRow, String> {
            Ok(ResultRow {
                scenario: field(0).to_string(),
                algorithm: field(1).to_string(),
                rho: num(field(2), "rho")?,
                m: num(field(3), "m")?,
                subframe: num(field(4), "subframe")?,
                mse_mean: num(field(5), "mse_mean")?,
                mse_stderr: num(field(6), "mse_stderr")?,
                trials: num(field(7), "trials")?,
                seed: num(field(8), "seed")?,
                wall_time_ms: num(field(9), "wall_time_ms")?,
            })
        })()
        .map_err(bad)?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(&text).map_err(|e| match e {
        Error::Parse { message, .. } => Error::Parse {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })
}

/// Final-subframe rows grouped into one block per `(algorithm, m)` curve,
/// ordered by `rho`. Blocks are separated by two blank lines.
pub fn rows_to_plotdata(rows: &[ResultRow]) -> String {
    let mut finals: Vec<&ResultRow> = rows.iter().filter(|r| r.subframe == r.m).collect();
    finals.sort_by(|a, b| {
        a.algorithm
            .cmp(&b.algorithm)
            .then_with(|| a.m.cmp(&b.m))
            .then_with(|| a.rho.total_cmp(&b.rho))
    });
    let mut out = String::new();
    let mut current: Option<(&str, usize)> = None;
    for r in finals {
        let key = (r.algorithm.as_str(), r.m);
        if current != Some(key) {
            if current.is_some() {
                out.push_str("\n\n");
            }
            let _ = writeln!(
                out,
                "# scenario={} algorithm={} m={}",
                r.scenario, r.algorithm, r.m
            );
            out.push_str("# rho mse_mean mse_stderr\n");
            current = Some(key);
        }
        let _ = writeln!(
            out,
            "{} {} {}",
            format_decimal(r.rho),
            format_decimal(r.mse_mean),
            format_decimal(r.mse_stderr)
        );
    }
    out
}

pub fn write_plotdata(rows: &[ResultRow], path: &Path) -> Result<()> {
    write_text(path, &rows_to_plotdata(rows))
}
