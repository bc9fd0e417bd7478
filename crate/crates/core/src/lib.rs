//! Bayesian oversampled adaptive sensing (OAS) with random projections.
//!
//! The crate is organised bottom-up:
//!
//! - [`priors`]: Bernoulli-Gaussian signal model and the scalar Bayesian
//!   estimator over the stacked channel `ybar = c * x + z`.
//! - [`sensing`]: Haar-orthogonal and i.i.d. Gaussian projections plus the
//!   hard adaptation rules (worst-case top-K, threshold).
//! - [`engine`]: the sequential sensing loops (orthogonal observations and
//!   matched filtering) with full trajectory recording.
//! - [`asymptotics`]: the stacked decoupled scalar-channel simulator and the
//!   non-adaptive MMSE bound from the effective-noise fixed point.
//! - [`baselines`]: finite-size LASSO with an oracle regulariser.
//! - [`experiment`]: sweep definitions, Monte Carlo aggregation and CSV output.
//!
//! Independent Monte Carlo trials are dispatched through [`par`], which uses
//! rayon when the `parallel` feature is enabled and plain iteration otherwise.

pub mod asymptotics;
pub mod baselines;
pub mod engine;
mod error;
pub mod experiment;
pub mod montecarlo;
pub mod par;
pub mod priors;
pub mod quadrature;
pub mod sensing;

pub use error::{Error, Result};
pub use priors::{Posterior, Prior, PriorKind, ScalarChannel};
