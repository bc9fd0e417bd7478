//! Seed derivation and trial aggregation for Monte Carlo runs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::par;

/// Random stream used for every trial.
pub type TrialRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `master` and a path of counters.
///
/// `seed = splitmix64(... splitmix64(splitmix64(master) ^ path[0]) ^ ... ^ path[k-1])`.
/// Distinct paths give statistically independent streams; the result does
/// not depend on thread scheduling.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &p| splitmix64(acc ^ p))
}

pub fn trial_rng(master: u64, path: &[u64]) -> TrialRng {
    TrialRng::seed_from_u64(derive_seed(master, path))
}

/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialStats {
    pub mean: f64,
    /// Sample standard deviation divided by `sqrt(count)`; zero for a single value.
    pub stderr: f64,
    pub count: usize,
}

impl TrialStats {
    pub fn from_values(values: &[f64]) -> Self {
        let count = values.len();
        if count == 0 {
            return Self {
                mean: f64::NAN,
                stderr: f64::NAN,
                count,
            };
        }
        let mean = values.iter().sum::<f64>() / count as f64;
        let stderr = if count > 1 {
            let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
            (ss / (count - 1) as f64).sqrt() / (count as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            stderr,
            count,
        }
    }

    /// Whether `self` and `other` agree within `k` joint standard errors.
    pub fn agrees_with(&self, other: &TrialStats, k: f64) -> bool {
        (self.mean - other.mean).abs() <= k * self.stderr.hypot(other.stderr)
    }
}

/// Run `trials` independent trials, each with its own stream seeded from
/// `(master, prefix.., trial)`.
pub fn run_trials<U, F>(master: u64, prefix: &[u64], trials: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize, &mut TrialRng) -> U + Sync + Send,
{
    par::map_indexed(trials, |t| {
        let mut path = prefix.to_vec();
        path.push(t as u64);
        let mut rng = trial_rng(master, &path);
        f(t, &mut rng)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn seeds_depend_on_every_coordinate() {
        let base = derive_seed(7, &[0, 0, 0]);
        assert_ne!(base, derive_seed(8, &[0, 0, 0]));
        assert_ne!(base, derive_seed(7, &[1, 0, 0]));
        assert_ne!(base, derive_seed(7, &[0, 1, 0]));
        assert_ne!(base, derive_seed(7, &[0, 0, 1]));
        assert_eq!(base, derive_seed(7, &[0, 0, 0]));
    }

    #[test]
    fn trials_are_reproducible() {
        let a: Vec<f64> = run_trials(3, &[1], 16, |_, rng| rng.random());
        let b: Vec<f64> = run_trials(3, &[1], 16, |_, rng| rng.random());
        assert_eq!(a, b);
    }

    #[test]
    fn stats_of_constant() {
        let s = TrialStats::from_values(&[2.0, 2.0, 2.0]);
        assert_eq!((s.mean, s.stderr, s.count), (2.0, 0.0, 3));
        assert_eq!(TrialStats::from_values(&[5.0]).stderr, 0.0);
    }

    #[test]
    fn stderr_shrinks_with_trials() {
        let draws: Vec<f64> = run_trials(11, &[], 6400, |_, rng| rng.random::<f64>());
        let small = TrialStats::from_values(&draws[..100]);
        let large = TrialStats::from_values(&draws);
        // 64x the trials: stderr ratio should be close to 8
        let ratio = small.stderr / large.stderr;
        assert!((6.0..=10.0).contains(&ratio), "{ratio}");
    }
}
