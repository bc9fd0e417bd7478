use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use oas_core::engine::{
    run_matched_filter, run_nonadaptive, run_orthogonal, Adaptation, Algorithm, SensingConfig,
    VarianceUpdate,
};
use oas_core::montecarlo::{run_trials, trial_rng, TrialStats};
use oas_core::sensing::db_to_linear;
use oas_core::Prior;

fn sparse() -> Prior {
    Prior::bernoulli_gaussian(0.1, 1.0).unwrap()
}

fn signal(prior: &Prior, n: usize, seed: u64) -> Vec<f64> {
    prior.sample_signal(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[test]
fn orthogonal_stacking_noise_has_the_right_scale() {
    // ybar - c x ~ N(0, c M sigma2); pool the standardised residuals
    let prior = sparse();
    let cfg = SensingConfig::new(100, 25, 4, 0.01, Adaptation::TopK);
    let mut z2 = Vec::new();
    for seed in 0..40 {
        let x = signal(&prior, 100, seed);
        let t = run_orthogonal(
            &cfg,
            &prior,
            &x,
            &mut ChaCha8Rng::seed_from_u64(1000 + seed),
        )
        .unwrap();
        let last = t.subframes.last().unwrap();
        for j in 0..100 {
            let c = last.state.count[j] as f64;
            if c > 0.0 {
                let r = last.state.ybar[j] - c * x[j];
                z2.push(r * r / (c * cfg.subframe_noise_var()));
            }
        }
    }
    let n = z2.len() as f64;
    let mean = z2.iter().sum::<f64>() / n;
    // chi-square(1): mean 1, variance 2
    assert!(
        (mean - 1.0).abs() <= 5.0 * (2.0 / n).sqrt(),
        "{mean} over {n}"
    );
}

#[test]
fn counts_are_monotone_and_add_up() {
    let prior = sparse();
    for (algorithm, adaptation, k) in [
        (Algorithm::Orthogonal, Adaptation::TopK, 30),
        (
            Algorithm::MatchedFilter,
            Adaptation::Threshold(db_to_linear(-26.5)),
            60,
        ),
    ] {
        let cfg = SensingConfig::new(120, k, 6, 0.01, adaptation);
        let x = signal(&prior, 120, 5);
        let t = oas_core::engine::run(
            algorithm,
            &cfg,
            &prior,
            &x,
            &mut ChaCha8Rng::seed_from_u64(6),
        )
        .unwrap();
        let mut sensed = 0usize;
        let mut prev = vec![0u32; 120];
        for sf in &t.subframes {
            sensed += sf.selection.len();
            assert!(sf
                .state
                .count
                .iter()
                .zip(&prev)
                .all(|(now, before)| now >= before));
            assert_eq!(
                sf.state.count.iter().map(|&c| c as usize).sum::<usize>(),
                sensed
            );
            prev = sf.state.count.clone();
        }
    }
}

#[test]
fn trajectories_are_reproducible() {
    let prior = sparse();
    let x = signal(&prior, 80, 9);
    let cfg = SensingConfig::new(80, 40, 5, 0.01, Adaptation::Threshold(1e-3));
    let a = run_matched_filter(&cfg, &prior, &x, &mut ChaCha8Rng::seed_from_u64(10)).unwrap();
    let b = run_matched_filter(&cfg, &prior, &x, &mut ChaCha8Rng::seed_from_u64(10)).unwrap();
    assert_eq!(a, b);
    let c = run_matched_filter(&cfg, &prior, &x, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
    assert_ne!(a.recoveries, c.recoveries);
}

#[test]
fn matched_filter_noise_bookkeeping_is_recomputable() {
    let prior = sparse();
    let x = signal(&prior, 100, 12);
    for update in [
        VarianceUpdate::SignalSecondMoment,
        VarianceUpdate::SlabVariance,
    ] {
        let cfg = SensingConfig::new(100, 50, 6, 0.01, Adaptation::Threshold(db_to_linear(-26.5)))
            .with_variance_update(update);
        let power = match update {
            VarianceUpdate::SignalSecondMoment => 0.1,
            VarianceUpdate::SlabVariance => 1.0,
        };
        let t = run_matched_filter(&cfg, &prior, &x, &mut ChaCha8Rng::seed_from_u64(13)).unwrap();
        let mut acc = vec![0.0; 100];
        for sf in &t.subframes {
            let rho_m = sf.selection.len() as f64 / 50.0;
            assert_eq!(sf.load, rho_m);
            for (&j, &norm2) in sf.selection.indices().iter().zip(&sf.column_norms2) {
                acc[j] += (rho_m * power + 6.0 * 0.01) / norm2;
            }
            for j in 0..100 {
                assert!((sf.state.noise_var_acc[j] - acc[j]).abs() <= 1e-12 * acc[j].max(1.0));
            }
        }
    }
}

#[test]
fn gaussian_orthogonal_full_load_is_wiener() {
    // delta = 1, rho = 1, M = 1: per-sample MSE sigma2 s / (s + sigma2)
    let prior = Prior::bernoulli_gaussian(1.0, 1.0).unwrap();
    let sigma2 = 0.1;
    let cfg = SensingConfig::new(64, 64, 1, sigma2, Adaptation::TopK);
    let mses = run_trials(77, &[0], 200, |_, rng| {
        let x = prior.sample_signal(64, rng);
        run_orthogonal(&cfg, &prior, &x, rng).unwrap().final_mse()
    });
    let stats = TrialStats::from_values(&mses);
    let wiener = sigma2 / (1.0 + sigma2);
    assert!(
        (stats.mean - wiener).abs() <= 3.0 * stats.stderr,
        "{stats:?} vs {wiener}"
    );
}

#[test]
fn adaptation_beats_single_subframe() {
    let prior = sparse();
    let adaptive = SensingConfig::new(200, 50, 4, 0.01, Adaptation::TopK);
    let diffs = run_trials(31, &[0], 200, |t, rng| {
        let x = prior.sample_signal(200, &mut trial_rng(31, &[1, t as u64]));
        let a = run_orthogonal(&adaptive, &prior, &x, rng)
            .unwrap()
            .final_mse();
        let b = run_nonadaptive(Algorithm::Orthogonal, &adaptive, &prior, &x, rng)
            .unwrap()
            .final_mse();
        b - a
    });
    let gap = TrialStats::from_values(&diffs);
    assert!(gap.mean > 3.0 * gap.stderr, "{gap:?}");
}

#[test]
fn noiseless_full_load_recovers_exactly() {
    let prior = sparse();
    let x = signal(&prior, 50, 40);
    let cfg = SensingConfig::new(50, 50, 1, 0.0, Adaptation::TopK);
    let t = run_orthogonal(&cfg, &prior, &x, &mut ChaCha8Rng::seed_from_u64(41)).unwrap();
    assert!(t.final_mse() <= 1e-20);
}

#[test]
fn high_threshold_stops_after_first_subframe() {
    let prior = sparse();
    let x = signal(&prior, 40, 50);
    let cfg = SensingConfig::new(40, 20, 5, 0.01, Adaptation::Threshold(1e6));
    let t = run_matched_filter(&cfg, &prior, &x, &mut ChaCha8Rng::seed_from_u64(51)).unwrap();
    assert_eq!(t.subframes.len(), 1);
    assert_eq!(t.early_stop, Some(2));
    let per = t.mse_per_subframe(5);
    assert!(per.iter().all(|&m| m == per[0]));
}
