use oas_core::experiment::{
    parse_csv, read_csv, rows_to_csv, run_experiment, write_csv, Baseline, ExperimentSpec,
    ResultRow, Scenario, SweepAlgorithm,
};

fn small(algorithm: SweepAlgorithm) -> ExperimentSpec {
    ExperimentSpec {
        algorithm,
        n: 40,
        rho_list: vec![2.0, 4.0],
        m_list: vec![1, 3],
        trials: 6,
        master_seed: 3,
        ..ExperimentSpec::defaults(Scenario::Custom)
    }
}

#[test]
fn reruns_are_identical() {
    for algorithm in [
        SweepAlgorithm::Alg1,
        SweepAlgorithm::Alg2,
        SweepAlgorithm::DecoupledIid,
    ] {
        let spec = small(algorithm);
        assert_eq!(
            run_experiment(&spec).unwrap(),
            run_experiment(&spec).unwrap()
        );
    }
}

#[test]
fn rows_are_unique_and_sorted() {
    let mut spec = small(SweepAlgorithm::Alg1);
    spec.baselines = vec![Baseline::Lasso, Baseline::MmseBound, Baseline::Nonadaptive];
    let rows = run_experiment(&spec).unwrap();
    // per rho: M=1 (1 row) + M=3 (3 rows) + three baselines
    assert_eq!(rows.len(), 2 * (1 + 3 + 3));
    let keys: Vec<_> = rows
        .iter()
        .map(|r| (r.algorithm.clone(), r.rho.to_bits(), r.m, r.subframe))
        .collect();
    let mut sorted = keys.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(sorted.len(), keys.len());
    assert!(rows
        .iter()
        .all(|r| r.scenario == "custom" && r.seed == 3 && r.wall_time_ms == 0));
    let bound = rows.iter().find(|r| r.algorithm == "mmse-bound").unwrap();
    assert_eq!((bound.trials, bound.mse_stderr), (0, 0.0));
}

#[test]
fn csv_round_trips() {
    let mut spec = small(SweepAlgorithm::Alg2);
    spec.baselines = vec![Baseline::Lasso];
    let rows = run_experiment(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.csv");
    write_csv(&rows, &path).unwrap();
    let back = read_csv(&path).unwrap();
    assert_eq!(back.len(), rows.len());
    for (a, b) in rows.iter().zip(&back) {
        assert_eq!(
            (&a.scenario, &a.algorithm, a.m, a.subframe, a.trials, a.seed),
            (&b.scenario, &b.algorithm, b.m, b.subframe, b.trials, b.seed)
        );
        for (x, y) in [
            (a.rho, b.rho),
            (a.mse_mean, b.mse_mean),
            (a.mse_stderr, b.mse_stderr),
        ] {
            assert!((x - y).abs() <= 5e-10 * x.abs(), "{x} vs {y}");
        }
    }
    // a second pass is exact
    assert_eq!(parse_csv(&rows_to_csv(&back)).unwrap(), back);
}

#[test]
fn empty_rows_write_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    write_csv(&[], &path).unwrap();
    assert_eq!(
        std::fs::read_to_string(&path).unwrap(),
        "scenario,algorithm,rho,m,subframe,mse_mean,mse_stderr,trials,seed,wall_time_ms\n"
    );
    assert_eq!(read_csv(&path).unwrap(), Vec::<ResultRow>::new());
}

#[test]
fn noiseless_square_alg1_is_exact() {
    let spec = ExperimentSpec {
        sigma2: 0.0,
        rho_list: vec![1.0],
        m_list: vec![1],
        trials: 3,
        ..small(SweepAlgorithm::Alg1)
    };
    let rows = run_experiment(&spec).unwrap();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].mse_mean <= 1e-20);
}

#[test]
fn stderr_shrinks_with_trials() {
    let se = |trials| {
        let spec = ExperimentSpec {
            trials,
            rho_list: vec![2.0],
            m_list: vec![2],
            ..small(SweepAlgorithm::Alg1)
        };
        run_experiment(&spec).unwrap().last().unwrap().mse_stderr
    };
    // sixteen times the trials quarters the error, within sampling noise
    let ratio = se(100) / se(1600);
    assert!((2.8..=5.7).contains(&ratio), "{ratio}");
}

#[test]
fn invalid_specs_fail_before_running() {
    let spec = ExperimentSpec {
        rho_list: vec![3.0],
        ..small(SweepAlgorithm::Alg1)
    };
    let err = run_experiment(&spec).unwrap_err().to_string();
    assert!(err.contains("rho = 3"), "{err}");
    let spec = ExperimentSpec {
        trials: 0,
        ..small(SweepAlgorithm::Alg2)
    };
    assert!(run_experiment(&spec).is_err());
}

#[test]
fn spec_files_parse() {
    let spec = ExperimentSpec::from_toml_str(
        "scenario = \"fig1-decoupled\"\nm_list = [4]\nsubframe_noise = \"scaled-full-duration\"\ndistortion_mode = \"exact-variance\"\n",
    )
    .unwrap();
    assert_eq!(spec.algorithm, SweepAlgorithm::DecoupledIid);
    assert_eq!(spec.m_list, vec![4]);
    assert_eq!(spec.n, 20_000);
    assert!((spec.d_th() - 10f64.powf(-2.65)).abs() < 1e-18);
}
