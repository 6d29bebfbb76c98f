use lvgm::estimator::{compute_tau, EstimatorConfig};
use lvgm::harness::{
    calibrate_constants, check_assumptions, run_plan, run_replicate, simulate_replicate,
    write_outputs, ExperimentPlan, OutputFormat, ReplicateOptions, Sweep,
};
use lvgm::linalg::entrywise_max_norm;
use lvgm::model::ModelSpec;

fn spec(p: usize, n: usize, theta: f64, seed: u64) -> ModelSpec {
    let mut s = ModelSpec {
        p,
        n,
        s0: 2,
        r0: 1,
        c0: 6.0,
        theta,
        sigma: 0.5,
        mp: 0.0,
        m: 100.0,
        seed,
    };
    s.mp = s.worst_case_sparse_norm();
    s
}

fn cfg(c1: f64, c3: f64) -> EstimatorConfig {
    EstimatorConfig {
        c1,
        c3,
        mp_proxy: 1.0,
        ..EstimatorConfig::default()
    }
}

fn plan(base: ModelSpec, sweeps: Vec<Sweep>, replicates: usize, estimator_cfg: EstimatorConfig) -> ExperimentPlan {
    ExperimentPlan {
        base_spec: base,
        sweeps,
        replicates,
        estimator_cfg,
        assumption_checks: true,
        output_path: String::new(),
        oracle_mp: false,
        noiseless: false,
    }
}

#[test]
fn single_trial_gives_single_row() {
    let outcome = run_plan(&plan(spec(10, 500, 0.5, 1), vec![], 1, cfg(1.0, 5.0)), 2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_outputs(&outcome, dir.path(), OutputFormat::Csv).unwrap();
    let text = std::fs::read_to_string(dir.path().join("trials.csv")).unwrap();
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data.len(), 2, "{text}");
    assert!(data[0].starts_with("cell,replicate"));
    assert!(dir.path().join("cells.json").exists());
}

#[test]
fn replicate_is_deterministic() {
    let s = spec(12, 800, 0.5, 9);
    let opts = ReplicateOptions::default();
    let mut a = run_replicate(&s, &cfg(1.0, 5.0), 3, opts);
    let mut b = run_replicate(&s, &cfg(1.0, 5.0), 3, opts);
    a.wall_time = 0.0;
    b.wall_time = 0.0;
    assert_eq!(a, b);
}

#[test]
fn noiseless_replicate_recovers_signs() {
    let s = ModelSpec {
        r0: 0,
        n: 1_000_000,
        ..spec(12, 1000, 1.0, 2)
    };
    let opts = ReplicateOptions {
        noiseless: true,
        oracle_mp: false,
    };
    let t = run_replicate(&s, &cfg(1.0, 20.0), 0, opts);
    assert!(t.failure.is_none());
    assert!(t.sign_recovered);
    assert!(t.rank_recovered);
}

#[test]
fn theta_clause_is_strict() {
    let s = spec(10, 1000, 0.5, 4);
    let data = simulate_replicate(&s, 0, false).unwrap();
    let c = cfg(1.0, 1.0);
    let mp_tau = c.mp_proxy * compute_tau(s.p, s.n, &c);
    let mut model = data.model;
    model.spec.theta = 18.0 * mp_tau;
    assert!(!check_assumptions(&model, &c).theta_gap);
    model.spec.theta = 18.0 * mp_tau * (1.0 + 1e-12);
    assert!(check_assumptions(&model, &c).theta_gap);
    model.l_star = lvgm::linalg::SymMatrix::zeros(10);
    assert!(check_assumptions(&model, &c).lowrank_sup_small);
}

#[test]
fn calibration_is_reproducible() {
    let s = spec(10, 400, 0.5, 17);
    let a = calibrate_constants(&s, 50, &EstimatorConfig::default()).unwrap();
    let b = calibrate_constants(&s, 50, &EstimatorConfig::default()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.c1, 2.0 * a.c2);
    assert_eq!(a.provenance.c2_ratios.len(), 50);
}

#[test]
fn c2_is_stable_under_doubling_n() {
    let a = calibrate_constants(&spec(20, 1000, 0.5, 23), 100, &EstimatorConfig::default()).unwrap();
    let b = calibrate_constants(&spec(20, 2000, 0.5, 23), 100, &EstimatorConfig::default()).unwrap();
    let change = (b.c2 - a.c2).abs() / a.c2;
    assert!(change <= 0.25, "C2 {} -> {}", a.c2, b.c2);
}

#[test]
fn null_calibration_keeps_rank_zero() {
    let s = ModelSpec {
        r0: 0,
        ..spec(20, 2000, 0.5, 31)
    };
    let cal = calibrate_constants(&s, 50, &EstimatorConfig::default()).unwrap();
    let c = cal.apply(&EstimatorConfig::default());
    let opts = ReplicateOptions {
        noiseless: false,
        oracle_mp: true,
    };
    let zero = (0..40)
        .filter(|&r| run_replicate(&s, &c, r, opts).rank_estimate == Some(0))
        .count();
    assert!(zero as f64 >= 0.95 * 40.0, "{zero}/40");
}

#[test]
fn covariance_tail_after_calibration() {
    let s = spec(20, 500, 0.5, 41);
    let cal = calibrate_constants(&s, 200, &EstimatorConfig::default()).unwrap();
    let rate = ((s.p as f64).ln() / s.n as f64).sqrt();
    let deviations: Vec<f64> = (0..200)
        .map(|r| {
            let d = simulate_replicate(&s, r, false).unwrap();
            entrywise_max_norm(&(&d.model.sigma_star - &d.sigma_n)) / rate
        })
        .collect();
    let exceed = |c2: f64| deviations.iter().filter(|v| **v > c2).count() as f64 / 200.0;
    assert!(exceed(cal.c2) < 0.05, "tail {} at C2 = {}", exceed(cal.c2), cal.c2);
    let grid: Vec<f64> = (0..20).map(|k| cal.c2 * (0.5 + 0.05 * k as f64)).collect();
    assert!(grid.windows(2).all(|w| exceed(w[1]) <= exceed(w[0])));
}

#[test]
fn sup_error_falls_with_n() {
    let p = plan(
        spec(20, 1000, 0.5, 3),
        vec![Sweep {
            parameter: "n".into(),
            values: vec![1000.0, 4000.0, 16000.0],
        }],
        20,
        cfg(1.0, 5.0),
    );
    let outcome = run_plan(&p, 4).unwrap();
    let means: Vec<f64> = outcome.cells.iter().map(|c| c.sup_error.mean).collect();
    assert!(means.windows(2).all(|w| w[1] < w[0]), "{means:?}");
}

#[test]
fn recovery_rates_are_monotone() {
    let base = spec(20, 1000, 0.5, 5);
    // r0 = 0: with a latent part, a shrinking threshold eventually admits
    // off-support entries of L*, so sign recovery is not monotone in n.
    let by_n = run_plan(
        &plan(
            ModelSpec { r0: 0, ..base.clone() },
            vec![Sweep {
                parameter: "n".into(),
                values: vec![1000.0, 4000.0, 16000.0],
            }],
            30,
            cfg(0.5, 6.0),
        ),
        4,
    )
    .unwrap();
    let sign: Vec<f64> = by_n.cells.iter().map(|c| c.sign_recovery_rate).collect();
    assert!(sign.windows(2).all(|w| w[1] >= w[0] - 0.02), "{sign:?}");

    let by_sigma = run_plan(
        &plan(
            ModelSpec { n: 5000, ..base },
            vec![Sweep {
                parameter: "sigma".into(),
                values: vec![0.1, 0.3, 0.5],
            }],
            30,
            cfg(0.5, 6.0),
        ),
        4,
    )
    .unwrap();
    let rank: Vec<f64> = by_sigma.cells.iter().map(|c| c.rank_recovery_rate).collect();
    assert!(rank.windows(2).all(|w| w[1] >= w[0] - 0.02), "{rank:?}");
}

#[test]
fn unknown_sweep_parameter_is_rejected() {
    let p = plan(
        spec(10, 500, 0.5, 1),
        vec![Sweep {
            parameter: "gamma".into(),
            values: vec![1.0],
        }],
        1,
        cfg(1.0, 1.0),
    );
    assert!(p.validate().is_err());
    assert!(run_plan(&p, 1).is_err());
}
