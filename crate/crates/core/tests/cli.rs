use std::path::Path;
use std::process::ExitCode;

use lvgm::cli::main_with_args;
use lvgm::estimator::EstimatorConfig;
use lvgm::linalg::read_matrix;
use lvgm::model::ModelSpec;

fn spec() -> ModelSpec {
    let s = ModelSpec {
        p: 10,
        n: 2000,
        s0: 2,
        r0: 1,
        c0: 6.0,
        theta: 0.5,
        sigma: 0.4,
        mp: 0.0,
        m: 100.0,
        seed: 12,
    };
    ModelSpec { mp: s.worst_case_sparse_norm(), ..s }
}

fn write_json(path: &Path, value: &impl serde::Serialize) {
    std::fs::write(path, serde_json::to_string(value).unwrap()).unwrap();
}

fn cli(args: &[&str]) -> ExitCode {
    main_with_args(std::iter::once("lvgm").chain(args.iter().copied()))
}

#[test]
fn generate_then_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let spec_path = dir.path().join("spec.json");
    write_json(&spec_path, &spec());
    let model_dir = dir.path().join("model");
    let code = cli(&["generate", "--spec", spec_path.to_str().unwrap(), "--out", model_dir.to_str().unwrap()]);
    assert_eq!(code, ExitCode::SUCCESS);
    for f in ["S_star.txt", "L_star.txt", "Sigma_star.txt", "model.json"] {
        assert!(model_dir.join(f).exists(), "{f}");
    }
    let sigma = read_matrix(&model_dir.join("Sigma_star.txt")).unwrap();
    assert_eq!(sigma.dim(), 10);

    let est_dir = dir.path().join("est");
    let code = cli(&[
        "estimate",
        "--input",
        model_dir.join("Sigma_star.txt").to_str().unwrap(),
        "--n",
        "2000",
        "--out",
        est_dir.to_str().unwrap(),
    ]);
    assert_eq!(code, ExitCode::SUCCESS);
    for f in ["S_hat.txt", "S_tilde.txt", "L_hat.txt", "L_tilde.txt", "estimate.json"] {
        assert!(est_dir.join(f).exists(), "{f}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(est_dir.join("estimate.json")).unwrap()).unwrap();
    assert!(summary["tau_n"].as_f64().unwrap() > 0.0);
}

#[test]
fn seed_override_changes_model() {
    let dir = tempfile::tempdir().unwrap();
    let spec_path = dir.path().join("spec.json");
    write_json(&spec_path, &spec());
    let read = |seed: &str| {
        let out = dir.path().join(seed);
        let code = cli(&["generate", "--spec", spec_path.to_str().unwrap(), "--seed", seed, "--out", out.to_str().unwrap()]);
        assert_eq!(code, ExitCode::SUCCESS);
        std::fs::read_to_string(out.join("S_star.txt")).unwrap()
    };
    assert_eq!(read("1"), read("1"));
    assert_ne!(read("1"), read("2"));
}

#[test]
fn run_writes_json_trials() {
    let dir = tempfile::tempdir().unwrap();
    let plan_path = dir.path().join("plan.json");
    write_json(
        &plan_path,
        &serde_json::json!({
            "base_spec": spec(),
            "sweeps": [{"parameter": "n", "values": [1000.0, 2000.0]}],
            "replicates": 3,
            "estimator_cfg": EstimatorConfig::default(),
        }),
    );
    let out = dir.path().join("run");
    let code = cli(&["run", "--plan", plan_path.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", "2", "--format", "json"]);
    assert_ne!(code, ExitCode::from(1));
    let trials: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("trials.json")).unwrap()).unwrap();
    let rows = trials.as_array().or_else(|| trials["trials"].as_array()).unwrap();
    assert_eq!(rows.len(), 6);
    let cells: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("cells.json")).unwrap()).unwrap();
    assert!(cells.to_string().contains("sign_recovery_rate"));
}

#[test]
fn calibrate_writes_usable_config() {
    let dir = tempfile::tempdir().unwrap();
    let spec_path = dir.path().join("spec.json");
    write_json(&spec_path, &spec());
    let out = dir.path().join("cal");
    let code = cli(&["calibrate", "--spec", spec_path.to_str().unwrap(), "--pilots", "50", "--out", out.to_str().unwrap()]);
    assert_eq!(code, ExitCode::SUCCESS);
    assert!(out.join("calibration.json").exists());
    let cfg: EstimatorConfig =
        serde_json::from_str(&std::fs::read_to_string(out.join("estimator_config.json")).unwrap()).unwrap();
    assert!(cfg.c1 > 0.0 && cfg.c3 > 0.0);
    assert_eq!(cfg.c1, 2.0 * cfg.c2);
    assert_eq!(cfg.mp_proxy, spec().mp);
}

#[test]
fn bad_inputs_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(cli(&["generate", "--spec", missing.to_str().unwrap()]), ExitCode::from(1));
    let garbage = dir.path().join("bad.json");
    std::fs::write(&garbage, "{ not json").unwrap();
    assert_eq!(cli(&["run", "--plan", garbage.to_str().unwrap()]), ExitCode::from(1));
    assert_eq!(cli(&["estimate", "--n", "10"]), ExitCode::from(1));
    assert_eq!(cli(&["frobnicate"]), ExitCode::from(1));
}
