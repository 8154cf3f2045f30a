use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use riskscope::model::io::save_instance;
use riskscope::model::{DesignMatrix, NoiseSpec, PenaltySpec, ProblemInstance, TargetVector};
use riskscope::rng::{gaussian_vec, rng_from_seed};

fn riskscope(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riskscope"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_instance(dir: &Path, penalty: PenaltySpec) -> String {
    let mut r = rng_from_seed(9);
    let x = DesignMatrix::from_row_slice(15, 6, &gaussian_vec(&mut r, 90, 1.0)).unwrap();
    let inst = ProblemInstance::new(
        x,
        TargetVector(vec![1.0, -0.5, 0.0, 0.0, 0.0, 0.0]),
        NoiseSpec::gaussian(1.0, 4).unwrap(),
        penalty,
    )
    .unwrap();
    let path = dir.join("inst.json");
    save_instance(&inst, &path).unwrap();
    path.to_str().unwrap().to_string()
}

fn json(o: &Output) -> serde_json::Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&stdout(o)).expect("valid JSON on stdout")
}

#[test]
fn solve_and_fixed_point_agree() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(dir.path(), PenaltySpec::ScaledL1 { lam: 0.3 });
    let sol = json(&riskscope(&["solve", "--instance", &inst]));
    let risk = sol["risk"].as_f64().unwrap();
    let cert = json(&riskscope(&["certify", "--kind", "fixed-point", "--instance", &inst]));
    assert_eq!(cert["verdict"], "Verified");
    assert!(cert["bound"].as_f64().unwrap() >= risk - 1e-6);
    let nd = json(&riskscope(&["certify", "--kind", "norm-dual", "--instance", &inst]));
    assert!(nd["bound"].as_f64().unwrap() <= risk + 1e-6);
}

#[test]
fn curve_csv_skips_nonpositive_t_for_h() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(dir.path(), PenaltySpec::SquaredL2 { lam: 1.0 });
    let out = riskscope(&["curve", "--which", "H", "--grid", "0:2:5", "--instance", &inst]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,value,active,dual_mu"));
    let ts: Vec<f64> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(ts, vec![0.5, 1.0, 1.5, 2.0]);
}

#[test]
fn missing_certificate_argument_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(dir.path(), PenaltySpec::ScaledL1 { lam: 0.3 });
    let out = riskscope(&["certify", "--kind", "t0gamma", "--instance", &inst]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--t0"));
}

#[test]
fn norm_dual_rejects_indicator() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(dir.path(), PenaltySpec::Zero);
    let out = riskscope(&["certify", "--kind", "norm-dual", "--instance", &inst]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn diagnose_two_column_rip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.csv");
    let r = 2f64.sqrt();
    fs::write(&path, format!("{r},{}\n0,{}\n", 0.5 * r, r * 0.75f64.sqrt())).unwrap();
    let rep = json(&riskscope(&["diagnose", "--what", "rip", "--design", path.to_str().unwrap(), "--s", "2"]));
    let delta = rep["delta_s"].as_f64().unwrap();
    assert!((delta - (1.0 - 0.5f64.sqrt())).abs() < 1e-8, "{delta}");
}

#[test]
fn diagnose_vg_exhaust() {
    let rep = json(&riskscope(&["diagnose", "--what", "vg", "--p", "10", "--d", "1", "--exhaust"]));
    assert_eq!(rep["omega"].as_array().unwrap().len(), 10);
}

#[test]
fn mc_writes_curve() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(dir.path(), PenaltySpec::ScaledL1 { lam: 0.3 });
    let out_dir = dir.path().join("mc");
    let rep = json(&riskscope(&[
        "mc",
        "--instance",
        &inst,
        "--reps",
        "40",
        "--grid",
        "0:5:11",
        "--out",
        out_dir.to_str().unwrap(),
    ]));
    assert!(rep["f_curve"]["t_f_hat"].as_f64().unwrap() > 0.0);
    let csv = fs::read_to_string(out_dir.join("fcurve.csv")).unwrap();
    assert_eq!(csv.lines().count(), 12);
}

#[test]
fn experiment_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let pass = dir.path().join("pass.json");
    fs::write(
        &pass,
        r#"{"experiments": [{"name": "compat_lower", "design": {"generator": "scaled_identity", "n": 8, "p": 8},
            "support": [0, 1], "lambda": {"rule": "explicit", "value": 1.0}, "sigma": 1.0, "reps": 300, "master_seed": 3}]}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("reports");
    let o = riskscope(&["experiment", "--config", pass.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out_dir.join("compat_lower.json").exists());
    assert!(out_dir.join("summary.csv").exists());

    let fail = dir.path().join("fail.json");
    fs::write(
        &fail,
        r#"[{"name": "small_lambda", "design": {"generator": "gaussian_iid", "n": 20, "p": 40, "seed": 1},
            "d": 1, "lambda": {"rule": "explicit", "value": 1000.0}, "sigma": 1.0, "reps": 20, "master_seed": 2,
            "fail_injection": true}]"#,
    )
    .unwrap();
    let o = riskscope(&["experiment", "--config", fail.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"[{"name": "sandwich", "bogus": 1}]"#).unwrap();
    let o = riskscope(&["experiment", "--config", bad.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn shipped_example_config_parses() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/experiments.example.json");
    let suite = riskscope::experiments::parse_suite(&fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(suite.experiments.len(), 3);
}
