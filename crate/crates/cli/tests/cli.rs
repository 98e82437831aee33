use std::path::Path;
use std::process::{Command, Output};

use rydberg_qubo::annealer::QuantumState;
use rydberg_qubo::qubo::{ModelFile, QuboModel};
use serde_json::Value;
use tempfile::TempDir;

fn rydqubo(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rydqubo"))
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn model_of(path: &Path) -> QuboModel {
    let v = read_json(path);
    let file: ModelFile = serde_json::from_value(v["model"].clone()).unwrap();
    file.to_qubo().unwrap()
}

#[test]
fn problem_reference_clustering_has_five_variables() {
    let dir = TempDir::new().unwrap();
    let out = rydqubo(dir.path(), &["problem", "--reference", "clustering"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(model_of(&dir.path().join("clustering.model.json")).n(), 5);
}

#[test]
fn problem_reference_qap_has_four_variables() {
    let dir = TempDir::new().unwrap();
    let out = rydqubo(dir.path(), &["problem", "--reference", "qap"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(model_of(&dir.path().join("qap.model.json")).n(), 4);
}

#[test]
fn problem_xor_family_from_constraints() {
    let dir = TempDir::new().unwrap();
    let out = rydqubo(
        dir.path(),
        &[
            "problem",
            "--family",
            "xor_sat",
            "--constraints",
            "[[0,1,1]]",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let m = model_of(&dir.path().join("xor_sat.model.json"));
    assert_eq!(m.n(), 2);
    // violated exactly when the bits agree
    assert_eq!(m.evaluate(&[0, 0]).unwrap(), m.evaluate(&[1, 1]).unwrap());
    assert!(m.evaluate(&[0, 1]).unwrap() < m.evaluate(&[0, 0]).unwrap());
}

#[test]
fn problem_bad_arguments_exit_2() {
    let dir = TempDir::new().unwrap();
    let out = rydqubo(
        dir.path(),
        &["problem", "--family", "no_such_family", "--params", "{}"],
    );
    assert_eq!(out.status.code(), Some(2));
    let out = rydqubo(dir.path(), &["problem", "--reference", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    let out = rydqubo(
        dir.path(),
        &[
            "problem",
            "--family",
            "xor_sat",
            "--constraints",
            "not json",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn problem_build_failure_exit_3() {
    let dir = TempDir::new().unwrap();
    // clause mentions a variable outside n
    let out = rydqubo(
        dir.path(),
        &[
            "problem",
            "--family",
            "two_sat",
            "--clauses",
            "[[1,-3]]",
            "--n",
            "2",
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn model_file_round_trips_through_instance_flag() {
    let dir = TempDir::new().unwrap();
    rydqubo(dir.path(), &["problem", "--reference", "xor_sat"]);
    let model = dir.path().join("xor_sat.model.json");
    let out = rydqubo(
        dir.path(),
        &["hardness", "--instance", model.to_str().unwrap()],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let h = read_json(&dir.path().join("xor_sat.hardness.json"));
    assert_eq!(h["hardness"]["d_opt"], 6);
}

#[test]
fn pipeline_unknown_instance_exit_2() {
    let dir = TempDir::new().unwrap();
    let out = rydqubo(
        dir.path(),
        &["pipeline", "--instance", "/no/such/file.json"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn physical_mode_rejects_negative_couplings() {
    let dir = TempDir::new().unwrap();
    let out = rydqubo(
        dir.path(),
        &["--mode", "physical", "pipeline", "--instance", "two_sat"],
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn pipeline_two_sat_reaches_threshold_and_ratio_is_consistent() {
    let dir = TempDir::new().unwrap();
    let out = rydqubo(dir.path(), &["pipeline", "--instance", "two_sat"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = read_json(&dir.path().join("result.json"));
    let r = v["result"]["r"].as_f64().unwrap();
    assert!(r >= 0.99, "R = {r}");

    // recompute R from the stored state and a brute-force cost table
    let file: ModelFile = serde_json::from_value(v["model"].clone()).unwrap();
    let model = file.to_qubo().unwrap();
    let state: QuantumState = serde_json::from_value(v["result"]["final_state"].clone()).unwrap();
    let costs: Vec<f64> = (0..1u64 << model.n())
        .map(|b| model.evaluate_index(b))
        .collect();
    let c_opt = costs.iter().cloned().fold(f64::INFINITY, f64::min);
    let c_max = costs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let c_obt: f64 = state
        .probabilities()
        .iter()
        .zip(&costs)
        .map(|(p, c)| p * c)
        .sum();
    let r_oracle = (c_max - c_obt) / (c_max - c_opt);
    assert!((r - r_oracle).abs() < 1e-9, "{r} vs {r_oracle}");

    let traj = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut lines = traj.lines();
    assert!(lines.next().unwrap().starts_with("# manifest="));
    assert_eq!(
        lines.next().unwrap(),
        "t_us,omega,abs_omega,delta_G,delta_1,delta_2,delta_3,E,F"
    );
    assert!(dir.path().join("hardness.csv").exists());
}

#[test]
fn pipeline_below_threshold_exit_4() {
    let dir = TempDir::new().unwrap();
    let out = rydqubo(
        dir.path(),
        &["pipeline", "--instance", "two_sat", "--threshold", "1.5"],
    );
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn pipeline_is_reproducible() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for d in [&a, &b] {
        let out = rydqubo(
            d.path(),
            &["--seed", "3", "pipeline", "--instance", "xor_sat"],
        );
        assert_eq!(out.status.code(), Some(0));
    }
    for f in ["trajectory.csv", "hardness.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs");
    }
    let ra = read_json(&a.path().join("result.json"));
    let rb = read_json(&b.path().join("result.json"));
    assert_eq!(ra["result"], rb["result"]);
    assert_eq!(ra["manifest"]["hash"], rb["manifest"]["hash"]);
}

#[test]
fn report_from_spectral_reproduces_table_values() {
    let dir = TempDir::new().unwrap();
    let out = rydqubo(
        dir.path(),
        &[
            "report",
            "--from-spectral",
            "two_sat:-0.15:0.30:4:4",
            "--from-spectral",
            "xor_sat:-0.30:0.60:6:2",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let hp: Vec<f64> = csv
        .lines()
        .skip(2)
        .map(|l| l.split(',').nth(6).unwrap().parse().unwrap())
        .collect();
    assert!((hp[0] - 27.25).abs() / 27.25 < 0.01, "{hp:?}");
    assert!((hp[1] - 1.13).abs() / 1.13 < 0.01, "{hp:?}");
}

#[test]
fn report_all_has_seven_rows_and_flags_unreproducible() {
    let dir = TempDir::new().unwrap();
    let out = rydqubo(dir.path(), &["report", "--all"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(2).collect();
    assert_eq!(rows.len(), 7);
    for name in ["qap", "clustering", "protein"] {
        let row = rows.iter().find(|r| r.starts_with(name)).unwrap();
        assert!(row.contains("not a reproduction target"), "{row}");
    }
}

#[test]
fn report_reads_hardness_files() {
    let dir = TempDir::new().unwrap();
    rydqubo(dir.path(), &["hardness", "--instance", "mixed"]);
    let f = dir.path().join("mixed.hardness.json");
    let out = rydqubo(dir.path(), &["report", f.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("mixed"));
}

#[test]
fn report_empty_or_malformed_exit_2() {
    let dir = TempDir::new().unwrap();
    assert_eq!(rydqubo(dir.path(), &["report"]).status.code(), Some(2));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"x\": 1}").unwrap();
    assert_eq!(
        rydqubo(dir.path(), &["report", bad.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        rydqubo(dir.path(), &["report", "--from-spectral", "a:b"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn layout_then_validate() {
    let dir = TempDir::new().unwrap();
    let out = rydqubo(
        dir.path(),
        &["--mode", "physical", "layout", "--instance", "xor_sat"],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let layout = dir.path().join("xor_sat.layout.json");
    let v = read_json(&layout);
    assert_eq!(v["layout"]["positions_um"].as_array().unwrap().len(), 3);
    let out = rydqubo(
        dir.path(),
        &[
            "--mode",
            "physical",
            "validate",
            "--instance",
            "xor_sat",
            "--layout",
            layout.to_str().unwrap(),
        ],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
}

#[test]
fn spectrum_lists_levels() {
    let dir = TempDir::new().unwrap();
    let out = rydqubo(dir.path(), &["spectrum", "--instance", "xor_sat"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("xor_sat.spectrum.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[1], "level,energy,degeneracy,states");
    assert!(lines[2].contains(",6,"));
}

#[test]
fn config_with_unknown_field_exit_2() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, "{\"limitz\": {}}").unwrap();
    let out = rydqubo(
        dir.path(),
        &[
            "--config",
            cfg.to_str().unwrap(),
            "encode",
            "--instance",
            "xor_sat",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}
