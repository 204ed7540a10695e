use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use minar::model::MinarModel;
use tempfile::TempDir;

fn minar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_minar"))
        .args(args)
        .env_remove("MINAR_SEED")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn study_model_file(dir: &TempDir) -> PathBuf {
    let p = path(dir, "model.json");
    fs::write(&p, MinarModel::study_model().to_json_string().unwrap()).unwrap();
    p
}

#[test]
fn simulate_poisson_model_five_rows() {
    let dir = TempDir::new().unwrap();
    let model = path(&dir, "m.json");
    fs::write(
        &model,
        r#"{"n": 1, "A": [[0.0]], "innovations": {"mode": "constant", "lambda": [1.0]}}"#,
    )
    .unwrap();
    let out = path(&dir, "s.csv");
    let o = minar(&["simulate", "--model", s(&model), "--length", "5", "--seed", "3", "-o", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,x1");
    assert_eq!(lines.len(), 6);
    assert_eq!(lines[1].split(',').next(), Some("1"));
}

#[test]
fn simulate_is_byte_identical_and_seed_sensitive() {
    let dir = TempDir::new().unwrap();
    let model = study_model_file(&dir);
    let run = |name: &str, seed: &str| {
        let out = path(&dir, name);
        let o = minar(&["simulate", "--model", s(&model), "--seed", seed, "-o", s(&out)]);
        assert_eq!(code(&o), 0);
        fs::read(out).unwrap()
    };
    let a = run("a.csv", "5");
    let b = run("b.csv", "5");
    let c = run("c.csv", "6");
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(String::from_utf8(a).unwrap().starts_with("t,x1,x2,x3\n"));
}

#[test]
fn seed_from_environment_and_flag_precedence() {
    let dir = TempDir::new().unwrap();
    let model = study_model_file(&dir);
    let env_out = path(&dir, "env.csv");
    let flag_out = path(&dir, "flag.csv");
    let o = Command::new(env!("CARGO_BIN_EXE_minar"))
        .args(["simulate", "--model", s(&model), "-o", s(&env_out)])
        .env("MINAR_SEED", "9")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(code(&minar(&["simulate", "--model", s(&model), "--seed", "9", "-o", s(&flag_out)])), 0);
    assert_eq!(fs::read(&env_out).unwrap(), fs::read(&flag_out).unwrap());

    let over = path(&dir, "over.csv");
    let o = Command::new(env!("CARGO_BIN_EXE_minar"))
        .args(["simulate", "--model", s(&model), "--seed", "10", "-o", s(&over)])
        .env("MINAR_SEED", "9")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_ne!(fs::read(&over).unwrap(), fs::read(&flag_out).unwrap());
}

#[test]
fn invalid_model_file_is_a_data_error() {
    let dir = TempDir::new().unwrap();
    let model = path(&dir, "bad.json");
    fs::write(&model, r#"{"n": 1, "A": [[1.5]], "innovations": {"mode": "constant", "lambda": [1.0]}}"#).unwrap();
    let out = path(&dir, "s.csv");
    let o = minar(&["simulate", "--model", s(&model), "-o", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(!out.exists());
    assert!(!o.stderr.is_empty());
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(code(&minar(&[])), 1);
    assert_eq!(code(&minar(&["fit"])), 1);
    assert_eq!(code(&minar(&["monitor", "--alpha", "abc"])), 1);
    let help = minar(&["--help"]);
    assert_eq!(code(&help), 0);
    let text = String::from_utf8_lossy(&help.stdout);
    for cmd in ["simulate", "fit", "monitor", "evaluate"] {
        assert!(text.contains(cmd));
    }
}

fn simulated(dir: &TempDir, length: &str, extra: &[&str]) -> PathBuf {
    let model = study_model_file(dir);
    let out = path(dir, "series.csv");
    let mut args = vec!["simulate", "--model", s(&model), "--length", length, "--seed", "2", "-o", s(&out)];
    args.extend_from_slice(extra);
    assert_eq!(code(&minar(&args)), 0);
    out
}

#[test]
fn fit_writes_report_and_table() {
    let dir = TempDir::new().unwrap();
    let series = simulated(&dir, "300", &[]);
    let report = path(&dir, "fit.json");
    let o = minar(&["fit", "-i", s(&series), "-o", s(&report)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("alpha_12") && stdout.contains("lambda_3"));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["theta"].as_array().unwrap().len(), 12);
    assert_eq!(json["se"].as_array().unwrap().len(), 12);
    assert_eq!(json["converged"], true);
}

#[test]
fn diagonal_layout_has_six_parameters() {
    let dir = TempDir::new().unwrap();
    let series = simulated(&dir, "200", &[]);
    let report = path(&dir, "fit.json");
    assert_eq!(code(&minar(&["fit", "-i", s(&series), "-o", s(&report), "--layout", "diagonal"])), 0);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["theta"].as_array().unwrap().len(), 6);
}

#[test]
fn non_convergence_exit_code_keeps_report() {
    let dir = TempDir::new().unwrap();
    let series = simulated(&dir, "200", &[]);
    let report = path(&dir, "fit.json");
    let o = minar(&["fit", "-i", s(&series), "-o", s(&report), "--max-iterations", "1"]);
    assert_eq!(code(&o), 3);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["converged"], false);
}

#[test]
fn malformed_csv_is_a_data_error_without_output() {
    let dir = TempDir::new().unwrap();
    let series = path(&dir, "bad.csv");
    fs::write(&series, "t,x1,x2\n1,3,4\n2,x,1\n").unwrap();
    let report = path(&dir, "fit.json");
    let o = minar(&["fit", "-i", s(&series), "-o", s(&report)]);
    assert_eq!(code(&o), 2);
    assert!(!report.exists());
}

#[test]
fn seasonal_fit_and_monitor_round_trip() {
    let dir = TempDir::new().unwrap();
    let series = path(&dir, "series.csv");
    let mut text = String::from("t,x1,x2,dow\n");
    for t in 1..=160 {
        let w = (3 * t) % 7 < 5;
        text.push_str(&format!("{t},{},{},{}\n", 1 + t % 3 + w as usize, 2 + t % 2, w as u8));
    }
    fs::write(&series, text).unwrap();
    let report = path(&dir, "fit.json");
    let o = minar(&[
        "fit", "-i", s(&series), "-o", s(&report), "--weekday-column", "dow", "--period", "122",
        "--layout", "diagonal",
    ]);
    assert!(code(&o) == 0 || code(&o) == 3, "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["design"]["period"], 122.0);
    assert_eq!(json["theta"].as_array().unwrap().len(), 2 + 2 * 4);

    let surv = path(&dir, "surv.csv");
    let o = minar(&["monitor", "--fit", s(&report), "-i", s(&series), "-o", s(&surv)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(&surv).unwrap().lines().count(), 160);
}

fn fitted_study(dir: &TempDir) -> PathBuf {
    let series = simulated(dir, "150", &[]);
    let report = path(dir, "fit.json");
    assert_eq!(code(&minar(&["fit", "-i", s(&series), "-o", s(&report)])), 0);
    report
}

#[test]
fn monitor_zero_data_has_no_alarms() {
    let dir = TempDir::new().unwrap();
    let report = fitted_study(&dir);
    let ops = path(&dir, "ops.csv");
    let mut text = String::from("t,x1,x2,x3\n");
    for t in 150..=200 {
        text.push_str(&format!("{t},0,0,0\n"));
    }
    fs::write(&ops, text).unwrap();
    let out = path(&dir, "surv.csv");
    let o = minar(&["monitor", "--fit", s(&report), "-i", s(&ops), "-o", s(&out)]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("no alarms"));
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("t,x1,x2,x3,ub1,ub2,ub3,flag1,flag2,flag3,alarm\n151,"));
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",0,0,0,0")));
}

#[test]
fn rule_one_needs_every_series() {
    let dir = TempDir::new().unwrap();
    let report = fitted_study(&dir);
    let ops = path(&dir, "ops.csv");
    fs::write(&ops, "t,x1,x2,x3\n150,3,3,3\n151,40,40,0\n152,40,40,40\n").unwrap();
    let run = |rule: &str| {
        let out = path(&dir, "surv.csv");
        let o = minar(&["monitor", "--fit", s(&report), "-i", s(&ops), "-o", s(&out), "--rule", rule]);
        assert_eq!(code(&o), 0);
        String::from_utf8_lossy(&o.stdout).to_string()
    };
    let all = run("1.0");
    assert!(!all.contains("t=151") && all.contains("t=152"));
    let majority = run("0.6");
    assert!(majority.contains("t=151") && majority.contains("t=152"));
}

#[test]
fn monitor_dimension_mismatch_fails() {
    let dir = TempDir::new().unwrap();
    let report = fitted_study(&dir);
    let ops = path(&dir, "ops.csv");
    fs::write(&ops, "t,x1,x2\n150,1,1\n151,2,2\n").unwrap();
    let out = path(&dir, "surv.csv");
    let o = minar(&["monitor", "--fit", s(&report), "-i", s(&ops), "-o", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(!out.exists());
}

#[test]
fn evaluate_single_replicate() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "eval");
    let o = minar(&["evaluate", "--replicates", "1", "--out-dir", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for (name, rows) in [("rates.csv", 10), ("arl.csv", 10)] {
        let text = fs::read_to_string(out.join(name)).unwrap();
        assert_eq!(text.lines().count(), rows, "{name}");
    }
    assert!(out.join("alarm_log.csv").exists());
    assert!(fs::read_to_string(out.join("conventions.txt")).unwrap().contains("censored"));
}

#[test]
fn evaluate_reports_every_spec_problem() {
    let dir = TempDir::new().unwrap();
    let spec = path(&dir, "spec.json");
    fs::write(&spec, r#"{"setup_length": 300, "alphas": [2.0], "replicates": 0}"#).unwrap();
    let out = path(&dir, "eval");
    let o = minar(&["evaluate", "--spec", s(&spec), "--out-dir", s(&out)]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("setup_length") && err.contains("alphas") && err.contains("replicates"));
    assert!(!out.exists());
}
