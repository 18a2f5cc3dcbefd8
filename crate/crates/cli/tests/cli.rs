use std::path::Path;
use std::process::{Command, Output};

use kreboot::FittedModel;

fn kreboot(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kreboot"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn arg(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn fit_writes_model_history_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fit");
    let run = kreboot(&["fit", "--c0", "0.5", "--kmax", "2000", "--m", "500", "--out", arg(&out)]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));

    let model = FittedModel::load(&out.join("model.json")).unwrap();
    assert_eq!(model.coefficients.len(), 500);
    let l1: f64 = model.coefficients.iter().map(|a| a.abs()).sum();
    assert!(l1 <= 0.5 * 2001f64.ln() * (1.0 + 1e-12));

    let history = read(&out.join("history.csv"));
    let mut lines = history.lines();
    assert_eq!(lines.next(), Some("k,index,alpha,beta,correlation,risk,l1_norm"));
    assert_eq!(lines.count(), 2000);

    let manifest: serde_json::Value = serde_json::from_str(&read(&out.join("manifest.json"))).unwrap();
    assert_eq!(manifest["command"], "fit");
    assert_eq!(manifest["seed"], 42);
    assert_eq!(manifest["c0"], 0.5);
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert!(manifest["prng"].as_str().unwrap().starts_with("chacha20"));
}

#[test]
fn predict_with_zero_model_gives_zeros() {
    let dir = tempfile::tempdir().unwrap();
    let model_path = dir.path().join("zero.json");
    std::fs::write(
        &model_path,
        r#"{"anchors":[[0,0,0],[0.5,0,0]],"coefficients":[0,0],"kernel":{"profile":"wendland31"},
            "alpha_schedule":{"kind":"harmonic"},"ell_schedule":{"kind":"logarithmic","c0":0.5}}"#,
    )
    .unwrap();
    let data = dir.path().join("inputs.csv");
    std::fs::write(&data, "x1,x2,x3\n0.1,0.2,0.3\n0,0,0\n-0.4,0.1,0.2\n").unwrap();
    let out = dir.path().join("pred");
    let run = kreboot(&[
        "predict",
        "--model",
        arg(&model_path),
        "--data",
        arg(&data),
        "--out",
        arg(&out),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let text = read(&out.join("predictions.csv"));
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "x1,x2,x3,prediction");
    assert_eq!(rows.len(), 4);
    for row in &rows[1..] {
        assert_eq!(row.rsplit(',').next(), Some("0"));
    }
}

#[test]
fn predict_reproduces_fitted_values() {
    let dir = tempfile::tempdir().unwrap();
    let fit_out = dir.path().join("fit");
    let run = kreboot(&["fit", "--m", "60", "--kmax", "50", "--out", arg(&fit_out)]);
    assert!(run.status.success());
    let pred_out = dir.path().join("pred");
    let run = kreboot(&[
        "predict",
        "--model",
        arg(&fit_out.join("model.json")),
        "--data",
        arg(&fit_out.join("train.csv")),
        "--out",
        arg(&pred_out),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(read(&pred_out.join("predictions.csv")).lines().count(), 61);
}

#[test]
fn sim3_smoke_table_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim3");
    let run = kreboot(&["sim3", "--trials", "2", "--kmax", "200", "--out", arg(&out)]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let table = read(&out.join("sim3_table.csv"));
    let rows: Vec<Vec<&str>> = table.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 5);
    assert_eq!(
        &rows[0][5..],
        ["KReBooT", "KRboosting", "KRTboosting", "eps-Kboosting", "Klasso", "KRR"]
    );
    for row in &rows[1..] {
        assert_eq!(row.len(), 11);
        assert!(row[5..].iter().all(|cell| cell.contains('±')));
    }
}

#[test]
fn manifest_reruns_to_identical_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a");
    let run = kreboot(&[
        "sim45",
        "--trials",
        "3",
        "--kmax",
        "120",
        "--m",
        "60",
        "--out",
        arg(&out),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let first = read(&out.join("sim45.csv"));

    let again = dir.path().join("b");
    let run = kreboot(&[
        "sim45",
        "--config",
        arg(&out.join("manifest.json")),
        "--jobs",
        "4",
        "--out",
        arg(&again),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(first, read(&again.join("sim45.csv")));
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    std::fs::write(&config, r#"{"m": 40, "kmax": 30, "c0": 2.0, "seed": 9}"#).unwrap();
    let out = dir.path().join("fit");
    let run = kreboot(&["fit", "--config", arg(&config), "--c0", "0.25", "--out", arg(&out)]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let manifest: serde_json::Value = serde_json::from_str(&read(&out.join("manifest.json"))).unwrap();
    assert_eq!(manifest["c0"], 0.25);
    assert_eq!(manifest["m"], 40);
    assert_eq!(manifest["seed"], 9);
    assert_eq!(read(&out.join("history.csv")).lines().count(), 31);
}

#[test]
fn rates_reports_slope() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rates");
    let run = kreboot(&["rates", "--out", arg(&out)]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let report: serde_json::Value = serde_json::from_str(&read(&out.join("rates_report.json"))).unwrap();
    assert!(report["slope"].as_f64().unwrap() <= -0.8);
    assert!(report["r_squared"].as_f64().unwrap() >= 0.9);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    for args in [
        vec!["fit", "--c0", "-1"],
        vec!["fit", "--kmax", "0"],
        vec!["fit", "--method", "adaboost"],
        vec!["fit", "--alpha", "2"],
        vec!["predict"],
        vec!["frobnicate"],
    ] {
        let mut full = args.clone();
        full.extend(["--out", arg(&out)]);
        let run = kreboot(&full);
        assert_eq!(
            run.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&run.stderr)
        );
    }
    let run = kreboot(&["fit", "--c0", "-1", "--out", arg(&out)]);
    assert!(String::from_utf8_lossy(&run.stderr).contains("c0"));
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    std::fs::write(&config, r#"{"kmaxx": 10}"#).unwrap();
    let run = kreboot(&["fit", "--config", arg(&config), "--out", arg(&dir.path().join("x"))]);
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("kmaxx"));
}

#[test]
fn missing_files_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let run = kreboot(&[
        "predict",
        "--model",
        "/nonexistent/model.json",
        "--data",
        "/nonexistent/x.csv",
        "--out",
        arg(&out),
    ]);
    assert_eq!(run.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&run.stderr).contains("/nonexistent/model.json"));
    let run = kreboot(&["fit", "--data", "/nonexistent/train.csv", "--out", arg(&out)]);
    assert_eq!(run.status.code(), Some(3));
    let run = kreboot(&["fit", "--config", "/nonexistent/run.json", "--out", arg(&out)]);
    assert_eq!(run.status.code(), Some(3));
}

#[test]
fn degenerate_rate_window_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let run = kreboot(&["rates", "--kmax", "1", "--out", arg(&dir.path().join("r"))]);
    assert_eq!(run.status.code(), Some(4), "{}", String::from_utf8_lossy(&run.stderr));
}
