use std::path::Path;
use std::process::{Command, Output};

fn cptree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cptree"))
        .args(args)
        .env_remove("CP_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = cptree(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn golden(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(path).unwrap()
}

fn value(report: &str, key: &str) -> String {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {report}"))
        .to_string()
}

#[test]
fn bounds_period_two() {
    let r = stdout(&["bounds", "--degrees", "3,4"]);
    assert_eq!(value(&r, "lambda_g"), "0.223607");
    assert_eq!(value(&r, "lambda1_upper"), "0.405827");
    assert_eq!(value(&r, "lambda_ell"), "0.267949");
}

#[test]
fn bounds_period_three_and_subcritical() {
    let r = stdout(&["bounds", "--degrees", "2,3,4"]);
    let num = |key: &str| value(&r, key).parse::<f64>().unwrap();
    assert!((num("x0") - 11.847).abs() < 1e-3);
    assert!((num("lambda_ell_lower") - 0.2905).abs() < 1e-4);
    assert!((num("lambda1_upper") - 0.5306).abs() < 1e-4);
    assert!(value(&r, "published_lambda_g").contains("inconsistent"));
    let r = stdout(&["bounds", "--degrees", "1,1"]);
    assert_eq!(value(&r, "lambda1_upper"), "unavailable");
}

#[test]
fn golden_tables() {
    assert_eq!(stdout(&["table", "period3_x0"]), golden("period3_x0.csv"));
    assert_eq!(stdout(&["table", "period3_lambda1"]), golden("period3_lambda1.csv"));
    assert_eq!(
        stdout(&["predict", "--degrees", "1,1000", "--n-range", "200:1000:200"]),
        golden("predict_1_n.csv")
    );
}

#[test]
fn table_rows_match_published_values() {
    let csv = stdout(&["table", "period3_x0"]);
    assert!(csv.contains("\n3,4,5,15.887,15.887,0.2509,0.2509\n"));
    assert!(csv.contains("\n4,6,8,23.693,23.693,0.2054,0.2054\n"));
    let csv = stdout(&["table", "period3_lambda1"]);
    assert!(csv.lines().last().unwrap().ends_with(",0.1464,0.1464"));
}

#[test]
fn predict_constants() {
    let row = |degrees: &str| {
        let csv = stdout(&["predict", "--degrees", degrees]);
        csv.lines().nth(1).unwrap().split(',').nth(1).unwrap().to_string()
    };
    assert_eq!(row("1,1000"), "0.5");
    assert_eq!(row("1,1,1,50"), "1.5");
    assert_eq!(row("2,3,6"), "0.5");
}

#[test]
fn walks_running_max_is_nondecreasing() {
    let csv = stdout(&["walks", "--degrees", "3,4", "--nmax", "10"]);
    assert_eq!(csv, golden("walks_3_4.csv"));
    let maxes: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(maxes.len(), 10);
    assert!(maxes.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn simulate_is_deterministic_and_rerunnable_from_its_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let c = dir.path().join("c.csv");
    let args = ["simulate", "--degrees", "3,4", "--lambda", "0", "--replicas", "1000", "--seed", "7"];
    stdout(&[&args[..], &["--out", a.to_str().unwrap()]].concat());
    stdout(&[&args[..], &["--out", b.to_str().unwrap()]].concat());
    let first = std::fs::read(&a).unwrap();
    assert_eq!(first, std::fs::read(&b).unwrap());
    let manifest_path = dir.path().join("a.csv.manifest.json");
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&manifest_path).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "simulate");
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["params"]["horizon"], 100.0);
    assert_eq!(manifest["outputs"][0], a.to_str().unwrap());
    stdout(&["simulate", "--config", manifest_path.to_str().unwrap(), "--out", c.to_str().unwrap()]);
    assert_eq!(first, std::fs::read(&c).unwrap());
    let text = String::from_utf8(first).unwrap();
    assert!(text.starts_with("seed_index,extinct,extinction_time,root_visits,peak,events,truncated\n"));
    assert_eq!(text.lines().count(), 1001);
    assert!(text.ends_with('\n'));
}

#[test]
fn thread_count_does_not_change_output() {
    let args = ["simulate", "--degrees", "1,6", "--lambda", "0.4", "--replicas", "64", "--horizon", "10"];
    let one = Command::new(env!("CARGO_BIN_EXE_cptree")).args(args).env("CP_THREADS", "1").output().unwrap();
    let three = Command::new(env!("CARGO_BIN_EXE_cptree")).args(args).env("CP_THREADS", "3").output().unwrap();
    assert!(one.status.success() && three.status.success());
    assert_eq!(one.stdout, three.stdout);
}

#[test]
fn config_values_apply_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("star.json");
    std::fs::write(&config, r#"{"n": 3, "lambda": 0.5, "replicas": 5, "seed": 2}"#).unwrap();
    let from_config = stdout(&["star", "--config", config.to_str().unwrap()]);
    assert_eq!(from_config.lines().count(), 6);
    let overridden = stdout(&["star", "--config", config.to_str().unwrap(), "--replicas", "8"]);
    assert_eq!(overridden.lines().count(), 9);
    assert!(overridden.starts_with(&from_config[..from_config.find('\n').unwrap()]));
    std::fs::write(&config, r#"{"n": 3, "lambda": 0.5, "replica": 5}"#).unwrap();
    assert_eq!(cptree(&["star", "--config", config.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn sweep_rows_per_lambda() {
    let csv = stdout(&[
        "sweep",
        "--degrees",
        "1,100",
        "--lambda-grid",
        "0.05:0.25:0.02",
        "--replicas",
        "100",
        "--horizon",
        "5",
    ]);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("lambda,probability,ci_low,ci_high,replicas,survivors,truncated"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 11);
    for r in rows {
        assert!(r[2] <= r[1] && r[1] <= r[3]);
    }
}

#[test]
fn oracle_subcommands() {
    let csv = stdout(&["oracle", "graph", "--edges", "0-1", "--lambda", "1"]);
    assert_eq!(csv.lines().nth(1).unwrap().split(',').nth(2), Some("1.5"));
    let csv = stdout(&["oracle", "walks", "--degrees", "2", "--length", "2"]);
    assert_eq!(csv.lines().nth(1), Some("2,3,3,true"));
    let csv = stdout(&["oracle", "star", "--n", "5", "--lambda", "0"]);
    assert!(csv.contains("\n0,1,1\n"));
}

#[test]
fn exit_codes() {
    assert_eq!(cptree(&["bounds"]).status.code(), Some(1));
    assert_eq!(cptree(&["bounds", "--degrees", "3,x"]).status.code(), Some(1));
    assert_eq!(cptree(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(cptree(&["predict", "--degrees", "4,4"]).status.code(), Some(1));
    assert_eq!(cptree(&["walks", "--degrees", "3,4", "--nmax", "30"]).status.code(), Some(3));
    let path: Vec<String> = (0..14).map(|i| format!("{i}-{}", i + 1)).collect();
    assert_eq!(
        cptree(&["oracle", "graph", "--edges", &path.join(","), "--lambda", "1"]).status.code(),
        Some(3)
    );
    let bracket = [
        "lambda2", "--degrees", "1,20", "--replicas", "100", "--horizon", "10", "--lambda-lo", "3", "--lambda-hi", "4",
    ];
    assert_eq!(cptree(&bracket).status.code(), Some(2));
    assert_eq!(cptree(&["--help"]).status.code(), Some(0));
}
