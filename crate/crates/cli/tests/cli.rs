use std::path::PathBuf;
use std::process::{Command, Output};

fn levyprune(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_levyprune")).args(args).output().expect("binary runs")
}

fn config(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(format!("{name}.json")).display().to_string()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn list_names_every_experiment_and_oracle() {
    let out = levyprune(&["list", "--json"]);
    assert!(out.status.success());
    let items: Vec<serde_json::Value> = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(items.len() >= 11);
    for item in &items {
        assert!(!item["name"].as_str().unwrap().is_empty());
        assert!(!item["oracle"].as_str().unwrap().is_empty());
    }
    let text = stdout(&levyprune(&["list"]));
    assert_eq!(text.lines().count(), items.len());
    assert!(text.contains("height_law"));
}

#[test]
fn unknown_experiment_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("x.csv");
    let out = levyprune(&["verify", "no_such_thing", "--config", &config("height_law"), "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_path.exists());
}

#[test]
fn bad_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"family": {"type": "lineardrift", "kernel": {"b_rate": 1.0, "c": 1.0}}, "params": {"resolution": 10, "replicates": 1000, "seed": 1}}"#).unwrap();
    let out_path = dir.path().join("x.csv");
    let out = levyprune(&["verify", "height_law", "--config", bad.to_str().unwrap(), "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    std::fs::write(&bad, "{not json").unwrap();
    let out = levyprune(&["verify", "height_law", "--config", bad.to_str().unwrap(), "--out", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("h.csv");
    let out = levyprune(&[
        "verify",
        "height_law",
        "--config",
        &config("height_law"),
        "--replicates",
        "20000",
        "--seed",
        "5",
        "--workers",
        "2",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.code() == Some(0) || out.status.code() == Some(1));
    assert!(stdout(&out).starts_with("summary: experiment=height_law"));
    let csv = std::fs::read_to_string(&out_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("experiment,parameter,mc_estimate,mc_stderr,oracle_value,z_score,pass"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn mech_eval_prints_psi() {
    let out = levyprune(&["mech", "eval", "--mech", r#"{"b": 1.0, "c": 1.0, "m": []}"#, "--lambda", "1,2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let rows: Vec<Vec<f64>> =
        text.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows, vec![vec![1.0, 2.0, 3.0, 2.0], vec![2.0, 6.0, 5.0, 2.0]]);
}

#[test]
fn mech_inverse_of_quadratic() {
    let out = levyprune(&["mech", "invert", "--mech", r#"{"b": 0.0, "c": 1.0, "m": []}"#, "--value", "4"]);
    assert!(out.status.success());
    let value: f64 = stdout(&out).lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((value - 2.0).abs() < 1e-12);
}
