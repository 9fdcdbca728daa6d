use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_coda-lab"));
    c.env_remove("CODA_LAB_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn coda-lab")
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let j = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(j).unwrap().to_string()).collect()
}

#[test]
fn kurtosis_k5() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "diagnostics",
        "--experiment",
        "kurtosis",
        "--k",
        "5",
        "--reps",
        "100000",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(csv, String::from_utf8(out.stdout).unwrap());
    let p: f64 = column(&csv, "p_hat")[0].parse().unwrap();
    assert!((p - 0.82).abs() < 0.01, "p = {p}");
}

#[test]
fn missing_config_is_a_config_error() {
    let out = run(&["stratified", "--config", "/nonexistent/x.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_subcommand_and_experiment() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["norm", "--experiment", "nope", "--dry-run"]).status.code(), Some(2));
    assert_eq!(run(&["norm", "--set", "bogus=1", "--dry-run"]).status.code(), Some(2));
}

#[test]
fn invalid_values_exit_2() {
    assert_eq!(run(&["diagnostics", "--experiment", "kurtosis", "--reps", "1", "--dry-run"]).status.code(), Some(2));
    assert_eq!(run(&["stratified", "--threads", "0", "--reps", "2", "--n", "10"]).status.code(), Some(2));
}

#[test]
fn schema_is_checked() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.json");
    fs::write(&p, r#"{"experiment": "coin"}"#).unwrap();
    assert_eq!(run(&["games", "--config", p.to_str().unwrap(), "--dry-run"]).status.code(), Some(2));
    fs::write(&p, r#"{"schema": 1, "experiment": "coin"}"#).unwrap();
    assert!(run(&["games", "--config", p.to_str().unwrap(), "--dry-run"]).status.success());
}

#[test]
fn dry_run_prints_resolved_config() {
    let out = run(&["wn-linear", "--experiment", "plug-in", "--seed", "9", "--dry-run"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let json: serde_json::Value = serde_json::from_str(text.strip_prefix("ok ").unwrap().trim()).unwrap();
    assert_eq!(json["seed"], 9);
    assert_eq!(json["k"], 100_000);
    assert_eq!(json["schema"], 1);
}

#[test]
fn shipped_configs_load() {
    let mut seen = 0;
    for entry in fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_stem().unwrap().to_str().unwrap().to_string();
        let sub = ["wn-linear", "wn-adversarial", "partial-linear", "norm", "stratified", "stopping", "games", "diagnostics"]
            .into_iter()
            .find(|s| name.starts_with(&format!("{s}-")))
            .unwrap_or_else(|| panic!("{name}: no subcommand prefix"));
        let out = run(&[sub, "--config", path.to_str().unwrap(), "--dry-run"]);
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        seen += 1;
    }
    assert!(seen >= 21);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |d: &Path, threads: &str| {
        vec![
            "stratified".to_string(),
            "--n".into(),
            "[100, 400]".into(),
            "--reps".into(),
            "300".into(),
            "--threads".into(),
            threads.into(),
            "--plot".into(),
            "--out".into(),
            d.to_str().unwrap().into(),
        ]
    };
    assert!(bin().args(args(a.path(), "1")).output().unwrap().status.success());
    assert!(bin().args(args(b.path(), "3")).output().unwrap().status.success());
    let ca = fs::read(a.path().join("results.csv")).unwrap();
    assert_eq!(ca, fs::read(b.path().join("results.csv")).unwrap());
    let svg = fs::read_to_string(a.path().join("plot.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn coin_game_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let game = dir.path().join("g.json");
    fs::write(
        &game,
        r#"{"actions": 2, "loss": [[0, 1], [1, 0]], "pmf": [[0.6, 0.4], [0.4, 0.6]]}"#,
    )
    .unwrap();
    let out = run(&["games", "--experiment", "game", "--game", game.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unattackable_estimator_exits_3() {
    let out = run(&["wn-adversarial", "--n", "1000", "--k", "1000", "--reps", "10000", "--set", "tau2=1e6", "--out", "/nonexistent"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
