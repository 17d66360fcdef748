use std::path::PathBuf;
use std::process::{Command, Output};

fn dcpay(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dcpay"))
        .args(args)
        .env_remove("DCP_SEED")
        .output()
        .expect("binary runs")
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .display()
        .to_string()
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn run_is_reproducible() {
    let path = fixture("drive_through.json");
    let a = dcpay(&["run", &path, "--format", "json"]);
    let b = dcpay(&["run", &path, "--format", "json"]);
    assert_eq!(a.stdout, b.stdout);
    let report = json(&a);
    assert_eq!(report["decision"]["outcome"]["kind"], "unique_payer");
    assert_eq!(report["oracle_agrees"], true);
}

#[test]
fn seed_flag_overrides_environment() {
    let path = fixture("drive_through.json");
    let flag = json(&dcpay(&["--seed", "42", "run", &path, "--format", "json"]));
    let env = Command::new(env!("CARGO_BIN_EXE_dcpay"))
        .args(["run", &path, "--format", "json"])
        .env("DCP_SEED", "42")
        .output()
        .unwrap();
    assert_eq!(flag, json(&env));
    assert_eq!(flag["seed"], 42);
    let both = Command::new(env!("CARGO_BIN_EXE_dcpay"))
        .args(["--seed", "43", "run", &path, "--format", "json"])
        .env("DCP_SEED", "42")
        .output()
        .unwrap();
    assert_eq!(json(&both)["seed"], 43);
}

#[test]
fn parse_toll() {
    let v = json(&dcpay(&["parse", "Hey DashCam, pay for toll.", "--format", "json"]));
    assert_eq!(v["use_case"], "toll");
    assert!(v["slot"].is_null());
}

#[test]
fn parse_scores_the_bundled_corpus() {
    let v = json(&dcpay(&["parse", "--corpus", &fixture("corpus.tsv"), "--format", "json"]));
    assert_eq!(v["accuracy"], 1.0);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(dcpay(&["run", "--bogus"]).status.code(), Some(2));
}

#[test]
fn missing_scenario_exits_one() {
    let out = dcpay(&["run", "/nonexistent/ride.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn bench_reports_budget() {
    let v = json(&dcpay(&["bench", "--profile", "test", "--format", "json"]));
    assert_eq!(v["within_budget"], true);
}

#[test]
fn gen_makes_embeddings_explicit() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ride.json");
    let status = dcpay(&["gen", &fixture("drive_through.json"), "--out", out.to_str().unwrap()]);
    assert!(status.status.success());
    let generated: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(generated["passengers"][0]["face"].as_array().unwrap().len(), 128);

    let original = json(&dcpay(&["run", &fixture("drive_through.json"), "--format", "json"]));
    let replay = json(&dcpay(&["run", out.to_str().unwrap(), "--format", "json"]));
    assert_eq!(original["decision"], replay["decision"]);
}

#[test]
fn batch_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("trials.csv");
    let out = dcpay(&[
        "batch",
        &fixture("drive_through.json"),
        "--trials",
        "3",
        "--csv",
        csv.to_str().unwrap(),
        "--format",
        "json",
    ]);
    json(&out);
    assert_eq!(std::fs::read_to_string(csv).unwrap().lines().count(), 4);
}
