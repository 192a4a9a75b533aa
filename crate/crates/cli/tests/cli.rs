use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn kservice(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kservice"))
        .current_dir(dir)
        .env_remove("KSERVICE_SEED")
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_out(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn random_instance(dir: &Path, seed: &str) {
    let out = kservice(dir, &["gen", "--kind", "random", "--params", r#"{"clients":7,"facilities":5}"#, "--seed", seed, "--out", "r.json"]);
    assert!(out.status.success());
}

#[test]
fn unknown_flag_exits_2_with_usage() {
    let dir = tempfile::tempdir().unwrap();
    let out = kservice(dir.path(), &["solve", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn bad_instance_generates_and_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let out = kservice(dir.path(), &["gen", "--kind", "bad", "--params", r#"{"k":2,"s":3,"delta":0.1,"ell":1}"#, "--out", "bad.json"]);
    assert!(out.status.success());
    let out = kservice(dir.path(), &["verify", "bad.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let table = String::from_utf8(out.stdout).unwrap();
    for check in ["gadget distances", "planted cost", "no optimal facility listed", "list cost >="] {
        let line = table.lines().find(|l| l.contains(check)).unwrap_or_else(|| panic!("no row for {check}"));
        assert!(line.starts_with("PASS"), "{line}");
    }
}

#[test]
fn tampered_bad_instance_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    kservice(dir.path(), &["gen", "--kind", "bad", "--params", r#"{"k":2,"s":2,"delta":0.1}"#, "--out", "bad.json"]);
    let path = dir.path().join("bad.json");
    let mut file: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    file["edges"][0][2] = 0.5.into();
    std::fs::write(&path, file.to_string()).unwrap();
    let out = kservice(dir.path(), &["verify", "bad.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).lines().any(|l| l.starts_with("FAIL")));
}

#[test]
fn solve_never_beats_the_oracle() {
    for seed in ["1", "2", "3"] {
        let dir = tempfile::tempdir().unwrap();
        random_instance(dir.path(), seed);
        for constraint in [r#"{"kind":"r_gather","r":[3,2]}"#, r#"{"kind":"r_capacity","r":[4,4]}"#, r#"{"kind":"outlier","m":1}"#] {
            let common = ["--instance", "r.json", "--k", "2", "--constraint", constraint, "--seed", seed];
            let sol = json_out(&kservice(dir.path(), &[&["solve", "--eta", "12"], &common[..]].concat()));
            let opt = json_out(&kservice(dir.path(), &[&["oracle"], &common[..]].concat()));
            let (s, o) = (sol["cost"].as_f64().unwrap(), opt["cost"].as_f64().unwrap());
            assert!(s >= o * (1.0 - 1e-9), "{constraint}: {s} < {o}");
        }
    }
}

#[test]
fn output_file_matches_stdout_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    random_instance(dir.path(), "5");
    let args = ["solve", "--instance", "r.json", "--k", "2", "--seed", "9", "--out", "s.json"];
    let a = json_out(&kservice(dir.path(), &args));
    let written: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("s.json")).unwrap()).unwrap();
    assert_eq!(a, written);
    assert_eq!(a, json_out(&kservice(dir.path(), &args)));
}

#[test]
fn seed_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    random_instance(dir.path(), "5");
    let run = |env: Option<&str>, args: &[&str]| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_kservice"));
        cmd.current_dir(dir.path()).env_remove("KSERVICE_SEED");
        if let Some(v) = env {
            cmd.env("KSERVICE_SEED", v);
        }
        json_out(&cmd.args(args).output().unwrap())
    };
    let base = ["list", "--instance", "r.json", "--k", "2", "--eta", "2", "--reps", "1"];
    assert_eq!(run(Some("44"), &base)["seed"], 44);
    assert_eq!(run(Some("44"), &base), run(None, &[&base[..], &["--seed", "44"]].concat()));
}

#[test]
fn partition_reports_infeasible_bounds_as_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    random_instance(dir.path(), "1");
    let out = kservice(dir.path(), &["partition", "--instance", "r.json", "--centers", "7,8", "--constraint", r#"{"kind":"r_capacity","r":[2,2]}"#]);
    assert_eq!(out.status.code(), Some(2));
    let out = kservice(dir.path(), &["partition", "--instance", "r.json", "--centers", "0,8"]);
    assert_eq!(out.status.code(), Some(2), "client 0 is not a facility");
}

#[test]
fn stream_solve_reports_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = kservice(
        dir.path(),
        &["gen", "--kind", "random", "--params", r#"{"clients":30,"facilities":5,"mode":"matrix"}"#, "--out", "m.json", "--stream-out", "m.txt"],
    );
    assert!(out.status.success());
    for (constraint, passes) in [(r#"{"kind":"r_gather","r":[5,5]}"#, 6), (r#"{"kind":"outlier","m":2}"#, 5)] {
        let args = ["stream-solve", "--instance", "m.json", "--stream", "m.txt", "--k", "2", "--eta", "6", "--reps", "2"];
        let v = json_out(&kservice(dir.path(), &[&args[..], &["--constraint", constraint, "--report-passes"]].concat()));
        assert_eq!(v["meta"]["passes"], passes);
        let assigned = v["assignment"].as_object().unwrap().len() + v["excluded"].as_array().unwrap().len();
        assert_eq!(assigned, 30);
    }
}
