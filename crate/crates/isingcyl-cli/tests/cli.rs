use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn isingcyl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isingcyl")).args(args).output().unwrap()
}

fn isingcyl_env(args: &[&str], key: &str, val: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isingcyl")).args(args).env(key, val).output().unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn partition_matches_enumeration() {
    let o = isingcyl(&["partition", "--L", "4", "--M", "2", "--beta", "0.44", "--J1", "1", "--J2", "1", "--verify"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["verify"]["pass"], true);
    assert!(v["verify"]["checks"][0]["value"].as_f64().unwrap() < 1e-10);
    assert!(v["results"]["z"].as_f64().unwrap() > 0.0);
}

#[test]
fn scaling_errors_decrease() {
    let o = isingcyl(&["scaling", "--t1", "0.5", "--points", "(0.3,0.4),(0.7,0.6)", "--halvings", "4"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let errs: Vec<f64> = json(&o)["results"]["series"].as_array().unwrap().iter().map(|r| r["error"].as_f64().unwrap()).collect();
    assert_eq!(errs.len(), 5);
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
}

#[test]
fn selftest_passes_every_criterion() {
    let o = isingcyl(&["selftest"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&o);
    let crit = v["results"]["criteria"].as_array().unwrap();
    assert_eq!(crit.len(), 11);
    for c in crit {
        assert_eq!(c["pass"], true, "{c}");
        assert!(!c["checks"].as_array().unwrap().is_empty());
    }
    assert_eq!(v["verify"]["pass"], true);
}

#[test]
fn outputs_are_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str, threads: &str| -> (Vec<u8>, Vec<u8>) {
        let csv = dir.path().join(format!("{tag}.csv"));
        let out = dir.path().join(format!("{tag}.json"));
        let o = isingcyl_env(
            &["propagator", "--L", "6", "--M", "3", "--t1", "0.3", "--csv", csv.to_str().unwrap(), "--out", out.to_str().unwrap()],
            "ISINGCYL_THREADS",
            threads,
        );
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        (std::fs::read(&out).unwrap(), std::fs::read(&csv).unwrap())
    };
    let a = run("a", "1");
    let b = run("b", "1");
    let c = run("c", "4");
    assert_eq!(a, b);
    assert_eq!(a, c);
    let k = |seed: &str| isingcyl(&["kernels", "--count", "10", "--battery", "3", "--seed", seed]).stdout;
    assert_eq!(k("5"), k("5"));
    assert_ne!(k("5"), k("6"));
}

#[test]
fn verify_leaves_outputs_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let run = |verify: bool| {
        let csv = dir.path().join(format!("{verify}.csv"));
        let mut args = vec!["propagator", "--L", "4", "--M", "3", "--csv", csv.to_str().unwrap()];
        if verify {
            args.push("--verify");
        }
        let o = isingcyl(&args);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        (json(&o), std::fs::read(&csv).unwrap())
    };
    let (plain, csv_plain) = run(false);
    let (checked, csv_checked) = run(true);
    assert_eq!(plain["meta"], checked["meta"]);
    assert_eq!(plain["results"], checked["results"]);
    assert_eq!(csv_plain, csv_checked);
    assert!(plain.get("verify").is_none());
    assert_eq!(checked["verify"]["pass"], true);
}

#[test]
fn csv_carries_metadata_header() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("decay.csv");
    let o = isingcyl(&["multiscale", "--L", "16", "--M", "16", "--t1", "0.5", "--fit-max", "6", "--csv", csv.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(&csv).unwrap();
    let hash = json(&o)["meta"]["config_hash"].as_str().unwrap().to_string();
    assert!(text.starts_with("# tool: isingcyl\n# version: "));
    assert!(text.contains(&format!("# config_hash: {hash}\n")));
    assert!(text.contains("# tolerances: boundary=1e-12;"));
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    assert_eq!(rdr.headers().unwrap(), vec!["part", "distance", "max_norm"]);
    assert!(rdr.records().count() > 4);
}

#[test]
fn config_hash_tracks_the_configuration() {
    let h = |args: &[&str]| json(&isingcyl(args))["meta"]["config_hash"].as_str().unwrap().to_string();
    let a = h(&["partition", "--L", "4", "--M", "2"]);
    assert_eq!(a, h(&["partition", "--L", "4", "--M", "2"]));
    assert_ne!(a, h(&["partition", "--L", "4", "--M", "3"]));
    assert_eq!(a.len(), 64);
}

#[test]
fn correlate_verifies_against_enumeration() {
    let o = isingcyl(&["correlate", "--edges", "h(1,1),v(3,2),h(4,3)", "--verify"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["results"]["subsets"].as_array().unwrap().len(), 7);
    assert_eq!(v["verify"]["pass"], true);
}

#[test]
fn config_errors_exit_with_one() {
    for (args, field) in [
        (vec!["propagator", "--L", "7"], "--L"),
        (vec!["propagator", "--M", "0"], "--M"),
        (vec!["propagator", "--t1", "1.5"], "--t1"),
        (vec!["partition", "--beta", "0.4", "--t1", "0.3"], "--beta"),
        (vec!["propagator", "--critical", "--t2", "0.3"], "--t2"),
        (vec!["propagator", "--tol", "nonsense=1"], "--tol"),
        (vec!["scaling", "--points", "(0.3,0.4)"], "--points"),
        (vec!["scaling", "--points", "(1.5,0.4),(0.2,0.2)"], "--points"),
        (vec!["correlate", "--edges", "v(1,3)"], "--edges"),
        (vec!["multiscale", "--L", "8", "--M", "8", "--h", "3"], "--h"),
        (vec!["correlate"], "--edges"),
        (vec!["bogus"], "bogus"),
    ] {
        let o = isingcyl(&args);
        assert_eq!(code(&o), 1, "{args:?}: {}", stderr(&o));
        assert!(stderr(&o).contains(field), "{args:?}: {}", stderr(&o));
    }
    let o = isingcyl_env(&["partition"], "ISINGCYL_THREADS", "zero");
    assert_eq!(code(&o), 1);
    assert_eq!(code(&isingcyl(&["--help"])), 0);
}

#[test]
fn verification_failure_exits_with_two_after_writing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = isingcyl(&["scaling", "--verify", "--tol", "ratio=0.1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("max_error_ratio"));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(Path::new(&out)).unwrap()).unwrap();
    assert_eq!(v["verify"]["pass"], false);
    assert_eq!(v["meta"]["tolerances"]["ratio"], 0.1);
}

#[test]
fn numerical_failure_exits_with_three() {
    let o = isingcyl(&["partition", "--L", "20", "--M", "20", "--beta", "2"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("numerical failure"));
}

#[test]
fn massive_propagator_checks_pfaffian_factorization() {
    let o = isingcyl(&["propagator", "--kind", "massive", "--t1", "0.3", "--t2", "0.6", "--verify"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(json(&o)["verify"]["pass"], true);
}
