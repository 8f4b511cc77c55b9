use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_weighted-fock");

static RUNS: AtomicUsize = AtomicUsize::new(0);

fn run(dir: &Path, sub: &str, config: &str, extra: &[&str]) -> (i32, std::path::PathBuf) {
    let n = RUNS.fetch_add(1, Ordering::Relaxed);
    let cfg = dir.join(format!("{sub}-{n}.json"));
    fs::write(&cfg, config).unwrap();
    let out = dir.join(format!("{sub}-{n}"));
    let status = Command::new(BIN)
        .arg(sub)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(extra)
        .status()
        .unwrap();
    (status.code().unwrap(), out)
}

fn summary(out: &Path, name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join(format!("{name}.json"))).unwrap()).unwrap()
}

const GAUSSIAN: &str = r#"{"family": "gaussian", "params": {"t": 1.0}}"#;

#[test]
fn malformed_key_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(r#"{{"weight": {GAUSSIAN}, "resolutoin": 64}}"#);
    let (code, out) = run(dir.path(), "kernel-diag", &cfg, &[]);
    assert_eq!(code, 2);
    assert!(!out.exists());

    let cfg = format!(r#"{{"weight": {GAUSSIAN}, "degree": 80}}"#);
    let (code, out) = run(dir.path(), "kernel-diag", &cfg, &[]);
    assert_eq!(code, 2);
    assert!(!out.exists());
}

#[test]
fn constants_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(r#"{{"weight": {GAUSSIAN}, "m_bound": 4.0, "b_resolution": 64}}"#);
    let (code, out) = run(dir.path(), "constants", &cfg, &[]);
    assert_eq!(code, 0);
    let csv = fs::read_to_string(out.join("constants.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "# schema: weighted-fock/constants/v1");
    assert_eq!(lines.len(), 3);
    let header: Vec<&str> = lines[1].split(',').collect();
    let row: Vec<f64> = lines[2].split(',').map(|v| v.parse().unwrap()).collect();
    let get = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];
    assert!((get("B_used") - 0.886_294_361).abs() < 1e-5);
    assert_eq!(get("bracket_lo"), 0.0);
    assert!((get("bracket_hi") - 2.1972).abs() < 1e-4);
    assert_eq!(get("neg_M_over_4"), -1.0);
    assert!(get("phi0") >= -1.0);
}

#[test]
fn verify_bound_passes_for_gaussian() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        r#"{{"weight": {GAUSSIAN}, "b_resolution": 64, "grid": {{"kind": "disk", "radius": 2.0, "spacing": 0.25}}}}"#
    );
    let (code, out) = run(dir.path(), "verify-bound", &cfg, &["--degree", "30", "--resolution", "96"]);
    assert_eq!(code, 0);
    let s = summary(&out, "verify-bound");
    let r = &s["result"];
    assert_eq!(r["pass"], Value::Bool(true));
    for key in ["constant_C", "measured_sup", "B_used", "M", "N", "resolution"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    assert_eq!(r["N"], 30);
    assert_eq!(r["resolution"], 96);
    let csv = fs::read_to_string(out.join("verify-bound.csv")).unwrap();
    assert!(csv.starts_with("# schema: weighted-fock/verify-bound/v1\nz_re,z_im,K_N_exp_neg_phi,C,margin\n"));
}

#[test]
fn inequivalent_weights_fail_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        r#"{{"weight": {GAUSSIAN}, "weight_b": {{"family": "gaussian", "params": {{"t": 0.5}}}}}}"#
    );
    let (code, out) = run(dir.path(), "equivalence", &cfg, &[]);
    assert_eq!(code, 4);
    assert_eq!(summary(&out, "equivalence")["result"]["equivalent"], Value::Bool(false));
}

#[test]
fn equivalence_to_segal_bargmann() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
        "weight": {"family": "gaussian_harmonic", "params": {"a": 1.0, "b_re": 0.3}},
        "weight_b": {"family": "gaussian_harmonic", "params": {"a": 1.0, "d": 1.1447298858494002}},
        "degree": 30, "resolution": 96, "samples": 5
    }"#;
    let (code, out) = run(dir.path(), "equivalence", cfg, &[]);
    assert_eq!(code, 0);
    let csv = fs::read_to_string(out.join("equivalence.csv")).unwrap();
    assert!(csv.lines().nth(1) == Some("k,p_re,p_im"));
    assert!(csv.lines().count() >= 3);
}

#[test]
fn sweep_rows_and_rejections() {
    let dir = tempfile::tempdir().unwrap();
    let entry = |eps: f64| {
        format!(
            r#"{{"experiment": "constants", "b_resolution": 32, "resolution": 64,
                "weight": {{"family": "oscillatory", "params": {{"a": 1.0, "eps": {eps}}}}}}}"#
        )
    };
    let cfg = format!(r#"{{"configs": [{}, {}, {}]}}"#, entry(0.0), entry(0.5), entry(1.0));
    let (code, out) = run(dir.path(), "sweep", &cfg, &[]);
    assert_eq!(code, 0);
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(csv.as_bytes());
    let values: Vec<f64> = rdr
        .records()
        .map(|r| r.unwrap()[6].parse().unwrap())
        .collect();
    assert_eq!(values.len(), 3);
    // Phi(0) grows with the oscillation amplitude.
    assert!(values.windows(2).all(|w| w[0] < w[1]), "{values:?}");

    let (code, out) = run(dir.path(), "sweep", r#"{"configs": []}"#, &[]);
    assert_eq!(code, 0);
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);

    let mixed = format!(
        r#"{{"configs": [{}, {{"experiment": "mean-value"}}]}}"#,
        entry(0.0)
    );
    let (code, out) = run(dir.path(), "sweep", &mixed, &[]);
    assert_eq!(code, 2);
    assert!(!out.exists());
}

#[test]
fn sweep_records_entry_failures() {
    let dir = tempfile::tempdir().unwrap();
    // A cubic harmonic addend makes the second weight non-integrable.
    let cfg = format!(
        r#"{{"configs": [
            {{"experiment": "kernel-diag", "weight": {GAUSSIAN}, "degree": 10, "resolution": 32,
              "grid": {{"kind": "points", "points": [[0.0, 0.0]]}}}},
            {{"experiment": "kernel-diag",
              "weight": {{"family": "gaussian", "params": {{"t": 1.0}}, "harmonic": [[0, 0], [0, 0], [0, 0], [1, 0]]}},
              "degree": 10, "resolution": 32, "grid": {{"kind": "points", "points": [[0.5, 0.0]]}}}}
        ]}}"#
    );
    let (code, out) = run(dir.path(), "sweep", &cfg, &[]);
    assert_eq!(code, 3);
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[2].contains(",ok,true,"));
    assert!(lines[3].contains(",error,false,"));

    // M = 1 is below the Laplacian 4, so no potential can be built.
    let bad = format!(r#"{{"weight": {GAUSSIAN}, "m_bound": 1.0, "b_resolution": 32}}"#);
    let (code, out) = run(dir.path(), "potential", &bad, &[]);
    assert_eq!(code, 3);
    let s = summary(&out, "potential");
    assert_eq!(s["status"], "numeric_failure");
    assert!(!out.join("potential.csv").exists());
}

#[test]
fn mean_value_without_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mv");
    let status = Command::new(BIN)
        .args(["mean-value", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = fs::read_to_string(out.join("mean-value.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2 + 8);
}
