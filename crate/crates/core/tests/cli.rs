use std::fs;
use std::path::Path;
use std::process::Command;

use tempfile::TempDir;

fn run(args: &[&str]) -> i32 {
    let out = Command::new(env!("CARGO_BIN_EXE_pseudoellipsoid"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs");
    out.status.code().expect("exit code")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn audit_passes_and_writes_reports() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run(&["audit", "--out", path(dir.path())]), 0);
    for name in ["geometry", "lemma21", "lemma22", "lemma22_far", "lemma23_t1_25", "envelope", "multinomial", "constants"] {
        assert!(dir.path().join(format!("{name}.json")).exists(), "{name}");
    }
}

#[test]
fn halved_b2_is_caught() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("tampered.cfg");
    fs::write(&cfg, format!("override_b2 = {}\naudit_samples = 2000\n", 0.3535533905932738 / 2.0)).unwrap();
    assert_eq!(run(&["audit", "--config", path(&cfg), "--out", path(dir.path())]), 1);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("lemma21.json")).unwrap()).unwrap();
    assert!(!report["violations"].as_array().unwrap().is_empty());
}

#[test]
fn malformed_config_exits_2() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "steps = twenty\n").unwrap();
    assert_eq!(run(&["audit", "--config", path(&cfg)]), 2);
    fs::write(&cfg, "no_such_key = 1\n").unwrap();
    assert_eq!(run(&["build", "--config", path(&cfg)]), 2);
    assert_eq!(run(&["build", "--config", path(&dir.path().join("missing.cfg"))]), 2);
}

#[test]
fn build_is_deterministic_and_traces_run() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run(&["build", "--out", path(&a)]), 0);
    assert_eq!(run(&["build", "--out", path(&b)]), 0);
    let ck = a.join("checkpoint.json");
    assert_eq!(fs::read(&ck).unwrap(), fs::read(b.join("checkpoint.json")).unwrap());

    let csv = fs::read_to_string(a.join("diagnostics.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("ell,T,boundary_min,boundary_max,sum_a2beta,clamps"));
    assert_eq!(lines.count(), 20);
    let tail: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.join("ellinfty.json")).unwrap()).unwrap();
    assert_eq!(tail.as_array().unwrap().len(), 20);

    let t = dir.path().join("trace");
    let ck = path(&ck);
    assert_eq!(run(&["trace", "--checkpoint", ck, "--mode", "radial", "--out", path(&t)]), 0);
    assert_eq!(run(&["trace", "--checkpoint", ck, "--mode", "nonextend", "--out", path(&t)]), 0);
    assert_eq!(
        run(&["trace", "--checkpoint", ck, "--mode", "nonextend", "--theta0", "3.141592653589793", "--out", path(&t)]),
        0
    );
    assert_eq!(run(&["trace", "--checkpoint", ck, "--mode", "conjugate", "--out", path(&t)]), 0);
    for f in ["radial.csv", "nonextend.csv", "nonextend.json", "conjugate.csv"] {
        assert!(t.join(f).exists(), "{f}");
    }
}

#[test]
fn unreadable_checkpoint_exits_2() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    assert_eq!(run(&["trace", "--checkpoint", path(&bad), "--mode", "radial", "--out", path(dir.path())]), 2);
    let missing = dir.path().join("missing.json");
    assert_eq!(run(&["trace", "--checkpoint", path(&missing), "--mode", "radial", "--out", path(dir.path())]), 2);
}
