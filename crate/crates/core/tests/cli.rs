use std::path::Path;
use std::process::{Command, Output};

use iontrap::output::{manifest_files, sha256_hex};

fn iontrap(args: &[&str], out_root: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iontrap"))
        .args(args)
        .env("IONTRAP_OUT_DIR", out_root)
        .output()
        .expect("binary runs")
}

#[test]
fn run_ghz_passes_and_writes_manifest() {
    let root = tempfile::tempdir().unwrap();
    let out = iontrap(&["run", "ghz"], root.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.lines().any(|l| l.starts_with("PASS fidelity")));
    let manifest = std::fs::read_to_string(root.path().join("ghz").join("manifest.txt")).unwrap();
    let files = manifest_files(&manifest);
    assert!(!files.is_empty());
    for (name, digest) in files {
        let bytes = std::fs::read(root.path().join("ghz").join(&name)).unwrap();
        assert_eq!(sha256_hex(&bytes), digest, "{name}");
    }
}

#[test]
fn unevolved_ghz_fails_fidelity() {
    let root = tempfile::tempdir().unwrap();
    let out = iontrap(&["run", "ghz", "--set", "t=0"], root.path());
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.lines().any(|l| l.starts_with("FAIL fidelity")));
}

#[test]
fn list_prints_catalog() {
    let root = tempfile::tempdir().unwrap();
    let out = iontrap(&["list"], root.path());
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 8);
    for name in [
        "ghz",
        "ghz_counter",
        "jcm2mode",
        "cat_half_revival",
        "downconvert2",
        "downconvert3",
        "adiabatic_check",
        "linear_coupler",
    ] {
        assert!(
            stdout.lines().any(|l| l.split_whitespace().next() == Some(name)),
            "{name}"
        );
    }
}

#[test]
fn unknown_key_exits_two_naming_key() {
    let root = tempfile::tempdir().unwrap();
    let out = iontrap(&["run", "ghz", "--set", "lambdaa=2"], root.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lambdaa"));
}

#[test]
fn bad_value_exits_two_naming_key() {
    let root = tempfile::tempdir().unwrap();
    let out = iontrap(&["run", "ghz", "--set", "dim_x=banana"], root.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dim_x"));
}

#[test]
fn unknown_subcommand_exits_two() {
    let root = tempfile::tempdir().unwrap();
    assert_eq!(iontrap(&["frobnicate"], root.path()).status.code(), Some(2));
}

#[test]
fn rerun_from_manifest_is_bit_identical() {
    let root = tempfile::tempdir().unwrap();
    let first = root.path().join("first");
    let second = root.path().join("second");
    let f = first.to_str().unwrap();
    let s = second.to_str().unwrap();
    assert_eq!(
        iontrap(&["run", "linear_coupler", "--json", "--out", f], root.path())
            .status
            .code(),
        Some(0)
    );
    let manifest = first.join("manifest.txt");
    let out = iontrap(
        &[
            "run",
            "--from-manifest",
            manifest.to_str().unwrap(),
            "--json",
            "--out",
            s,
        ],
        root.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let a = std::fs::read(first.join("manifest.txt")).unwrap();
    let b = std::fs::read(second.join("manifest.txt")).unwrap();
    assert_eq!(a, b);
    for (name, _) in manifest_files(&String::from_utf8(a).unwrap()) {
        assert_eq!(
            std::fs::read(first.join(&name)).unwrap(),
            std::fs::read(second.join(&name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn sweep_writes_collated_table() {
    let root = tempfile::tempdir().unwrap();
    let out = iontrap(&["sweep", "ghz", "--axis", "t", "--values", "0,pi/8,pi/4"], root.path());
    assert_eq!(out.status.code(), Some(1), "t=0 and t=pi/8 miss the target");
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("PASS t=pi/4"), "{stdout}");
    assert!(std::fs::read_dir(root.path().join("ghz_sweep_t")).unwrap().count() >= 1);
}

#[test]
fn validate_reports_resonance() {
    let root = tempfile::tempdir().unwrap();
    let out = iontrap(&["validate", "--set", "m=2", "--set", "n=1"], root.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS detuning_a"));
}
