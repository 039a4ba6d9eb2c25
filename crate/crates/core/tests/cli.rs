//! The installed binary: exit codes, output files, reproducibility.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_schurpress"))
}

fn run_in(dir: &Path, args: &[&str], threads: &str) -> std::process::Output {
    bin().current_dir(dir).env("SCHURPRESS_THREADS", threads).args(args).output().unwrap()
}

#[test]
fn compress_default_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["compress", "--theta-deg", "13.5"], "1");
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 1);
    let text = std::fs::read_to_string(dir.path().join("schurpress-compress.json")).unwrap();
    let rows: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 4);
    assert!(rows[0]["amplitude_re"].is_number());
}

#[test]
fn bad_flags_exit_2_with_usage() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["sweep", "--no-such-flag"], "1");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    let out = run_in(dir.path(), &["compress"], "lots");
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn failed_check_exits_1() {
    // 10 trials cannot reject the two-copy width, so that row fails
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["trials", "--theta-deg", "13.5", "-M", "5", "--trials", "3", "--check", "--out", "t.csv"],
        "1",
    );
    assert_eq!(out.status.code(), Some(1));
    let report = std::fs::read_to_string(dir.path().join("t.check.csv")).unwrap();
    assert!(report.contains("false"));
}

#[test]
fn mle_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["mle", "--samples", "20000", "--theta-deg", "0,5,10,15,20,22.5", "--seed", "42"];
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "3"].iter().enumerate() {
        let name = format!("m{i}.csv");
        let mut full = args.to_vec();
        full.extend(["--out", &name]);
        assert!(run_in(dir.path(), &full, threads).status.success());
        outputs.push(std::fs::read(dir.path().join(name)).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs.remove(0)).unwrap();
    assert!(text.starts_with("theta_deg,z_true,v1,mse,v1_over_3,v1_over_2,games,k_fit\n"));
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn sweep_check_passes_for_z() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["sweep", "--axis", "Z", "--theta-deg", "0:22.5:2.25", "--check"], "0");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let text = std::fs::read_to_string(dir.path().join("schurpress-sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 12);
    assert!(dir.path().join("schurpress-sweep.check.csv").exists());
}
