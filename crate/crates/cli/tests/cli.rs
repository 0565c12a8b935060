//! Exit-code contract and end-to-end behaviour of the binary.

use std::path::Path;
use std::process::{Command, Output};

fn sshdyn(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sshdyn"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn bad_configuration_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("odd.toml"), "n_sites = 5\n").unwrap();
    let out = sshdyn(&["relax", "--config", "odd.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
    assert!(stderr_of(&out).contains("even"));

    std::fs::write(dir.path().join("typo.toml"), "n_stes = 20\n").unwrap();
    let out = sshdyn(&["relax", "--config", "typo.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("n_stes"), "{}", stderr_of(&out));

    let out = sshdyn(
        &["run", "--superposition", "pair-ground-geometry", "--level", "20"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("pair level"), "{}", stderr_of(&out));
}

#[test]
fn failed_convergence_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = sshdyn(&["relax", "--n-sites", "8", "--max-sweeps", "1"], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", stderr_of(&out));
    assert!(stderr_of(&out).contains("did not converge"));
}

#[test]
fn numerical_blowup_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let out = sshdyn(
        &[
            "run", "--n-sites", "4", "--trajectories", "1", "--dt", "100",
            "--t-final", "4000", "--record-stride", "40", "--output", "junk.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(4), "{}", stderr_of(&out));
    assert!(stderr_of(&out).contains("non-finite"), "{}", stderr_of(&out));
}

#[test]
fn missing_metrics_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = sshdyn(&["metrics", "--input", "nope.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
}

/// The resolved config written next to the output reproduces the run byte
/// for byte when fed back in.
#[test]
fn resolved_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = sshdyn(
        &[
            "run", "--n-sites", "6", "--trajectories", "3", "--dt", "0.02",
            "--t-final", "1.0", "--record-stride", "10", "--seed", "12",
            "--workers", "2", "--watched-levels", "3,4", "--output", "a.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let out = sshdyn(
        &["run", "--config", "a.resolved.toml", "--output", "b.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);

    let out = sshdyn(&["metrics", "--input", "a.csv"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("peak envelope"));
}

#[test]
fn sample_check_validates_moments() {
    let dir = tempfile::tempdir().unwrap();
    let out = sshdyn(
        &["sample-check", "--n-sites", "6", "--samples", "500"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("consistent"));
}

#[test]
fn modes_table_goes_to_requested_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = sshdyn(
        &["modes", "--n-sites", "8", "--output", "modes.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr_of(&out));
    let table = std::fs::read_to_string(dir.path().join("modes.csv")).unwrap();
    assert!(table.starts_with("j, omega_fs_inv, omega_eV, participation"));
    assert_eq!(table.lines().count(), 7);
}
