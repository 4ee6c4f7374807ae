//! Black-box tests of the command-line harness: argument handling, config
//! rejection paths, exit codes, and the files a successful run leaves
//! behind.

use std::path::Path;
use std::process::{Command, Output};

fn harness() -> Command {
    Command::new(env!("CARGO_BIN_EXE_oco-ltc"))
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("spawn harness")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, text).expect("write config");
    path
}

const TINY_RUN: &str = "\
[experiment]
algorithm = \"predictive\"
horizons = [40]
seeds = 2
c_exp = 0.5

[environment]
p = 2
m = 2
";

#[test]
fn run_without_config_fails_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(harness().arg("run").arg("--out").arg(dir.path()));
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr_of(&out));
    assert!(
        stderr_of(&out).contains("--config is required"),
        "stderr: {}",
        stderr_of(&out)
    );
}

#[test]
fn unknown_config_key_fails_with_exit_1_and_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[experiment]\nalgo = \"ogd\"\n");
    let out = run(harness()
        .arg("run")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out")));
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr_of(&out));
    let err = stderr_of(&out);
    assert!(err.contains("config.toml"), "stderr: {err}");
    assert!(err.contains("algo"), "stderr: {err}");
}

#[test]
fn sweep_with_too_few_horizons_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[experiment]\nhorizons = [10, 20, 40]\nseeds = 1\n",
    );
    let out = run(harness()
        .arg("sweep")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("out")));
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr_of(&out));
    let err = stderr_of(&out);
    assert!(err.contains("experiment.horizons"), "stderr: {err}");
    assert!(err.contains("at least 4"), "stderr: {err}");
}

#[test]
fn tiny_run_succeeds_and_writes_summary_and_traces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY_RUN);
    let out_dir = dir.path().join("out");
    let out = run(harness()
        .arg("run")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .arg("--jobs")
        .arg("2"));
    assert_eq!(
        out.status.code(),
        Some(0),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        stderr_of(&out)
    );
    let summary = std::fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert!(
        lines.next().unwrap().starts_with("algorithm,T,seed"),
        "summary: {summary}"
    );
    assert_eq!(lines.count(), 2, "one row per seed: {summary}");
    assert!(out_dir.join("traces/predictive-T40-s0.csv").exists());
    assert!(out_dir.join("traces/predictive-T40-s1.csv").exists());
}

#[test]
fn seed_override_changes_rows_but_not_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY_RUN);
    let base = dir.path().join("base");
    let shifted = dir.path().join("shifted");
    for (out_dir, offset) in [(&base, "0"), (&shifted, "7")] {
        let out = run(harness()
            .arg("run")
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(out_dir)
            .arg("--seed-override")
            .arg(offset));
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    }
    let a = std::fs::read_to_string(base.join("summary.csv")).unwrap();
    let b = std::fs::read_to_string(shifted.join("summary.csv")).unwrap();
    assert_eq!(
        a.lines().next().unwrap(),
        b.lines().next().unwrap(),
        "headers must match"
    );
    assert_ne!(a, b, "a shifted seed offset must change the run data");
}

#[test]
fn fit_without_summary_fails_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(harness().arg("fit").arg("--out").arg(dir.path()));
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr_of(&out));
}

#[test]
fn fit_reuses_a_sweep_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "\
[experiment]
algorithm = \"predictive\"
horizons = [8, 16, 32, 64]
seeds = 2
c_exp = 0.25

[environment]
p = 2
m = 2
",
    );
    let out_dir = dir.path().join("out");
    let sweep = run(harness()
        .arg("sweep")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir));
    assert_eq!(sweep.status.code(), Some(0), "stderr: {}", stderr_of(&sweep));
    let report = out_dir.join("rate_report.txt");
    let first = std::fs::read_to_string(&report).unwrap();
    std::fs::remove_file(&report).unwrap();
    let fit = run(harness().arg("fit").arg("--out").arg(&out_dir));
    assert_eq!(fit.status.code(), Some(0), "stderr: {}", stderr_of(&fit));
    let second = std::fs::read_to_string(&report).unwrap();
    // The sweep report carries one extra line about live solver
    // certificates, which a re-fit from the summary alone cannot re-check.
    assert!(
        first.starts_with(&second),
        "fit must reproduce the sweep's fitted rates;\nsweep: {first}\nfit: {second}"
    );
    assert!(second.contains("fitted T^"), "fit report: {second}");
}
