//! End-to-end checks of the CLI surface: exit codes and CSV output.

use std::path::PathBuf;
use std::process::{Command, Output};

fn ccmaes(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ccmaes"))
        .args(args)
        .output()
        .expect("failed to launch the ccmaes binary")
}

fn temp_out(tag: &str) -> PathBuf {
    std::env::temp_dir().join(format!("ccmaes_cli_{tag}_{}", std::process::id()))
}

#[test]
fn help_exits_cleanly() {
    let out = ccmaes(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("bench"));
    assert!(text.contains("viapoint"));
}

#[test]
fn unknown_problem_is_a_usage_error() {
    let dir = temp_out("badproblem");
    let out = ccmaes(&[
        "bench",
        "--problem",
        "rastrigin",
        "--method",
        "ccmaes",
        "--seed",
        "1",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown problem"));
}

#[test]
fn missing_required_flag_is_a_usage_error() {
    let out = ccmaes(&["bench", "--problem", "sphere"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn aggressive_flag_requires_a_surrogate_method() {
    let dir = temp_out("aggressive");
    let out = ccmaes(&[
        "bench",
        "--problem",
        "sphere",
        "--method",
        "ccmaes",
        "--aggressive",
        "--seed",
        "1",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn small_benchmark_run_writes_both_csv_files() {
    let dir = temp_out("smallrun");
    let out = ccmaes(&[
        "bench",
        "--problem",
        "sphere",
        "--method",
        "ccmaes",
        "--n",
        "3",
        "--ns",
        "1",
        "--lambda",
        "6",
        "--generations",
        "3",
        "--runs",
        "2",
        "--seed",
        "7",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let runs = std::fs::read_to_string(dir.join("sphere_ccmaes_runs.csv")).unwrap();
    assert!(runs.starts_with("method,run,generation,episodes,mean_value\n"));
    assert_eq!(runs.lines().count(), 1 + 2 * 3);
    assert!(runs.lines().nth(1).unwrap().starts_with("ccmaes,0,1,6,"));

    let agg = std::fs::read_to_string(dir.join("sphere_ccmaes_aggregate.csv")).unwrap();
    assert!(agg.starts_with("method,generation,episodes,mean,std,n_runs\n"));
    assert_eq!(agg.lines().count(), 1 + 3);
    assert!(agg.lines().last().unwrap().ends_with(",2"));

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn diverging_runs_exit_with_code_three_and_nan_rows() {
    let dir = temp_out("diverge");
    let out = ccmaes(&[
        "bench",
        "--problem",
        "sphere",
        "--method",
        "ccmaes",
        "--n",
        "3",
        "--lambda",
        "6",
        "--generations",
        "2",
        "--runs",
        "1",
        "--seed",
        "7",
        "--sigma0",
        "1e200",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let runs = std::fs::read_to_string(dir.join("sphere_ccmaes_runs.csv")).unwrap();
    assert!(runs.contains(",NaN"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn unwritable_output_path_exits_with_code_two() {
    let out = ccmaes(&[
        "bench",
        "--problem",
        "sphere",
        "--method",
        "ccmaes",
        "--n",
        "3",
        "--lambda",
        "6",
        "--generations",
        "1",
        "--runs",
        "1",
        "--seed",
        "7",
        "--out",
        "/proc/nonexistent/out",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn viapoint_subcommand_runs_end_to_end() {
    let dir = temp_out("viapoint");
    let out = ccmaes(&[
        "viapoint",
        "--method",
        "ccmaes",
        "--generations",
        "2",
        "--runs",
        "1",
        "--seed",
        "3",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let runs = std::fs::read_to_string(dir.join("viapoint_ccmaes_runs.csv")).unwrap();
    // λ is fixed at 100 on the viapoint problem.
    assert!(runs.lines().nth(1).unwrap().starts_with("ccmaes,0,1,100,"));
    std::fs::remove_dir_all(&dir).ok();
}
