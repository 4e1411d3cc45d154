//! End-to-end checks of the `semcom` binary: exit codes, output file layout,
//! and the frozen CSV headers.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn semcom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semcom"))
        .args(args)
        .output()
        .expect("failed to launch semcom")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn allocate_prints_all_methods_by_default() {
    let out = semcom(&["allocate", "--pbar", "0.5", "--seed", "7"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    for method in ["unaware", "proportional", "bisection"] {
        assert!(text.contains(method), "missing {method} in:\n{text}");
    }
}

#[test]
fn allocate_with_fixed_gains_is_reproducible() {
    let args = [
        "allocate",
        "--pbar",
        "0.6",
        "--method",
        "bisection",
        "--fixed-gains",
        "2e-10,8e-11",
    ];
    let first = semcom(&args);
    let second = semcom(&args);
    assert!(first.status.success(), "{}", stderr(&first));
    assert_eq!(stdout(&first), stdout(&second));
}

#[test]
fn infeasible_target_exits_with_validation_code() {
    let out = semcom(&["allocate", "--pbar", "0.05"]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    assert!(stderr(&out).contains("infeasible"), "{}", stderr(&out));
}

#[test]
fn usage_errors_exit_with_code_two() {
    let out = semcom(&["allocate", "--pbar", "not-a-number"]);
    assert_eq!(out.status.code(), Some(2));
    let out = semcom(&["no-such-subcommand"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_directory_exits_with_io_code() {
    let out = semcom(&[
        "experiment",
        "--name",
        "link_validate",
        "--out",
        "/proc/no-such-dir/results",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn unknown_validation_suite_is_rejected() {
    let out = semcom(&["validate", "--suite", "astrology"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("astrology"), "{}", stderr(&out));
}

#[test]
fn validate_constants_suite_passes() {
    let out = semcom(&["validate", "--suite", "constants"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("PASS"));
}

#[test]
fn experiment_writes_manifest_and_frozen_headers() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    fs::write(
        &config_path,
        r#"{
            "scheme": "coded_discard",
            "metric": "clip",
            "channel": {},
            "experiments": [
                {
                    "name": "sweep",
                    "kind": "power_vs_pbar",
                    "p_bar_grid": [0.5, 0.7],
                    "n_realizations": 8,
                    "seed": 3,
                    "methods": ["unaware", "bisection"]
                },
                {
                    "name": "cdf",
                    "kind": "perception_cdf",
                    "power_budget_grid": [0.1],
                    "n_realizations": 8,
                    "seed": 3,
                    "methods": ["bisection"]
                }
            ]
        }"#,
    )
    .unwrap();
    let out_dir = dir.path().join("results");
    let out = semcom(&[
        "--config",
        config_path.to_str().unwrap(),
        "experiment",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let first_line = |name: &str| -> String {
        let text = fs::read_to_string(out_dir.join(name)).unwrap();
        text.lines().next().unwrap_or_default().to_owned()
    };
    assert_eq!(
        first_line("power_vs_pbar.csv"),
        "pbar,method,mean_total_power_w,stderr_w,n_feasible"
    );
    assert_eq!(first_line("cdf.csv"), "budget_w,method,quantile,perception");
    assert!(Path::new(&out_dir.join("manifest.json")).exists());
    assert!(Path::new(&out_dir.join("resolved_config.json")).exists());

    let manifest = fs::read_to_string(out_dir.join("manifest.json")).unwrap();
    assert!(manifest.contains("config_sha256"), "{manifest}");
}
