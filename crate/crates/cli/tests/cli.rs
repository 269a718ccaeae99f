use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bellforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bellforge")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const UNIFORM: &str = r#"{"p": {"11": [[0.25, 0.25], [0.25, 0.25]], "12": [[0.25, 0.25], [0.25, 0.25]],
                           "21": [[0.25, 0.25], [0.25, 0.25]], "22": [[0.25, 0.25], [0.25, 0.25]]}}"#;

#[test]
fn chsh_in_degrees_reaches_two_root_two() {
    let out = bellforge(&["chsh", "--state", "psi-plus", "--kinds", "EEEE", "--angles", "0,22.5,45,67.5", "--degrees"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert!((v["S"].as_f64().unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-9, "{v}");
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["angles"]["b'"].as_f64().unwrap(), 67.5);
    for pair in ["ab", "ab'", "a'b", "a'b'"] {
        assert!(v["correlations"][pair].is_f64(), "{pair}");
    }
}

#[test]
fn optimized_chsh_is_seeded() {
    let a = bellforge(&["chsh", "--kinds", "LELE", "--optimize", "--seed", "7"]);
    let b = bellforge(&["chsh", "--kinds", "LELE", "--optimize", "--seed", "7"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert!((json(&a)["S"].as_f64().unwrap() - 2.0).abs() < 1e-4);
}

#[test]
fn uniform_behavior_is_feasible() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "uniform.json", UNIFORM);
    let out = bellforge(&["lhv", "--behavior", &path]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["verdict"], "feasible");
    let q: Vec<f64> = v["joint_distribution"]["q"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(q.len(), 16);
    assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-9);
}

#[test]
fn chsh_report_feeds_the_lhv_test() {
    let dir = tempfile::tempdir().unwrap();
    let chsh = bellforge(&["chsh", "--state", "singlet"]);
    let path = write(dir.path(), "chsh.json", &String::from_utf8(chsh.stdout).unwrap());
    let out = bellforge(&["lhv", "--from-state", &path]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["verdict"], "infeasible");
    assert!((v["certificate"]["value"].as_f64().unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-6);
}

#[test]
fn marginal_theorem_csv_is_increasing() {
    let out = bellforge(&["marginal-theorem", "--L", "10,100", "--sign", "+", "--format", "csv", "--grid", "65536"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("L,S"));
    let s: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(s.len(), 2);
    assert!(s[1] > s[0], "{s:?}");
}

#[test]
fn out_writes_the_table_next_to_the_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("map.csv");
    let out = bellforge(&["rs1d", "--grid", "1024", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["passed"], true);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next(), Some("x,p_hat"));
    assert_eq!(text.lines().count(), 1025);

    let quiet = bellforge(&["rs1d", "--grid", "1024", "--format", "csv", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&quiet), 0);
    assert!(quiet.stdout.is_empty());
}

#[test]
fn every_command_reports_a_schema_version_and_a_csv_header() {
    let runs: &[&[&str]] = &[
        &["chsh"],
        &["rs1d", "--grid", "512"],
        &["rs2d", "--grid", "64"],
        &["wigner", "--grid", "64"],
        &["parity-chsh", "--r", "0.5"],
        &["ak-compare", "--grid", "512"],
        &["waves", "dump", "--psi", "two-gaussian", "--grid", "256"],
    ];
    for args in runs {
        let out = bellforge(args);
        assert_eq!(code(&out), 0, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(json(&out)["schema_version"], 1, "{args:?}");
        let mut csv_args = args.to_vec();
        csv_args.extend(["--format", "csv"]);
        let csv = bellforge(&csv_args);
        let text = String::from_utf8(csv.stdout).unwrap();
        let header = text.lines().next().unwrap();
        assert!(header.chars().next().unwrap().is_ascii_alphabetic(), "{args:?}: {header}");
        let width = header.split(',').count();
        assert!(text.lines().skip(1).all(|l| l.split(',').count() == width), "{args:?}");
    }
}

#[test]
fn ak_compare_header_is_exact() {
    let out = bellforge(&["ak-compare", "--format", "csv"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("q,p_ak,p_rs\n"));
    assert!(String::from_utf8(out.stderr).unwrap().contains("warning"));
}

#[test]
fn identical_runs_are_byte_identical() {
    let runs: &[&[&str]] = &[
        &["rs1d", "--psi", "two-gaussian", "--mc-samples", "200000", "--seed", "3"],
        &["rs2d", "--chirp", "0.3,0.4,-0.2", "--mc-samples", "200000", "--seed", "3", "--format", "csv"],
        &["parity-chsh", "--r", "1", "--unrestricted", "--starts", "2", "--seed", "9"],
    ];
    for args in runs {
        let a = bellforge(args);
        let b =
            Command::new(env!("CARGO_BIN_EXE_bellforge")).args(*args).env("BELLFORGE_THREADS", "1").output().unwrap();
        assert_eq!(code(&a), 0, "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"p": {"11": [[0.5, 0.5], [0.5, 0.5]]}}"#);
    let cases: &[&[&str]] = &[
        &["no-such-command"],
        &["chsh", "--kinds", "LLX"],
        &["chsh", "--angles", "0,1,2"],
        &["chsh", "--state", "/nonexistent/state.json"],
        &["lhv", "--behavior", &bad],
        &["lhv"],
        &["rs1d", "--epsilon", "0"],
        &["rs2d", "--cov", "1,2,1"],
        &["marginal-theorem", "--L", "100,10"],
        &["wigner", "--state", "unknown"],
        &["parity-chsh", "--r", "-1"],
        &["ak-compare", "--b", "-1"],
        &["waves", "dump", "--grid", "100"],
    ];
    for args in cases {
        let out = bellforge(args);
        assert_eq!(code(&out), 2, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn invalid_thread_count_is_a_validation_error() {
    let out =
        Command::new(env!("CARGO_BIN_EXE_bellforge")).arg("chsh").env("BELLFORGE_THREADS", "zero").output().unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn failed_numerical_checks_exit_with_three() {
    // a coarse grid cannot hold the tails of the momentum distribution
    let out = bellforge(&["rs1d", "--psi", "two-gaussian", "--grid", "64", "--xmax", "8"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["passed"], false);
    assert!(!v["failures"].as_array().unwrap().is_empty());

    // the sharp cutoff aliases the momentum marginals of the two-mode state
    let out = bellforge(&["wigner", "--state", "psi-plus:5", "--grid", "32"]);
    assert_eq!(code(&out), 3);

    // a window narrower than the grid spacing
    let out = bellforge(&["ak-compare", "--grid", "64", "--b", "0.05"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn help_exits_cleanly() {
    let out = bellforge(&["--help"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    for cmd in ["chsh", "lhv", "rs1d", "rs2d", "marginal-theorem", "wigner", "parity-chsh", "ak-compare", "waves"] {
        assert!(text.contains(cmd), "{cmd}");
    }
}

#[test]
fn wave_files_round_trip_through_dump() {
    let dir = tempfile::tempdir().unwrap();
    let n = 256;
    let extent = 12.0;
    let h = 2.0 * extent / n as f64;
    let values: Vec<[f64; 2]> = (0..n)
        .map(|j| {
            let x = -extent + j as f64 * h;
            let g = (-(x - 1.0) * (x - 1.0) / 2.0).exp();
            [g * (0.5 * x).cos(), g * (0.5 * x).sin()]
        })
        .collect();
    let file = serde_json::json!({ "n": [n], "extent": [extent], "values": values });
    let path = write(dir.path(), "wave.json", &file.to_string());
    let out = bellforge(&["waves", "dump", "--psi", &path, "--repr", "momentum"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    // |ψ|² ∝ e^{−(x−1)²}: unit-width Gaussian in x gives ⟨p⟩ = 0.5, Var p = 1/2
    let m = &v["moments"][0];
    assert!((m["mean"].as_f64().unwrap() - 0.5).abs() < 1e-6, "{v}");
    assert!((m["variance"].as_f64().unwrap() - 0.5).abs() < 1e-6, "{v}");
    assert!((v["total"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}
