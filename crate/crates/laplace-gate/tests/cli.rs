//! Behavior tests of the installed binary: exit codes, output formats,
//! gating, and the CSV input path.

use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_laplace-gate")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawn binary")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr_str(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout_str(out)).expect("stdout is JSON")
}

#[test]
fn check_exit_codes_cover_all_verdicts() {
    let out = run(&["check", "1/(p+1)^2"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["verdict"], "admissible");
    for key in ["tool_version", "command", "settings", "report", "signals", "residuals"] {
        assert!(doc.get(key).is_some(), "missing key {key}");
    }

    let out = run(&["check", "1/(p+1)"]);
    assert_eq!(out.status.code(), Some(2));
    let doc = json(&out);
    assert_eq!(doc["verdict"], "inadmissible");
    let failed = doc["report"]["failed_conditions"].as_array().unwrap();
    assert!(failed.iter().any(|c| c == "decay"));

    let out = run(&["check", "1/(p-1)"]);
    assert_eq!(out.status.code(), Some(2));
    let doc = json(&out);
    let failed = doc["report"]["failed_conditions"].as_array().unwrap();
    assert!(failed.iter().any(|c| c == "analyticity"));
}

#[test]
fn parse_errors_exit_one_with_diagnostics() {
    let out = run(&["check", "1/(p"]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_str(&out);
    assert!(err.contains("byte 4"), "diagnostic: {err}");
    assert!(err.contains(")"), "expected-token set: {err}");
    assert!(stdout_str(&out).is_empty());
}

#[test]
fn invert_produces_reference_row() {
    let out = run(&["invert", "1/(p+1)^2", "--t", "0:5:0.1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_str(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,re,im,err_bound");
    let row = text
        .lines()
        .find(|l| l.starts_with("1.0000000000000000e0,"))
        .expect("row at t = 1");
    let re: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!((re - 0.3678794).abs() < 1e-4, "re at t=1: {re}");
    // 12+ significant digits in every field
    for field in row.split(',') {
        let digits: usize = field.chars().filter(|c| c.is_ascii_digit()).count();
        assert!(digits >= 12, "field '{field}' too short");
    }
}

#[test]
fn invert_negative_times_stay_below_tol() {
    let out = run(&["invert", "1/(p+1)^2", "--t", "-2:0:0.5"]);
    assert_eq!(out.status.code(), Some(0));
    for line in stdout_str(&out).lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert!(f[1].abs() <= 2e-5 && f[2].abs() <= 2e-5, "row {line}");
    }
}

#[test]
fn invert_gates_on_admissibility() {
    let out = run(&["invert", "1/(p+1)", "--t", "0:1:0.5"]);
    assert_eq!(out.status.code(), Some(2));
    let text = stdout_str(&out);
    assert!(!text.starts_with("t,re"), "no CSV on refusal");
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["verdict"], "inadmissible");
    assert!(doc["signals"].is_null());
}

#[test]
fn invert_force_overrides_the_gate() {
    let out = run(&[
        "invert", "1/(p+1)", "--t", "0:1:0.5", "--force", "--h-max", "1e4", "--json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["signals"]["low_confidence"], true);
    // the symmetric principal value at t = 0 exposes the jump: f(0+)/2
    let points = doc["signals"]["points"].as_array().unwrap();
    let f0 = points[0][1].as_f64().unwrap();
    assert!((f0 - 0.5).abs() < 1e-2, "f(0) ≈ 1/2, got {f0}");
}

#[test]
fn invert_json_sidecar_contents() {
    let out = run(&["invert", "1/(p+1)^2", "--t", "0:2:0.5", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    let signals = &doc["signals"];
    assert!(signals["h_truncation"].as_f64().unwrap() > 1e3);
    assert!(signals["achieved_tail"].as_f64().unwrap() <= 1e-5 * 1.0001);
    let verification = &signals["verification"];
    assert_eq!(verification["f0_within_tol"], true);
    assert_eq!(verification["negative_within_tol"], true);
    assert_eq!(verification["i_n_table"].as_array().unwrap().len(), 3);
    assert!(doc["report"]["b_hat"].as_f64().unwrap() > 1.9);
}

#[test]
fn solve_rejects_bad_lambda() {
    for lambda in ["0", "2", "-2", "2.5"] {
        let out = run(&["solve", "--lambda", lambda, "--f", "t*exp(-t)", "--t", "0:1:0.5"]);
        assert_eq!(out.status.code(), Some(1), "lambda = {lambda}");
        assert!(stderr_str(&out).contains("lambda"));
    }
}

#[test]
fn solve_rejects_unsupported_rhs() {
    let out = run(&["solve", "--lambda", "1", "--f", "1/(t+1)", "--t", "0:1:0.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_str(&out).contains("unsupported"));
}

#[test]
fn solve_lambda_one_matches_closed_form() {
    let out = run(&[
        "solve", "--lambda", "1", "--f", "t*exp(-t)", "--t", "0:5:0.25", "--json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["verdict"], "admissible");
    for p in doc["signals"]["points"].as_array().unwrap() {
        let (t, re) = (p[0].as_f64().unwrap(), p[1].as_f64().unwrap());
        let want = t * (-t).exp() - 0.5 * t * t * (-t).exp();
        assert!((re - want).abs() < 1e-4, "t={t}: {re} vs {want}");
    }
}

#[test]
fn solve_from_csv_samples() {
    let dir = std::env::temp_dir().join(format!("laplace-gate-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("f.csv");
    let mut body = String::from("t,re\n");
    let h = 0.04;
    for i in 0..=300 {
        let t = i as f64 * h;
        body.push_str(&format!("{},{}\n", t, t * (-t).exp()));
    }
    std::fs::write(&path, body).unwrap();

    let out = run(&[
        "solve",
        "--lambda",
        "1",
        "--f-csv",
        path.to_str().unwrap(),
        "--tail",
        "4*exp(-0.9*t)",
        "--t",
        "0:3:0.5",
        "--tol",
        "1e-4",
        "--json",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_str(&out));
    let doc = json(&out);
    for p in doc["signals"]["points"].as_array().unwrap() {
        let (t, re) = (p[0].as_f64().unwrap(), p[1].as_f64().unwrap());
        let want = t * (-t).exp() - 0.5 * t * t * (-t).exp();
        assert!((re - want).abs() < 5e-3, "t={t}: {re} vs {want}");
    }

    // missing --tail is a usage error
    let out = run(&[
        "solve", "--lambda", "1", "--f-csv", path.to_str().unwrap(), "--t", "0:1:0.5",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_str(&out).contains("--tail"));

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn pairs_listing_and_roundtrip() {
    let out = run(&["pairs", "--list"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout_str(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert!(rows.len() >= 5, "catalog rows: {}", rows.len());
    assert_eq!(rows.iter().filter(|r| r.contains("false")).count(), 2);

    let out = run(&["pairs", "--roundtrip"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_str(&out));
    let text = stdout_str(&out);
    assert_eq!(
        text.lines().filter(|l| l.contains("roundtrip max error")).count(),
        3
    );

    // an impossible tolerance is rejected, not silently weakened
    let out = run(&["pairs", "--roundtrip", "--tol", "1e-12"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr_str(&out).contains("unachievable"));

    // a looser tolerance loosens the gate with it
    let out = run(&["pairs", "--roundtrip", "--tol", "1e-3"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_str(&out));
}

#[test]
fn malformed_input_never_panics() {
    for args in [
        vec!["check", ""],
        vec!["check", "1//p"],
        vec!["check", "exp()"],
        vec!["check", "p^p"],
        vec!["check", "1/(p+1)^2", "--t", "nonsense"],
        vec!["invert", "1/(p+1)^2", "--t", "1:0:1"],
        vec!["invert", "1/(p+1)^2", "--t", "0:1:0"],
        vec!["invert", "1/(p+1)^2", "--t", "0:1:0.5", "--tol", "0"],
        vec!["solve", "--lambda", "1", "--t", "0:1:0.5"],
        vec!["solve", "--lambda", "1", "--f", "t", "--f-csv", "x.csv", "--t", "0:1:0.5"],
    ] {
        let out = run(&args);
        let code = out.status.code();
        assert!(
            code == Some(1) || code == Some(2),
            "args {args:?} gave {code:?}; stderr: {}",
            stderr_str(&out)
        );
        assert!(
            !stderr_str(&out).contains("panicked"),
            "panic on {args:?}"
        );
    }
}
