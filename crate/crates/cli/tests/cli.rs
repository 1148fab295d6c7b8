//! End-to-end checks of the command-line surface: output contracts,
//! determinism, config layering, and exit codes.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dualosc"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn tmp_path(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("dualosc-test-{}-{name}", std::process::id()));
    p
}

#[test]
fn simulate_emits_csv_with_contract_header() {
    let out = run(&[
        "simulate",
        "--model",
        "vdp",
        "--epsilon",
        "0.1",
        "--omega",
        "1",
        "--t-end",
        "5",
        "--samples",
        "10",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,x,xdot,y,ydot");
    assert_eq!(lines.count(), 10);
    // every cell has 17 significant digits and a decimal point
    for cell in text.lines().nth(3).unwrap().split(',') {
        let v: f64 = cell.parse().expect("parses as f64");
        assert_eq!(cell.parse::<f64>().unwrap(), v);
        assert!(cell.contains('e'), "scientific notation: {cell}");
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let args = [
        "simulate",
        "--model",
        "forced",
        "--epsilon",
        "0.1",
        "--f1",
        "0.3",
        "--gamma",
        "2",
        "--f2",
        "0.5",
        "--omega-ext",
        "1.3",
        "--t-end",
        "8",
        "--samples",
        "64",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn limit_cycle_report_keys() {
    let out = run(&["limit-cycle", "--epsilon", "0.2"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).expect("valid json");
    for key in [
        "period",
        "frequency",
        "amplitude",
        "harmonics",
        "settle_time",
    ] {
        assert!(v.get(key).is_some(), "missing key {key}");
    }
    assert_eq!(v["harmonics"].as_array().unwrap().len(), 5);
    let freq = v["frequency"].as_f64().unwrap();
    assert!((freq - (1.0 - 0.04 / 16.0)).abs() < 1e-4);
}

#[test]
fn compare_sweep_obeys_error_band() {
    let out = run(&["compare", "--sweep", "epsilon=0.1,0.2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "epsilon,measured_freq,predicted_freq,abs_err"
    );
    let mut epsilons = Vec::new();
    for line in lines {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let (eps, abs_err) = (cells[0], cells[3]);
        assert!(abs_err <= 0.02 * eps.powi(3) + 5e-7, "eps {eps}: {abs_err}");
        epsilons.push(eps);
    }
    // rows follow the sweep order
    assert_eq!(epsilons, vec![0.1, 0.2]);
}

#[test]
fn conserve_check_passes_for_autonomous_kinds() {
    for kind in ["bateman", "vdp-simple", "vdp-full", "lienard", "averaged"] {
        let out = run(&[
            "conserve-check",
            "--kind",
            kind,
            "--epsilon",
            "0.1",
            "--lambda",
            "0.1",
            "--t-end",
            "50",
        ]);
        assert!(out.status.success(), "{kind} failed");
        let text = stdout(&out);
        assert!(text.contains("PASS"), "{kind}: {text}");
        assert!(text.contains("max_relative_drift"));
    }
}

#[test]
fn conserve_check_rejects_forced_kind() {
    let out = run(&["conserve-check", "--kind", "forced", "--f2", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("not autonomous"), "{err}");
    assert!(err.contains("power-balance"));
}

#[test]
fn nonpositive_epsilon_is_a_numerical_failure() {
    let out = run(&["limit-cycle", "--epsilon", "-0.1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_supplies_values_and_flags_override() {
    let path = tmp_path("config.toml");
    std::fs::write(
        &path,
        "epsilon = 0.2\nomega = 1.0\nt_end = 4.0\nsamples = 4\n",
    )
    .unwrap();
    let base = run(&[
        "simulate",
        "--config",
        path.to_str().unwrap(),
        "--model",
        "vdp",
    ]);
    assert!(base.status.success());
    assert_eq!(stdout(&base).lines().count(), 5);

    // flag wins over the file value
    let overridden = run(&[
        "simulate",
        "--config",
        path.to_str().unwrap(),
        "--model",
        "vdp",
        "--samples",
        "3",
    ]);
    assert_eq!(stdout(&overridden).lines().count(), 4);
    std::fs::remove_file(&path).ok();
}

#[test]
fn unknown_config_field_is_diagnosed() {
    let path = tmp_path("bad-config.toml");
    std::fs::write(&path, "epsilomega = 0.2\n").unwrap();
    let out = run(&["limit-cycle", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(
        err.contains("epsilomega"),
        "diagnostic names the field: {err}"
    );
    std::fs::remove_file(&path).ok();
}

#[test]
fn perturb_prints_frequency_and_mode_tables() {
    let out = run(&["perturb", "--epsilon", "0.4", "--omega", "1"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((v["predicted_frequency"].as_f64().unwrap() - 0.99).abs() < 1e-12);
    assert_eq!(v["k1"]["modes"].as_array().unwrap().len(), 18);
    assert_eq!(v["s1_periodic"]["modes"].as_array().unwrap().len(), 14);
    assert_eq!(v["s1_resonant"]["modes"].as_array().unwrap().len(), 4);
    assert!(
        (v["waveform"]["third_harmonic_coefficient"]
            .as_f64()
            .unwrap()
            + 0.1)
            .abs()
            < 1e-12
    );
}

#[test]
fn floquet_reports_unit_determinant() {
    let out = run(&["floquet", "--epsilon", "0.1"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((v["determinant"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert!(v["combined_growth_per_period"].as_f64().unwrap() > 1.0);
}

#[test]
fn galley_emits_decomposition_columns() {
    let out = run(&[
        "galley",
        "--epsilon",
        "0.3",
        "--t-end",
        "3",
        "--samples",
        "5",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(
        text.lines().next().unwrap(),
        "t,q1,q2,q1dot,q2dot,forward,reverse,coupling,lagrangian"
    );
    // lagrangian column equals forward - reverse + coupling
    for line in text.lines().skip(1) {
        let c: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((c[8] - (c[5] - c[6] + c[7])).abs() < 1e-12);
    }
}

#[test]
fn output_flag_writes_file() {
    let path = tmp_path("traj.csv");
    let out = run(&[
        "simulate",
        "--model",
        "dsho",
        "--lambda",
        "0.1",
        "--big-omega",
        "1",
        "--t-end",
        "2",
        "--samples",
        "3",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("t,x,xdot,y,ydot"));
    std::fs::remove_file(&path).ok();
}
