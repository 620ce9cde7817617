//! End-to-end checks of the command-line contract: exit codes, output
//! schema, and bit-for-bit reproducibility given a seed.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bessel-kernels"))
}

#[test]
fn eval_heat_matches_closed_form() {
    let out = bin()
        .args(["eval", "--kernel", "heat", "--lambda", "0", "--t", "1", "--x", "1", "--y", "1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,x,y,value,representation,est_error");
    let row = lines.next().unwrap();
    let value: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
    let expect = (4.0 * std::f64::consts::PI).sqrt().recip() * (1.0 + (-1.0_f64).exp());
    assert!((value - expect).abs() < 1e-10, "value {value} vs {expect}");
}

#[test]
fn tensor_structure_through_cli() {
    // lambda (0.5, 0.5) with equal coordinates = square of the 1-D value
    let grab = |args: &[&str]| -> f64 {
        let out = bin().args(args).output().unwrap();
        assert!(out.status.success());
        String::from_utf8(out.stdout)
            .unwrap()
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .nth(3)
            .unwrap()
            .parse()
            .unwrap()
    };
    let v2 = grab(&[
        "eval", "--kernel", "heat", "--lambda", "0.5,0.5", "--t", "1", "--x", "1,1", "--y", "1,1",
    ]);
    let v1 = grab(&[
        "eval", "--kernel", "heat", "--lambda", "0.5", "--t", "1", "--x", "1", "--y", "1",
    ]);
    assert!((v2 - v1 * v1).abs() < 1e-12);
}

#[test]
fn usage_error_on_bad_lambda() {
    let out = bin()
        .args(["eval", "--kernel", "heat", "--lambda=-0.6", "--t", "1", "--x", "1", "--y", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("-1/2"), "message should name the constraint: {err}");
}

#[test]
fn usage_error_on_unparseable_args() {
    let out = bin().args(["eval", "--nonsense"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_theta_exit_zero_and_deterministic() {
    let run = || {
        let out = bin()
            .args([
                "verify", "--check", "theta", "--samples", "800", "--seed", "42", "--quick",
            ])
            .output()
            .unwrap();
        (out.status.code(), String::from_utf8(out.stdout).unwrap())
    };
    let (code1, text1) = run();
    assert_eq!(code1, Some(0), "theta check should pass: {text1}");
    assert!(text1.contains("\"violations\":0"));
    let (_, text2) = run();
    assert_eq!(text1, text2, "same seed must reproduce bit-identical output");
}

#[test]
fn verify_csv_has_header_and_config_echo() {
    let out = bin()
        .args([
            "verify", "--check", "measure", "--samples", "500", "--seed", "7", "--quick",
            "--format", "csv",
        ])
        .output()
        .unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("# seed=7"), "provenance echo missing: {header}");
    assert_eq!(
        lines.next().unwrap(),
        "check_id,params,n_samples,c_emp,drift,violations,pass"
    );
}

#[test]
fn report_summarizes_jsonl() {
    let dir = std::env::temp_dir().join(format!("bk-report-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("reports.jsonl");
    let out = bin()
        .args(["verify", "--check", "theta", "--samples", "400", "--quick"])
        .args(["--out", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = bin().args(["report", path.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 2);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = std::env::temp_dir().join(format!("bk-config-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("bk.conf");
    std::fs::write(&cfg, "seed=11\nsamples=300\n").unwrap();
    let run = |extra: &[&str]| {
        let out = bin()
            .args(["verify", "--check", "measure", "--quick", "--format", "csv"])
            .args(["--config", cfg.to_str().unwrap()])
            .args(extra)
            .output()
            .unwrap();
        String::from_utf8(out.stdout).unwrap()
    };
    let from_file = run(&[]);
    assert!(from_file.contains("seed=11"), "{from_file}");
    assert!(from_file.contains("samples=300"));
    let overridden = run(&["--seed", "99"]);
    assert!(overridden.contains("seed=99"), "flag must beat config file");
    assert!(overridden.contains("samples=300"));
    std::fs::remove_dir_all(&dir).ok();
}
