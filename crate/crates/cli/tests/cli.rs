use std::f64::consts::PI;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oscillation"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json_ok(args: &[&str]) -> Value {
    let o = run(args);
    assert_eq!(
        code(&o),
        0,
        "{args:?}: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    serde_json::from_slice(&o.stdout).unwrap()
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (header, rows)
}

fn roots(report: &Value) -> Vec<f64> {
    report["roots"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect()
}

fn zero_xs(report: &Value) -> Vec<f64> {
    report["zeros"]
        .as_array()
        .unwrap()
        .iter()
        .map(|z| z["x"].as_f64().unwrap())
        .collect()
}

#[test]
fn analyze_airy_from_catalog() {
    let r = json_ok(&[
        "analyze",
        "--catalog",
        "airy",
        "--window",
        "-30:10",
        "--unbounded",
        "left",
    ]);
    let roots = roots(&r);
    assert_eq!(roots.len(), 1);
    assert!(roots[0].abs() < 1e-6);
    let labels: Vec<&str> = r["pieces"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["label"].as_str().unwrap())
        .collect();
    assert_eq!(labels, ["Oscillatory", "NonOscillatory"]);
    assert_eq!(r["D"], "4*x");
}

#[test]
fn analyze_inline_bessel() {
    let r = json_ok(&[
        "analyze",
        "--b",
        "1/x",
        "--c",
        "1 - n^2/x^2",
        "--param",
        "n=9",
        "--window",
        "0.5:60",
        "--unbounded",
        "right",
    ]);
    let roots = roots(&r);
    assert_eq!(roots.len(), 1);
    assert!((roots[0] - 8.9861).abs() < 1e-4);
    assert!((roots[0] - 80.75f64.sqrt()).abs() < 1e-6);
}

#[test]
fn usage_errors_exit_2() {
    let o = run(&["analyze", "--b", "x"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    for args in [
        &["analyze", "--catalog", "nope"][..],
        &["analyze", "--c", "x +", "--window", "0:1"],
        &["analyze", "--c", "1", "--window", "1:0"],
        &["analyze", "--c", "1"],
        &["analyze", "--c", "k*x", "--window", "0:1"],
        &["analyze", "--catalog", "airy", "--c", "1"],
        &["solve", "--c", "1", "--ic", "0,1", "--to", "1"],
        &["verify", "sturm", "--q1", "1", "--q2", "4"],
        &["catalog", "show", "bessel", "--param", "zz=1"],
    ] {
        let o = run(args);
        assert_eq!(code(&o), 2, "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn numeric_failure_exits_3() {
    let o = run(&[
        "solve",
        "--c",
        "1",
        "--ic",
        "0,0,1",
        "--to",
        "31.5",
        "--max-steps",
        "10",
    ]);
    assert_eq!(code(&o), 3);
}

#[test]
fn harmonic_solve_and_zeros() {
    let o = run(&[
        "solve", "--b", "0", "--c", "1", "--ic", "0,0,1", "--to", "31.5",
    ]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(!text.contains('\r'));
    let (header, rows) = csv_rows(&text);
    assert_eq!(header, ["x", "y", "dy"]);
    assert!(rows.len() > 10);
    // 17 significant digits: one leading digit and 16 after the point
    let mantissa = rows[1][0].split('e').next().unwrap();
    assert_eq!(mantissa.split('.').nth(1).unwrap().len(), 16);

    let z = json_ok(&[
        "zeros", "--b", "0", "--c", "1", "--ic", "0,0,1", "--to", "31.5",
    ]);
    let xs = zero_xs(&z);
    // the initial point itself is a zero
    let interior: Vec<f64> = xs.into_iter().filter(|&x| x > 0.5).collect();
    assert_eq!(interior.len(), 10);
    for (k, x) in interior.iter().enumerate() {
        assert!((x - (k + 1) as f64 * PI).abs() < 1e-6);
    }
}

#[test]
fn zeros_about_particular_solution() {
    let args = [
        "--catalog",
        "nonhomog_airy",
        "--ic",
        "-1,0,1",
        "--to",
        "-25",
        "--about",
        "-5*x",
    ];
    let z = json_ok(&[&["zeros"][..], &args].concat());
    assert!(z["count"].as_u64().unwrap() >= 5);
    assert!(z["gate_residual"].as_f64().unwrap() < 1e-12);

    let o = run(&[&["solve"][..], &args, &["--points", "50"]].concat());
    assert_eq!(code(&o), 0);
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header, ["x", "y", "dy", "u", "du"]);
    assert_eq!(rows.len(), 50);
    for row in rows {
        let v: Vec<f64> = row.iter().map(|c| c.parse().unwrap()).collect();
        assert!((v[3] - (v[1] + 5.0 * v[0])).abs() <= 1e-9 * (1.0 + v[1].abs()));
    }

    let bad = run(&[
        "zeros",
        "--catalog",
        "nonhomog_airy",
        "--ic",
        "-1,0,1",
        "--to",
        "-25",
        "--about",
        "x",
    ]);
    assert_eq!(code(&bad), 1);
}

#[test]
fn sqrt_case_has_no_zeros() {
    let z = json_ok(&[
        "zeros",
        "--catalog",
        "sqrt_case",
        "--ic",
        "1,1,0.5",
        "--to",
        "100",
    ]);
    assert_eq!(z["count"], 0);
    assert!(z["zeros"].as_array().unwrap().is_empty());
}

fn sample_columns(args: &[&str]) -> Vec<[f64; 4]> {
    let o = run(args);
    assert_eq!(code(&o), 0);
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header, ["x", "D", "Q", "naiveD"]);
    rows.iter()
        .map(|r| {
            let v: Vec<f64> = r.iter().map(|c| c.parse().unwrap()).collect();
            [v[0], v[1], v[2], v[3]]
        })
        .collect()
}

#[test]
fn sample_hermite_crosses_at_root() {
    let rows = sample_columns(&[
        "sample",
        "--catalog",
        "hermite",
        "--param",
        "lambda=18",
        "--window",
        "-10:10",
        "--points",
        "1000",
    ]);
    assert_eq!(rows.len(), 1000);
    let r = 37f64.sqrt();
    let crossings: Vec<(f64, f64)> = rows
        .windows(2)
        .filter(|w| (w[0][1] < 0.0) != (w[1][1] < 0.0))
        .map(|w| (w[0][0], w[1][0]))
        .collect();
    assert_eq!(crossings.len(), 2);
    assert!(crossings[0].0 <= -r && -r <= crossings[0].1);
    assert!(crossings[1].0 <= r && r <= crossings[1].1);
    for row in &rows {
        assert!((row[2] + 0.25 * row[1]).abs() <= 1e-12 * (1.0 + row[1].abs()));
    }
}

#[test]
fn sample_signs() {
    let rows = sample_columns(&["sample", "--catalog", "modified_bessel", "--param", "n=1"]);
    assert!(rows.iter().all(|r| r[1] > 0.0));
    let rows = sample_columns(&["sample", "--catalog", "euler_log", "--param", "k=0.25"]);
    assert!(rows.iter().all(|r| r[3] > 0.0 && r[1] < 0.0));
}

#[test]
fn verify_commands() {
    let s = json_ok(&["verify", "sturm"]);
    assert_eq!(s["pass"], true);
    assert_eq!(s["pass_rate"], 1.0);
    let w = json_ok(&[
        "verify",
        "wronskian",
        "--q1=-x",
        "--q2=-x - 1",
        "--window=-20:-2",
    ]);
    assert_eq!(w["pass"], true);
    let r = json_ok(&[
        "verify", "riccati", "--b", "-3", "--c", "2", "--ic", "0,1,2", "--to", "5",
    ]);
    assert_eq!(r["pass"], true);
    assert!((r["characteristic"]["nearest_root"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    let n = json_ok(&[
        "verify",
        "normal-form",
        "--catalog",
        "bessel",
        "--param",
        "n=2",
    ]);
    assert_eq!(n["pass"], true);
}

#[test]
fn failed_verification_exits_1_with_report() {
    // the polynomial solution of hermite is subdominant and cannot be
    // followed to the window edges
    let o = run(&[
        "verify",
        "normal-form",
        "--catalog",
        "hermite",
        "--ic",
        "0,1,0",
    ]);
    assert_eq!(code(&o), 1);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["pass"], false);
}

#[test]
fn catalog_commands() {
    let list = json_ok(&["catalog", "list"]);
    let names: Vec<&str> = list
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["name"].as_str().unwrap())
        .collect();
    assert_eq!(
        names,
        [
            "parabolic_cylinder",
            "airy",
            "bessel",
            "hermite",
            "modified_bessel",
            "euler_log",
            "sqrt_case",
            "nonhomog_airy"
        ]
    );
    let show = json_ok(&["catalog", "show", "bessel", "--param", "n=9"]);
    let pieces = show["expected_pieces"].as_array().unwrap();
    assert!((pieces[0]["hi"].as_f64().unwrap() - 80.75f64.sqrt()).abs() < 1e-12);
    let pc = json_ok(&["catalog", "show", "parabolic_cylinder", "--param", "a=16"]);
    let pieces = pc["expected_pieces"].as_array().unwrap();
    assert_eq!(pieces[0]["hi"], -8.0);
    assert_eq!(pieces[1]["hi"], 8.0);
    let check = json_ok(&["catalog", "check"]);
    assert!(check.as_array().unwrap().iter().all(|r| r["pass"] == true));
}

#[test]
fn every_subcommand_emits_json() {
    let cases: [&[&str]; 10] = [
        &["analyze", "--catalog", "airy"],
        &["solve", "--c", "1", "--ic", "0,0,1", "--to", "3"],
        &["zeros", "--c", "1", "--ic", "0,0,1", "--to", "3"],
        &["sample", "--catalog", "airy", "--points", "20"],
        &["verify", "sturm"],
        &["verify", "wronskian"],
        &[
            "verify", "riccati", "--b", "-3", "--c", "2", "--ic", "0,1,2", "--to", "1",
        ],
        &[
            "verify",
            "normal-form",
            "--catalog",
            "euler_log",
            "--window",
            "1:120",
            "--ic",
            "1,0,2",
        ],
        &["catalog", "list"],
        &["catalog", "show", "airy"],
    ];
    for args in cases {
        let v = json_ok(&[args, &["--format", "json"]].concat());
        assert!(v.is_object() || v.is_array(), "{args:?}");
        let csv = run(&[args, &["--format", "csv"]].concat());
        assert_eq!(code(&csv), 0, "{args:?}");
        assert!(stdout(&csv).ends_with('\n'));
    }
}

#[test]
fn identical_invocations_are_bit_identical() {
    for args in [
        &["analyze", "--catalog", "bessel"][..],
        &["solve", "--catalog", "airy", "--ic", "0,1,0", "--to", "-20"],
        &["verify", "wronskian", "--format", "csv"],
    ] {
        assert_eq!(run(args).stdout, run(args).stdout, "{args:?}");
    }
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let args = ["analyze", "--catalog", "parabolic_cylinder"];
    let o = run(&[&args[..], &["--output", path.to_str().unwrap()]].concat());
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read(&path).unwrap(), run(&args).stdout);
}
