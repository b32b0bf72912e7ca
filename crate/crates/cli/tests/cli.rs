use std::fs;
use std::process::{Command, Output};

fn maxprod(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxprod"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn validate_kernel_flags_the_step_kernel() {
    let ok = maxprod(&["validate-kernel", "--kernel", "ramp", "--n", "8"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).contains("phi(2)      8.33333333333e-2"));

    let bad = maxprod(&["validate-kernel", "--kernel", "step", "--n", "8"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("unimodality FAIL"));
}

#[test]
fn eval_at_points_matches_hand_value() {
    // Ramp kernel, f(x) = x, n = 2, x = 1/2: k ∈ {0, 1}, means 1/4 and 3/4,
    // weights φ(1) and φ(0) with φ(0) > φ(1), so the value is 3/4.
    let o = maxprod(&["eval", "--kernel", "ramp", "--function", "identity", "--n", "2", "--x", "0.5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let row = out.lines().nth(1).unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields[..3], ["ramp", "identity", "2"]);
    let k: f64 = fields[4].parse().unwrap();
    assert!((k - 0.75).abs() < 1e-12, "{row}");
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"kernels": ["logistic"], "functions": ["parabola"], "n_list": [8, 16, 32], "grid": 128, "format": "json"}"#).unwrap();
    let out = dir.path().join("out");
    let o = maxprod(&[
        "sweep-uniform",
        "--config",
        cfg.to_str().unwrap(),
        "--n",
        "64,128",
        "--format",
        "csv",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("uniform.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().skip(1).all(|l| l.starts_with("logistic,,parabola,")));
    assert!(!out.join("uniform.json").exists());
}

#[test]
fn reports_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let o = maxprod(&[
            "check-inequality",
            "--kernel",
            "tanh",
            "--phi",
            "power:p=2",
            "--pair",
            "identity,kink",
            "--n",
            "8,16",
            "--grid",
            "128",
            "--format",
            "json",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(out.join("inequality.json")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn bad_input_exits_with_2() {
    let o = maxprod(&["sweep-modular", "--n", "16,8"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ascending"));
    let o = maxprod(&["sweep-modular", "--phi", "quartic"]);
    assert_eq!(o.status.code(), Some(2));
    let o = maxprod(&["sweep-uniform", "--format", "xml"]);
    assert_eq!(o.status.code(), Some(2));
}
