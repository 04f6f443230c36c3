use std::process::{Command, Output};

fn qosc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qosc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn eval_examples() {
    let o = qosc(&["eval", "poly", "--n", "0", "--s", "5", "--format", "csv"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "n,s,x,value\n0,5,32,1\n");

    let o = qosc(&[
        "eval", "weight", "--s", "0", "--q", "0.5", "--mu", "0.3", "--format", "csv",
    ]);
    let v: f64 = stdout(&o)
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    let expect = qosc::qcore::qpochhammer_infinite_real(0.3, 0.5);
    assert!((v - expect).abs() < 1e-15);

    let o = qosc(&[
        "eval", "kernel", "--t", "0", "--s", "1", "--p", "2", "--format", "json",
    ]);
    let rows: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let ctx = qosc::QContext::default();
    let expect =
        qosc::oscillator::wave_value(0, 1, &ctx) * qosc::oscillator::wave_value(0, 2, &ctx);
    assert!((rows[0]["re"].as_f64().unwrap() - expect).abs() < 1e-15);
    assert_eq!(rows[0]["im"].as_f64().unwrap(), 0.0);
}

#[test]
fn eval_kernel_at_pole_falls_back_to_series() {
    let o = qosc(&[
        "eval", "kernel", "--t-re", "1", "--s", "3", "--p", "3", "--format", "csv",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let re: f64 = stdout(&o)
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(2)
        .unwrap()
        .parse()
        .unwrap();
    assert!((re - 1.0).abs() < 1e-12);
}

#[test]
fn coherent_falls_back_with_warning() {
    let o = qosc(&[
        "eval",
        "coherent",
        "--mu",
        "0.05",
        "--alpha-re",
        "1.3",
        "--s",
        "0",
    ]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    let o = qosc(&[
        "eval",
        "coherent",
        "--alpha-re",
        "0.4",
        "--alpha-im",
        "0.2",
        "--s",
        "0",
    ]);
    assert!(o.status.success());
    assert!(o.stderr.is_empty());
}

#[test]
fn verify_exit_codes() {
    let o = qosc(&["verify", "pearson"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("PASS pearson.relation"));

    let o = qosc(&["verify", "all", "--q", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("q outside (0,1)"));

    let o = qosc(&["verify", "nonsense"]);
    assert_eq!(o.status.code(), Some(2));

    // a lattice too short for the tail makes checks fail rather than error
    let o = qosc(&["verify", "ladder", "--s-max", "8"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_json_is_deterministic() {
    let a = qosc(&["verify", "orthogonality", "--format", "json"]);
    let b = qosc(&["verify", "orthogonality", "--format", "json"]);
    assert_eq!(a.stdout, b.stdout);
    let reports: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let first = &reports[0];
    for key in [
        "check_name",
        "parameters",
        "max_residual",
        "tolerance",
        "pass",
        "runtime_ms",
    ] {
        assert!(first.get(key).is_some(), "missing {key}");
    }
    let names: Vec<&str> = reports
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["check_name"].as_str().unwrap())
        .collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
}

#[test]
fn verify_csv_and_threads() {
    let o = Command::new(env!("CARGO_BIN_EXE_qosc"))
        .args(["verify", "transform", "--format", "csv"])
        .env("QOSC_THREADS", "2")
        .output()
        .unwrap();
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("check_name,max_residual,tolerance,pass,runtime_ms,parameters\n"));
    assert!(!text.contains('\r'));

    let o = Command::new(env!("CARGO_BIN_EXE_qosc"))
        .args(["verify", "pearson"])
        .env("QOSC_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn list_names_every_suite() {
    let o = qosc(&["verify", "--list"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for name in qosc::verify::suite_names().into_iter().skip(1) {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name}");
    }
}

#[test]
fn spectrum_table() {
    let o = qosc(&["table", "spectrum", "--n-max", "5", "--q", "0.5"]);
    assert_eq!(
        stdout(&o),
        "n,e_n\n0,0\n1,1\n2,1.5\n3,1.75\n4,1.875\n5,1.9375\n"
    );
}

#[test]
fn wavefunction_table_to_file() {
    let dir = std::env::temp_dir().join(format!("qosc-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("wf.csv");
    let o = qosc(&[
        "table",
        "wavefunctions",
        "--n-max",
        "2",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "s,psi_0,psi_1,psi_2");
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 61);
    for col in 1..=3 {
        let norm: f64 = rows.iter().map(|r| r[col] * r[col]).sum();
        assert!((norm - 1.0).abs() < 1e-9);
    }
    std::fs::remove_dir_all(&dir).unwrap();

    let o = qosc(&["table", "spectrum", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent-dir/x.csv"));
}

#[test]
fn kernel_table_header() {
    let o = qosc(&["table", "kernel", "--t", "i", "--s-max", "30"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    let comment = lines.next().unwrap();
    assert!(comment.starts_with("# t=0+1i unitarity_residual="));
    let header = lines.next().unwrap();
    assert!(header.starts_with("s,re_0,im_0,re_1,im_1"));
    assert_eq!(lines.count(), 31);
}
