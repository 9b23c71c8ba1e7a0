use secreg_cli::model_io::{parse_aux, parse_model, parse_model_spec, parse_model_str, write_model, ModelSpec};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn secreg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_secreg")).args(args).output().unwrap()
}

fn run_ok(args: &[&str]) -> String {
    let out = secreg(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect();
    (header, rows)
}

#[test]
fn gaussian_endpoint_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.csv");
    let p = fixture("gaussian.toml");
    let summary = run_ok(&["gaussian", "--model", p.to_str().unwrap(), "--alphas", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(summary.lines().count(), 1);
    let (header, rows) = csv_rows(&out);
    assert_eq!(header, ["alpha", "rw_bits", "rs_bits", "rl_bits", "d"]);
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][..4], ["1", "0", "0", "0"]);
    let d: f64 = rows[0][4].parse().unwrap();
    assert!((d - (1.0 - 0.81 * 0.64)).abs() < 1e-12);
}

#[test]
fn gaussian_from_flags_matches_model_file() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let p = fixture("gaussian.toml");
    run_ok(&["gaussian", "--model", p.to_str().unwrap(), "--alphas", "0.5,0.25", "--out", a.to_str().unwrap()]);
    run_ok(&[
        "gaussian", "--rho-x", "0.9", "--rho-y", "0.8", "--rho-z", "0.95", "--alphas", "0.25,0.5", "--out",
        b.to_str().unwrap(),
    ]);
    assert_eq!(std::fs::read_to_string(&a).unwrap(), std::fs::read_to_string(&b).unwrap());
    assert_eq!(csv_rows(&a).1[0][0], "0.25");
}

#[test]
fn check_channel_certifies_bsc_pair() {
    let p = fixture("bsc_pair.toml");
    let out = run_ok(&["check-channel", "--model", p.to_str().unwrap()]);
    assert!(out.starts_with("check-channel: feasible"), "{out}");
    assert!(out.contains("0.750000, 0.250000"), "{out}");
    let r = fixture("bsc_pair_reversed.toml");
    let out = run_ok(&["check-channel", "--model", r.to_str().unwrap()]);
    assert!(out.starts_with("check-channel: infeasible"), "{out}");
    assert!(out.contains("[[1.000000, 0.000000], [0.000000, 1.000000]]"), "{out}");
}

#[test]
fn missing_model_fails_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never.csv");
    for cmd in ["compute-region", "simulate", "lossless-region"] {
        let mut args = vec![cmd, "--model", "/nonexistent/model.toml", "--out", out.to_str().unwrap()];
        match cmd {
            "compute-region" => args.extend(["--targets", "0.1"]),
            "simulate" => args.extend(["--n", "10"]),
            _ => {}
        }
        let r = secreg(&args);
        assert!(!r.status.success());
        assert!(String::from_utf8_lossy(&r.stderr).contains("cannot read"));
        assert!(!out.exists());
    }
}

#[test]
fn invalid_parameters_are_rejected_before_dispatch() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let m = fixture("binary.toml");
    let (m, o) = (m.to_str().unwrap(), out.to_str().unwrap());
    for args in [
        vec!["compute-region", "--model", m, "--out", o],
        vec!["compute-region", "--model", m, "--targets", "0.1", "--cardinalities", "3,1", "--out", o],
        vec!["compute-region", "--model", m, "--targets", "0.1", "--r0", "-1", "--out", o],
        vec!["simulate", "--model", m, "--n", "10", "--epsilon", "0", "--out", o],
        vec!["simulate", "--model", m, "--n", "10", "--trials", "0", "--out", o],
        vec!["gaussian", "--rho-x", "0.9", "--alphas", "0.5", "--out", o],
        vec!["gaussian", "--rho-x", "0.9", "--rho-y", "0.8", "--rho-z", "0.95", "--alphas", "1.5", "--out", o],
        vec!["gaussian", "--rho-x", "0.9", "--rho-y", "0.8", "--rho-z", "0.95", "--alphas", "0", "--out", o],
    ] {
        assert!(!secreg(&args).status.success(), "{args:?}");
        assert!(!out.exists());
    }
}

#[test]
fn region_commands_write_headers() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let m = fixture("binary.toml");
    let aux = fixture("aux_lossy.toml");
    run_ok(&[
        "compute-region", "--model", m.to_str().unwrap(), "--aux", aux.to_str().unwrap(), "--r0", "0.1", "--out",
        out.to_str().unwrap(),
    ]);
    let (header, rows) = csv_rows(&out);
    assert_eq!(header, ["d", "rw_bits", "rs_bits", "rl_bits", "regime"]);
    assert_eq!(rows[0][4], "small_key");
    let d: f64 = rows[0][0].parse().unwrap();
    assert!((d - 0.1).abs() < 1e-12);

    run_ok(&[
        "compute-region", "--model", m.to_str().unwrap(), "--targets", "0.1,0.26", "--cardinalities", "3,1,1",
        "--mode", "grid", "--grid-step", "0.1", "--out", out.to_str().unwrap(),
    ]);
    let (_, rows) = csv_rows(&out);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][1], "0");

    let la = fixture("aux_lossless.toml");
    run_ok(&[
        "lossless-region", "--model", m.to_str().unwrap(), "--aux", la.to_str().unwrap(), "--r0", "0,2", "--out",
        out.to_str().unwrap(),
    ]);
    let (header, rows) = csv_rows(&out);
    assert_eq!(header, ["d", "rw_bits", "rs_bits", "rl_bits", "regime"]);
    assert_eq!(rows[1][2..], ["0", "0", "large_key"]);
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let m = fixture("binary.toml");
    for out in [&a, &b] {
        run_ok(&[
            "simulate", "--model", m.to_str().unwrap(), "--n", "8,64", "--epsilon", "0.15", "--trials", "30", "--seed",
            "5", "--out", out.to_str().unwrap(),
        ]);
    }
    assert_eq!(std::fs::read_to_string(&a).unwrap(), std::fs::read_to_string(&b).unwrap());
    let (header, rows) = csv_rows(&a);
    assert_eq!(header, ["n", "error_rate", "distortion", "leak_secrecy_bits", "leak_privacy_bits"]);
    assert_eq!(rows.iter().map(|r| r[0].as_str()).collect::<Vec<_>>(), ["8", "64"]);
}

#[test]
fn fixtures_parse_and_round_trip() {
    for name in ["binary.toml", "binary_joint.toml", "gaussian.toml", "bsc_pair.toml", "bsc_pair_reversed.toml"] {
        let spec = parse_model_spec(&fixture(name)).unwrap();
        assert_eq!(parse_model_str(&write_model(&spec).unwrap()).unwrap(), spec, "{name}");
    }
    let a = parse_model(&fixture("binary.toml")).unwrap();
    let b = parse_model(&fixture("binary_joint.toml")).unwrap();
    assert_eq!(a.alphabets(), b.alphabets());
    for (x, y) in a.meas_dec_eve().as_flat().iter().zip(b.meas_dec_eve().as_flat()) {
        assert!((x - y).abs() < 1e-15);
    }
    assert!(matches!(parse_model_spec(&fixture("binary_joint.toml")).unwrap(), ModelSpec::Discrete { distortion: Some(_), .. }));
    assert!(parse_model(&fixture("gaussian.toml")).is_err());
    assert_eq!(parse_aux(&fixture("aux_lossy.toml")).unwrap().u_size(), 2);
}

#[test]
fn malformed_rows_report_their_index() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(fixture("binary.toml")).unwrap().replace("[0.3, 0.7]]", "[0.3, 0.69]]");
    std::fs::write(&p, text).unwrap();
    let out = dir.path().join("o.csv");
    let r = secreg(&["compute-region", "--model", p.to_str().unwrap(), "--targets", "0.1", "--out", out.to_str().unwrap()]);
    assert!(!r.status.success());
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("p_z_given_x") && err.contains("row 1") && err.contains("0.99"), "{err}");
}
