use std::process::{Command, Output};

fn regfield(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_regfield"))
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

fn csv_rows(o: &Output) -> Vec<csv::StringRecord> {
    csv::Reader::from_reader(o.stdout.as_slice())
        .records()
        .collect::<Result<_, _>>()
        .unwrap()
}

#[test]
fn kernel_info_defaults_succeed() {
    let o = regfield(&["kernel-info", "--kernel", "gaussian", "--kernel", "asymmetric-bump"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("observable,kernel,a,eps,numeric,analytic,rel_dev,notes,m20,m21\r\n"));
    assert_eq!(csv_rows(&o).len(), 6);
}

#[test]
fn moments_default_run_passes() {
    let o = regfield(&["moments", "--a", "0.1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let names: Vec<String> = csv_rows(&o).iter().map(|r| r[0].to_string()).collect();
    assert_eq!(names, ["M_1", "M_2", "R_2", "R_3"]);
}

#[test]
fn eps_equal_to_a_is_config_error() {
    let o = regfield(&["moments", "--a", "0.1", "--eps", "0.1"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("regime"));
}

#[test]
fn unknown_kernel_is_config_error() {
    assert_eq!(code(&regfield(&["moments", "--kernel", "lorentzian"])), 2);
}

#[test]
fn bad_list_and_format_are_config_errors() {
    assert_eq!(code(&regfield(&["moments", "--a", "0.1,x"])), 2);
    assert_eq!(code(&regfield(&["moments", "--format", "xml"])), 2);
}

#[test]
fn missing_config_file_is_config_error() {
    assert_eq!(code(&regfield(&["moments", "--config", "/nonexistent/run.json"])), 2);
}

#[test]
fn two_point_convergence_grid_is_numerical_error() {
    let o = regfield(&["convergence", "--a", "0.1", "--eps", "0.001,0.0005"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn out_of_regime_flag_runs_and_annotates() {
    let o = regfield(&["moments", "--a", "0.1", "--eps", "0.05", "--allow-out-of-regime"]);
    // the expansion is not expected to hold there
    assert_eq!(code(&o), 1);
    let rows = csv_rows(&o);
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r[7].contains("out-of-regime")));
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL"));
}

#[test]
fn observable_filter_limits_rows() {
    let o = regfield(&["electron", "--a", "0.1", "--observable", "spin", "--format", "json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = v.as_array().unwrap();
    assert!(!rows.is_empty());
    for r in rows {
        assert!(r["observable"].as_str().unwrap().starts_with("S_vec"), "{r}");
        for key in ["kernel", "a", "eps", "numeric", "analytic", "rel_dev", "notes", "m20", "m21"] {
            assert!(r.get(key).is_some(), "missing {key}");
        }
    }
}

#[test]
fn electron_run_passes_all_thresholds() {
    let o = regfield(&["electron", "--a", "0.1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let names: Vec<String> = csv_rows(&o).iter().map(|r| r[0].to_string()).collect();
    for obs in ["U_ele", "U_mag", "F_r", "P_vec", "S_vec", "mc2"] {
        assert!(names.iter().any(|n| n == obs), "missing {obs}");
    }
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"kernels": ["compact-bump"], "a": [0.05, 0.1], "m_powers": [2], "r_powers": []}"#,
    )
    .unwrap();
    let out = dir.path().join("rows.csv");
    let o = regfield(&[
        "moments",
        "--config",
        cfg.to_str().unwrap(),
        "--a",
        "0.1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("M_2,compact-bump,0.1,0.001,"));
}

#[test]
fn unknown_config_key_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"kernal": "gaussian"}"#).unwrap();
    assert_eq!(code(&regfield(&["moments", "--config", cfg.to_str().unwrap()])), 2);
}

#[test]
fn reruns_are_byte_identical_across_execution_modes() {
    let args = ["identities", "--a", "0.1", "--kernel", "asymmetric-bump", "--deterministic"];
    let a = regfield(&args);
    let b = regfield(&args);
    let mut seq = args.to_vec();
    seq.push("--sequential");
    let c = regfield(&seq);
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    assert_eq!(a.stderr, c.stderr);
}

#[test]
fn convergence_default_grid_recovers_inverse_eps() {
    let o = regfield(&["convergence", "--a", "0.1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&o);
    assert_eq!(rows.len(), 3);
    for r in &rows {
        let exponent: f64 = r[4].parse().unwrap();
        assert!((exponent + 1.0).abs() < 0.01, "{r:?}");
    }
}

#[test]
fn a_sweep_fits_cutoff_exponents() {
    let o = regfield(&["convergence", "--a", "0.05,0.1,0.2", "--eps", "0.002,0.0006,0.0002"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&o);
    let a_rows: Vec<_> = rows.iter().filter(|r| r[0].ends_with(":a_exponent")).collect();
    assert_eq!(a_rows.len(), 6);
}
