use std::path::Path;
use std::process::{Command, Output};

fn fracpde(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracpde"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, json: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, json).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn eig_on_two_nodes_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"n": 2, "alpha": 1.0}"#);
    let out = fracpde(dir.path(), &["eig", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("eigenvalues.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "eig");
    assert_eq!(manifest["config"]["n"], 2);
    assert_eq!(manifest["pass"], true);
    assert!(manifest["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn invalid_alpha_exits_with_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"alpha": 2.0}"#);
    let out = fracpde(dir.path(), &["eig", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("(0, 2)"));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"n": 15, "viscosity": 0.1}"#);
    let out = fracpde(dir.path(), &["eig", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("viscosity"));
}

#[test]
fn malformed_gronwall_csv_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("traj.csv");
    std::fs::write(&csv, "t,y,g,h\n0,1,0,0\n0.5,oops,0,0\n1,1,0,0\n").unwrap();
    let out = fracpde(
        dir.path(),
        &["gronwall", "--csv", csv.to_str().unwrap(), "--r", "0.5"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    let manifest = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    assert!(manifest.contains("\"error\""));
}

#[test]
fn gronwall_on_exponential_passes() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("traj.csv");
    let mut text = String::from("t,y,g,h\n");
    for i in 0..=1000 {
        let t = i as f64 / 1000.0;
        text.push_str(&format!("{t},{},1,0\n", t.exp()));
    }
    std::fs::write(&csv, text).unwrap();
    let out = fracpde(dir.path(), &["gronwall", "--csv", csv.to_str().unwrap(), "--r", "0.5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("gronwall_windows.csv").exists());
}

#[test]
fn missing_pde_run_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"n": 31, "t_final": 0.05, "n_paths": 1000, "pde_run": "/nonexistent/run.csv"}"#,
    );
    let out = fracpde(dir.path(), &["mc", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/run.csv"));
}

#[test]
fn reruns_are_byte_identical_and_seed_overrides() {
    let cfg_json = r#"{"n": 31, "t_final": 0.05, "dt": 1e-3, "mc_dt": 1e-3, "n_paths": 5000, "drift": "zero"}"#;
    let run = |seed: &str| {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(dir.path(), cfg_json);
        let out = fracpde(dir.path(), &["mc", "--config", &cfg, "--seed", seed]);
        assert!(matches!(out.status.code(), Some(0 | 1)));
        std::fs::read(dir.path().join("mc_histogram.csv")).unwrap()
    };
    assert_eq!(run("7"), run("7"));
    assert_ne!(run("7"), run("8"));
}

#[test]
fn gl_run_writes_energy_and_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"n": 31, "t_final": 2.5, "dt": 0.01, "record_every": 5}"#);
    let out = fracpde(dir.path(), &["gl", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let energy = std::fs::read_to_string(dir.path().join("energy.csv")).unwrap();
    assert!(energy.starts_with("t,l2_sq,seminorm_sq,halpha_sq,window_l2,window_halpha"));
    assert!(dir.path().join("trajectory.csv").exists());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PASS l2_decay"));
}
