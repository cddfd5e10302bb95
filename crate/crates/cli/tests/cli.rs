//! End-to-end smoke tests of the command-line interface.

use std::path::PathBuf;
use std::process::Command;

fn revsim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_revsim"))
}

fn temp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("revsim-cli-{name}"));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn scenarios_lists_the_library() {
    let out = revsim().arg("scenarios").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "fig1",
        "fig3",
        "fig4",
        "epsilon_family",
        "three_dirac",
        "four_atoms",
        "gap_interval",
        "truncated_components",
    ] {
        assert!(text.contains(name), "missing {name} in listing");
    }
}

#[test]
fn simulate_scenario_writes_artifacts() {
    let dir = temp_dir("simulate");
    let out = revsim()
        .args(["simulate", "--scenario", "four_atoms", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in [
        "manifest.json",
        "snapshots.csv",
        "prediction.csv",
        "components.json",
        "diagnostics.csv",
        "plots.gp",
    ] {
        assert!(dir.join(name).is_file(), "missing {name}");
    }
    let diag = std::fs::read_to_string(dir.join("diagnostics.csv")).unwrap();
    assert!(diag.starts_with("t,mass_total,mass_upper,mass_lower,H,D,tv_to_finfty"));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn simulate_from_config_file_with_overrides() {
    let dir = temp_dir("config");
    let config = r#"
[space]
kind = "atomic_circle"
angles = [0.0, 1.6707963267948966]

[kernel]
kind = "indicator"
alpha = 1.5707963267948966

[initial]
kind = "atoms"
atoms = [[0.0, 0.5], [1.6707963267948966, 0.5]]

[integrator]
method = "expm"
dt = 0.1
steps = 50
"#;
    let path = dir.join("exp.toml");
    std::fs::write(&path, config).unwrap();
    let out = revsim()
        .args(["simulate", "--config"])
        .arg(&path)
        .args(["--method", "rk4", "--dt", "0.01", "--steps", "100", "--out"])
        .arg(dir.join("run"))
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let manifest = std::fs::read_to_string(dir.join("run/manifest.json")).unwrap();
    assert!(manifest.contains("\"method_used\": \"rk4\""));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn analyze_prints_component_report() {
    let out = revsim()
        .args(["analyze", "--scenario", "gap_interval"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"components\""));
    assert!(text.contains("\"isolated\""));
}

#[test]
fn predict_writes_equilibrium() {
    let dir = temp_dir("predict");
    let out = revsim()
        .args(["predict", "--scenario", "fig4", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.join("prediction.csv").is_file());
    assert!(dir.join("components.json").is_file());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn rejects_bad_inputs() {
    let out = revsim()
        .args(["simulate", "--scenario", "no_such_scenario"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let out = revsim().arg("simulate").output().unwrap();
    assert!(!out.status.success());
}
