//! End-to-end runs of the `cqed-xpm` binary.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const COMMANDS: [&str; 7] = ["levels", "couplings", "susceptibility", "sweep", "dynamics", "cat", "check"];

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cqed-xpm")).args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, config: Option<&Path>, args: &[&str]) -> Output {
    let mut all: Vec<&str> = vec!["--out", dir.to_str().unwrap()];
    if let Some(c) = config {
        all.extend(["--config", c.to_str().unwrap()]);
    }
    all.extend(args);
    run(&all)
}

/// Writes `toml` to a fresh directory and returns (dir, config path).
fn with_config(toml: &str) -> (TempDir, PathBuf) {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("config.toml");
    fs::write(&path, toml).unwrap();
    (dir, path)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

/// Data rows of a CSV, preamble and header stripped.
fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn field(v: &Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or_else(|| panic!("{key} missing in {v}"))
}

#[test]
fn every_command_is_byte_for_byte_reproducible() {
    let config = configs().join("reference.toml");
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for cmd in COMMANDS {
        for dir in [&a, &b] {
            let out = run_in(dir.path(), Some(&config), &[cmd]);
            assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        }
    }
    let names: BTreeSet<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert!(names.len() >= 11, "{names:?}");
    for name in names {
        let (x, y) = (fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap());
        assert!(x == y, "{name:?} differs between runs");
    }
}

#[test]
fn json_report_on_stdout_matches_the_file() {
    let dir = TempDir::new().unwrap();
    assert!(run_in(dir.path(), None, &["susceptibility"]).status.success());
    let printed = run(&["susceptibility"]);
    assert_eq!(printed.stdout, fs::read(dir.path().join("susceptibility.json")).unwrap());
}

/// Dotted paths of every value in a TOML document.
fn leaf_keys(prefix: &str, value: &toml::Value, out: &mut Vec<(String, toml::Value)>) {
    match value {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                leaf_keys(&key, v, out);
            }
        }
        other => out.push((prefix.to_owned(), other.clone())),
    }
}

fn assert_metadata_complete(config: &Path) {
    let doc: toml::Value = toml::from_str(&fs::read_to_string(config).unwrap()).unwrap();
    let mut leaves = Vec::new();
    leaf_keys("", &doc, &mut leaves);

    let dir = TempDir::new().unwrap();
    let out = run_in(dir.path(), Some(config), &["couplings"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let meta = json(&dir.path().join("couplings.json"))["metadata"].clone();
    let meta = meta.as_object().unwrap();

    for (key, value) in leaves {
        // Inline tables (grids, complex amplitudes) are recorded under their own key.
        let recorded = key
            .match_indices('.')
            .map(|(i, _)| &key[..i])
            .chain([key.as_str()])
            .find_map(|k| meta.get(k).map(|v| (k, v)));
        let (found, shown) = recorded.unwrap_or_else(|| panic!("{key} missing from metadata"));
        if found == key {
            if let toml::Value::String(s) = value {
                assert_eq!(shown.as_str(), Some(s.as_str()), "{key}");
            }
        }
    }
}

#[test]
fn metadata_echoes_every_key_of_a_full_direct_config() {
    assert_metadata_complete(&configs().join("reference.toml"));
}

#[test]
fn metadata_echoes_every_key_of_a_full_geometry_config() {
    assert_metadata_complete(&configs().join("geometry.toml"));
}

#[test]
fn csv_preamble_carries_the_metadata() {
    let dir = TempDir::new().unwrap();
    assert!(run_in(dir.path(), None, &["levels"]).status.success());
    let text = fs::read_to_string(dir.path().join("levels.csv")).unwrap();
    assert!(text.contains("# molecule.e_j = 20 GHz\n"));
    assert!(text.contains("# couplings.source = direct\n"));
}

#[test]
fn levels_rows_at_selected_bias_points() {
    let (dir, config) = with_config("[levels]\nb0 = [0.0, 0.4, 0.8]\n");
    assert!(run_in(dir.path(), Some(&config), &["levels"]).status.success());
    let text = fs::read_to_string(dir.path().join("levels.csv")).unwrap();
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], "b0,E31,E42,E32");
    assert_eq!(body[1], "0,25.6155,25.6155,10");

    // Two-level energies at E_J = 20, E_m = 5 GHz: with R = √(E_J² + E_m²(1 − b0)²),
    // E31 = R + E_m(1 + b0), E42 = E31 − 4E_m·b0 and E32 = 2E_m(1 − b0).
    let sig6 = |x: f64| format!("{x:.5e}").parse::<f64>().unwrap().to_string();
    for (line, b0) in body[1..].iter().zip([0.0, 0.4, 0.8]) {
        let (ej, em) = (20.0_f64, 5.0_f64);
        let root = (ej * ej + (em * (1.0 - b0)).powi(2)).sqrt();
        let e31 = root + em * (1.0 + b0);
        let expected = format!("{b0},{},{},{}", sig6(e31), sig6(e31 - 4.0 * em * b0), sig6(2.0 * em * (1.0 - b0)));
        assert_eq!(*line, expected);
    }
    assert_eq!(body.len(), 4);
}

#[test]
fn empty_or_malformed_configs_are_usage_errors() {
    for (toml, needle) in [
        ("[levels]\nb0 = []\n", "grid is empty"),
        ("[sweep]\nomega_ex = { start = \"1 GHz\", stop = \"2 GHz\", points = 0 }\n", "grid is empty"),
        ("[molecule]\ne_j = 20\n", "has no unit"),
        ("[molecule]\ne_j = \"20 ns\"\n", "GHz"),
        ("[molecule]\nej = \"20 GHz\"\n", "unknown field"),
        ("[couplings.direct]\n[couplings.h]\nh_a1 = \"1 GHz\"\nh_a2 = \"1 GHz\"\nh_b1 = \"1 GHz\"\nh_b2 = \"1 GHz\"\n", "exactly one"),
        ("[dynamics]\nsamples = 1\n", "samples"),
    ] {
        let (dir, config) = with_config(toml);
        let out = run_in(dir.path(), Some(&config), &["levels"]);
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert_eq!(out.status.code(), Some(2), "{toml}: {stderr}");
        assert!(stderr.contains(needle), "{toml}: {stderr}");
    }
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["--config", "/nonexistent.toml", "levels"]).status.code(), Some(2));
}

#[test]
fn susceptibility_at_the_default_point() {
    let out = run(&["susceptibility"]);
    assert!(out.status.success());
    let v = stdout_json(&out);
    assert!((field(&v, "chi3_re_mhz") - 2.4).abs() < 0.01);
    for key in ["dispersion_factor", "linear_absorption_factor", "nonlinear_absorption_factor"] {
        assert!(field(&v, key).abs() < 1e-12, "{key}");
    }
    assert_eq!(v["adiabatic"]["pass"], Value::Bool(true));
    assert!(v["oracle"].is_null());
}

#[test]
fn decay_sets_the_relative_decay_rate() {
    let (_dir, config) = with_config("[rates]\ndecay_42 = \"0.5 MHz\"\n");
    let out = run(&["--config", config.to_str().unwrap(), "susceptibility"]);
    assert!(out.status.success());
    // γ₃ is the |4⟩ → |2⟩ rate; R = γ₃/Δ with Δ = 1.5 GHz.
    let r = field(&stdout_json(&out), "relative_decay");
    assert!((r - 0.0005 / 1.5).abs() < 1e-9, "{r}");
}

#[test]
fn oracle_agrees_with_the_elimination() {
    let out = run(&["--oracle", "susceptibility"]);
    assert!(out.status.success());
    let oracle = &stdout_json(&out)["oracle"];
    assert!(field(oracle, "discrepancy").abs() < 0.05, "{oracle}");
}

#[test]
fn missing_pump_is_a_reported_compute_error() {
    let (dir, config) = with_config("[nscheme]\npump_rabi = \"0 GHz\"\n");
    let out = run_in(dir.path(), Some(&config), &["susceptibility"]);
    assert_eq!(out.status.code(), Some(1));
    let report = json(&dir.path().join("susceptibility.json"));
    assert_eq!(report["error"]["kind"], "elimination_invalid");
    assert!(report["error"]["message"].as_str().unwrap().contains("elimination requires Ω_c > 0"));
    assert!(report["metadata"]["nscheme.pump_rabi"].is_string());
}

#[test]
fn sweep_maps_follow_the_closed_forms_without_gamma5() {
    let dir = TempDir::new().unwrap();
    assert!(run_in(dir.path(), None, &["sweep"]).status.success());
    let parse = |s: &str| s.parse::<f64>().unwrap_or_else(|_| panic!("cell {s}"));
    let at_zero = |fig: &str| -> Vec<(f64, f64)> {
        rows(&dir.path().join(fig))
            .iter()
            .filter(|r| parse(&r[1]) == 0.0)
            .map(|r| (parse(&r[0]), parse(&r[2])))
            .collect()
    };
    let fig5 = at_zero("fig5.csv");
    assert_eq!(fig5.len(), 24);
    let k0 = fig5[0].1 * fig5[0].0.powi(2);
    for (omega, chi) in &fig5 {
        assert!((chi * omega * omega / k0 - 1.0).abs() < 1e-9, "Ω = {omega}");
    }
    for fig in ["fig6.csv", "fig7.csv"] {
        assert!(at_zero(fig).iter().all(|(_, v)| *v == 0.0), "{fig}");
    }
    // γ₃/Δ with the sweep's 0.5 MHz decay rates.
    assert!(at_zero("fig8.csv").iter().all(|(_, v)| (v - 0.0005 / 1.5).abs() < 1e-9));
    assert_eq!(rows(&dir.path().join("fig5.csv")).len(), 24 * 21);
}

#[test]
fn dynamics_writes_a_time_series() {
    let dir = TempDir::new().unwrap();
    assert!(run_in(dir.path(), None, &["dynamics"]).status.success());
    let series = rows(&dir.path().join("dynamics.csv"));
    assert_eq!(series.len(), 9);
    let report = json(&dir.path().join("dynamics.json"));
    assert!((field(&report, "horizon_ns") - 1e3 / (2.0 * 2.4)).abs() < 1e-6);
    assert!(field(&report, "final_infidelity") < 0.05);
}

#[test]
fn cat_protocol_at_the_conditional_pi_time() {
    let dir = TempDir::new().unwrap();
    assert!(run_in(dir.path(), None, &["cat", "--fock-csv"]).status.success());
    let v = json(&dir.path().join("cat.json"));
    assert!((field(&v, "time_ns") - 208.333).abs() < 0.01);
    assert!(field(&v, "fidelity") > 1.0 - 1e-8);
    assert_eq!(rows(&dir.path().join("cat_fock.csv")).len(), 21 * 21);

    let (_d, config) = with_config("[cat]\nalpha = 0\n");
    let out = run(&["--config", config.to_str().unwrap(), "cat"]);
    assert!(out.status.success());
    let notes = stdout_json(&out)["notes"].to_string();
    assert!(notes.contains("degenerate"), "{notes}");
}

fn check_ledger(args: &[&str]) -> (Option<i32>, Value) {
    let out = run(args);
    (out.status.code(), stdout_json(&out))
}

fn passing(ledger: &Value) -> Vec<String> {
    ledger["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pass"] == Value::Bool(true))
        .map(|c| c["name"].as_str().unwrap().to_owned())
        .collect()
}

#[test]
fn check_suite_passes_at_defaults_and_at_tighter_tolerances() {
    let (code, base) = check_ledger(&["check"]);
    assert_eq!(code, Some(0), "{base}");
    assert_eq!(base["failed"], 0);
    let (code, tight) = check_ledger(&["check", "--tolerance-scale", "0.01"]);
    assert_eq!(code, Some(0));
    assert_eq!(passing(&base), passing(&tight));
}

#[test]
fn check_suite_surfaces_the_resonant_singularity_and_completes() {
    let (_d, config) = with_config("[nscheme]\nsignal_detuning = \"0 GHz\"\n");
    let (code, ledger) = check_ledger(&["--config", config.to_str().unwrap(), "check"]);
    assert_eq!(code, Some(1));
    let checks = ledger["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 14);
    let chi3 = checks.iter().find(|c| c["name"] == "elimination.chi3_closed_form").unwrap();
    assert_eq!(chi3["pass"], Value::Bool(false));
    assert!(chi3["detail"].as_str().unwrap().contains("γ₃ + iΔ"));
    assert!(passing(&ledger).contains(&"levels.closed_form_vs_diagonalization".to_owned()));
}

#[test]
fn truncation_flag_overrides_every_cutoff() {
    let out = run(&["--truncation", "3", "couplings"]);
    let meta = &stdout_json(&out)["metadata"];
    for key in ["truncation.n_max1", "truncation.n_max2", "cat.n_max"] {
        assert_eq!(meta[key], "3", "{key}");
    }
}
