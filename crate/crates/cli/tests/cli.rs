use std::path::Path;
use std::process::{Command, Output};
use tempfile::TempDir;

fn run(dir: &Path, args: &[&str], config: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sweetspot"));
    cmd.args(args).arg("--out").arg(dir.join("out"));
    if let Some(json) = config {
        let path = dir.join("config.json");
        std::fs::write(&path, json).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.output().unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join("out").join(name)).unwrap()
}

fn json(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&read(dir, name)).unwrap()
}

/// Data rows of a CSV, skipping the metadata and column header lines.
fn rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn tss_reports_sweet_spot() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["tss"], None);
    assert!(out.status.success());
    let doc = json(dir.path(), "tss.json");
    let eps = doc["data"]["epsilon_ss_ghz"].as_f64().unwrap();
    assert!((eps - 1.91935).abs() < 1e-4);
    assert_eq!(doc["metadata"]["seed"], 2024);
    assert_eq!(doc["metadata"]["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn spectrum_marks_the_sweet_spot() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"device": {"delta_b_ghz": 1.5, "tau_ghz": 1.75}, "spectrum": {"eps_min_ghz": -5, "eps_max_ghz": 5, "points": 1001}}"#;
    assert!(run(dir.path(), &["spectrum"], Some(cfg)).status.success());
    let text = read(dir.path(), "spectrum.csv");
    assert!(text.starts_with("# sweetspot "));
    let data = rows(&text);
    let marked: Vec<usize> = (0..data.len()).filter(|&k| data[k][5] == 1.0).collect();
    assert_eq!(marked.len(), 1);
    let k = marked[0];
    assert!(data[k][0] < 0.0);
    let (left, mid, right) = (data[k - 3][4], data[k][4], data[k + 3][4]);
    assert!(
        (left - mid) * (right - mid) > 0.0,
        "omega_q has no extremum at the marker"
    );
}

#[test]
fn spectrum_single_point() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"spectrum": {"eps_min_ghz": 1, "eps_max_ghz": 1, "points": 50}}"#;
    assert!(run(dir.path(), &["spectrum"], Some(cfg)).status.success());
    assert_eq!(rows(&read(dir.path(), "spectrum.csv")).len(), 1);
}

fn fig4_table(dir: &Path, cfg: Option<&str>) -> serde_json::Value {
    let out = run(dir, &["fig4"], cfg);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    json(dir, "fig4.json")["data"].clone()
}

#[test]
fn fig4_defaults_match_reference_values() {
    let dir = TempDir::new().unwrap();
    let t = fig4_table(dir.path(), None);
    assert!((t["x90"]["naive"].as_f64().unwrap() - 0.9978).abs() < 5e-4);
    assert!((t["z90"]["geometric"].as_f64().unwrap() - 0.9947).abs() < 5e-4);
    assert!(dir.path().join("out/filter_xz180_corpse.csv").exists());
}

#[test]
fn fig4_without_noise_is_perfect() {
    let dir = TempDir::new().unwrap();
    let t = fig4_table(dir.path(), Some(r#"{"noise": {"a_t0": 0.0}}"#));
    for row in t.as_object().unwrap().values() {
        for v in row.as_object().unwrap().values() {
            assert_eq!(v.as_f64().unwrap(), 1.0);
        }
    }
}

#[test]
fn fig4_converged_in_density() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let ta = fig4_table(a.path(), None);
    let tb = fig4_table(b.path(), Some(r#"{"noise": {"points_per_decade": 400}}"#));
    for (gate, row) in ta.as_object().unwrap() {
        for (fam, v) in row.as_object().unwrap() {
            let d = (v.as_f64().unwrap() - tb[gate][fam].as_f64().unwrap()).abs();
            assert!(d < 1e-6, "{gate}/{fam}: {d:e}");
        }
    }
}

#[test]
fn leakage_is_small() {
    let dir = TempDir::new().unwrap();
    assert!(run(dir.path(), &["leakage"], None).status.success());
    let d = &json(dir.path(), "leakage.json")["data"];
    let pf = d["max_p_f"].as_f64().unwrap();
    assert!((1e-5..1e-3).contains(&pf));
    assert!(d["final_p0"].as_f64().unwrap() < 1e-5);
}

#[test]
fn noise_trace_is_seeded() {
    let a = TempDir::new().unwrap();
    let cfg = r#"{"noise_gen": {"dt_ns": 0.02, "samples": 2048}}"#;
    assert!(run(a.path(), &["noise-gen", "--seed", "5"], Some(cfg)).status.success());
    assert!(run(a.path(), &["noise-gen", "--seed", "5"], Some(cfg)).status.success());
    let first = read(a.path(), "noise.csv");
    let b = TempDir::new().unwrap();
    assert!(run(b.path(), &["noise-gen", "--seed", "5"], Some(cfg)).status.success());
    assert_eq!(first, read(b.path(), "noise.csv"));
    assert!(run(b.path(), &["noise-gen", "--seed", "6"], Some(cfg)).status.success());
    assert_ne!(first, read(b.path(), "noise.csv"));
    assert_eq!(rows(&first).len(), 2048);
}

#[test]
fn fig5_starts_near_one() {
    let dir = TempDir::new().unwrap();
    let cfg = r#"{"cavity": {"sigma_over_g": [0.0], "realizations": 100}}"#;
    assert!(run(dir.path(), &["fig5"], Some(cfg)).status.success());
    for label in ["db_lt_tau", "db_gt_tau"] {
        let sweep = rows(&read(dir.path(), &format!("fig5_{label}_sweep.csv")));
        assert!(sweep[0][1] >= 0.99, "{label}: {}", sweep[0][1]);
        let pops = rows(&read(dir.path(), &format!("fig5_{label}_population.csv")));
        assert!(pops.last().unwrap()[2] > 0.99);
    }
}

#[test]
fn fig5_is_deterministic() {
    let cfg = r#"{"cavity": {"sigma_over_g": [0.1], "realizations": 100}, "seed": 11}"#;
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    assert!(run(a.path(), &["fig5", "--threads", "1"], Some(cfg)).status.success());
    assert!(run(b.path(), &["fig5"], Some(cfg)).status.success());
    for name in ["fig5_db_gt_tau_sweep.csv", "fig5_db_lt_tau_population.csv"] {
        assert_eq!(read(a.path(), name), read(b.path(), name));
    }
}

#[test]
fn unknown_keys_are_config_errors() {
    let dir = TempDir::new().unwrap();
    let out = run(
        dir.path(),
        &["tss"],
        Some(r#"{"device": {"delta_b_ghz": 2.5, "tau_ghz": 1.5, "detuning": 1}}"#),
    );
    assert_eq!(out.status.code(), Some(2));
    let out = run(dir.path(), &["tss"], Some(r#"{"devices": {}}"#));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_values_are_config_errors() {
    let dir = TempDir::new().unwrap();
    let out = run(
        dir.path(),
        &["tss"],
        Some(r#"{"device": {"delta_b_ghz": 1.5, "tau_ghz": 1.5}}"#),
    );
    assert_eq!(out.status.code(), Some(2));
    let out = run(
        dir.path(),
        &["noise-gen"],
        Some(r#"{"noise_gen": {"dt_ns": 1.0, "samples": 100}}"#),
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_sweet_spot_is_numerical_failure() {
    let dir = TempDir::new().unwrap();
    let out = run(
        dir.path(),
        &["tss"],
        Some(r#"{"device": {"delta_b_ghz": 50, "tau_ghz": 0.1}}"#),
    );
    assert_eq!(out.status.code(), Some(3));
}
