use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use stsdiscord::schema::{validate_file, OutputKind, MANIFEST_KEYS};

fn stsdiscord(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stsdiscord"))
        .args(args)
        .env_remove("STSDISCORD_THREADS")
        .output()
        .expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_reports_true_state() {
    let dir = tempfile::tempdir().unwrap();
    let v = json_stdout(&stsdiscord(&["simulate", "--r", "0", "--mq", "100", "--out", s(dir.path())]));
    assert_eq!(v["d_true"].as_f64(), Some(0.0));
    assert_eq!(v["m_q"].as_u64(), Some(100));
    assert!(dir.path().join("dataset.csv").exists());

    let file = dir.path().join("x.csv");
    let v = json_stdout(&stsdiscord(&[
        "simulate", "--ns", "1", "--nt", "0.5", "--mq", "100", "--seed", "3", "--out", s(&file),
    ]));
    assert!((v["d_true"].as_f64().unwrap() - 0.750258).abs() < 1e-6);
    assert_eq!(v["seed"].as_u64(), Some(3));
    validate_file(&file, OutputKind::Dataset).unwrap();
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(stsdiscord(&["simulate", "--r", "0.3"]).status.code(), Some(2));
    assert_eq!(stsdiscord(&["simulate", "--r", "0.3", "--ns", "1", "--out", "x"]).status.code(), Some(2));
    assert_eq!(stsdiscord(&["bounds", "--r-grid", "0.3,0.1"]).status.code(), Some(2));
    assert_eq!(stsdiscord(&["sweep", "--mq", "1001", "--out", s(dir.path())]).status.code(), Some(2));
    assert_eq!(stsdiscord(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(stsdiscord(&["--help"]).status.code(), Some(0));

    let out = Command::new(env!("CARGO_BIN_EXE_stsdiscord"))
        .args(["bounds", "--r-grid", "0.3"])
        .env("STSDISCORD_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let out = stsdiscord(&["estimate", "--method", "inversion", "--in", s(&missing)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn estimate_emits_record() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("d.csv");
    json_stdout(&stsdiscord(&["simulate", "--r", "0.5", "--mq", "20000", "--seed", "9", "--out", s(&ds)]));

    let dest = dir.path().join("inv.json");
    let inv = json_stdout(&stsdiscord(&[
        "estimate", "--method", "inversion", "--in", s(&ds), "--seed", "9", "--out", s(&dest),
    ]));
    validate_file(&dest, OutputKind::Estimate).unwrap();
    assert_eq!(inv["method"], "inversion");
    assert_eq!(inv["resources_m"].as_u64(), Some(80_000));
    assert_eq!(inv["schema_version"], "1");
    let d_true = 0.17758325180196947672;
    assert!((inv["d_hat"].as_f64().unwrap() - d_true).abs() < 4.0 * inv["var_d"].as_f64().unwrap().sqrt());

    let bay = json_stdout(&stsdiscord(&["estimate", "--method", "bayes", "--in", s(&ds), "--blocks", "1"]));
    assert_eq!(bay["method"], "bayes");
    assert_eq!(bay["resources_m"].as_u64(), Some(80_000));
    let bay = json_stdout(&stsdiscord(&["estimate", "--method", "bayes", "--in", s(&ds)]));
    assert_eq!(bay["resources_m"].as_u64(), Some(8_000_000));
}

#[test]
fn vacuum_dataset_needs_relaxed_rejection_limit() {
    let dir = tempfile::tempdir().unwrap();
    let ds = dir.path().join("v.csv");
    json_stdout(&stsdiscord(&["simulate", "--ns", "0", "--nt", "0", "--mq", "20000", "--out", s(&ds)]));
    let strict = stsdiscord(&["estimate", "--method", "inversion", "--in", s(&ds)]);
    assert_eq!(strict.status.code(), Some(1));
    let v = json_stdout(&stsdiscord(&[
        "estimate", "--method", "inversion", "--in", s(&ds), "--max-rejection-rate", "0.99",
    ]));
    assert!(v["d_hat"].as_f64().unwrap() < 3.0 * v["var_d"].as_f64().unwrap().sqrt());
}

#[test]
fn bounds_table_matches_reference_values() {
    let out = stsdiscord(&["bounds", "--r-grid", "0,0.1,0.3,0.5"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("skipping r = 0"));
    let mut reader = csv::Reader::from_reader(&out.stdout[..]);
    let rows: Vec<Vec<f64>> = reader
        .records()
        .map(|r| r.unwrap().iter().map(|c| c.parse().unwrap()).collect())
        .collect();
    // r, n_s, n_t, d_true, crb_quantum, crb_classical, ratio_db
    let reference = [
        [0.1, 0.0038344889298612418714, 0.0056856642275292590295, 0.018869993359265172113,
         0.084877202828879697825, 0.29496312136485875763, 5.4097666168749791329],
        [0.3, 0.033869507232159893364, 0.053047433438472397928, 0.096236836997917375436,
         0.22363884148370856495, 0.57273866763400030097, 4.0840927105871621887],
        [0.5, 0.091104614553345785429, 0.15820107031347668894, 0.17758325180196947672,
         0.24501946903866012893, 0.66140391270790766909, 4.3126616536207375113],
    ];
    assert_eq!(rows.len(), reference.len());
    for (got, want) in rows.iter().zip(&reference) {
        assert!(got[5] >= got[4]);
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() <= 1e-8 * w.abs().max(1e-3), "{got:?} vs {want:?}");
        }
    }

    let dir = tempfile::tempdir().unwrap();
    let dest = dir.path().join("b.csv");
    assert!(stsdiscord(&["bounds", "--r-grid", "0.1:0.5:0.2", "--out", s(&dest)]).status.success());
    validate_file(&dest, OutputKind::Bounds).unwrap();
    assert_eq!(std::fs::read_to_string(&dest).unwrap().lines().count(), 4);
}

const SWEEP_FILES: [&str; 4] = ["cells.csv", "summary.csv", "plot_km.csv", "sweep.json"];

fn tiny_sweep(dir: &Path, threads: &str) {
    let out = Command::new(env!("CARGO_BIN_EXE_stsdiscord"))
        .args([
            "sweep", "--r-grid", "0.2,0.4", "--mq", "2000", "--blocks", "10", "--mc-trials", "10000",
            "--seeds", "1,2", "--out", s(dir),
        ])
        .env("STSDISCORD_THREADS", threads)
        .output()
        .unwrap();
    let v = json_stdout(&out);
    assert_eq!(v["cells"].as_u64(), Some(4));
    assert_eq!(v["failures"].as_u64(), Some(0));
}

#[test]
fn sweep_outputs_are_reproducible_across_threads() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    tiny_sweep(a.path(), "1");
    tiny_sweep(b.path(), "4");
    for name in SWEEP_FILES {
        let (x, y) = (std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap());
        assert_eq!(x, y, "{name} differs");
    }
    validate_file(&a.path().join("cells.csv"), OutputKind::Cells).unwrap();
    validate_file(&a.path().join("summary.csv"), OutputKind::Summary).unwrap();
    validate_file(&a.path().join("plot_km.csv"), OutputKind::Plot).unwrap();
    validate_file(&a.path().join("sweep.json"), OutputKind::SweepJson).unwrap();

    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(a.path().join("manifest.json")).unwrap()).unwrap();
    for key in MANIFEST_KEYS {
        assert!(manifest.get(*key).is_some(), "manifest lacks {key}");
    }
    assert_eq!(manifest["threads"].as_u64(), Some(1));
    let plot = std::fs::read_to_string(a.path().join("plot_km.csv")).unwrap();
    assert_eq!(plot.lines().count(), 1 + 4 * 2);
}
