use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn boxopt(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_boxopt"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn boxopt")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = boxopt(dir, args);
    assert!(
        out.status.success(),
        "boxopt {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn desk() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/desk")
}

/// Drops wall-clock fields so results compare across runs.
fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.retain(|k, _| k != "elapsed_ms");
            map.values_mut().for_each(strip_timing);
        }
        Value::Array(xs) => xs.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Runs the desk pipeline in `dir` and returns the result JSON.
fn desk_pipeline(dir: &Path, mode: &str) -> Value {
    let cfg = desk().join("desk.toml");
    let cfg = cfg.to_str().unwrap();
    let units = desk().join("units.jsonl");
    ok(dir, &["--config", cfg, "gen-boxes", "--out", "boxes.csv"]);
    ok(dir, &["--config", cfg, "gen-cartons", "--boxes", "boxes.csv", "--out", "cartons.csv", "--rel-out", "rel.csv"]);
    ok(
        dir,
        &[
            "--config", cfg, "compute-fit", "--boxes", "boxes.csv", "--units", units.to_str().unwrap(), "--out",
            "fit.bin", "--accepted", "accepted.jsonl", "--stats", "stats.json",
        ],
    );
    ok(
        dir,
        &[
            "--config", cfg, "optimize", "--mode", mode, "--fit", "fit.bin", "--boxes", "boxes.csv", "--units",
            "accepted.jsonl", "--cartons", "cartons.csv", "--rel", "rel.csv", "--out", "result.json", "--cuts",
            "cuts.jsonl",
        ],
    );
    let mut v = read_json(&dir.join("result.json"));
    strip_timing(&mut v);
    v
}

#[test]
fn reference_grid_has_71790_rows() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen-boxes", "--min", "155x155x105", "--max", "995x595x595", "--step", "10", "--out", "boxes.csv"]);
    let text = std::fs::read_to_string(dir.path().join("boxes.csv")).unwrap();
    assert_eq!(text.lines().count(), 71_790 + 1);
}

#[test]
fn direct_on_one_unit_has_zero_gap() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("units.jsonl"), "{\"id\":\"a\",\"items\":[{\"l\":30,\"w\":20,\"h\":10}]}\n").unwrap();
    ok(d, &["gen-boxes", "--min", "20x20x10", "--max", "40x40x30", "--step", "10", "--out", "boxes.csv"]);
    ok(d, &["gen-cartons", "--boxes", "boxes.csv", "--out", "cartons.csv", "--rel-out", "rel.csv"]);
    ok(d, &["compute-fit", "--mode", "grid", "--boxes", "boxes.csv", "--units", "units.jsonl", "--out", "fit.bin", "--accepted", "acc.jsonl"]);
    ok(
        d,
        &[
            "optimize", "--mode", "direct", "--fit", "fit.bin", "--boxes", "boxes.csv", "--units", "acc.jsonl",
            "--cartons", "cartons.csv", "--rel", "rel.csv", "-M", "2", "--out", "result.json",
        ],
    );
    let r = read_json(&d.join("result.json"));
    assert_eq!(r["gap"], 0.0);
    // the smallest box holding 30x20x10 is 30x20x10 itself
    assert_eq!(r["incumbent"], 0);
    assert_eq!(r["termination"], "solved");
}

#[test]
fn desk_pipeline_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let got = desk_pipeline(dir.path(), "benders-xy");
    let golden_path = desk().join("result.golden.json");
    if std::env::var_os("BOXOPT_BLESS").is_some() {
        std::fs::write(&golden_path, serde_json::to_string_pretty(&got).unwrap() + "\n").unwrap();
    }
    assert_eq!(got, read_json(&golden_path));
}

#[test]
fn desk_modes_agree() {
    let golden = read_json(&desk().join("result.golden.json"));
    for mode in ["direct", "benders-x"] {
        let dir = tempfile::tempdir().unwrap();
        let got = desk_pipeline(dir.path(), mode);
        assert_eq!(got["incumbent"], golden["incumbent"], "{mode}");
        assert_eq!(got["gap"], 0.0, "{mode}");
    }
}

#[test]
fn pipeline_is_deterministic_under_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [a.path(), b.path()] {
        ok(d, &["--seed", "5", "gen-units", "--count", "15", "--out", "u.jsonl"]);
    }
    let ua = std::fs::read(a.path().join("u.jsonl")).unwrap();
    assert_eq!(ua, std::fs::read(b.path().join("u.jsonl")).unwrap());
    assert_eq!(String::from_utf8(ua).unwrap().lines().count(), 15);
}

#[test]
fn report_from_volumes() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(dir.path(), &["report", "--objective", "836", "--total-volume", "1000"]);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["kpi_display"], "45.53%");
    assert_eq!(v["score_display"], "0.8360");
}

#[test]
fn fits_prints_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(dir.path(), &["fits", "--items", "10x10x10,10x10x10", "--box", "20x10x10"]);
    assert_eq!(serde_json::from_str::<Value>(&out).unwrap()["fits"], true);
    let out = ok(dir.path(), &["fits", "--items", "10x10x10,10x10x10", "--box", "15x10x10"]);
    assert_eq!(serde_json::from_str::<Value>(&out).unwrap()["fits"], false);
}

#[test]
fn bench_fit_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["bench", "fit", "--sizes", "8,16", "--out", "fit.json"]);
    let v = read_json(&dir.path().join("fit.json"));
    assert_eq!(v["suite"], "fit");
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(boxopt(d, &["no-such-command"]).status.code(), Some(2));
    assert_eq!(boxopt(d, &["bench", "nonsense"]).status.code(), Some(2));
    assert_eq!(boxopt(d, &["gen-boxes", "--min", "1x1", "--out", "x.csv"]).status.code(), Some(2));
    assert_eq!(boxopt(d, &["report"]).status.code(), Some(2));
    // domain errors
    assert_eq!(boxopt(d, &["report", "--objective", "1", "--total-volume", "0"]).status.code(), Some(1));
    assert_eq!(boxopt(d, &["gen-boxes", "--min", "50x50x50", "--max", "10x10x10", "--step", "10", "--out", "x.csv"]).status.code(), Some(1));
    assert_eq!(boxopt(d, &["gen-cartons", "--boxes", "missing.csv", "--out", "c.csv", "--rel-out", "r.csv"]).status.code(), Some(1));
}
