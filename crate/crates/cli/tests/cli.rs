use std::path::Path;
use std::process::{Command, Output};

const HEADER: &str = "date,demand,RRP,min_temperature,max_temperature,solar_exposure,rainfall,school_day,holiday";

fn nvp(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nvp"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

fn electricity(rows: usize) -> String {
    let mut s = format!("{HEADER}\n");
    for i in 0..rows {
        s.push_str(&format!(
            "2018-{:02}-{:02},{},{},{},{},{},{},{},{}\n",
            1 + i / 28,
            1 + i % 28,
            90000 + 700 * (i % 9),
            50 + i % 13,
            8 + i % 7,
            18 + i % 11,
            4 + i % 5,
            i % 4,
            if i % 7 < 5 { "Y" } else { "N" },
            "N",
        ));
    }
    s
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn solve_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "s.toml",
        "seed = 5\n[data]\nn = 300\n[oracle]\nmc_samples = 4000\n",
    );
    for out in ["a", "b"] {
        let o = nvp(&["solve", "s.toml", "--out", out], dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for file in ["trace.csv", "summary.json"] {
        let a = std::fs::read(dir.path().join("a").join(file)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs");
    }
    let summary = read_json(&dir.path().join("a/summary.json"));
    assert!(summary["gap"].as_f64().unwrap() >= -0.01);
}

#[test]
fn zero_samples_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "s.toml", "seed = 1\n[data]\nn = 0\n");
    let o = nvp(&["simulate", "s.toml", "--out", "o"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn zero_iterations_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "s.toml", "seed = 1\n[data]\nn = 100\n");
    let o = nvp(&["solve", "s.toml", "--out", "o", "--max-iters", "0"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("max_iters"));
}

#[test]
fn missing_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = nvp(&["solve", "nope.toml"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "s.toml", "seed = 1\n[data]\nsamples = 100\n");
    let o = nvp(&["simulate", "s.toml", "--out", "o"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("samples"));
}

#[test]
fn ingest_splits_ninety_ten() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "raw.csv", &electricity(100));
    write(dir.path(), "i.toml", "seed = 0\n[ingest]\ninput = \"raw.csv\"\n");
    let o = nvp(&["ingest", "i.toml", "--out", "o"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = read_json(&dir.path().join("o/manifest.json"));
    assert_eq!(m["train_rows"], 90);
    assert_eq!(m["test_rows"], 10);
    assert_eq!(m["dropped_rows"], 0);
    let train = std::fs::read_to_string(dir.path().join("o/train.csv")).unwrap();
    assert_eq!(train.lines().count(), 91);
}

#[test]
fn corrupted_row_is_dropped_with_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    let mut raw = electricity(30);
    raw.push_str("2018-03-05,95000,abc,10,20,5,0,Y,N\n");
    write(dir.path(), "raw.csv", &raw);
    write(dir.path(), "i.toml", "seed = 0\n[ingest]\ninput = \"raw.csv\"\n");
    let o = nvp(&["ingest", "i.toml", "--out", "o"], dir.path());
    assert!(o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("warning") && err.contains("abc"), "{err}");
    let m = read_json(&dir.path().join("o/manifest.json"));
    assert_eq!(m["dropped_rows"], 1);
    assert_eq!(m["train_rows"].as_u64().unwrap() + m["test_rows"].as_u64().unwrap(), 30);
}

#[test]
fn missing_column_names_the_column() {
    let dir = tempfile::tempdir().unwrap();
    let raw = electricity(20).replace(",rainfall", ",rain");
    write(dir.path(), "raw.csv", &raw);
    write(dir.path(), "i.toml", "seed = 0\n[ingest]\ninput = \"raw.csv\"\n");
    let o = nvp(&["ingest", "i.toml", "--out", "o"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("rainfall"));
}

#[test]
fn file_source_summary_has_no_gap() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "raw.csv", &electricity(80));
    write(dir.path(), "i.toml", "seed = 0\n[ingest]\ninput = \"raw.csv\"\n");
    assert!(nvp(&["ingest", "i.toml", "--out", "ing"], dir.path()).status.success());
    write(
        dir.path(),
        "s.toml",
        "seed = 0\n[data]\nsource = \"file\"\npath = \"ing/train.csv\"\n\
         [economics]\nc = 20.0\ns = 5.0\np_bounds = { lo = 45.0, hi = 70.0 }\nq_bounds = { lo = 80000.0, hi = 100000.0 }\n\
         [weights]\nfamily = \"knn\"\nk = 10\n",
    );
    let o = nvp(&["solve", "s.toml", "--out", "o"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = read_json(&dir.path().join("o/summary.json"));
    assert!(s.get("gap").is_none());
    assert!(s.get("true_profit").is_none());
    assert!(s["decision"]["p"].as_f64().unwrap() >= 45.0);
}

#[test]
fn file_source_without_economics_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "raw.csv", &electricity(40));
    write(dir.path(), "i.toml", "seed = 0\n[ingest]\ninput = \"raw.csv\"\n");
    assert!(nvp(&["ingest", "i.toml", "--out", "ing"], dir.path()).status.success());
    write(
        dir.path(),
        "s.toml",
        "seed = 0\n[data]\nsource = \"file\"\npath = \"ing/train.csv\"\n",
    );
    assert_eq!(
        nvp(&["solve", "s.toml", "--out", "o"], dir.path()).status.code(),
        Some(2)
    );
}

#[test]
fn step_grid_iterations_fall_with_larger_steps() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "g.toml",
        "seed = 0\n[data]\nn = 2000\n[sweep]\nkind = \"step_grid\"\nalphas = [0.01, 0.05, 0.1, 0.5, 1.0]\nsigmas = [0.0]\n",
    );
    let o = nvp(&["sweep", "g.toml", "--out", "o"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_path(dir.path().join("o/sweep.csv")).unwrap();
    let headers = r.headers().unwrap().clone();
    let col = headers.iter().position(|h| h == "iterations").unwrap();
    let its: Vec<usize> = r.records().map(|rec| rec.unwrap()[col].parse().unwrap()).collect();
    assert_eq!(its.len(), 5);
    assert!(its.windows(2).all(|w| w[1] <= w[0]), "{its:?}");
    assert!(its[0] > its[4]);
}

#[test]
fn timing_is_written_beside_results() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "s.toml", "seed = 2\n[data]\nn = 50\n");
    let o = nvp(&["simulate", "s.toml", "--out", "o"], dir.path());
    assert!(o.status.success());
    let t = read_json(&dir.path().join("o/timing.json"));
    assert_eq!(t["command"], "simulate");
    let p = read_json(&dir.path().join("o/provenance.json"));
    assert!(p.get("wall_seconds").is_none());
    assert_eq!(p["config_hash"].as_str().unwrap().len(), 64);
}
