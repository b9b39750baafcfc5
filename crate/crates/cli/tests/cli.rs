use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn rbctrl(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rbctrl"))
        .current_dir(dir)
        .env_remove("RBCTRL_OUT_DIR")
        .args(args)
        .output()
        .expect("rbctrl runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

fn infsup_column(path: &Path, source: &str) -> Vec<f64> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| rec.unwrap())
        .filter(|rec| &rec[0] == source)
        .map(|rec| rec[2].parse().unwrap())
        .collect()
}

const SMALL: &str = "[problem]\nfamily = \"diffusion\"\nnc = 3\n[greedy]\nn_max = 200\nverification_size = 50\n";

#[test]
fn train_writes_basis_and_trace() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "run.toml", SMALL);
    let out = rbctrl(dir.path(), &["train", "--config", &cfg, "--threads", "1", "--out", "o"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("o/basis.json").exists());
    let trace = fs::read_to_string(dir.path().join("o/trace.csv")).unwrap();
    assert!(trace.lines().count() >= 3);
}

#[test]
fn output_directory_comes_from_the_environment() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "run.toml", SMALL);
    let out = Command::new(env!("CARGO_BIN_EXE_rbctrl"))
        .current_dir(dir.path())
        .env("RBCTRL_OUT_DIR", "from-env")
        .args(["train", "--config", &cfg])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("from-env/trace.csv").exists());
}

#[test]
fn unreachable_tolerance_saves_a_partial_basis() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "cap.toml",
        "[problem]\nfamily = \"graetz\"\nnc = 2\n[greedy]\nn_max = 100\ntol = 1e-15\nmax_basis = 2\n",
    );
    let out = rbctrl(dir.path(), &["train", "--config", &cfg, "--out", "o"]);
    assert_eq!(out.status.code(), Some(3));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("o/train.json")).unwrap()).unwrap();
    assert_eq!(summary["outcome"]["status"], "failed_to_converge");
    assert_eq!(summary["snapshots"], 2);
    assert!(dir.path().join("o/basis.json").exists());
}

#[test]
fn single_threaded_reruns_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "run.toml", SMALL);
    for o in ["a", "b"] {
        let out = rbctrl(dir.path(), &["train", "--config", &cfg, "--threads", "1", "--seed", "4", "--out", o]);
        assert_eq!(out.status.code(), Some(0));
    }
    let a = fs::read(dir.path().join("a/trace.csv")).unwrap();
    let b = fs::read(dir.path().join("b/trace.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        fs::read(dir.path().join("a/basis.json")).unwrap(),
        fs::read(dir.path().join("b/basis.json")).unwrap()
    );
}

#[test]
fn verify_reports_and_refuses_foreign_bases() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "run.toml", SMALL);
    assert_eq!(rbctrl(dir.path(), &["train", "--config", &cfg, "--out", "o"]).status.code(), Some(0));

    let out = rbctrl(dir.path(), &["verify", "--config", &cfg, "--out", "o"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/verification.json")).unwrap()).unwrap();
    assert!(report["max"].as_f64().unwrap() <= 1e-7);
    assert_eq!(report["etas"].as_array().unwrap().len(), 50);

    let one = write_config(dir.path(), "one.toml", &SMALL.replace("verification_size = 50", "verification_size = 1"));
    let out = rbctrl(dir.path(), &["verify", "--config", &one, "--basis", "o/basis.json", "--out", "single"]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("single/verification.json")).unwrap()).unwrap();
    assert_eq!(report["etas"].as_array().unwrap().len(), 1);

    let other = write_config(dir.path(), "other.toml", &SMALL.replace("nc = 3", "nc = 2"));
    let out = rbctrl(dir.path(), &["verify", "--config", &other, "--basis", "o/basis.json", "--out", "mismatch"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fingerprint"));
    assert!(!dir.path().join("mismatch").exists());
}

#[test]
fn infsup_separates_naive_from_aggregation() {
    let dir = TempDir::new().unwrap();
    let naive = write_config(
        dir.path(),
        "naive.toml",
        "[problem]\nfamily = \"diffusion\"\nnc = 3\n[greedy]\nn_max = 200\nstabilization = \"naive\"\ntol = 1e-15\nmax_basis = 4\n[infsup]\nsamples = 5\n",
    );
    assert_eq!(rbctrl(dir.path(), &["train", "--config", &naive, "--out", "n"]).status.code(), Some(3));
    let out = rbctrl(dir.path(), &["infsup", "--config", &naive, "--basis", "n/basis.json", "--out", "n"]);
    assert_eq!(out.status.code(), Some(0));
    let at_snapshots = infsup_column(&dir.path().join("n/infsup.csv"), "snapshot");
    assert_eq!(at_snapshots.len(), 4);
    assert!(at_snapshots.iter().all(|&b| b <= 1e-10), "{at_snapshots:?}");

    let agg = write_config(dir.path(), "agg.toml", &format!("{SMALL}[infsup]\nsamples = 100\n"));
    assert_eq!(rbctrl(dir.path(), &["train", "--config", &agg, "--out", "a"]).status.code(), Some(0));
    let out = rbctrl(dir.path(), &["infsup", "--config", &agg, "--basis", "a/basis.json", "--out", "a"]);
    assert_eq!(out.status.code(), Some(0));
    let path = dir.path().join("a/infsup.csv");
    let reduced = infsup_column(&path, "sample");
    assert_eq!(reduced.len(), 100);
    assert!(reduced.iter().all(|&b| b >= 1e-8));
    let mut r = csv::Reader::from_path(&path).unwrap();
    assert!(r.records().all(|rec| rec.unwrap()[1].parse::<f64>().unwrap() > 0.0));
}

#[test]
fn usage_errors_exit_with_code_two() {
    let dir = TempDir::new().unwrap();
    let bad = write_config(dir.path(), "bad.toml", "[problem]\nfamily = \"diffusion\"\nnc = 3\nspeed = 2\n");
    let out = rbctrl(dir.path(), &["train", "--config", &bad, "--out", "o"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("speed") && err.contains("line 4"), "{err}");
    assert!(!dir.path().join("o").exists());

    assert_eq!(rbctrl(dir.path(), &["train", "--out", "o"]).status.code(), Some(2));
    assert_eq!(rbctrl(dir.path(), &["frobnicate"]).status.code(), Some(2));
    let missing = rbctrl(dir.path(), &["train", "--config", "nowhere.toml"]);
    assert_eq!(missing.status.code(), Some(5));
}

#[test]
fn bench_emits_table_and_traces() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "grid.toml",
        "[bench]\nproblem = \"graetz\"\nncs = [2]\nformulations = [\"galerkin\", \"pg\"]\nstabilizations = [\"aggregation\"]\nn_max = 100\nverification_size = 20\n",
    );
    let out = rbctrl(dir.path(), &["bench", "--config", &cfg, "--out", "g", "--threads", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(dir.path().join("g/table.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    assert!(dir.path().join("g/graetz_2_2_pg_aggregation.csv").exists());
    assert!(dir.path().join("g/summary.json").exists());
}
