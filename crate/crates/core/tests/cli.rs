use std::io::Write;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::NamedTempFile;

const ATOM: &str = "# one atom of mass 1 at 1/2\nn = 2\na = 1/2, 1/2\nm = 2\nd = 0\nbeta = 0, 1\n";
const TABLE_1: &str = "n = 3\na = 1/3, 1/3, 1/3\nm = 3\nd = 1/2\nbeta = 0, 2/3, 1\n";
const TABLE_2: &str = "n = 3\na = 1/3, 1/3, 1/3\nm = 3\nd = 0.5\nbeta = 0, -1, 0\n";

fn config(text: &str) -> NamedTempFile {
    let mut f = NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_selfsim-spectra")).args(args).output().unwrap()
}

fn run_with(cfg: &Path, args: &[&str]) -> Output {
    let mut all = vec!["--config", cfg.to_str().unwrap()];
    all.extend_from_slice(args);
    run(&all)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn column(csv_text: &str, name: &str) -> Vec<String> {
    let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
    let idx = reader.headers().unwrap().iter().position(|h| h == name).unwrap();
    reader.records().map(|r| r.unwrap()[idx].to_string()).collect()
}

#[test]
fn table_1_ratio_column() {
    let out = run(&["table", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let ratios: Vec<f64> = column(&stdout(&out), "ratio").iter().map(|s| s.parse().unwrap()).collect();
    let expected = [4.9341, 13.6598, 8.2322, 14.7576, 8.2330, 14.7577, 8.2330, 14.7577];
    assert_eq!(ratios.len(), expected.len());
    for (r, e) in ratios.iter().zip(expected) {
        assert!((r - e).abs() < 1e-3, "{r} vs {e}");
    }
}

#[test]
fn single_atom_has_eigenvalue_four() {
    let cfg = config(ATOM);
    let out = run_with(cfg.path(), &["--positive", "1", "eigs"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lambda: f64 = column(&text, "lambda")[0].parse().unwrap();
    let err: f64 = column(&text, "rel_err")[0].parse().unwrap();
    assert!((lambda - 4.0).abs() <= 4.0 * err.max(1e-12), "{lambda} ± {err}");
}

#[test]
fn verify_passes_on_table_2() {
    let cfg = config(TABLE_2);
    let out = run_with(cfg.path(), &["verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let status = column(&stdout(&out), "status");
    assert!(!status.is_empty());
    assert!(status.iter().all(|s| s != "fail"), "{status:?}");
}

#[test]
fn invalid_config_exits_1_with_one_line() {
    let cfg = config("n = 2\na = 1/2, 1/2\nm = 1\nd = 3\nbeta = 0, 1\n");
    let out = run_with(cfg.path(), &["validate"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error["), "{err}");

    let cfg = config("n = 2\ncolour = red\n");
    let out = run_with(cfg.path(), &["validate"]);
    assert_eq!(out.status.code(), Some(1));

    let out = run(&["--config", "/nonexistent/params.conf", "validate"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn absent_branch_exits_2() {
    let cfg = config(TABLE_1);
    let out = run_with(cfg.path(), &["--negative", "2", "eigs"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
}

#[test]
fn output_is_deterministic() {
    let cfg = config(TABLE_2);
    let args = ["--negative", "4", "--level", "10", "eigs"];
    let a = run_with(cfg.path(), &args);
    let b = run_with(cfg.path(), &args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn out_flag_writes_the_file() {
    let cfg = config(TABLE_1);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("atoms.csv");
    let out = run_with(cfg.path(), &["--out", path.to_str().unwrap(), "measure"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.lines().count() > 2);
}

#[test]
fn json_output_parses() {
    let cfg = config(TABLE_1);
    let out = run_with(cfg.path(), &["--format", "json", "--positive", "4", "eigs"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v.is_object() || v.is_array(), "{v}");

    let out = run(&["--format", "json", "table", "2"]);
    assert_eq!(out.status.code(), Some(0));
    serde_json::from_slice::<serde_json::Value>(&out.stdout).unwrap();
}

#[test]
fn mu_and_counting_run_on_table_1() {
    let cfg = config(TABLE_1);
    let out = run_with(cfg.path(), &["mu"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run_with(cfg.path(), &["counting", "--points", "5"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).lines().count(), 6);
}
