use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn wickns(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wickns"))
        .args(args)
        .env_remove("WICKNS_OUT")
        .output()
        .expect("binary runs")
}

fn config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run_ok(cmd: &str, cfg: &Path, out: &Path, extra: &[&str]) {
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = wickns(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

const NOISE: &str = r#"
seed = 11

[solver]
cutoff = 6
dt = 0.03125
horizon = 0.5
ensemble_size = 64

[noise]
kind = "bessel"
alpha = 0.5
"#;

#[test]
fn criticality_in_one_dimension() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "c.toml", "[lab]\ndimension = 1\np = 2.0\n");
    let out = tmp.path().join("out");
    run_ok("criticality", &cfg, &out, &[]);
    let summary = fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(summary.contains("\"critical\""));
    let csv = fs::read_to_string(out.join("criticality.csv")).unwrap();
    assert!(csv.contains("schrodinger_sobolev,-0.5,-0.5,critical"));
}

#[test]
fn zero_problem_gives_zero_states() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "s.toml", "[solver]\ncutoff = 3\ndt = 0.125\nhorizon = 0.5\n");
    let out = tmp.path().join("out");
    run_ok("solve", &cfg, &out, &[]);
    let traj = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let rows: Vec<&str> = traj.lines().skip(1).collect();
    assert_eq!(rows.len(), 5 * 7);
    for r in rows {
        let f: Vec<&str> = r.split(',').collect();
        assert_eq!(f[2].parse::<f64>().unwrap(), 0.0);
        assert_eq!(f[3].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "n.toml", NOISE);
    let (a, b, c, d) = (
        tmp.path().join("a"),
        tmp.path().join("b"),
        tmp.path().join("c"),
        tmp.path().join("d"),
    );
    run_ok("sample-noise", &cfg, &a, &["--workers", "1"]);
    run_ok("sample-noise", &cfg, &b, &["--workers", "3"]);
    let manifest = a.join("manifest.json");
    let o = wickns(&["rerun", "--config", manifest.to_str().unwrap(), "--out", c.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let files = csv_files(&a);
    assert_eq!(files.len(), 2);
    assert_eq!(files, csv_files(&b));
    assert_eq!(files, csv_files(&c));
    assert_eq!(fs::read(a.join("summary.json")).unwrap(), fs::read(c.join("summary.json")).unwrap());
    run_ok("sample-noise", &cfg, &d, &["--seed", "12"]);
    assert_ne!(files, csv_files(&d));
}

#[test]
fn manifest_records_outputs_and_seeds() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "n.toml", NOISE);
    let out = tmp.path().join("m");
    run_ok("sample-noise", &cfg, &out, &[]);
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "sample-noise");
    assert_eq!(m["seed"], 11);
    assert_eq!(m["tasks"][0]["count"], 64);
    let files: Vec<&str> = m["outputs"].as_array().unwrap().iter().map(|o| o["file"].as_str().unwrap()).collect();
    assert_eq!(files, vec!["psi.csv", "variance.csv", "summary.json"]);
    assert_eq!(m["outputs"][1]["schema"], "noise-variance/v1");
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    // the resolved config sits beside the outputs and parses again
    let resolved = fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(resolved.contains("seed = 11"));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = config(tmp.path(), "bad.toml", "[solver]\ncutoff = 4\ndt = 0.1\nhorizon = 1.0\nsteps = 2\n");
    let o = wickns(&["solve", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("steps") && err.contains("line"), "{err}");

    let blow = config(
        tmp.path(),
        "blow.toml",
        "[solver]\ncutoff = 4\ndt = 0.125\nhorizon = 1.0\n[initial]\nkind = \"mode\"\nn = 1\nre = 1e80\n",
    );
    let out = tmp.path().join("blow");
    let o = wickns(&["solve", "--config", blow.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let m = fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(m.contains("blow_up") && m.contains("\"failed\""));
    assert!(out.join("trajectory.csv").exists());

    let strict = config(
        tmp.path(),
        "strict.toml",
        "[lab]\nbeta = 2.0\ngamma = 0.6\nks = [1, 2, 4]\nsum_cutoff = 1000\ntolerance = 1e-9\n",
    );
    let out = tmp.path().join("strict");
    let o = wickns(&["sums", "--config", strict.to_str().unwrap(), "--out", out.to_str().unwrap(), "--assert"]);
    assert_eq!(o.status.code(), Some(3));
    let o = wickns(&["sums", "--config", strict.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn output_dir_override() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "d.toml", "output_dir = \"ignored\"\n[lab]\nnmax = 100\n");
    let env_dir = tmp.path().join("from_env");
    let o = Command::new(env!("CARGO_BIN_EXE_wickns"))
        .args(["divisors", "--config", cfg.to_str().unwrap()])
        .env("WICKNS_OUT", &env_dir)
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(env_dir.join("divisor_records.csv").exists());
    assert!(!tmp.path().join("ignored").exists());
}

#[test]
fn single_cell_sweep_matches_run() {
    let tmp = tempfile::tempdir().unwrap();
    let sweep = format!(
        "{NOISE}\n[sweep]\ncommand = \"sample-noise\"\naxis = \"noise.alpha\"\nvalues = [0.5]\n"
    );
    let cfg = config(tmp.path(), "sw.toml", &sweep);
    let single = config(tmp.path(), "one.toml", NOISE);
    let (a, b) = (tmp.path().join("sweep"), tmp.path().join("one"));
    run_ok("sweep", &cfg, &a, &[]);
    run_ok("sample-noise", &single, &b, &[]);
    assert_eq!(csv_files(&a.join("cells").join("cell_000")), csv_files(&b));
    let table = fs::read_to_string(a.join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 2);
    assert!(table.lines().nth(1).unwrap().starts_with("0,0.5,ok,"));
}

#[test]
fn sweep_records_failures_in_row() {
    let tmp = tempfile::tempdir().unwrap();
    let sweep = "[lab]\nbeta = 2.0\ngamma = 0.6\nks = [1, 2, 4]\nsum_cutoff = 1000\n\
                 [sweep]\ncommand = \"sums\"\naxis = \"lab.gamma\"\nvalues = [0.6, 3.0, 0.5]\n";
    let cfg = config(tmp.path(), "sw.toml", sweep);
    let out = tmp.path().join("out");
    run_ok("sweep", &cfg, &out, &[]);
    let table = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[1].starts_with("0,0.6,"));
    assert!(rows[2].starts_with("1,3.0,failed,"));
    assert!(rows[3].starts_with("2,0.5,"));
}
