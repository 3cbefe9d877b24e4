use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isac-bench"))
        .args(args)
        .env_remove("ISAC_BENCH_OUT")
        .output()
        .expect("spawn isac-bench")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("run.toml");
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

const PSL: &str = "experiment = \"psl-law\"\ntrials = 4\nseed = 3\nns = [16, 32]\n";

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "csv"))
        .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn list_shows_every_experiment() {
    let out = bench(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let names: Vec<&str> = text.lines().filter(|l| !l.starts_with(' ')).collect();
    assert_eq!(names.len(), 11, "{text}");
    assert!(text.contains("psl-law"));
    assert!(text.contains("trials=500"));
}

#[test]
fn describe_known_and_unknown() {
    let out = bench(&["describe", "psl-law"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("psl_law.csv"));
    let out = bench(&["describe", "no-such-thing"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn same_seed_gives_identical_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), PSL);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(bench(&["run", &cfg, "--out", a.to_str().unwrap()]).status.success());
    assert!(bench(&["run", &cfg, "--out", b.to_str().unwrap(), "--workers", "1"]).status.success());
    let fa = csv_files(&a);
    assert!(!fa.is_empty());
    assert_eq!(fa, csv_files(&b));

    let c = tmp.path().join("c");
    assert!(bench(&["run", &cfg, "--out", c.to_str().unwrap(), "--seed", "4"]).status.success());
    assert_ne!(fa, csv_files(&c));
}

#[test]
fn manifest_reproduces_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), PSL);
    let a = tmp.path().join("a");
    assert!(bench(&["run", &cfg, "--out", a.to_str().unwrap(), "--trials", "3"]).status.success());
    let manifest = a.join("manifest.json");
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(m["trials"], 3);
    assert_eq!(m["config"]["ns"], serde_json::json!([16, 32]));

    let b = tmp.path().join("b");
    let out = bench(&["run", manifest.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(csv_files(&a), csv_files(&b));
}

#[test]
fn csv_has_metadata_header() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), PSL);
    let a = tmp.path().join("a");
    assert!(bench(&["run", &cfg, "--out", a.to_str().unwrap()]).status.success());
    let text = fs::read_to_string(a.join("psl_law.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# experiment: psl-law"));
    assert_eq!(lines.next(), Some("# seed: 3"));
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(data[0].starts_with("n,"));
    assert_eq!(data.len(), 3);
}

#[test]
fn env_var_sets_default_output() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), PSL);
    let dest = tmp.path().join("from-env");
    let out = Command::new(env!("CARGO_BIN_EXE_isac-bench"))
        .args(["run", &cfg])
        .env("ISAC_BENCH_OUT", &dest)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dest.join("manifest.json").exists());
}

#[test]
fn error_exit_codes_are_distinct() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("o");
    let o = out_dir.to_str().unwrap();

    let unknown = write_config(tmp.path(), "experiment = \"nope\"\n");
    assert_eq!(bench(&["run", &unknown, "--out", o]).status.code(), Some(2));

    let bad = write_config(tmp.path(), "experiment = \"psl-law\"\nns = \"many\"\n");
    assert_eq!(bench(&["run", &bad, "--out", o]).status.code(), Some(3));

    let extra = write_config(tmp.path(), "experiment = \"psl-law\"\nbogus = 1\n");
    assert_eq!(bench(&["run", &extra, "--out", o]).status.code(), Some(3));

    let ok = write_config(tmp.path(), PSL);
    assert_eq!(bench(&["run", &ok, "--trials", "0", "--out", o]).status.code(), Some(3));

    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let under_file = blocker.join("sub");
    assert_eq!(bench(&["run", &ok, "--out", under_file.to_str().unwrap()]).status.code(), Some(4));

    assert_eq!(bench(&["frobnicate"]).status.code(), Some(2));
}
