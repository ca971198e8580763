use std::path::Path;
use std::process::Command;

use stabfield_cli::manifest::Manifest;

const BIN: &str = env!("CARGO_BIN_EXE_stabfield");

const SIMULATE: &str = r#"
kind = "simulate"
seed = 42
replications = 200

[kernel]
kind = "indicator"
alpha = 1.5

[subordinator]
hurst = 0.5
paths = 32

[grid]
kind = "uniform"
start = 0.0
stop = 2.0
count = 9
"#;

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("config.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> std::process::Output {
    Command::new(BIN)
        .arg("run")
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

#[test]
fn malformed_alpha_exits_nonzero_naming_field_and_range() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SIMULATE.replace("alpha = 1.5", "alpha = 2.5"));
    let out = run(&cfg, &dir.path().join("out"), &[]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("kernel.alpha") && err.contains("2.5") && err.contains("(0, 2]"), "{err}");
}

#[test]
fn simulate_writes_metadata_and_a_verifiable_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SIMULATE);
    let out_dir = dir.path().join("out");
    let out = run(&cfg, &out_dir, &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("field_meta.json")).unwrap()).unwrap();
    let h = meta["meta"]["effective_hurst"].as_f64().unwrap();
    assert!((h - 0.5 / 1.5).abs() < 1e-15);
    assert_eq!(meta["meta"]["seed"].as_u64(), Some(42));
    let manifest = Manifest::load(&out_dir).unwrap();
    let names: Vec<&str> = manifest.files.iter().map(|f| f.path.as_str()).collect();
    for f in ["config.toml", "field.csv", "field_meta.json", "meta.json", "report.json"] {
        assert!(names.contains(&f), "{f} missing from {names:?}");
    }
    // every file in the directory except the manifest itself is listed
    let on_disk = std::fs::read_dir(&out_dir).unwrap().count();
    assert_eq!(on_disk, manifest.files.len() + 1);
    assert!(manifest.verify(&out_dir).unwrap().is_empty());
    let csv = std::fs::read_to_string(out_dir.join("field.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("replication,grid_index,value"));
    assert_eq!(csv.lines().count(), 1 + 200 * 9);
}

#[test]
fn identical_configs_give_identical_csv_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SIMULATE);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(run(&cfg, &a, &["--threads", "1"]).status.success());
    assert!(run(&cfg, &b, &["--threads", "3"]).status.success());
    let fa = std::fs::read(a.join("field.csv")).unwrap();
    assert_eq!(fa, std::fs::read(b.join("field.csv")).unwrap());
    // a different seed changes the numbers
    let c = dir.path().join("c");
    assert!(run(&cfg, &c, &["--seed-override", "43"]).status.success());
    assert_ne!(fa, std::fs::read(c.join("field.csv")).unwrap());
    let effective: toml::Table = toml::from_str(&std::fs::read_to_string(c.join("config.toml")).unwrap()).unwrap();
    assert_eq!(effective["seed"].as_integer(), Some(43));
}

#[test]
fn describe_cites_examples_and_rejects_unknown_kinds() {
    let out = Command::new(BIN).args(["describe", "indicator"]).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("Example 3.1"));
    let out = Command::new(BIN).args(["describe", "chentsov", "--d", "2"]).output().unwrap();
    assert!(String::from_utf8_lossy(&out.stdout).contains("= 2.000000000000000 for d = 2"));
    let out = Command::new(BIN).args(["describe", "wiener"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown kernel kind"));
}

#[test]
fn science_parameters_are_not_positional() {
    let out = Command::new(BIN).args(["run", "1.5"]).output().unwrap();
    assert!(!out.status.success());
}
