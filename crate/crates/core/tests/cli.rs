use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use bioopt::cli::parse_config;

fn bioopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bioopt")).args(args).output().expect("spawn bioopt")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn summary(dir: &Path) -> String {
    fs::read_to_string(dir.join("summary.txt")).expect("summary.txt")
}

#[test]
fn missing_subcommand_is_a_usage_error() {
    assert_eq!(bioopt(&[]).status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    assert_eq!(bioopt(&["--help"]).status.code(), Some(0));
}

#[test]
fn flag_overrides_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(&conf, "# small vessel run\npop=50   # trailing comment\ngenerations=5\n\n").unwrap();
    let out = dir.path().join("out");
    let o = bioopt(&["vessel", "--config", conf.to_str().unwrap(), "--pop", "20", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = summary(&out);
    assert!(s.contains("# pop=20\n"), "{s}");
    assert!(s.contains("# generations=5\n"), "{s}");
}

#[test]
fn unknown_config_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(&conf, "pop=10\npopulation=10\n").unwrap();
    let o = bioopt(&["vessel", "--config", conf.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`population`"), "{}", stderr(&o));
}

#[test]
fn key_from_other_engine_is_rejected() {
    let err = parse_config(["bioopt", "dejong", "--engine", "pa", "--pop", "10"]).unwrap_err();
    assert_eq!(err.exit_code(), 1);
    assert!(err.to_string().contains("`pop`"), "{err}");
}

#[test]
fn incompatible_engine_is_rejected() {
    assert_eq!(bioopt(&["vessel", "--engine", "pa"]).status.code(), Some(1));
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = blocker.join("out");
    let o = bioopt(&["vessel", "--pop", "10", "--generations", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let left: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(left.len(), 1);
}

#[test]
fn vessel_summary_reports_constraints() {
    let dir = tempfile::tempdir().unwrap();
    let o = bioopt(&["vessel", "--pop", "20", "--generations", "10", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = summary(dir.path());
    for key in ["best_objective=", "g1=", "g2=", "g3=", "g4=", "feasible=", "seed=1"] {
        assert!(s.lines().any(|l| l.starts_with(key)), "{key} missing from\n{s}");
    }
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(trace.starts_with("# bioopt "));
}

#[test]
fn repeat_writes_one_directory_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let o = bioopt(&[
        "dejong",
        "--dim",
        "2",
        "--pop",
        "10",
        "--generations",
        "3",
        "--seed",
        "7",
        "--repeat",
        "3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for seed in 7..10 {
        let s = summary(&dir.path().join(format!("seed-{seed}")));
        assert!(s.contains(&format!("\nseed={seed}\n")), "{s}");
    }
}

#[test]
fn same_seed_same_trace() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = bioopt(&["bump", "--pop", "20", "--generations", "10", "--out", d.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let read = |d: &tempfile::TempDir| fs::read(d.path().join("trace.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}
