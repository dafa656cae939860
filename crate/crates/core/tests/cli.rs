use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_onsager-lab"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("onsager-lab-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn manifest_without_clock(dir: &Path) -> serde_json::Value {
    let mut m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert!(m["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
    m.as_object_mut().unwrap().remove("wall_clock_seconds");
    m
}

fn assert_same_outputs(a: &Path, b: &Path) {
    let m = manifest_without_clock(a);
    assert_eq!(m, manifest_without_clock(b));
    let outputs = m["outputs"].as_array().unwrap();
    assert!(!outputs.is_empty());
    for name in outputs {
        let name = name.as_str().unwrap();
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name} differs"
        );
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = scratch("determinism");
    for args in [&["iterate"][..], &["flux", "--seed", "5"], &["build-step"]] {
        let (a, b) = (
            dir.join(format!("{}-a", args[0])),
            dir.join(format!("{}-b", args[0])),
        );
        for d in [&a, &b] {
            let o = run(args, d);
            assert!(
                o.status.success(),
                "{args:?}: {}",
                String::from_utf8_lossy(&o.stderr)
            );
        }
        assert_same_outputs(&a, &b);
    }
}

#[test]
fn seed_changes_the_synthetic_field() {
    let dir = scratch("seed");
    let (a, b) = (dir.join("a"), dir.join("b"));
    assert!(run(&["flux", "--seed", "1"], &a).status.success());
    assert!(run(&["flux", "--seed", "2"], &b).status.success());
    assert_ne!(
        fs::read(a.join("field.pfld")).unwrap(),
        fs::read(b.join("field.pfld")).unwrap()
    );
    assert_eq!(manifest_without_clock(&b)["seed"], 2);
}

#[test]
fn flux_of_a_written_field_matches_the_synthetic_run() {
    let dir = scratch("field-file");
    let (a, b) = (dir.join("a"), dir.join("b"));
    assert!(run(&["flux"], &a).status.success());
    let field = a.join("field.pfld");
    let o = run(&["flux", field.to_str().unwrap()], &b);
    assert!(o.status.success());
    assert_eq!(
        fs::read(a.join("flux.csv")).unwrap(),
        fs::read(b.join("flux.csv")).unwrap()
    );
    let m = manifest_without_clock(&b);
    assert_eq!(m["inputs"][0], field.display().to_string());
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, body).unwrap();
    p
}

fn assert_error(o: &Output, needle: &str) {
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains(needle), "{err}");
}

#[test]
fn malformed_configs_are_rejected() {
    let dir = scratch("bad-config");
    let out = dir.join("out");
    for (body, needle) in [
        ("{\"version\": 1,", "config.json"),
        ("{}", "version"),
        ("{\"version\": 7}", "version 7"),
        ("{\"version\": 1, \"flux\": {\"colour\": 1}}", "colour"),
        (
            "{\"version\": 1, \"iterate\": {\"levels\": {\"a_exp\": 2.0}}}",
            "a_exp",
        ),
    ] {
        let cfg = write_config(&dir, body);
        let o = run(&["iterate", "--config", cfg.to_str().unwrap()], &out);
        assert_error(&o, needle);
    }
    let o = run(&["iterate", "--config", "/nonexistent/lab.json"], &out);
    assert_error(&o, "/nonexistent/lab.json");
}

#[test]
fn truncated_field_file_is_rejected() {
    let dir = scratch("truncated");
    let a = dir.join("a");
    assert!(run(&["flux"], &a).status.success());
    let bytes = fs::read(a.join("field.pfld")).unwrap();
    let cut = dir.join("cut.pfld");
    fs::write(&cut, &bytes[..bytes.len() / 2]).unwrap();
    let o = run(&["flux", cut.to_str().unwrap()], &dir.join("b"));
    assert_error(&o, "truncated");
}

#[test]
fn coarse_build_step_hits_the_aliasing_guard() {
    let dir = scratch("aliasing");
    let cfg = write_config(&dir, r#"{"version": 1, "build_step": {"step": {"n": 16}}}"#);
    let o = run(
        &["build-step", "--config", cfg.to_str().unwrap()],
        &dir.join("out"),
    );
    assert_error(&o, "aliasing guard");
}

#[test]
fn failed_checks_exit_with_one() {
    let dir = scratch("failing");
    let cfg = write_config(&dir, r#"{"version": 1, "iterate": {"b_tolerance": 1e-6}}"#);
    let out = dir.join("out");
    let o = run(&["iterate", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL"));
    let m = manifest_without_clock(&out);
    assert_eq!(m["passed"], false);
    assert_eq!(m["tolerances"]["b_relative"], 1e-6);
}
