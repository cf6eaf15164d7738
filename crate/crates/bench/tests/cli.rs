use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rad_bench::Summary;

fn radbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radbench")).args(args).output().expect("spawn radbench")
}

fn config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name).display().to_string()
}

fn files_in(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

fn run_ok(args: &[&str]) -> Output {
    let out = radbench(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

#[test]
fn default_config_writes_ten_traces_and_two_summaries() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().display().to_string();
    run_ok(&["run", &config("default.toml"), "--out", &out]);
    let files = files_in(&tmp.path().join("noisy_quadratic"));
    let traces: Vec<_> = files.iter().filter(|p| p.to_string_lossy().contains("_seed")).collect();
    assert_eq!(traces.len(), 10);
    assert_eq!(files.len(), 12);
    for seed in 0..5 {
        for label in ["RAD1", "ADAM"] {
            assert!(tmp.path().join(format!("noisy_quadratic/{label}_seed{seed}.csv")).exists());
        }
    }

    let trace = fs::read_to_string(tmp.path().join("noisy_quadratic/RAD1_seed0.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some("step,J,grad_norm_sq,H,delta_h,lr_min,lr_max"));
    assert_eq!(lines.count(), 20_001);

    let summary = fs::read_to_string(tmp.path().join("noisy_quadratic/RAD1_summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines.len(), 7);
    assert_eq!(lines[0], "seed,div,final_J,final_J_std,slope,final_grad_norm_sq");
    assert!(lines[6].starts_with("aggregate,0,"));
}

#[test]
fn reruns_are_byte_identical_in_both_modes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_ok(&["run", &config("default.toml"), "--out", &a.path().display().to_string()]);
    run_ok(&["run", &config("default.toml"), "--out", &b.path().display().to_string(), "--parallel", "3"]);
    let fa = files_in(&a.path().join("noisy_quadratic"));
    let fb = files_in(&b.path().join("noisy_quadratic"));
    assert_eq!(fa.len(), fb.len());
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.file_name(), y.file_name());
        assert!(fs::read(x).unwrap() == fs::read(y).unwrap(), "{} differs", x.display());
    }
}

#[test]
fn seeds_flag_replaces_the_config_list() {
    let tmp = tempfile::tempdir().unwrap();
    run_ok(&["run", &config("hamiltonian.toml"), "--out", &tmp.path().display().to_string(), "--seeds", "7,9"]);
    let names: Vec<String> =
        files_in(&tmp.path().join("hamiltonian")).iter().map(|p| p.file_name().unwrap().to_string_lossy().into()).collect();
    assert_eq!(
        names,
        [
            "first-order_seed7.csv",
            "first-order_seed9.csv",
            "first-order_summary.csv",
            "second-order_seed7.csv",
            "second-order_seed9.csv",
            "second-order_summary.csv"
        ]
    );
}

#[test]
fn hamiltonian_diagnostics_report_the_contraction() {
    let tmp = tempfile::tempdir().unwrap();
    run_ok(&["run", &config("hamiltonian.toml"), "--out", &tmp.path().display().to_string()]);
    for label in ["first-order", "second-order"] {
        let s = Summary::read(&tmp.path().join(format!("hamiltonian/{label}_summary.csv"))).unwrap();
        assert_eq!(s.extras, ["max_area_error", "monotone_fraction"]);
        for row in &s.rows {
            assert!(!row.diverged);
            assert!(row.extras[0] < 1e-5, "{label}: area error {}", row.extras[0]);
        }
    }
}

#[test]
fn every_bundled_config_parses() {
    for (file, text) in rad_bench::acceptance::BUNDLED {
        rad_bench::config::parse(text).unwrap_or_else(|e| panic!("{file}: {e}"));
        assert!(Path::new(&config(file)).exists());
    }
}

#[test]
fn malformed_config_exits_with_the_parse_code_and_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config("default.toml")).unwrap().replace("budget = 20000", "budget = = 20000");
    let path = tmp.path().join("bad.toml");
    fs::write(&path, text).unwrap();
    let out_dir = tmp.path().join("out");
    let out = radbench(&["run", &path.display().to_string(), "--out", &out_dir.display().to_string()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 5"), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!out_dir.exists());
}

#[test]
fn unknown_component_has_its_own_code() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config("default.toml")).unwrap().replace("\"ADAM\"", "\"ADAGRAD\"");
    let path = tmp.path().join("unknown.toml");
    fs::write(&path, text).unwrap();
    let out_dir = tmp.path().join("out");
    let out = radbench(&["run", &path.display().to_string(), "--out", &out_dir.display().to_string()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ADAGRAD"));
    assert!(!out_dir.exists());
}

#[test]
fn unwritable_output_has_its_own_code() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, b"not a directory").unwrap();
    let out = radbench(&["run", &config("hamiltonian.toml"), "--out", &blocker.display().to_string()]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn missing_config_is_an_io_error() {
    let out = radbench(&["run", "/nonexistent/radbench.toml"]);
    assert_eq!(out.status.code(), Some(5));
}

fn write_summary(dir: &Path, name: &str, metric: &str, values: &[f64]) -> String {
    let mut s = Summary::new(metric, &[]);
    for (i, &v) in values.iter().enumerate() {
        s.rows.push(rad_bench::summary::SeedResult { seed: i as u64, diverged: false, metric: v, extras: vec![] });
    }
    let path = dir.join(name);
    fs::write(&path, s.to_bytes()).unwrap();
    path.display().to_string()
}

#[test]
fn compare_reports_relative_improvement() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [(228.0, 125.0, "+82.4%"), (5871.0, 2301.0, "+155.1%"), (125.0, 125.0, "+0.0%")];
    for (i, (a, b, expected)) in cases.into_iter().enumerate() {
        // two seeds per side, means a and b
        let pa = write_summary(tmp.path(), &format!("a{i}.csv"), "final_return", &[a - 1.0, a + 1.0]);
        let pb = write_summary(tmp.path(), &format!("b{i}.csv"), "final_return", &[b + 2.0, b - 2.0]);
        let out = run_ok(&["compare", &pa, &pb]);
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.contains(&format!("relative improvement: {expected}")), "{text}");
        assert!(text.contains(&format!("0,{}", a - b - 3.0)), "{text}");
    }
}

#[test]
fn compare_rejects_different_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let pa = write_summary(tmp.path(), "a.csv", "final_return", &[1.0]);
    let pb = write_summary(tmp.path(), "b.csv", "final_J", &[1.0]);
    assert_eq!(radbench(&["compare", &pa, &pb]).status.code(), Some(6));
}

#[test]
fn compare_works_on_runner_output() {
    let tmp = tempfile::tempdir().unwrap();
    run_ok(&["run", &config("default.toml"), "--out", &tmp.path().display().to_string(), "--seeds", "0,1"]);
    let dir = tmp.path().join("noisy_quadratic");
    let rad = dir.join("RAD1_summary.csv").display().to_string();
    let out = run_ok(&["compare", &rad, &rad]);
    assert!(String::from_utf8(out.stdout).unwrap().contains("relative improvement: +0.0%"));
}

#[test]
fn accept_runs_selected_criteria() {
    let out = run_ok(&["accept", "--only", "1,7"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("criterion  1 [PASS]") && lines[1].starts_with("criterion  7 [PASS]"), "{text}");
}
