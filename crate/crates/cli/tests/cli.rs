use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn dflab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dflab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dflab-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn report_without_timing(dir: &Path) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("timing");
    v
}

#[test]
fn list_scenarios_names_the_catalog() {
    let out = dflab(&["list-scenarios"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["zd_intrinsic", "three_point_counterexample", "lattice_spectrum_shnol"] {
        assert!(text.contains(name), "{text}");
    }
}

#[test]
fn dump_model_prints_graph() {
    let out = dflab(&["dump-model", "capacity"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("3 2"));
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn run_writes_report_and_tables() {
    let dir = scratch("run");
    let out = dflab(&["run", "three_point_counterexample", "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = report_without_timing(&dir);
    assert_eq!(report["verdict"], "pass");
    assert_eq!(report["tasks"][0]["outcome"], "fail");
    assert_eq!(report["tasks"][0]["verdict"], "pass");
    assert!(dir.join("00_verify-metric_slack.csv").is_file());
}

#[test]
fn same_seed_gives_identical_reports() {
    let (a, b) = (scratch("det-a"), scratch("det-b"));
    for d in [&a, &b] {
        let out = dflab(&["run", "capacity", "--seed", "99", "--out", d.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    let ra = report_without_timing(&a);
    assert_eq!(ra, report_without_timing(&b));
    assert_eq!(ra["seed"], 99);
    assert_eq!(
        fs::read(a.join("00_capacity_minimizer.csv")).unwrap(),
        fs::read(b.join("00_capacity_minimizer.csv")).unwrap()
    );
}

#[test]
fn failing_check_exits_one() {
    let dir = scratch("fail");
    let cfg = dir.join("cfg.json");
    fs::write(
        &cfg,
        r#"{"name": "wrong", "model": {"kind": "three_point"}, "tasks": [{"task": "capacity", "set": [1], "expected": 2.0}]}"#,
    )
    .unwrap();
    let out = dflab(&["run", cfg.to_str().unwrap(), "--out", dir.join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn malformed_config_exits_two() {
    let dir = scratch("bad");
    let cfg = dir.join("cfg.json");
    for text in [
        "{ not json",
        r#"{"name": "x", "model": {"kind": "three_point"}, "tasks": [{"task": "no-such-task"}]}"#,
        r#"{"name": "x", "model": {"kind": "three_point"}, "tasks": [{"task": "verify-metric"}]}"#,
        r#"{"name": "x", "model": {"kind": "lattice", "dim": 1, "radius": 3}, "metric": {"kind": "lattice_intrinsic"}, "tasks": [{"task": "shnol", "trials": 1, "set_radius": 1.0, "a": 1.0}]}"#,
    ] {
        fs::write(&cfg, text).unwrap();
        let out = dflab(&["run", cfg.to_str().unwrap(), "--out", dir.join("o").to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{text}");
    }
    assert_eq!(dflab(&["run", "does-not-exist"]).status.code(), Some(2));
}

#[test]
fn parallel_jobs_match_sequential() {
    let (a, b) = (scratch("seq"), scratch("par"));
    let names = ["capacity", "topo_degeneration", "mirror_divergence"];
    let mut args = vec!["run"];
    args.extend(names);
    let run = |dir: &Path, jobs: &str| {
        let mut v = args.clone();
        v.extend(["--jobs", jobs, "--out", dir.to_str().unwrap()]);
        assert_eq!(dflab(&v).status.code(), Some(0));
    };
    run(&a, "1");
    run(&b, "3");
    for n in names {
        assert_eq!(report_without_timing(&a.join(n)), report_without_timing(&b.join(n)));
    }
}
