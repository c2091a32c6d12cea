//! Scenario execution and report writing.

use std::fs;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{Expect, ScenarioConfig, TaskEntry};
use crate::error::CliResult;
use crate::tasks::{run_task, Context, Table};

pub const TOOL: &str = "dflab";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskRecord {
    pub index: usize,
    pub name: String,
    pub inputs_hash: String,
    pub expect: Expect,
    /// Raw outcome of the check.
    pub outcome: Verdict,
    /// Outcome compared with `expect`.
    pub verdict: Verdict,
    pub values: Value,
    pub tables: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub started_unix_ms: u128,
    pub total_ms: f64,
    pub task_ms: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub scenario: ScenarioConfig,
    pub seed: Option<u64>,
    pub inputs_hash: String,
    pub tasks: Vec<TaskRecord>,
    pub verdict: Verdict,
    /// The only field that varies between identical runs.
    pub timing: Timing,
}

impl Report {
    /// Report as JSON with the timing removed.
    pub fn deterministic(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut().expect("object").remove("timing");
        v
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: Report,
    pub tables: Vec<Table>,
}

fn sha256_hex(v: &Value) -> String {
    let bytes = serde_json::to_vec(v).expect("json serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn task_hash(cfg: &ScenarioConfig, seed: Option<u64>, entry: &TaskEntry) -> String {
    sha256_hex(&json!({
        "model": cfg.model,
        "metric": cfg.metric,
        "perturbation": cfg.perturbation,
        "tolerances": cfg.tolerances,
        "seed": seed,
        "task": entry,
    }))
}

/// Runs every task of `cfg`; `seed` overrides the configured seed.
pub fn run_scenario(cfg: &ScenarioConfig, seed: Option<u64>) -> CliResult<RunOutput> {
    let mut cfg = cfg.clone();
    if seed.is_some() {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis());
    let clock = Instant::now();
    let graph = cfg.build_graph()?;
    let metric = cfg.metric.as_ref().map(|m| m.build(&graph)).transpose()?;
    let form = cfg.perturbation.build(graph)?;
    let ctx = Context {
        cfg: &cfg,
        form,
        metric,
        seed: cfg.seed.unwrap_or(0),
    };
    let mut records = Vec::new();
    let mut tables = Vec::new();
    let mut task_ms = Vec::new();
    for (i, entry) in cfg.tasks.iter().enumerate() {
        let t0 = Instant::now();
        let out = run_task(&ctx, &entry.task, i)?;
        task_ms.push(t0.elapsed().as_secs_f64() * 1e3);
        let outcome = Verdict::from_bool(out.passed);
        let verdict = Verdict::from_bool(out.passed == (entry.expect == Expect::Pass));
        let mut names = Vec::new();
        for mut t in out.tables {
            t.name = format!("{:02}_{}_{}.csv", i, entry.task.name(), t.name);
            names.push(t.name.clone());
            tables.push(t);
        }
        records.push(TaskRecord {
            index: i,
            name: entry.task.name().to_string(),
            inputs_hash: task_hash(&cfg, cfg.seed, entry),
            expect: entry.expect,
            outcome,
            verdict,
            values: out.values,
            tables: names,
        });
    }
    let verdict = Verdict::from_bool(records.iter().all(|r| r.verdict == Verdict::Pass));
    let report = Report {
        tool: TOOL.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        inputs_hash: sha256_hex(&serde_json::to_value(&cfg)?),
        seed: cfg.seed,
        scenario: cfg,
        tasks: records,
        verdict,
        timing: Timing {
            started_unix_ms: started,
            total_ms: clock.elapsed().as_secs_f64() * 1e3,
            task_ms,
        },
    };
    Ok(RunOutput { report, tables })
}

/// Writes `report.json` and the CSV tables into `dir`.
pub fn write_outputs(out: &RunOutput, dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    let mut text = serde_json::to_string_pretty(&out.report)?;
    text.push('\n');
    fs::write(dir.join("report.json"), text)?;
    for t in &out.tables {
        let mut w = csv::Writer::from_path(dir.join(&t.name))?;
        w.write_record(&t.header)?;
        for row in &t.rows {
            w.write_record(row)?;
        }
        w.flush()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(expected: f64, expect: &str) -> ScenarioConfig {
        ScenarioConfig::from_json(&format!(
            r#"{{"name": "t", "model": {{"kind": "three_point"}},
                "tasks": [{{"task": "capacity", "set": [1], "expected": {expected}, "expect": "{expect}"}}]}}"#
        ))
        .unwrap()
    }

    #[test]
    fn expect_fail_inverts_the_verdict() {
        let r = run_scenario(&cfg(2.0, "fail"), None).unwrap().report;
        assert_eq!(r.tasks[0].outcome, Verdict::Fail);
        assert_eq!(r.verdict, Verdict::Pass);
        let r = run_scenario(&cfg(2.0, "pass"), None).unwrap().report;
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn hashes_track_inputs_and_seed() {
        let c = cfg(2.0, "pass");
        let a = run_scenario(&c, None).unwrap().report;
        let b = run_scenario(&c, Some(3)).unwrap().report;
        assert_eq!(a.inputs_hash.len(), 64);
        assert_ne!(a.inputs_hash, b.inputs_hash);
        assert_ne!(a.tasks[0].inputs_hash, b.tasks[0].inputs_hash);
        assert_eq!(
            a.deterministic(),
            run_scenario(&c, None).unwrap().report.deterministic()
        );
        assert!(a.deterministic().get("timing").is_none());
    }

    #[test]
    fn table_names_carry_index_and_task() {
        let out = run_scenario(&cfg(2.0, "fail"), None).unwrap();
        assert_eq!(out.tables[0].name, "00_capacity_minimizer.csv");
        assert_eq!(
            out.report.tasks[0].tables,
            vec!["00_capacity_minimizer.csv".to_string()]
        );
    }
}
