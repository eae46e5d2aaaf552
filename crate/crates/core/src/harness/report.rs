use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::GoalClass;
use crate::goal_io::{load_goal, serialize_goal};
use crate::sim::{read_trace, replay_world, trace_to_jsonl, ExecutionTrace};

use super::{check_protocol, BenchmarkReport, GoalResult, HarnessError, Summary, TrialResult, REPEATS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialDoc {
    pub repeat_index: u32,
    pub seed: u64,
    pub planning_time_s: f64,
    pub final_completion_pct: f64,
    pub total_time_s: f64,
    pub trace_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalDoc {
    pub goal_id: String,
    pub goal_file: String,
    pub curve_file: String,
    pub plan_status: String,
    pub plan_hash: String,
    pub required_pegs: usize,
    pub mean_success_pct: f64,
    pub mean_time_s: f64,
    pub best_repeat: u32,
    pub trials: Vec<TrialDoc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryDoc {
    pub mean_success_pct: f64,
    pub mean_time_s: f64,
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDoc {
    pub class: String,
    pub seed: u64,
    pub config_hash: String,
    pub grid_dt_s: f64,
    pub repeats: u32,
    pub summary: SummaryDoc,
    pub goals: Vec<GoalDoc>,
}

fn trace_file(goal_id: &str, repeat: u32) -> String {
    format!("traces/{goal_id}-r{repeat}.jsonl")
}

impl ReportDoc {
    pub fn of(report: &BenchmarkReport) -> Self {
        let goals = report
            .goals
            .iter()
            .map(|g| {
                let id = &g.goal.goal_id;
                GoalDoc {
                    goal_id: id.clone(),
                    goal_file: format!("goals/{id}.xml"),
                    curve_file: format!("curve-{id}.csv"),
                    plan_status: g.trials[0].plan_status.clone(),
                    plan_hash: g.trials[0].trace.header.plan_hash.clone(),
                    required_pegs: g.goal.peg_count(),
                    mean_success_pct: g.mean_success_pct,
                    mean_time_s: g.mean_time_s,
                    best_repeat: g.stats.best_repeat,
                    trials: g
                        .trials
                        .iter()
                        .map(|t| TrialDoc {
                            repeat_index: t.repeat_index,
                            seed: t.trace.header.seed,
                            planning_time_s: t.trace.header.planning_time_s,
                            final_completion_pct: t.final_completion_pct,
                            total_time_s: t.total_time_s,
                            trace_file: trace_file(id, t.repeat_index),
                        })
                        .collect(),
                }
            })
            .collect();
        ReportDoc {
            class: report.class.as_str().to_owned(),
            seed: report.seed,
            config_hash: report.config_hash.clone(),
            grid_dt_s: report.grid_dt_s,
            repeats: REPEATS,
            summary: SummaryDoc { mean_success_pct: report.summary.mean_success_pct, mean_time_s: report.summary.mean_time_s },
            goals,
        }
    }

    /// Pretty JSON with keys sorted at every level.
    pub fn to_canonical_json(&self) -> String {
        let v = serde_json::to_value(self).expect("report serializes");
        let mut s = serde_json::to_string_pretty(&v).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Every output file as (path relative to the output directory, bytes).
fn render(report: &BenchmarkReport) -> Result<Vec<(String, Vec<u8>)>, HarnessError> {
    let doc = ReportDoc::of(report);
    let mut files = Vec::new();
    for g in &report.goals {
        files.push((format!("goals/{}.xml", g.goal.goal_id), serialize_goal(&g.goal)?));
        for t in &g.trials {
            files.push((trace_file(&g.goal.goal_id, t.repeat_index), trace_to_jsonl(&t.trace).into_bytes()));
        }
        files.push((format!("curve-{}.csv", g.goal.goal_id), curve_csv(g).into_bytes()));
    }
    files.push(("summary.csv".into(), summary_csv(report).into_bytes()));
    files.push(("report.json".into(), doc.to_canonical_json().into_bytes()));
    Ok(files)
}

fn curve_csv(g: &GoalResult) -> String {
    let s = &g.stats;
    let mut out = String::from("time_s,mean_pct,std_pct,best_pct\n");
    for k in 0..s.time_s.len() {
        writeln!(out, "{},{},{},{}", s.time_s[k], s.mean_pct[k], s.std_pct[k], s.best_pct[k]).unwrap();
    }
    out
}

fn summary_csv(report: &BenchmarkReport) -> String {
    let mut out = String::from("goal_id,mean_success_pct,mean_time_s,best_repeat,best_final_pct,best_time_s\n");
    for g in &report.goals {
        let b = g.best();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            g.goal.goal_id, g.mean_success_pct, g.mean_time_s, b.repeat_index, b.final_completion_pct, b.total_time_s
        )
        .unwrap();
    }
    writeln!(out, "all,{},{},,,", report.summary.mean_success_pct, report.summary.mean_time_s).unwrap();
    out
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_owned(), source }
}

/// Writes `report.json`, `summary.csv`, one `curve-<goal>.csv` per goal, the
/// goal files and every trace. Identical reports give identical bytes.
pub fn emit_report(report: &BenchmarkReport, out_dir: &Path) -> Result<(), HarnessError> {
    for (rel, bytes) in render(report)? {
        let path = out_dir.join(&rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        std::fs::write(&path, bytes).map_err(io_err(&path))?;
    }
    Ok(())
}

fn read(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(io_err(path))
}

/// Rebuilds the report from the goal and trace files in `dir`, checks the
/// protocol, and requires every emitted file to match the rebuild byte for
/// byte.
pub fn verify_report_dir(dir: &Path) -> Result<ReportDoc, HarnessError> {
    let mismatch = |m: String| HarnessError::Mismatch(m);
    let doc_path = dir.join("report.json");
    let doc: ReportDoc =
        serde_json::from_str(&read(&doc_path)?).map_err(|e| mismatch(format!("{}: {e}", doc_path.display())))?;
    let class = GoalClass::parse(&doc.class).ok_or_else(|| mismatch(format!("unknown class {}", doc.class)))?;
    let mut goals = Vec::new();
    for gd in &doc.goals {
        let goal = load_goal(&dir.join(&gd.goal_file))?;
        let mut trials = Vec::new();
        for td in &gd.trials {
            let path: PathBuf = dir.join(&td.trace_file);
            let (header, events) = read_trace(&read(&path)?)?;
            let (_, final_state) = replay_world(&events, &goal)?;
            let trace = ExecutionTrace { header, events, final_state };
            trials.push(TrialResult::from_trace(&goal, td.repeat_index, &gd.plan_status, trace)?);
        }
        goals.push(GoalResult::new(goal, trials, doc.grid_dt_s)?);
    }
    check_protocol(&goals, &doc.config_hash)?;
    let summary = Summary::of(&goals);
    let rebuilt = BenchmarkReport { class, seed: doc.seed, config_hash: doc.config_hash.clone(), grid_dt_s: doc.grid_dt_s, goals, summary };
    for (rel, bytes) in render(&rebuilt)? {
        let path = dir.join(&rel);
        let on_disk = std::fs::read(&path).map_err(io_err(&path))?;
        if on_disk != bytes {
            return Err(mismatch(format!("{rel} differs from its recomputation")));
        }
    }
    Ok(doc)
}
