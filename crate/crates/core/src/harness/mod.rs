//! The evaluation protocol: five consecutive trials per goal of a class,
//! each planned and executed afresh, scored as completion over time.

mod report;
mod stats;

use std::path::PathBuf;
use std::time::Instant;

use thiserror::Error;

use crate::domain::{GoalClass, GoalConfiguration};
use crate::goal_io::{AssemblyCatalog, GoalIoError};
use crate::planner::{plan_detailed, Domains, PlanError, PlanOptions};
use crate::sim::{replay, CompletionCurve, ExecutionTrace, SimConfig, SimError, Simulator, TraceHeader};

pub use report::{emit_report, verify_report_dir, GoalDoc, ReportDoc, SummaryDoc, TrialDoc};
pub use stats::{best_trial, curve_stats, grid_len, CurveStats};

pub const REPEATS: u32 = 5;
pub const DEFAULT_GRID_DT_S: f64 = 5.0;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("GRID_ERROR: {0}")]
    Grid(String),
    #[error("PROTOCOL_ERROR: {0}")]
    Protocol(String),
    #[error("REPORT_MISMATCH: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    GoalIo(#[from] GoalIoError),
    #[error("IO_ERROR: {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl HarnessError {
    pub fn code(&self) -> &'static str {
        match self {
            HarnessError::Grid(_) => "GRID_ERROR",
            HarnessError::Protocol(_) => "PROTOCOL_ERROR",
            HarnessError::Mismatch(_) => "REPORT_MISMATCH",
            HarnessError::Plan(e) => e.code(),
            HarnessError::Sim(e) => e.code(),
            HarnessError::GoalIo(e) if e.is_io() => "IO_ERROR",
            HarnessError::GoalIo(e) => e.code(),
            HarnessError::Io { .. } => "IO_ERROR",
        }
    }

    pub fn is_io(&self) -> bool {
        self.code() == "IO_ERROR"
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub goal_id: String,
    /// 1-based position among the goal's consecutive trials.
    pub repeat_index: u32,
    /// `"ok"`, or the planner's error code when nothing was executed.
    pub plan_status: String,
    pub trace: ExecutionTrace,
    pub curve: CompletionCurve,
    pub final_completion_pct: f64,
    /// Planning plus execution; the `run_ended` time.
    pub total_time_s: f64,
}

impl TrialResult {
    pub fn from_trace(goal: &GoalConfiguration, repeat_index: u32, plan_status: &str, trace: ExecutionTrace) -> Result<Self, SimError> {
        let curve = replay(&trace.events, goal)?;
        Ok(TrialResult {
            goal_id: goal.goal_id.clone(),
            repeat_index,
            plan_status: plan_status.to_owned(),
            final_completion_pct: curve.final_pct(),
            total_time_s: trace.end_time(),
            trace,
            curve,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoalResult {
    pub goal: GoalConfiguration,
    pub trials: Vec<TrialResult>,
    pub stats: CurveStats,
    pub mean_success_pct: f64,
    pub mean_time_s: f64,
}

impl GoalResult {
    pub fn new(goal: GoalConfiguration, trials: Vec<TrialResult>, grid_dt_s: f64) -> Result<Self, HarnessError> {
        let stats = curve_stats(&trials, grid_dt_s)?;
        let n = trials.len() as f64;
        let mean_success_pct = trials.iter().map(|t| t.final_completion_pct).sum::<f64>() / n;
        let mean_time_s = trials.iter().map(|t| t.total_time_s).sum::<f64>() / n;
        Ok(GoalResult { goal, trials, stats, mean_success_pct, mean_time_s })
    }

    pub fn best(&self) -> &TrialResult {
        &self.trials[(self.stats.best_repeat - 1) as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean_success_pct: f64,
    pub mean_time_s: f64,
}

impl Summary {
    /// Means over goals of the per-goal means.
    pub fn of(goals: &[GoalResult]) -> Self {
        let n = goals.len() as f64;
        Summary {
            mean_success_pct: goals.iter().map(|g| g.mean_success_pct).sum::<f64>() / n,
            mean_time_s: goals.iter().map(|g| g.mean_time_s).sum::<f64>() / n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub class: GoalClass,
    pub seed: u64,
    pub config_hash: String,
    pub grid_dt_s: f64,
    pub goals: Vec<GoalResult>,
    pub summary: Summary,
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub grid_dt_s: f64,
    /// Run the goals on separate threads; results are identical.
    pub parallel_goals: bool,
    pub plan: PlanOptions,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { grid_dt_s: DEFAULT_GRID_DT_S, parallel_goals: false, plan: PlanOptions::default() }
    }
}

/// Seed of trial `repeat_index` of the class's `goal_index`-th goal.
pub fn trial_seed(base: u64, goal_index: usize, repeat_index: u32) -> u64 {
    base.wrapping_add(goal_index as u64 * u64::from(REPEATS) + u64::from(repeat_index - 1))
}

fn run_trial(
    goal: &GoalConfiguration,
    goal_index: usize,
    repeat_index: u32,
    catalog: &AssemblyCatalog,
    domains: &Domains,
    config: &SimConfig,
    config_hash: &str,
    opts: &RunOptions,
) -> Result<TrialResult, HarnessError> {
    let seed = trial_seed(config.seed, goal_index, repeat_index);
    let started = Instant::now();
    match plan_detailed(goal, domains, opts.plan) {
        Ok(art) => {
            let sim = Simulator::from_artifacts(&art, goal, &catalog.layout)?;
            let trace = sim.run_stamped(config, seed, config_hash, art.stats.planning_time_s)?;
            Ok(TrialResult::from_trace(goal, repeat_index, "ok", trace)?)
        }
        Err(e @ PlanError::NoPlan { .. }) => {
            let planning_time_s = config.planning_time_override_s.unwrap_or_else(|| started.elapsed().as_secs_f64());
            let header = TraceHeader {
                goal_id: goal.goal_id.clone(),
                seed,
                config_hash: config_hash.to_owned(),
                plan_hash: String::new(),
                planning_time_s,
            };
            let trace = ExecutionTrace::without_plan(goal, &catalog.layout, header);
            Ok(TrialResult::from_trace(goal, repeat_index, e.code(), trace)?)
        }
        Err(e) => Err(e.into()),
    }
}

fn run_goal(
    goal: &GoalConfiguration,
    goal_index: usize,
    catalog: &AssemblyCatalog,
    domains: &Domains,
    config: &SimConfig,
    config_hash: &str,
    opts: &RunOptions,
) -> Result<GoalResult, HarnessError> {
    let trials = (1..=REPEATS)
        .map(|r| run_trial(goal, goal_index, r, catalog, domains, config, config_hash, opts))
        .collect::<Result<Vec<_>, _>>()?;
    GoalResult::new(goal.clone(), trials, opts.grid_dt_s)
}

/// Runs five trials for every goal of `class` under one config and scores
/// them. A goal without a plan scores five empty trials.
pub fn run_class(
    class: GoalClass,
    catalog: &AssemblyCatalog,
    domains: &Domains,
    config: &SimConfig,
    opts: &RunOptions,
) -> Result<BenchmarkReport, HarnessError> {
    config.validate()?;
    if !(opts.grid_dt_s.is_finite() && opts.grid_dt_s > 0.0) {
        return Err(HarnessError::Grid(format!("grid spacing {} is not positive", opts.grid_dt_s)));
    }
    let config_hash = config.config_hash();
    let goals: Vec<&GoalConfiguration> = catalog.goals_of(class).collect();
    if goals.is_empty() {
        return Err(HarnessError::Protocol(format!("catalog has no {class} goals")));
    }
    let results: Vec<Result<GoalResult, HarnessError>> = if opts.parallel_goals {
        std::thread::scope(|s| {
            let handles: Vec<_> = goals
                .iter()
                .enumerate()
                .map(|(i, g)| {
                    let hash = &config_hash;
                    s.spawn(move || run_goal(g, i, catalog, domains, config, hash, opts))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("goal thread panicked")).collect()
        })
    } else {
        goals.iter().enumerate().map(|(i, g)| run_goal(g, i, catalog, domains, config, &config_hash, opts)).collect()
    };
    let goals = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    check_protocol(&goals, &config_hash)?;
    let summary = Summary::of(&goals);
    Ok(BenchmarkReport { class, seed: config.seed, config_hash, grid_dt_s: opts.grid_dt_s, goals, summary })
}

/// Exactly five trials per goal, in order, all stamped with one config.
pub fn check_protocol(goals: &[GoalResult], config_hash: &str) -> Result<(), HarnessError> {
    for g in goals {
        let order: Vec<u32> = g.trials.iter().map(|t| t.repeat_index).collect();
        if order != (1..=REPEATS).collect::<Vec<_>>() {
            return Err(HarnessError::Protocol(format!("goal {} has trials {order:?}", g.goal.goal_id)));
        }
        if let Some(t) = g.trials.iter().find(|t| t.trace.header.config_hash != config_hash) {
            return Err(HarnessError::Protocol(format!(
                "trial {} of goal {} ran under config {}",
                t.repeat_index, g.goal.goal_id, t.trace.header.config_hash
            )));
        }
    }
    Ok(())
}

/// [`run_class`], then every report and trace file written to `out_dir`.
pub fn run_protocol(
    class: GoalClass,
    catalog: &AssemblyCatalog,
    domains: &Domains,
    config: &SimConfig,
    out_dir: &std::path::Path,
    opts: &RunOptions,
) -> Result<BenchmarkReport, HarnessError> {
    let report = run_class(class, catalog, domains, config, opts)?;
    emit_report(&report, out_dir)?;
    Ok(report)
}
