//! `ramp`: plan goals, run the evaluation protocol, replay traces and
//! verify report directories.
//!
//! Exit status is 0 on success, 1 when an input fails validation (or no
//! plan exists) and 2 when a file cannot be read or written.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ramp_core::domain::GoalClass;
use ramp_core::goal_io::{load_catalog, load_goal, GoalIoError};
use ramp_core::harness::{run_protocol, verify_report_dir, HarnessError, RunOptions, DEFAULT_GRID_DT_S};
use ramp_core::planner::{plan_detailed, plan_json, Domains, PlanError, PlanOptions};
use ramp_core::sim::{read_trace, replay, SimConfig, SimError};

#[derive(Parser)]
#[command(name = "ramp", version, about = "Assembly planning benchmark: plan, execute and score goal assemblies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassArg {
    Easy,
    Medium,
    Hard,
}

impl From<ClassArg> for GoalClass {
    fn from(c: ClassArg) -> Self {
        match c {
            ClassArg::Easy => GoalClass::Easy,
            ClassArg::Medium => GoalClass::Medium,
            ClassArg::Hard => GoalClass::Hard,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Plan one goal and write the plan document.
    Plan {
        #[arg(long)]
        goal: PathBuf,
        /// Directory holding coarse.ald, fine.ald and bridge.ald.
        #[arg(long)]
        domains: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run five trials of every goal in a class and write the report.
    Run {
        #[arg(long, value_enum)]
        class: ClassArg,
        #[arg(long, env = "RAMP_CATALOG")]
        catalog: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Replaces the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Domain files; the shipped descriptions when absent.
        #[arg(long)]
        domains: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_GRID_DT_S)]
        grid_dt: f64,
        #[arg(long)]
        parallel_goals: bool,
    },
    /// Print the completion curve of a trace as CSV.
    Replay {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        goal: PathBuf,
    },
    /// Recompute a report directory from its traces and check every file.
    Report {
        #[arg(long = "in")]
        dir: PathBuf,
    },
}

/// A failure with its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(io: bool, message: impl ToString) -> Self {
        Failure { code: if io { 2 } else { 1 }, message: message.to_string() }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        Failure::new(true, format!("IO_ERROR: {}: {e}", path.display()))
    }
}

impl From<GoalIoError> for Failure {
    fn from(e: GoalIoError) -> Self {
        Failure::new(e.is_io(), e)
    }
}

impl From<PlanError> for Failure {
    fn from(e: PlanError) -> Self {
        Failure::new(matches!(e, PlanError::Io { .. }), e)
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        Failure::new(matches!(e, SimError::Io { .. }), e)
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        Failure::new(e.is_io(), e)
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Failure::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| Failure::io(path, e))
}

/// Runs one command and returns what it prints.
fn run(cli: Cli) -> Result<String, Failure> {
    let mut out = String::new();
    match cli.command {
        Command::Plan { goal, domains, out: plan_out } => {
            let goal = load_goal(&goal)?;
            let domains = Domains::load(&domains)?;
            let art = plan_detailed(&goal, &domains, PlanOptions::default())?;
            let mut text = serde_json::to_string_pretty(&plan_json(&art.plan, &art.stats)).expect("plan serializes");
            text.push('\n');
            write(&plan_out, &text)?;
            writeln!(
                out,
                "{}: {} coarse steps, {} actions, {} nodes, {:.3} s",
                goal.goal_id,
                art.coarse_plan.horizon(),
                art.plan.flattened.len(),
                art.stats.nodes_expanded,
                art.stats.planning_time_s
            ).unwrap();
        }
        Command::Run { class, catalog, config, seed, out: out_dir, domains, grid_dt, parallel_goals } => {
            let catalog = load_catalog(&catalog)?;
            let domains = match domains {
                Some(dir) => Domains::load(&dir)?,
                None => Domains::shipped(),
            };
            let mut config = SimConfig::load(&config)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            let opts = RunOptions { grid_dt_s: grid_dt, parallel_goals, plan: PlanOptions::default() };
            let report = run_protocol(class.into(), &catalog, &domains, &config, &out_dir, &opts)?;
            writeln!(out, "goal_id,mean_success_pct,mean_time_s").unwrap();
            for g in &report.goals {
                writeln!(out, "{},{:.2},{:.1}", g.goal.goal_id, g.mean_success_pct, g.mean_time_s).unwrap();
            }
            writeln!(out, "all,{:.2},{:.1}", report.summary.mean_success_pct, report.summary.mean_time_s).unwrap();
        }
        Command::Replay { trace, goal } => {
            let goal = load_goal(&goal)?;
            let (header, events) = read_trace(&read(&trace)?)?;
            if header.goal_id != goal.goal_id {
                return Err(Failure::new(false, format!("trace is for goal {} but goal {} was given", header.goal_id, goal.goal_id)));
            }
            let curve = replay(&events, &goal)?;
            writeln!(out, "t_s,pct").unwrap();
            for p in &curve.points {
                writeln!(out, "{},{}", p.t_s, p.pct).unwrap();
            }
            writeln!(out, "{},{}", curve.end_s, curve.final_pct()).unwrap();
        }
        Command::Report { dir } => {
            let doc = verify_report_dir(&dir)?;
            writeln!(out, "{} class, seed {}, config {}: report verified", doc.class, doc.seed, doc.config_hash).unwrap();
            for g in &doc.goals {
                writeln!(out, "{},{:.2},{:.1}", g.goal_id, g.mean_success_pct, g.mean_time_s).unwrap();
            }
            writeln!(out, "all,{:.2},{:.1}", doc.summary.mean_success_pct, doc.summary.mean_time_s).unwrap();
        }
    }
    Ok(out)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(text) => {
            // A closed pipe downstream is not a failure of the command.
            let _ = std::io::stdout().write_all(text.as_bytes());
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("ramp: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
