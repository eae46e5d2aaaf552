//! Two-resolution planning: a shortest coarse plan, then each coarse
//! transition refined into fine actions inside a zoomed fine domain.

mod bridge;
mod instance;
mod search;

use std::collections::BTreeSet;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use bridge::{BridgeMap, CompiledBridge};
pub use instance::{
    approach, build_problem, engage, joint_name, peg_names, Problem, HOME, NEAR_ASSEMBLY, NEAR_TEMPLATE, REGIONS, ROBOT,
};
pub use search::{bfs_oracle, relaxed_reachable, relevant_actions, GoalLits, BFS_STATE_LIMIT};

use crate::domain::{GoalConfiguration, Skill};
use crate::lang::{
    ground, ground_with, load_description, successor, GroundAtom, GroundLiteral, GroundOptions, GroundedDomain, Instance,
    LangError, Resolution, SymbolicState, SystemDescription, TransitionError,
};

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("NO_PLAN: goal unreachable within horizon {max_horizon}")]
    NoPlan { max_horizon: u32 },
    #[error("INVALID_INIT: {0}")]
    InvalidInit(String),
    #[error("REFINEMENT_FAILED at coarse step {step} ({action}): {reason}")]
    RefinementFailed { step: usize, action: String, reason: String },
    #[error("STATE_SPACE_TOO_LARGE: more than {0} states")]
    StateSpaceTooLarge(usize),
    #[error("{0}")]
    Transition(#[from] TransitionError),
    #[error("{0}")]
    Lang(#[from] LangError),
    #[error("PROBLEM_ERROR: {0}")]
    Problem(String),
    #[error("IO_ERROR: {}: {source}", path.display())]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl PlanError {
    pub fn code(&self) -> &'static str {
        match self {
            PlanError::NoPlan { .. } => "NO_PLAN",
            PlanError::InvalidInit(_) => "INVALID_INIT",
            PlanError::RefinementFailed { .. } => "REFINEMENT_FAILED",
            PlanError::StateSpaceTooLarge(_) => "STATE_SPACE_TOO_LARGE",
            PlanError::Transition(_) => "TRANSITION_ERROR",
            PlanError::Lang(e) => e.code(),
            PlanError::Problem(_) => "PROBLEM_ERROR",
            PlanError::Io { .. } => "IO_ERROR",
        }
    }
}

/// Coarse and fine descriptions with the bridge between them.
#[derive(Debug, Clone)]
pub struct Domains {
    pub coarse: SystemDescription,
    pub fine: SystemDescription,
    pub bridge: BridgeMap,
}

const SHIPPED_COARSE: &str = include_str!("../../../../domains/coarse.ald");
const SHIPPED_FINE: &str = include_str!("../../../../domains/fine.ald");
const SHIPPED_BRIDGE: &str = include_str!("../../../../domains/bridge.ald");

impl Domains {
    pub fn from_texts(coarse: &str, fine: &str, bridge: &str) -> Result<Self, LangError> {
        let coarse = load_description(coarse, Resolution::Coarse)?;
        let fine = load_description(fine, Resolution::Fine)?;
        let bridge = BridgeMap::parse(bridge, &coarse, &fine)?;
        Ok(Domains { coarse, fine, bridge })
    }

    /// Reads `coarse.ald`, `fine.ald` and `bridge.ald` from `dir`.
    pub fn load(dir: &Path) -> Result<Self, PlanError> {
        let read = |name: &str| {
            let path = dir.join(name);
            std::fs::read_to_string(&path).map_err(|source| PlanError::Io { path, source })
        };
        Ok(Self::from_texts(&read("coarse.ald")?, &read("fine.ald")?, &read("bridge.ald")?)?)
    }

    /// The descriptions under `domains/` in the repository.
    pub fn shipped() -> Self {
        Self::from_texts(SHIPPED_COARSE, SHIPPED_FINE, SHIPPED_BRIDGE).expect("shipped domain files are valid")
    }
}

/// Initial observations: the listed literals at step 0, everything else
/// false by the closed-world assumption.
#[derive(Debug, Clone, Default)]
pub struct History {
    pub init: Vec<GroundLiteral>,
}

impl History {
    pub fn from_true_atoms(atoms: &[GroundAtom]) -> Self {
        History { init: atoms.iter().cloned().map(GroundLiteral::pos).collect() }
    }

    pub fn initial_state(&self, dom: &GroundedDomain) -> Result<SymbolicState, PlanError> {
        let mut s = SymbolicState::all_false(dom.atoms.len());
        for l in &self.init {
            let a = dom.atom_id(&l.atom).ok_or_else(|| PlanError::InvalidInit(format!("unknown atom {}", l.atom)))?;
            if l.positive {
                s.set(a, true);
            }
        }
        for l in &self.init {
            let a = dom.atom_id(&l.atom).expect("checked above");
            if s.get(a) != l.positive {
                return Err(PlanError::InvalidInit(format!("{} is asserted both ways", l.atom)));
            }
        }
        if let Some(c) = dom.constraints.iter().find(|c| c.body.iter().all(|l| s.holds(*l)) && !s.holds(c.head)) {
            return Err(PlanError::InvalidInit(format!(
                "initial state violates a state constraint with head {}",
                dom.literal_text(c.head)
            )));
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoarseStep {
    pub action: usize,
    pub name: String,
    pub pre: SymbolicState,
    pub post: SymbolicState,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoarsePlan {
    pub steps: Vec<CoarseStep>,
    pub nodes_expanded: u64,
}

impl CoarsePlan {
    pub fn horizon(&self) -> usize {
        self.steps.len()
    }
}

pub const DEFAULT_COARSE_HORIZON: u32 = 40;
pub const DEFAULT_FINE_HORIZON: u32 = 10;

/// Shortest coarse plan, ties broken by the lexicographic order of ground
/// action names. Actions that cannot influence the goal are not tried.
pub fn plan_coarse(
    dom: &GroundedDomain,
    history: &History,
    goal: &[GroundLiteral],
    max_horizon: u32,
) -> Result<CoarsePlan, PlanError> {
    let init = history.initial_state(dom)?;
    let goal = GoalLits::resolve(dom, goal);
    if goal.holds(&init) {
        return Ok(CoarsePlan { steps: Vec::new(), nodes_expanded: 0 });
    }
    if !relaxed_reachable(dom, &init, &goal) {
        return Err(PlanError::NoPlan { max_horizon });
    }
    let actions = relevant_actions(dom, &goal);
    let is_goal = |s: &SymbolicState| goal.holds(s);
    let found = search::iddfs(dom, &init, &actions, &is_goal, max_horizon)?;
    let path = found.plan.ok_or(PlanError::NoPlan { max_horizon })?;
    let mut steps = Vec::with_capacity(path.len());
    let mut s = init;
    for a in path {
        let post = successor(dom, &s, a)?;
        steps.push(CoarseStep { action: a, name: dom.action(a).name.clone(), pre: s, post: post.clone() });
        s = post;
    }
    Ok(CoarsePlan { steps, nodes_expanded: found.nodes })
}

/// A fine domain restricted to the constants one transition touches.
#[derive(Debug, Clone)]
pub struct Zoomed {
    pub domain: GroundedDomain,
    pub constants: BTreeSet<String>,
}

/// Keeps the robot, the constants named by the action or by any coarse
/// atom the transition changes, the joints of kept beams, and the places
/// refining the regions those things occupy before or after the step.
pub fn zoom(
    step: &CoarseStep,
    coarse: &GroundedDomain,
    fine_desc: &SystemDescription,
    fine_inst: &Instance,
) -> Result<Zoomed, PlanError> {
    let mut keep: BTreeSet<String> = BTreeSet::new();
    keep.insert(ROBOT.to_owned());
    keep.extend(coarse.action(step.action).atom.args.iter().cloned());
    for a in 0..coarse.atoms.len() as u32 {
        if step.pre.get(a) != step.post.get(a) {
            keep.extend(coarse.atom(a).args.iter().cloned());
        }
    }
    // regions of kept things
    let mut regions: BTreeSet<String> = keep.iter().filter(|c| REGIONS.contains(&c.as_str())).cloned().collect();
    for a in 0..coarse.atoms.len() as u32 {
        let atom = coarse.atom(a);
        if atom.pred == "loc" && keep.contains(&atom.args[0]) && (step.pre.get(a) || step.post.get(a)) {
            regions.insert(atom.args[1].clone());
        }
    }
    keep.extend(regions.iter().cloned());
    for f in &fine_inst.statics {
        match f.pred.as_str() {
            "part_of" if keep.contains(&f.args[1]) => {
                keep.insert(f.args[0].clone());
            }
            "refines" if regions.contains(&f.args[1]) => {
                keep.insert(f.args[0].clone());
            }
            _ => {}
        }
    }
    let mut inst = Instance::default();
    for (sort, consts) in &fine_inst.constants {
        inst.constants.insert(sort.clone(), consts.iter().filter(|c| keep.contains(*c)).cloned().collect());
    }
    inst.statics = fine_inst.statics.iter().filter(|f| f.args.iter().all(|c| keep.contains(c))).cloned().collect();
    let domain = ground_with(fine_desc, &inst, GroundOptions { allow_empty_sorts: true })?;
    Ok(Zoomed { domain, constants: keep })
}

/// Restriction of a full fine state to the atoms of `part`.
pub fn project(full: &GroundedDomain, state: &SymbolicState, part: &GroundedDomain) -> SymbolicState {
    let mut s = SymbolicState::all_false(part.atoms.len());
    for (i, a) in part.atoms.iter().enumerate() {
        if let Some(j) = full.atom_id(a) {
            s.set(i as u32, state.get(j));
        }
    }
    s
}

/// Shortest fine action sequence, within `dom`, from `start` to a state
/// whose bridged image agrees with the step's coarse post-state.
pub fn refine_transition(
    step_index: usize,
    step: &CoarseStep,
    dom: &GroundedDomain,
    bridge: &CompiledBridge,
    start: &SymbolicState,
    max_horizon: u32,
) -> Result<(Vec<usize>, u64), PlanError> {
    let failed = |reason: String| PlanError::RefinementFailed { step: step_index, action: step.name.clone(), reason };
    let is_goal = |s: &SymbolicState| bridge.agrees(s, &step.post);
    let actions: Vec<usize> = (0..dom.actions.len()).collect();
    let found = search::iddfs(dom, start, &actions, &is_goal, max_horizon)?;
    match found.plan {
        Some(p) if !p.is_empty() => Ok((p, found.nodes)),
        Some(_) => Err(failed("the coarse step changes nothing at the fine level".into())),
        None => Err(failed(format!("no fine sequence within {max_horizon} actions"))),
    }
}

/// A ground fine action with its coarse parent (1-based).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FineAction {
    pub action: String,
    pub args: Vec<String>,
    pub coarse_step: usize,
}

impl FineAction {
    pub fn atom(&self) -> GroundAtom {
        GroundAtom { pred: self.action.clone(), args: self.args.clone() }
    }

    pub fn skill(&self) -> Option<Skill> {
        Skill::parse(&self.action)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub coarse_step: usize,
    pub coarse_action: String,
    pub actions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinePlan {
    pub goal_id: String,
    pub segments: Vec<Segment>,
    pub flattened: Vec<FineAction>,
}

impl FinePlan {
    pub fn count(&self, skill: Skill) -> usize {
        self.flattened.iter().filter(|a| a.skill() == Some(skill)).count()
    }

    pub fn skills(&self) -> Vec<Skill> {
        self.flattened.iter().filter_map(FineAction::skill).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanningStats {
    pub planning_time_s: f64,
    pub nodes_expanded: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct PlanOptions {
    pub coarse_horizon: u32,
    pub fine_horizon: u32,
    /// Refine in the zoomed domain; otherwise in the full fine domain.
    pub use_zoom: bool,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions { coarse_horizon: DEFAULT_COARSE_HORIZON, fine_horizon: DEFAULT_FINE_HORIZON, use_zoom: true }
    }
}

/// Everything produced while planning one goal, kept for inspection.
#[derive(Debug, Clone)]
pub struct PlanArtifacts {
    pub problem: Problem,
    pub coarse: GroundedDomain,
    pub coarse_plan: CoarsePlan,
    pub fine: GroundedDomain,
    pub fine_init: SymbolicState,
    pub bridge: CompiledBridge,
    /// Full fine state after each segment.
    pub segment_ends: Vec<SymbolicState>,
    pub plan: FinePlan,
    pub stats: PlanningStats,
}

pub fn plan(goal: &GoalConfiguration, domains: &Domains) -> Result<(FinePlan, PlanningStats), PlanError> {
    plan_detailed(goal, domains, PlanOptions::default()).map(|a| (a.plan, a.stats))
}

/// Plans and refines, checking after every segment that the full fine
/// state abstracts to the coarse post-state.
pub fn plan_detailed(goal: &GoalConfiguration, domains: &Domains, opts: PlanOptions) -> Result<PlanArtifacts, PlanError> {
    let started = Instant::now();
    let problem = build_problem(goal)?;
    let coarse = ground(&domains.coarse, &problem.coarse)?;
    let coarse_plan = plan_coarse(&coarse, &History::from_true_atoms(&problem.coarse_init), &problem.goal, opts.coarse_horizon)?;

    let fine = ground(&domains.fine, &problem.fine)?;
    let fine_init = History::from_true_atoms(&problem.fine_init).initial_state(&fine)?;
    let bridge = domains.bridge.compile(&coarse, &fine, &domains.fine);
    let coarse_init = History::from_true_atoms(&problem.coarse_init).initial_state(&coarse)?;
    if bridge.abstract_state(&fine_init) != coarse_init {
        return Err(PlanError::InvalidInit("fine initial state does not abstract to the coarse one".into()));
    }

    let mut nodes = coarse_plan.nodes_expanded;
    let mut segments = Vec::new();
    let mut flattened = Vec::new();
    let mut segment_ends = Vec::new();
    let mut state = fine_init.clone();
    for (i, step) in coarse_plan.steps.iter().enumerate() {
        let index = i + 1;
        let (names, n) = if opts.use_zoom {
            let z = zoom(step, &coarse, &domains.fine, &problem.fine)?;
            let zb = domains.bridge.compile(&coarse, &z.domain, &domains.fine);
            let start = project(&fine, &state, &z.domain);
            let (seq, n) = refine_transition(index, step, &z.domain, &zb, &start, opts.fine_horizon)?;
            (seq.iter().map(|&a| z.domain.action(a).name.clone()).collect::<Vec<_>>(), n)
        } else {
            let (seq, n) = refine_transition(index, step, &fine, &bridge, &state, opts.fine_horizon)?;
            (seq.iter().map(|&a| fine.action(a).name.clone()).collect(), n)
        };
        nodes += n;
        let failed = |reason: String| PlanError::RefinementFailed { step: index, action: step.name.clone(), reason };
        for name in &names {
            let a = fine.action_id(name).ok_or_else(|| failed(format!("{name} is not a fine action")))?;
            state = successor(&fine, &state, a).map_err(|e| failed(format!("replaying {name}: {e}")))?;
            let atom = &fine.action(a).atom;
            flattened.push(FineAction { action: atom.pred.clone(), args: atom.args.clone(), coarse_step: index });
        }
        let off = bridge.mismatches(&state, &step.post);
        if !off.is_empty() {
            let atoms: Vec<String> = off.iter().map(|&a| coarse.atom(a).to_string()).collect();
            return Err(failed(format!("fine end state disagrees on {}", atoms.join(", "))));
        }
        segment_ends.push(state.clone());
        segments.push(Segment { coarse_step: index, coarse_action: step.name.clone(), actions: names });
    }

    let plan = FinePlan { goal_id: goal.goal_id.clone(), segments, flattened };
    let stats = PlanningStats { planning_time_s: started.elapsed().as_secs_f64(), nodes_expanded: nodes };
    Ok(PlanArtifacts { problem, coarse, coarse_plan, fine, fine_init, bridge, segment_ends, plan, stats })
}

/// Plan document without timing, the part covered by the plan hash.
pub fn plan_body_json(plan: &FinePlan) -> serde_json::Value {
    json!({
        "goal_id": plan.goal_id,
        "segments": plan.segments,
        "actions": plan.flattened,
    })
}

pub fn plan_json(plan: &FinePlan, stats: &PlanningStats) -> serde_json::Value {
    let mut v = plan_body_json(plan);
    v["stats"] = json!(stats);
    v
}

/// sha256 of the canonical plan body.
pub fn plan_hash(plan: &FinePlan) -> String {
    let text = serde_json::to_string(&plan_body_json(plan)).expect("plan serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Reads a plan document written by `plan_json`.
pub fn plan_from_json(v: &serde_json::Value) -> Result<(FinePlan, Option<PlanningStats>), String> {
    let goal_id = v["goal_id"].as_str().ok_or("plan has no goal_id")?.to_owned();
    let segments: Vec<Segment> = serde_json::from_value(v["segments"].clone()).map_err(|e| e.to_string())?;
    let flattened: Vec<FineAction> = serde_json::from_value(v["actions"].clone()).map_err(|e| e.to_string())?;
    let stats = v.get("stats").map(|s| serde_json::from_value(s.clone())).transpose().map_err(|e| e.to_string())?;
    Ok((FinePlan { goal_id, segments, flattened }, stats))
}
