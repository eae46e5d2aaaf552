//! Seeded discrete-event execution of fine plans with parametric skill
//! models.
//!
//! Randomness is drawn per attempt from a ChaCha8 generator seeded with the
//! run seed and positioned on stream `(action_index << 8) | attempt_index`.
//! Each attempt draws, in order, a duration variate and a success variate;
//! the final failed attempt of a fasten that still holds its peg draws a
//! third variate deciding whether the peg drops. Skipped actions draw
//! nothing, so changing one outcome never shifts the draws of another
//! action.
//!
//! Under strict propagation an atom is *supported* while its actual value
//! is the one the nominal (all-success) run predicts and every plan step
//! predicted to set it did so. A step runs only if it is executable and
//! every atom its executability reads is supported. A failed or skipped
//! step withdraws support from the atoms it should have set, except that a
//! dropped peg leaves the hand empty exactly as a fasten would.

mod config;
mod trace;

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    BeamId, BeamLoc, Connection, EventKind, ExecutionEvent, GoalConfiguration, Hand, JointRef, PegId, PegLoc, Skill, SlotId,
    Thing, WorldState,
};
use crate::goal_io::LayoutTemplate;
use crate::lang::{applicable, ground, successor, GroundAtom, GroundedDomain, SymbolicState};
use crate::planner::{build_problem, joint_name, peg_names, plan_hash, Domains, FineAction, FinePlan, History, PlanArtifacts, ROBOT};

pub use config::{FailurePropagation, SimConfig, SkillModel, MAX_RETRIES};
pub use trace::{read_trace, replay, replay_world, trace_to_jsonl, CompletionCurve, CurvePoint};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("CONFIG_ERROR: {0}")]
    Config(String),
    /// The plan does not execute in order from the goal's initial state.
    #[error("INVALID_PLAN: {0}")]
    InvalidPlan(String),
    #[error("MALFORMED_TRACE: {0}")]
    MalformedTrace(String),
    #[error("IO_ERROR: {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl SimError {
    pub fn code(&self) -> &'static str {
        match self {
            SimError::Config(_) => "CONFIG_ERROR",
            SimError::InvalidPlan(_) => "INVALID_PLAN",
            SimError::MalformedTrace(_) => "MALFORMED_TRACE",
            SimError::Io { .. } => "IO_ERROR",
        }
    }
}

/// First line of a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub goal_id: String,
    pub seed: u64,
    pub config_hash: String,
    pub plan_hash: String,
    pub planning_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionTrace {
    pub header: TraceHeader,
    pub events: Vec<ExecutionEvent>,
    /// Fold of `apply_event` over `events` from the initial world.
    pub final_state: WorldState,
}

impl ExecutionTrace {
    /// Time of the `run_ended` event.
    pub fn end_time(&self) -> f64 {
        self.events.last().map_or(self.header.planning_time_s, |e| e.t_s)
    }

    /// A run in which nothing was executed, ending when planning gave up.
    pub fn without_plan(goal: &GoalConfiguration, layout: &LayoutTemplate, header: TraceHeader) -> Self {
        let t = header.planning_time_s;
        ExecutionTrace { header, events: vec![ExecutionEvent::new(t, EventKind::RunEnded)], final_state: initial_world(goal, layout) }
    }
}

/// Robot at the home approach pose, the fixed beam in place, other beams in
/// their layout slots and pegs `p1..pk` in the first peg slots.
pub fn initial_world(goal: &GoalConfiguration, layout: &LayoutTemplate) -> WorldState {
    let pegs: Vec<(PegId, SlotId)> = peg_names(goal)
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let slot = layout.peg_slots.get(i).cloned().unwrap_or_else(|| SlotId(format!("peg-slot-{}", i + 1)));
            (PegId(p), slot)
        })
        .collect();
    WorldState::initial(goal, &layout.slots, &pegs, crate::planner::approach(crate::planner::HOME))
}

struct Step {
    action: usize,
    skill: Skill,
    args: Vec<String>,
    /// Atoms this action's executability reads.
    reads: Vec<u32>,
    /// State after this step in the nominal run.
    predicted: SymbolicState,
    /// Atoms this step changes in the nominal run.
    sets: Vec<u32>,
}

/// A plan bound to its goal, ready to be executed under many configs.
pub struct Simulator {
    goal: GoalConfiguration,
    plan_hash: String,
    fine: GroundedDomain,
    fine_init: SymbolicState,
    world_init: WorldState,
    steps: Vec<Step>,
    joints: BTreeMap<String, JointRef>,
    /// Template slot each part starts in, where `put_down` returns it.
    home_slots: BTreeMap<String, String>,
}

fn invalid(msg: impl Into<String>) -> SimError {
    SimError::InvalidPlan(msg.into())
}

impl Simulator {
    pub fn new(plan: &FinePlan, goal: &GoalConfiguration, layout: &LayoutTemplate, domains: &Domains) -> Result<Self, SimError> {
        let problem = build_problem(goal).map_err(|e| invalid(e.to_string()))?;
        let fine = ground(&domains.fine, &problem.fine).map_err(|e| invalid(e.to_string()))?;
        let init = History::from_true_atoms(&problem.fine_init).initial_state(&fine).map_err(|e| invalid(e.to_string()))?;
        Self::build(plan, goal, layout, fine, init)
    }

    /// Reuses the grounding done while planning.
    pub fn from_artifacts(art: &PlanArtifacts, goal: &GoalConfiguration, layout: &LayoutTemplate) -> Result<Self, SimError> {
        Self::build(&art.plan, goal, layout, art.fine.clone(), art.fine_init.clone())
    }

    fn build(
        plan: &FinePlan,
        goal: &GoalConfiguration,
        layout: &LayoutTemplate,
        fine: GroundedDomain,
        fine_init: SymbolicState,
    ) -> Result<Self, SimError> {
        if plan.goal_id != goal.goal_id {
            return Err(invalid(format!("plan is for goal {} but goal {} was given", plan.goal_id, goal.goal_id)));
        }
        let mut state = fine_init.clone();
        let mut steps = Vec::with_capacity(plan.flattened.len());
        for (i, fa) in plan.flattened.iter().enumerate() {
            let name = fa.atom().to_string();
            let action = fine.action_id(&name).ok_or_else(|| invalid(format!("step {i}: {name} is not a ground action")))?;
            let skill = fa.skill().ok_or_else(|| invalid(format!("step {i}: {} is not a skill", fa.action)))?;
            check_args(i, fa, skill)?;
            let a = fine.action(action);
            let mut reads: Vec<u32> =
                a.blockers.iter().flatten().chain(a.effects.iter().flat_map(|e| e.cond.iter())).map(|l| l.atom).collect();
            reads.sort_unstable();
            reads.dedup();
            let next = successor(&fine, &state, action).map_err(|e| invalid(format!("step {i}: {e}")))?;
            let sets = (0..fine.atoms.len() as u32).filter(|&x| next.get(x) != state.get(x)).collect();
            steps.push(Step { action, skill, args: fa.args.clone(), reads, predicted: next.clone(), sets });
            state = next;
        }
        let joints = goal
            .beams
            .iter()
            .flat_map(|b| b.joints.iter().map(|j| JointRef::new(b.beam_id.clone(), j.joint_index)))
            .map(|j| (joint_name(&j), j))
            .collect();
        let world_init = initial_world(goal, layout);
        let beam_slots = world_init.beam_at.iter().filter_map(|(b, l)| match l {
            BeamLoc::OnTemplate(s) => Some((b.to_string(), s.to_string())),
            _ => None,
        });
        let peg_slots = world_init.peg_at.iter().filter_map(|(p, l)| match l {
            PegLoc::InHolder(s) => Some((p.to_string(), s.to_string())),
            _ => None,
        });
        let home_slots = beam_slots.chain(peg_slots).collect();
        Ok(Simulator {
            goal: goal.clone(),
            plan_hash: plan_hash(plan),
            fine,
            fine_init,
            world_init,
            steps,
            joints,
            home_slots,
        })
    }

    pub fn plan_len(&self) -> usize {
        self.steps.len()
    }

    pub fn initial_world(&self) -> &WorldState {
        &self.world_init
    }

    /// Runs the plan with `config.seed`. The clock starts at the planning
    /// time: the config override if set, else `measured_planning_s`.
    pub fn run(&self, config: &SimConfig, measured_planning_s: f64) -> Result<ExecutionTrace, SimError> {
        self.run_stamped(config, config.seed, &config.config_hash(), measured_planning_s)
    }

    /// As [`Simulator::run`] with an explicit seed and header hash, for
    /// trials that share a class config.
    pub fn run_stamped(
        &self,
        config: &SimConfig,
        seed: u64,
        config_hash: &str,
        measured_planning_s: f64,
    ) -> Result<ExecutionTrace, SimError> {
        config.validate()?;
        let planning = config.planning_time_override_s.unwrap_or(measured_planning_s);
        let header = TraceHeader {
            goal_id: self.goal.goal_id.clone(),
            seed,
            config_hash: config_hash.to_owned(),
            plan_hash: self.plan_hash.clone(),
            planning_time_s: planning,
        };
        let mut run = Run {
            sim: self,
            config,
            seed,
            t: planning,
            fine: self.fine_init.clone(),
            world: self.world_init.clone(),
            supported: vec![true; self.fine.atoms.len()],
            events: Vec::new(),
        };
        for i in 0..self.steps.len() {
            run.step(i);
        }
        run.events.push(ExecutionEvent::new(run.t, EventKind::RunEnded));
        Ok(ExecutionTrace { header, events: run.events, final_state: run.world })
    }

    fn joint(&self, name: &str) -> Option<&JointRef> {
        self.joints.get(name)
    }

    /// Skill event for a success of step `i`, carrying the world objects.
    fn success_event(&self, i: usize, world: &WorldState, t: f64, attempt: u32) -> ExecutionEvent {
        let st = &self.steps[i];
        let mut ev = ExecutionEvent::new(t, EventKind::SkillSucceeded)
            .for_action(i as u32)
            .with_skill(st.skill, st.args.clone())
            .attempt(attempt);
        let part = |ev: &mut ExecutionEvent, name: &str| {
            if self.goal.beam(&BeamId::new(name)).is_some() {
                ev.beam = Some(BeamId::new(name));
            } else {
                ev.peg = Some(PegId::new(name));
            }
        };
        match st.skill {
            Skill::Move => ev.place = Some(st.args[1].clone()),
            Skill::PickUp => part(&mut ev, &st.args[1]),
            Skill::PutDown => {
                part(&mut ev, &st.args[1]);
                ev.place = self.home_slots.get(&st.args[1]).cloned();
            }
            Skill::AssembleSquare | Skill::AssembleCap => {
                let beam = BeamId::new(&st.args[1]);
                ev.connections = self
                    .goal
                    .connections
                    .iter()
                    .filter(|c| c.other(&beam).is_some_and(|o| world.beam_at.get(o) == Some(&BeamLoc::Assembled)))
                    .cloned()
                    .collect();
                ev.beam = Some(beam);
            }
            Skill::Fasten => {
                ev.peg = Some(PegId::new(&st.args[3]));
                ev.connections = self.connection_between(&st.args[1], &st.args[2]).into_iter().collect();
            }
            Skill::Push => ev.beam = Some(BeamId::new(&st.args[1])),
        }
        ev
    }

    fn connection_between(&self, j1: &str, j2: &str) -> Option<Connection> {
        let (a, b) = (self.joint(j1)?, self.joint(j2)?);
        self.goal
            .connections
            .iter()
            .find(|c| (&c.joint_a == a && &c.joint_b == b) || (&c.joint_a == b && &c.joint_b == a))
            .cloned()
    }
}

fn check_args(i: usize, fa: &FineAction, skill: Skill) -> Result<(), SimError> {
    let want = match skill {
        Skill::Fasten => 4,
        _ => 2,
    };
    if fa.args.len() != want || fa.args[0] != ROBOT {
        return Err(invalid(format!("step {i}: {} has unexpected arguments", fa.atom())));
    }
    Ok(())
}

/// Mutable state of one execution.
struct Run<'a> {
    sim: &'a Simulator,
    config: &'a SimConfig,
    seed: u64,
    t: f64,
    fine: SymbolicState,
    world: WorldState,
    supported: Vec<bool>,
    events: Vec<ExecutionEvent>,
}

impl Run<'_> {
    fn event(&self, i: usize, kind: EventKind, attempt: u32) -> ExecutionEvent {
        let st = &self.sim.steps[i];
        ExecutionEvent::new(self.t, kind).for_action(i as u32).with_skill(st.skill, st.args.clone()).attempt(attempt)
    }

    fn step(&mut self, i: usize) {
        let before = self.fine.clone();
        let outcome = self.attempt(i);
        if self.config.failure_propagation == FailurePropagation::Strict {
            self.update_support(i, &before, outcome);
        }
    }

    fn update_support(&mut self, i: usize, before: &SymbolicState, outcome: Outcome) {
        let st = &self.sim.steps[i];
        let dropped = match outcome {
            Outcome::Dropped(a) => Some(a),
            _ => None,
        };
        for &a in &st.sets {
            let granted = outcome == Outcome::Succeeded || dropped == Some(a);
            self.supported[a as usize] = granted && self.fine.get(a) == st.predicted.get(a);
        }
        for a in 0..before.len() as u32 {
            if before.get(a) != self.fine.get(a) && !st.sets.contains(&a) {
                self.supported[a as usize] = self.fine.get(a) == st.predicted.get(a);
            }
        }
    }

    /// Executes step `i` unless strict propagation skips it.
    fn attempt(&mut self, i: usize) -> Outcome {
        let sim = self.sim;
        let st = &sim.steps[i];
        if self.config.failure_propagation == FailurePropagation::Strict {
            let supported = st.reads.iter().all(|&a| self.supported[a as usize]);
            if !supported || !applicable(&sim.fine, &self.fine, st.action) {
                let mut ev = self.event(i, EventKind::SkillFailed, 0);
                ev.skipped = true;
                self.events.push(ev);
                return Outcome::Failed;
            }
        }
        let model = self.config.model(st.skill);
        let attempts = 1 + if st.skill.has_retries() { model.retries } else { 0 };
        for k in 0..attempts {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            rng.set_stream(((i as u64) << 8) | u64::from(k));
            let (nominal, p) = model.attempt_params(k);
            let u_duration: f64 = rng.random();
            let u_success: f64 = rng.random();
            self.events.push(self.event(i, EventKind::SkillStarted, k));
            self.t += nominal + model.duration_jitter_s * (2.0 * u_duration - 1.0);
            if u_success < p {
                if self.commit_success(i, k) {
                    return Outcome::Succeeded;
                }
                // drawn success of an action that cannot happen here
                self.events.push(self.event(i, EventKind::SkillFailed, k));
                return Outcome::Failed;
            }
            if k + 1 == attempts {
                self.events.push(self.event(i, EventKind::SkillFailed, k));
                if st.skill == Skill::Fasten {
                    if let Some(a) = self.maybe_drop(i, k, &mut rng) {
                        return Outcome::Dropped(a);
                    }
                }
            }
        }
        Outcome::Failed
    }

    /// Applies a success of step `i` to both states; false if either
    /// rejects it.
    fn commit_success(&mut self, i: usize, attempt: u32) -> bool {
        let sim = self.sim;
        let st = &sim.steps[i];
        let ev = self.sim.success_event(i, &self.world, self.t, attempt);
        let Ok(world) = self.world.apply_event(&ev) else {
            return false;
        };
        let Ok(fine) = successor(&self.sim.fine, &self.fine, st.action) else {
            return false;
        };
        let inserted = (st.skill == Skill::Fasten).then(|| {
            let mut e = self.event(i, EventKind::PegInserted, attempt);
            e.peg = ev.peg.clone();
            e.connections = ev.connections.clone();
            e
        });
        let world = match &inserted {
            Some(e) => match world.apply_event(e) {
                Ok(w) => w,
                Err(_) => return false,
            },
            None => world,
        };
        self.world = world;
        self.fine = fine;
        self.events.push(ev);
        self.events.extend(inserted);
        true
    }

    /// Third draw of a failed fasten still holding its peg; returns the
    /// cleared `in_hand` atom when the peg falls.
    fn maybe_drop(&mut self, i: usize, attempt: u32, rng: &mut ChaCha8Rng) -> Option<u32> {
        let peg = PegId::new(&self.sim.steps[i].args[3]);
        if self.world.hand != Hand::Holding(Thing::Peg(peg.clone())) {
            return None;
        }
        let u_drop: f64 = rng.random();
        if u_drop >= self.config.peg_drop_prob {
            return None;
        }
        let mut ev = self.event(i, EventKind::PegDropped, attempt);
        ev.peg = Some(peg.clone());
        self.world = self.world.apply_event(&ev).expect("held peg can drop");
        let held = self.sim.fine.atom_id(&GroundAtom::new("in_hand", &[ROBOT, peg.as_str()]));
        if let Some(a) = held {
            self.fine.set(a, false);
        }
        self.events.push(ev);
        held
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Succeeded,
    Failed,
    /// Failed fasten whose peg fell, clearing the given `in_hand` atom.
    Dropped(u32),
}

/// Binds `plan` to `goal` and runs it once.
pub fn execute(
    plan: &FinePlan,
    goal: &GoalConfiguration,
    layout: &LayoutTemplate,
    domains: &Domains,
    config: &SimConfig,
    measured_planning_s: f64,
) -> Result<ExecutionTrace, SimError> {
    Simulator::new(plan, goal, layout, domains)?.run(config, measured_planning_s)
}
