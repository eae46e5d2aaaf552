//! Test-side reimplementation of the simulator's documented draw layout,
//! used to audit traces without trusting the simulator's own bookkeeping.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ramp_core::domain::{EventKind, ExecutionEvent, Skill};
use ramp_core::lang::{applicable, successor, GroundAtom, GroundedDomain, SymbolicState};
use ramp_core::planner::{PlanArtifacts, ROBOT};
use ramp_core::sim::{ExecutionTrace, SimConfig};

/// The uniforms of attempt `k` of plan step `i`: (duration, success, drop).
pub fn draws(seed: u64, i: usize, k: u32) -> (f64, f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((i as u64) << 8) | u64::from(k));
    (rng.random(), rng.random(), rng.random())
}

/// Walks the trace step by step and checks every timestamp and outcome
/// against draws recomputed here. Returns the recomputed end time.
pub fn audit_draws(trace: &ExecutionTrace, config: &SimConfig, plan_len: usize) -> Result<f64, String> {
    let seed = trace.header.seed;
    let mut t = trace.header.planning_time_s;
    let ev = &trace.events;
    let mut j = 0;
    let at = |j: usize| ev.get(j).ok_or_else(|| format!("trace ends early at event {j}"));
    for i in 0..plan_len {
        let first = at(j)?;
        if first.action_index != Some(i as u32) {
            return Err(format!("event {j} is not for step {i}"));
        }
        if first.kind == EventKind::SkillFailed && first.skipped {
            same_time(first, t)?;
            j += 1;
            continue;
        }
        let skill = first.skill.ok_or("step event without a skill")?;
        let model = config.model(skill);
        let attempts = 1 + if skill.has_retries() { model.retries } else { 0 };
        for k in 0..attempts {
            let start = at(j)?;
            if start.kind != EventKind::SkillStarted || start.attempt_index != k {
                return Err(format!("event {j}: expected skill_started attempt {k} of step {i}"));
            }
            same_time(start, t)?;
            let (nominal, p) = model.attempt_params(k);
            let (u_dur, u_ok, u_drop) = draws(seed, i, k);
            t += nominal + model.duration_jitter_s * (2.0 * u_dur - 1.0);
            j += 1;
            let next = at(j)?;
            same_time(next, t)?;
            if u_ok < p {
                // success, or a success the world rejected in independent mode
                match next.kind {
                    EventKind::SkillSucceeded => {
                        j += 1;
                        if skill == Skill::Fasten {
                            let ins = at(j)?;
                            if ins.kind != EventKind::PegInserted {
                                return Err(format!("event {j}: fasten success without peg_inserted"));
                            }
                            j += 1;
                        }
                    }
                    EventKind::SkillFailed => j += 1,
                    _ => return Err(format!("event {j}: unexpected {:?} after a winning draw", next.kind)),
                }
                break;
            }
            if k + 1 < attempts {
                continue;
            }
            if next.kind != EventKind::SkillFailed {
                return Err(format!("event {j}: expected skill_failed after a losing draw"));
            }
            j += 1;
            if let Some(d) = ev.get(j).filter(|e| e.kind == EventKind::PegDropped) {
                if skill != Skill::Fasten || u_drop >= config.peg_drop_prob {
                    return Err(format!("event {j}: peg_dropped without a winning drop draw"));
                }
                same_time(d, t)?;
                j += 1;
            }
        }
    }
    let end = at(j)?;
    if end.kind != EventKind::RunEnded || j + 1 != ev.len() {
        return Err(format!("event {j} should be the final run_ended"));
    }
    same_time(end, t)?;
    Ok(t)
}

fn same_time(e: &ExecutionEvent, t: f64) -> Result<(), String> {
    if (e.t_s - t).abs() <= 1e-9 * t.abs().max(1.0) {
        Ok(())
    } else {
        Err(format!("{:?} at {} but the draws put it at {t}", e.kind, e.t_s))
    }
}

/// Replays the successful actions and peg drops through the fine domain
/// and checks that each success was executable where it happened.
pub fn audit_strict(trace: &ExecutionTrace, art: &PlanArtifacts) -> Result<(), String> {
    let fine: &GroundedDomain = &art.fine;
    let mut s: SymbolicState = art.fine_init.clone();
    for e in &trace.events {
        if e.kind == EventKind::PegDropped {
            let peg = e.peg.as_ref().ok_or("drop without a peg")?;
            let held = fine.atom_id(&GroundAtom::new("in_hand", &[ROBOT, peg.as_str()])).ok_or("no in_hand atom")?;
            s.set(held, false);
            continue;
        }
        if e.kind != EventKind::SkillSucceeded {
            continue;
        }
        let i = e.action_index.ok_or("success without an action index")? as usize;
        let a = fine.action_id(&art.plan.flattened[i].atom().to_string()).ok_or("unknown action")?;
        if !applicable(fine, &s, a) {
            return Err(format!("step {i} succeeded while not executable"));
        }
        s = successor(fine, &s, a).map_err(|e| e.to_string())?;
    }
    Ok(())
}

pub fn successes(trace: &ExecutionTrace) -> usize {
    trace.events.iter().filter(|e| e.kind == EventKind::SkillSucceeded).count()
}

use proptest::prelude::*;
use ramp_core::sim::{FailurePropagation, SkillModel};

fn arb_model(skill: Skill) -> impl Strategy<Value = SkillModel> {
    let max_retries = if skill.has_retries() { 3u32 } else { 0 };
    (1.0..40.0f64, 0.0..0.9f64, 0.0..=1.0f64, 0..=max_retries, 1.0..30.0f64, 0.0..=1.0f64).prop_map(
        move |(base, jit_frac, p, retries, rd, rp)| SkillModel {
            base_duration_s: base,
            duration_jitter_s: jit_frac * base.min(rd),
            success_prob: p,
            retries,
            retry_duration_s: Some(rd),
            retry_success_prob: Some(rp),
        },
    )
}

/// Valid strict-mode configs spanning the whole parameter space.
pub fn arb_config() -> impl Strategy<Value = SimConfig> {
    let models: Vec<_> = Skill::ALL.iter().map(|&k| arb_model(k).prop_map(move |m| (k, m))).collect();
    (any::<u64>(), 0.0..=1.0f64, 50.0..300.0f64, models).prop_map(|(seed, drop, planning, models)| {
        let mut cfg = SimConfig::new(seed, models.into_iter().collect());
        cfg.failure_propagation = FailurePropagation::Strict;
        cfg.peg_drop_prob = drop;
        cfg.planning_time_override_s = Some(planning);
        cfg
    })
}

/// `cfg` with one success probability of `skill` scaled by `factor < 1`.
pub fn lowered(cfg: &SimConfig, skill: Skill, retry: bool, factor: f64) -> SimConfig {
    let mut low = cfg.clone();
    let m = low.models.get_mut(&skill).unwrap();
    if retry {
        m.retry_success_prob = Some(m.retry_prob() * factor);
    } else {
        m.success_prob *= factor;
    }
    low
}
