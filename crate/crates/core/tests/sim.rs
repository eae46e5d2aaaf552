mod common;

use common::oracle::{arb_config, audit_draws, audit_strict, lowered, successes};
use proptest::prelude::*;
use ramp_core::domain::{satisfaction, EventKind, ExecutionEvent, GoalConfiguration, Skill};
use ramp_core::planner::PlanArtifacts;
use ramp_core::sim::{
    read_trace, replay, replay_world, trace_to_jsonl, FailurePropagation, SimConfig, SimError, Simulator,
};

fn baseline() -> SimConfig {
    SimConfig::load(&common::repo_root().join("configs/baseline_emulation.toml")).unwrap()
}

fn easy() -> Vec<(&'static PlanArtifacts, &'static GoalConfiguration, Simulator)> {
    let cat = common::catalog();
    common::easy_plans()
        .iter()
        .map(|a| {
            let g = cat.goal(&a.plan.goal_id).unwrap();
            (a, g, Simulator::from_artifacts(a, g, &cat.layout).unwrap())
        })
        .collect()
}

fn duration(k: Skill) -> f64 {
    match k {
        Skill::Move => 4.25,
        Skill::PickUp => 9.5,
        Skill::PutDown => 7.0,
        Skill::AssembleSquare => 21.75,
        Skill::AssembleCap => 26.0,
        Skill::Fasten => 26.125,
        Skill::Push => 9.0,
    }
}

#[test]
fn all_success_completes_at_planning_plus_nominal_durations() {
    for (art, goal, sim) in easy() {
        let mut cfg = SimConfig::all_success(3, duration);
        cfg.planning_time_override_s = Some(190.0);
        let trace = sim.run(&cfg, 0.0).unwrap();
        let expected = art.plan.flattened.iter().fold(190.0, |t, fa| t + duration(fa.skill().unwrap()));
        assert_eq!(trace.end_time(), expected, "{}", goal.goal_id);
        let report = satisfaction(&trace.final_state, goal);
        assert!(report.is_complete(), "{}", goal.goal_id);
        let curve = replay(&trace.events, goal).unwrap();
        assert_eq!(curve.final_pct(), 100.0);
        assert_eq!(curve.value_at(trace.end_time()), 100.0);
        assert_eq!(curve.value_at(189.999), 0.0);
    }
}

#[test]
fn measured_planning_time_is_used_without_override() {
    let (_, _, sim) = easy().remove(0);
    let cfg = SimConfig::all_success(3, duration);
    let trace = sim.run(&cfg, 12.5).unwrap();
    assert_eq!(trace.header.planning_time_s, 12.5);
    assert_eq!(trace.events[0].t_s, 12.5);
}

#[test]
fn fasten_that_never_succeeds_exhausts_its_retries() {
    for (art, goal, sim) in easy() {
        let mut cfg = SimConfig::all_success(1, duration);
        cfg.failure_propagation = FailurePropagation::Independent;
        let f = cfg.models.get_mut(&Skill::Fasten).unwrap();
        f.success_prob = 0.0;
        f.retries = 2;
        let trace = sim.run(&cfg, 1.0).unwrap();
        for i in (0..art.plan.flattened.len()).filter(|&i| art.plan.flattened[i].skill() == Some(Skill::Fasten)) {
            let kinds: Vec<(EventKind, u32)> = trace
                .events
                .iter()
                .filter(|e| e.action_index == Some(i as u32) && e.kind != EventKind::PegDropped)
                .map(|e| (e.kind, e.attempt_index))
                .collect();
            assert_eq!(
                kinds,
                vec![
                    (EventKind::SkillStarted, 0),
                    (EventKind::SkillStarted, 1),
                    (EventKind::SkillStarted, 2),
                    (EventKind::SkillFailed, 2)
                ],
                "{} step {i}",
                goal.goal_id
            );
        }
        assert!(!trace.events.iter().any(|e| e.kind == EventKind::PegInserted));
        assert_eq!(replay(&trace.events, goal).unwrap().final_pct(), 0.0);
    }
}

#[test]
fn strict_mode_skips_what_depends_on_a_failed_fasten() {
    let (art, goal, sim) = easy().remove(0);
    let mut cfg = SimConfig::all_success(1, duration);
    cfg.peg_drop_prob = 0.0;
    cfg.models.get_mut(&Skill::Fasten).unwrap().success_prob = 0.0;
    let trace = sim.run(&cfg, 1.0).unwrap();
    let fastens: Vec<usize> =
        (0..art.plan.flattened.len()).filter(|&i| art.plan.flattened[i].skill() == Some(Skill::Fasten)).collect();
    // the peg stays in hand, so nothing that needs a free gripper runs
    let attempted = |i: usize| trace.events.iter().any(|e| e.action_index == Some(i as u32) && e.kind == EventKind::SkillStarted);
    assert!(attempted(fastens[0]));
    assert!(fastens[1..].iter().all(|&i| !attempted(i)));
    assert!(trace.events.iter().any(|e| e.skipped));
    assert_eq!(replay(&trace.events, goal).unwrap().final_pct(), 0.0);
    audit_strict(&trace, art).unwrap();
}

#[test]
fn dropped_peg_lets_later_pegs_proceed() {
    let (art, goal, sim) = easy().remove(0);
    let mut cfg = SimConfig::all_success(1, duration);
    cfg.peg_drop_prob = 1.0;
    cfg.models.get_mut(&Skill::Fasten).unwrap().success_prob = 0.0;
    let trace = sim.run(&cfg, 1.0).unwrap();
    let dropped = trace.events.iter().filter(|e| e.kind == EventKind::PegDropped).count();
    assert_eq!(dropped, art.plan.count(Skill::Fasten));
    assert_eq!(replay(&trace.events, goal).unwrap().final_pct(), 0.0);
}

#[test]
fn same_seed_gives_byte_identical_traces() {
    let (_, goal, sim) = easy().remove(0);
    assert_eq!(goal.goal_id, "easy-1");
    let mut cfg = baseline();
    cfg.seed = 42;
    let a = trace_to_jsonl(&sim.run(&cfg, 0.0).unwrap());
    let b = trace_to_jsonl(&sim.run(&cfg, 0.0).unwrap());
    assert_eq!(a, b);
    cfg.seed = 43;
    assert_ne!(a, trace_to_jsonl(&sim.run(&cfg, 0.0).unwrap()));
}

#[test]
fn jsonl_round_trips() {
    let (_, _, sim) = easy().remove(1);
    let trace = sim.run(&baseline(), 0.0).unwrap();
    let text = trace_to_jsonl(&trace);
    assert!(text.starts_with("{\"goal_id\":"));
    assert!(text.lines().nth(1).unwrap().starts_with("{\"t_s\":"));
    let (header, events) = read_trace(&text).unwrap();
    assert_eq!(header, trace.header);
    assert_eq!(events, trace.events);
}

#[test]
fn shipped_config_traces_pass_every_audit() {
    let cfg = baseline();
    for (art, goal, sim) in easy() {
        for seed in 0..40 {
            let trace = sim.run_stamped(&cfg, seed, "h", 0.0).unwrap();
            audit_draws(&trace, &cfg, sim.plan_len()).unwrap_or_else(|e| panic!("{} seed {seed}: {e}", goal.goal_id));
            audit_strict(&trace, art).unwrap_or_else(|e| panic!("{} seed {seed}: {e}", goal.goal_id));
            let folded = trace.events.iter().try_fold(sim.initial_world().clone(), |w, e| w.apply_event(e)).unwrap();
            assert_eq!(folded, trace.final_state);
            assert!(trace.final_state.invariant_violations().is_empty());
            let (_, replayed) = replay_world(&trace.events, goal).unwrap();
            assert_eq!(satisfaction(&replayed, goal), satisfaction(&trace.final_state, goal));
        }
    }
}

#[test]
fn independent_mode_attempts_every_action() {
    let mut cfg = baseline();
    cfg.failure_propagation = FailurePropagation::Independent;
    for (art, goal, sim) in easy() {
        for seed in 0..20 {
            let trace = sim.run_stamped(&cfg, seed, "h", 0.0).unwrap();
            assert!(!trace.events.iter().any(|e| e.skipped));
            audit_draws(&trace, &cfg, sim.plan_len()).unwrap();
            audit_strict(&trace, art).unwrap();
            replay(&trace.events, goal).unwrap();
        }
    }
}

#[test]
fn plan_for_another_goal_is_rejected() {
    let cat = common::catalog();
    let art = &common::easy_plans()[0];
    let other = cat.goal("easy-2").unwrap();
    let err = Simulator::from_artifacts(art, other, &cat.layout).err().unwrap();
    assert_eq!(err.code(), "INVALID_PLAN");
}

fn retimed_insertions(times: &[f64]) -> (Vec<ExecutionEvent>, &'static GoalConfiguration) {
    let (_, goal, sim) = easy().remove(0);
    let trace = sim.run(&SimConfig::all_success(1, duration), 0.0).unwrap();
    let mut k = 0;
    let events = trace
        .events
        .into_iter()
        .map(|mut e| {
            e.t_s = times[k.min(times.len() - 1)];
            if e.kind == EventKind::PegInserted {
                k += 1;
            }
            e
        })
        .collect();
    (events, goal)
}

#[test]
fn replay_steps_at_each_insertion() {
    let (events, goal) = retimed_insertions(&[300.0, 400.0, 500.0]);
    assert_eq!(goal.peg_count(), 3);
    let curve = replay(&events, goal).unwrap();
    let third = 100.0 / 3.0;
    for (t, want) in [(0.0, 0.0), (299.99, 0.0), (300.0, third), (399.0, third), (400.0, 2.0 * third), (500.0, 100.0), (1e6, 100.0)] {
        assert!((curve.value_at(t) - want).abs() < 1e-9, "t={t}: {} vs {want}", curve.value_at(t));
    }
    assert_eq!(curve.points.len(), 4);
}

#[test]
fn empty_trace_replays_to_zero() {
    let goal = common::catalog().goal("easy-2").unwrap();
    let curve = replay(&[], goal).unwrap();
    assert_eq!(curve.value_at(0.0), 0.0);
    assert_eq!(curve.value_at(1e9), 0.0);
    assert_eq!(curve.final_pct(), 0.0);
}

#[test]
fn malformed_traces_are_rejected() {
    let (events, goal) = retimed_insertions(&[300.0, 400.0, 500.0]);
    let code = |evs: &[ExecutionEvent]| replay(evs, goal).unwrap_err().code();

    let mut regress = events.clone();
    let last = regress.len() - 1;
    regress[last].t_s = 10.0;
    assert_eq!(code(&regress), "MALFORMED_TRACE");

    let mut nan = events.clone();
    nan[0].t_s = f64::NAN;
    assert_eq!(code(&nan), "MALFORMED_TRACE");

    let mut early_end = events.clone();
    early_end.insert(1, ExecutionEvent::new(300.0, EventKind::RunEnded));
    assert_eq!(code(&early_end), "MALFORMED_TRACE");

    let first_insert = events.iter().position(|e| e.kind == EventKind::PegInserted).unwrap();
    let mut foreign = events.clone();
    let other = common::catalog().goal("easy-3").unwrap();
    foreign[first_insert].connections = vec![other.connections.iter().find(|c| !goal.connections.contains(c)).unwrap().clone()];
    assert_eq!(code(&foreign), "MALFORMED_TRACE");

    let mut unheld = events.clone();
    unheld.remove(first_insert - 1);
    assert_eq!(code(&unheld), "MALFORMED_TRACE");

    assert_eq!(read_trace("").unwrap_err().code(), "MALFORMED_TRACE");
    let text = "{\"goal_id\":\"easy-1\"}\n";
    assert_eq!(read_trace(text).unwrap_err().code(), "MALFORMED_TRACE");
}

#[test]
fn invalid_configs_are_config_errors() {
    let text = std::fs::read_to_string(common::repo_root().join("configs/baseline_emulation.toml")).unwrap();
    let broken = [
        text.replace("[models.push]", "[models.pushy]"),
        text.replace("success_prob = 0.7", "success_prob = 1.7"),
        text.replace("peg_drop_prob = 0.9", "peg_drop_prob = -0.1"),
        text.replace("planning_time_override_s = 190.0", "planning_time_override_s = 0.0"),
        text.replace("[models.move]\nbase_duration_s = 4.0", "[models.move]\nretries = 1\nbase_duration_s = 4.0"),
        text.replace("duration_jitter_s = 1.0", "duration_jitter_s = 4.0"),
        text.replace("base_duration_s = 9.0", "base_duration_s = -9.0"),
        text.replace("failure_propagation = \"strict\"", "failure_propagation = \"lenient\""),
        text.replace("seed = 7", "seed = 7\ncolour = 1"),
    ];
    for (i, t) in broken.iter().enumerate() {
        assert_ne!(t, &text, "case {i} did not change the text");
        let err = SimConfig::from_toml(t).unwrap_err();
        assert_eq!(err.code(), "CONFIG_ERROR", "case {i}: {err}");
    }
    let err = SimConfig::load(std::path::Path::new("/nonexistent/config.toml")).unwrap_err();
    assert!(matches!(err, SimError::Io { .. }));
}

#[test]
fn config_hash_tracks_content() {
    let a = baseline();
    let mut b = a.clone();
    assert_eq!(a.config_hash(), b.config_hash());
    b.peg_drop_prob = 0.5;
    assert_ne!(a.config_hash(), b.config_hash());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn lowering_a_success_probability_never_adds_successes(
        cfg in arb_config(),
        goal_ix in 0usize..3,
        skill_ix in 0usize..7,
        retry in any::<bool>(),
        factor in 0.0..1.0f64,
    ) {
        let sims = easy();
        let (art, _, sim) = &sims[goal_ix];
        let low = lowered(&cfg, Skill::ALL[skill_ix], retry, factor);
        let hi_trace = sim.run(&cfg, 0.0).unwrap();
        let lo_trace = sim.run(&low, 0.0).unwrap();
        prop_assert!(successes(&lo_trace) <= successes(&hi_trace));
        for (c, t) in [(&cfg, &hi_trace), (&low, &lo_trace)] {
            let end = audit_draws(t, c, sim.plan_len()).map_err(TestCaseError::fail)?;
            prop_assert!((t.end_time() - end).abs() <= 1e-9 * end);
            audit_strict(t, art).map_err(TestCaseError::fail)?;
        }
    }
}
