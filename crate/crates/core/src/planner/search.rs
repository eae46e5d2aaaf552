//! Depth-bounded search over a grounded transition system.

use std::collections::{HashMap, HashSet, VecDeque};
use std::rc::Rc;

use crate::lang::{applicable, successor, FLit, GroundLiteral, GroundedDomain, SymbolicState, TransitionError};

use super::PlanError;

/// Goal literals resolved against a domain. A positive literal over an atom
/// the domain lacks can never hold.
#[derive(Debug, Clone)]
pub struct GoalLits {
    pub lits: Vec<FLit>,
    pub impossible: bool,
}

impl GoalLits {
    pub fn resolve(dom: &GroundedDomain, goal: &[GroundLiteral]) -> Self {
        let mut lits = Vec::new();
        let mut impossible = false;
        for g in goal {
            match dom.lit(g) {
                Some(l) => lits.push(l),
                None if g.positive => impossible = true,
                None => {}
            }
        }
        GoalLits { lits, impossible }
    }

    pub fn holds(&self, s: &SymbolicState) -> bool {
        !self.impossible && self.lits.iter().all(|l| s.holds(*l))
    }
}

/// Actions that can affect the goal, directly or through the conditions of
/// other relevant actions and constraints.
pub fn relevant_actions(dom: &GroundedDomain, goal: &GoalLits) -> Vec<usize> {
    let mut atoms: HashSet<u32> = goal.lits.iter().map(|l| l.atom).collect();
    let mut chosen = vec![false; dom.actions.len()];
    loop {
        let before = (atoms.len(), chosen.iter().filter(|c| **c).count());
        for c in &dom.constraints {
            if atoms.contains(&c.head.atom) {
                atoms.extend(c.body.iter().map(|l| l.atom));
            }
        }
        for (i, a) in dom.actions.iter().enumerate() {
            if chosen[i] || a.statically_blocked {
                continue;
            }
            if a.effects.iter().any(|e| atoms.contains(&e.head.atom)) {
                chosen[i] = true;
                atoms.extend(a.blockers.iter().flatten().map(|l| l.atom));
                atoms.extend(a.effects.iter().flat_map(|e| e.cond.iter().map(|l| l.atom)));
            }
        }
        if before == (atoms.len(), chosen.iter().filter(|c| **c).count()) {
            break;
        }
    }
    (0..dom.actions.len()).filter(|&i| chosen[i]).collect()
}

/// Over-approximates the literals true in any reachable state, ignoring
/// interference between actions. A goal literal outside it is unreachable.
pub fn relaxed_reachable(dom: &GroundedDomain, init: &SymbolicState, goal: &GoalLits) -> bool {
    if goal.impossible {
        return false;
    }
    let n = dom.atoms.len();
    // reach[2a] = atom a can be false, reach[2a+1] = atom a can be true
    let mut reach = vec![false; 2 * n];
    let idx = |l: FLit| 2 * l.atom as usize + l.positive as usize;
    for a in 0..n as u32 {
        reach[idx(FLit { atom: a, positive: init.get(a) })] = true;
    }
    loop {
        let mut grew = false;
        let mut add = |l: FLit, reach: &mut Vec<bool>| {
            if !reach[idx(l)] {
                reach[idx(l)] = true;
                grew = true;
            }
        };
        for a in &dom.actions {
            if a.statically_blocked {
                continue;
            }
            let may_run = a
                .blockers
                .iter()
                .all(|b| b.iter().any(|l| reach[idx(FLit { atom: l.atom, positive: !l.positive })]));
            if !may_run {
                continue;
            }
            for e in &a.effects {
                if e.cond.iter().all(|l| reach[idx(*l)]) {
                    add(e.head, &mut reach);
                }
            }
        }
        for c in &dom.constraints {
            if c.body.iter().all(|l| reach[idx(*l)]) {
                add(c.head, &mut reach);
            }
        }
        if !grew {
            break;
        }
    }
    goal.lits.iter().all(|l| reach[idx(*l)])
}

pub(crate) struct SearchResult {
    pub plan: Option<Vec<usize>>,
    pub nodes: u64,
}

type Successors = Rc<Vec<(usize, SymbolicState)>>;

struct Iddfs<'a> {
    dom: &'a GroundedDomain,
    actions: &'a [usize],
    is_goal: &'a dyn Fn(&SymbolicState) -> bool,
    /// Largest budget known to fail from a state; `u32::MAX` when the
    /// failure did not depend on the budget.
    memo: HashMap<SymbolicState, u32>,
    cache: HashMap<SymbolicState, Successors>,
    nodes: u64,
    cutoff: bool,
}

const CACHE_LIMIT: usize = 200_000;

impl Iddfs<'_> {
    fn successors(&mut self, s: &SymbolicState) -> Result<Successors, TransitionError> {
        if let Some(v) = self.cache.get(s) {
            return Ok(v.clone());
        }
        let mut out = Vec::new();
        for &a in self.actions {
            if !applicable(self.dom, s, a) {
                continue;
            }
            match successor(self.dom, s, a) {
                Ok(t) => out.push((a, t)),
                // no transition exists for this action here
                Err(TransitionError::Inconsistent { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        let out = Rc::new(out);
        if self.cache.len() < CACHE_LIMIT {
            self.cache.insert(s.clone(), out.clone());
        }
        Ok(out)
    }

    fn dfs(&mut self, s: &SymbolicState, budget: u32, path: &mut Vec<usize>) -> Result<bool, TransitionError> {
        if (self.is_goal)(s) {
            return Ok(true);
        }
        if budget == 0 {
            self.cutoff = true;
            return Ok(false);
        }
        if let Some(&b) = self.memo.get(s) {
            if b >= budget {
                if b != u32::MAX {
                    self.cutoff = true;
                }
                return Ok(false);
            }
        }
        self.nodes += 1;
        let outer_cutoff = std::mem::replace(&mut self.cutoff, false);
        for (a, t) in self.successors(s)?.iter() {
            path.push(*a);
            if self.dfs(t, budget - 1, path)? {
                return Ok(true);
            }
            path.pop();
        }
        let depends_on_budget = self.cutoff;
        self.cutoff |= outer_cutoff;
        self.memo.insert(s.clone(), if depends_on_budget { budget } else { u32::MAX });
        Ok(false)
    }
}

/// Iterative deepening with actions tried in the given order, so the first
/// plan found is the shortest one and, among those, the first in that
/// order. Stops early once a whole iteration ends without hitting the
/// depth bound.
pub(crate) fn iddfs(
    dom: &GroundedDomain,
    init: &SymbolicState,
    actions: &[usize],
    is_goal: &dyn Fn(&SymbolicState) -> bool,
    max_horizon: u32,
) -> Result<SearchResult, TransitionError> {
    let mut st = Iddfs { dom, actions, is_goal, memo: HashMap::new(), cache: HashMap::new(), nodes: 0, cutoff: false };
    for depth in 0..=max_horizon {
        st.cutoff = false;
        let mut path = Vec::new();
        if st.dfs(init, depth, &mut path)? {
            return Ok(SearchResult { plan: Some(path), nodes: st.nodes });
        }
        if !st.cutoff {
            break;
        }
    }
    Ok(SearchResult { plan: None, nodes: st.nodes })
}

pub const BFS_STATE_LIMIT: usize = 1_000_000;

/// Length of a shortest plan by breadth-first search over every ground
/// action, or `None` when the goal is unreachable.
pub fn bfs_oracle(dom: &GroundedDomain, init: &SymbolicState, goal: &[GroundLiteral]) -> Result<Option<usize>, PlanError> {
    let goal = GoalLits::resolve(dom, goal);
    let mut seen: HashSet<SymbolicState> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(init.clone());
    queue.push_back((init.clone(), 0usize));
    while let Some((s, d)) = queue.pop_front() {
        if goal.holds(&s) {
            return Ok(Some(d));
        }
        for a in 0..dom.actions.len() {
            if !applicable(dom, &s, a) {
                continue;
            }
            let t = match successor(dom, &s, a) {
                Ok(t) => t,
                Err(TransitionError::Inconsistent { .. }) => continue,
                Err(e) => return Err(PlanError::Transition(e)),
            };
            if seen.insert(t.clone()) {
                if seen.len() > BFS_STATE_LIMIT {
                    return Err(PlanError::StateSpaceTooLarge(BFS_STATE_LIMIT));
                }
                queue.push_back((t, d + 1));
            }
        }
    }
    Ok(None)
}
