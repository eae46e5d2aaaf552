use std::collections::{HashMap, HashSet};

use super::error::TransitionError;
use super::ground::{FLit, GroundAtom, GroundLiteral, GroundedDomain};

/// Complete assignment to a domain's fluent atoms, stored as a bitset of
/// the true ones.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolicState {
    bits: Vec<u64>,
    len: usize,
}

impl SymbolicState {
    pub fn all_false(len: usize) -> Self {
        SymbolicState { bits: vec![0; len.div_ceil(64)], len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, atom: u32) -> bool {
        let i = atom as usize;
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, atom: u32, value: bool) {
        let i = atom as usize;
        if value {
            self.bits[i / 64] |= 1 << (i % 64);
        } else {
            self.bits[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn holds(&self, l: FLit) -> bool {
        self.get(l.atom) == l.positive
    }

    pub fn true_atoms(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.len as u32).filter(|&i| self.get(i))
    }

    /// Closed-world completion: listed atoms true, all others false.
    pub fn from_true_atoms(dom: &GroundedDomain, atoms: &[GroundAtom]) -> Option<Self> {
        let mut s = SymbolicState::all_false(dom.atoms.len());
        for a in atoms {
            s.set(dom.atom_id(a)?, true);
        }
        Some(s)
    }

    pub fn satisfies(&self, dom: &GroundedDomain, lits: &[GroundLiteral]) -> bool {
        lits.iter().all(|l| match dom.atom_id(&l.atom) {
            Some(a) => self.get(a) == l.positive,
            None => !l.positive,
        })
    }

    /// True atoms rendered as text, in atom order.
    pub fn describe(&self, dom: &GroundedDomain) -> Vec<String> {
        self.true_atoms().map(|a| dom.atom(a).to_string()).collect()
    }
}

pub fn is_closed(dom: &GroundedDomain, s: &SymbolicState) -> bool {
    dom.constraints.iter().all(|c| !c.body.iter().all(|l| s.holds(*l)) || s.holds(c.head))
}

pub fn applicable(dom: &GroundedDomain, s: &SymbolicState, action: usize) -> bool {
    let a = dom.action(action);
    !a.statically_blocked && !a.blockers.iter().any(|b| b.iter().all(|l| s.holds(*l)))
}

/// Direct effects of `action` in `s`, or the first clashing pair.
fn direct_effects(dom: &GroundedDomain, s: &SymbolicState, action: usize) -> Result<Vec<FLit>, TransitionError> {
    let a = dom.action(action);
    let mut e: Vec<FLit> = a.effects.iter().filter(|ef| ef.cond.iter().all(|l| s.holds(*l))).map(|ef| ef.head).collect();
    e.sort();
    e.dedup();
    for w in e.windows(2) {
        if w[0].atom == w[1].atom {
            return Err(TransitionError::Inconsistent {
                action: a.name.clone(),
                detail: format!("direct effects set {} both ways", dom.atom(w[0].atom)),
            });
        }
    }
    Ok(e)
}

/// Literals derivable from `known` (atom -> value) through the constraints
/// in `relevant`. Returns None on a derived contradiction.
fn consequences(dom: &GroundedDomain, relevant: &[u32], known: &mut HashMap<u32, bool>, base: &dyn Fn(u32) -> Option<bool>) -> bool {
    let value = |known: &HashMap<u32, bool>, a: u32| known.get(&a).copied().or_else(|| base(a));
    loop {
        let mut changed = false;
        for &ci in relevant {
            let c = &dom.constraints[ci as usize];
            if c.body.iter().all(|l| value(known, l.atom) == Some(l.positive)) {
                match value(known, c.head.atom) {
                    Some(v) if v == c.head.positive => {}
                    Some(_) => return false,
                    None => {
                        known.insert(c.head.atom, c.head.positive);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return true;
        }
    }
}

/// The unique state reached by executing `action` in `s`.
///
/// Atoms outside the cone reachable from the direct effects keep their
/// value. Inside the cone, values forced by the effects and the state
/// constraints are fixed first and the rest default to inertia. When some
/// undetermined atom could be derived the other way, every assignment to
/// the undetermined atoms is checked and exactly one must be a successor.
pub fn successor(dom: &GroundedDomain, s: &SymbolicState, action: usize) -> Result<SymbolicState, TransitionError> {
    let name = || dom.action(action).name.clone();
    if !applicable(dom, s, action) {
        return Err(TransitionError::NotApplicable(name()));
    }
    let e = direct_effects(dom, s, action)?;

    // changeable cone
    let mut ch: HashSet<u32> = e.iter().map(|l| l.atom).collect();
    let mut work: Vec<u32> = ch.iter().copied().collect();
    let mut relevant: HashSet<u32> = HashSet::new();
    while let Some(x) = work.pop() {
        for &ci in &dom.constraints_by_atom[x as usize] {
            relevant.insert(ci);
            let c = &dom.constraints[ci as usize];
            if ch.contains(&c.head.atom) {
                continue;
            }
            if c.body.iter().all(|l| ch.contains(&l.atom) || s.holds(*l)) {
                ch.insert(c.head.atom);
                work.push(c.head.atom);
            }
        }
    }
    let mut relevant: Vec<u32> = relevant.into_iter().collect();
    relevant.sort_unstable();

    // forced values: effects plus everything derivable from them and the
    // atoms outside the cone
    let outside = |a: u32| if ch.contains(&a) { None } else { Some(s.get(a)) };
    let mut forced: HashMap<u32, bool> = e.iter().map(|l| (l.atom, l.positive)).collect();
    if !consequences(dom, &relevant, &mut forced, &outside) {
        return Err(TransitionError::Inconsistent { action: name(), detail: "state constraints contradict the effects".into() });
    }
    let mut undetermined: Vec<u32> = ch.iter().copied().filter(|a| !forced.contains_key(a)).collect();
    undetermined.sort_unstable();

    let mut candidate = s.clone();
    for (&a, &v) in &forced {
        candidate.set(a, v);
    }
    let closed = |st: &SymbolicState| {
        relevant.iter().all(|&ci| {
            let c = &dom.constraints[ci as usize];
            !c.body.iter().all(|l| st.holds(*l)) || st.holds(c.head)
        })
    };
    // another successor would have to flip an undetermined atom through a
    // constraint whose head is that flipped literal
    let contested = undetermined.iter().any(|&d| {
        relevant.iter().any(|&ci| {
            let c = &dom.constraints[ci as usize];
            c.head.atom == d && c.head.positive != s.get(d)
        })
    });
    if !contested && closed(&candidate) {
        return Ok(candidate);
    }

    const MAX_UNDETERMINED: usize = 16;
    if undetermined.len() > MAX_UNDETERMINED {
        return Err(TransitionError::AmbiguousClosure {
            action: name(),
            detail: format!("{} atoms left undetermined", undetermined.len()),
        });
    }
    let mut found: Vec<SymbolicState> = Vec::new();
    for mask in 0u32..(1 << undetermined.len()) {
        let mut st = candidate.clone();
        for (k, &d) in undetermined.iter().enumerate() {
            st.set(d, mask >> k & 1 == 1);
        }
        if closed(&st) && supported(dom, &relevant, s, &st, &e) {
            found.push(st);
        }
    }
    match found.len() {
        0 => Err(TransitionError::Inconsistent { action: name(), detail: "no closed state is supported by the effects".into() }),
        1 => Ok(found.pop().unwrap()),
        n => Err(TransitionError::AmbiguousClosure { action: name(), detail: format!("{n} distinct closed successors") }),
    }
}

/// Every atom changed between `s` and `next` is derivable from the direct
/// effects together with the literals that kept their value.
fn supported(dom: &GroundedDomain, relevant: &[u32], s: &SymbolicState, next: &SymbolicState, e: &[FLit]) -> bool {
    let unchanged = |a: u32| if s.get(a) == next.get(a) { Some(next.get(a)) } else { None };
    let mut known: HashMap<u32, bool> = e.iter().map(|l| (l.atom, l.positive)).collect();
    if e.iter().any(|l| !next.holds(*l)) || !consequences(dom, relevant, &mut known, &unchanged) {
        return false;
    }
    (0..next.len() as u32).all(|a| s.get(a) == next.get(a) || known.get(&a) == Some(&next.get(a)))
}

/// All successors by brute force over every assignment of the domain's
/// atoms. Exponential; meant for checking `successor` on small domains.
pub fn successor_exhaustive(dom: &GroundedDomain, s: &SymbolicState, action: usize) -> Vec<SymbolicState> {
    assert!(dom.atoms.len() <= 24, "exhaustive successor limited to 24 atoms");
    if !applicable(dom, s, action) {
        return Vec::new();
    }
    let a = dom.action(action);
    let e: Vec<FLit> = a.effects.iter().filter(|ef| ef.cond.iter().all(|l| s.holds(*l))).map(|ef| ef.head).collect();
    let n = dom.atoms.len();
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << n) {
        let mut next = SymbolicState::all_false(n);
        for i in 0..n {
            next.set(i as u32, mask >> i & 1 == 1);
        }
        if !is_closed(dom, &next) || e.iter().any(|l| !next.holds(*l)) {
            continue;
        }
        // least model of E and the kept literals under the constraints
        let mut lits: HashSet<FLit> = e.iter().copied().collect();
        for i in 0..n as u32 {
            if s.get(i) == next.get(i) {
                lits.insert(FLit { atom: i, positive: s.get(i) });
            }
        }
        loop {
            let mut grew = false;
            for c in &dom.constraints {
                if c.body.iter().all(|l| lits.contains(l)) && lits.insert(c.head) {
                    grew = true;
                }
            }
            if !grew {
                break;
            }
        }
        let complete = (0..n as u32).all(|i| lits.contains(&FLit { atom: i, positive: next.get(i) }));
        let consistent = (0..n as u32).all(|i| !lits.contains(&FLit { atom: i, positive: !next.get(i) }));
        if complete && consistent {
            out.push(next);
        }
    }
    out
}
