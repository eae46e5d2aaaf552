use std::collections::{HashMap, HashSet};

use crate::lang::{
    parse_bridge_rules, BodyLit, BridgeRule, FLit, GroundedDomain, LangError, Pos, SymbolicState, SystemDescription, Term,
    Universe,
};

/// One rule per coarse fluent, relating it to fine fluents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BridgeMap {
    pub rules: Vec<BridgeRule>,
}

impl BridgeMap {
    pub fn parse(text: &str, coarse: &SystemDescription, fine: &SystemDescription) -> Result<Self, LangError> {
        let rules = parse_bridge_rules(text, coarse, fine)?;
        for f in &coarse.fluents {
            let n = rules.iter().filter(|r| r.head.pred == f.name).count();
            if n != 1 {
                return Err(LangError::Sort {
                    pos: rules.iter().find(|r| r.head.pred == f.name).map_or(Pos::default(), |r| r.pos),
                    message: format!("coarse fluent '{}' has {n} bridge rules, expected exactly one", f.name),
                });
            }
        }
        Ok(BridgeMap { rules })
    }

    fn rule(&self, pred: &str) -> Option<&BridgeRule> {
        self.rules.iter().find(|r| r.head.pred == pred)
    }

    /// Resolves every coarse atom to a disjunction of conjunctions of fine
    /// literals. Atoms naming constants absent from `fine` stay undefined.
    pub fn compile(&self, coarse: &GroundedDomain, fine: &GroundedDomain, fine_desc: &SystemDescription) -> CompiledBridge {
        let u = Universe::from_domain(fine);
        let known: HashSet<&str> = fine.members.values().flatten().map(String::as_str).collect();
        let is_fluent = |p: &str| fine_desc.fluents.iter().any(|f| f.name == p);
        let formulas = coarse
            .atoms
            .iter()
            .map(|a| {
                let rule = self.rule(&a.pred)?;
                if a.args.iter().any(|c| !known.contains(c.as_str())) {
                    return None;
                }
                let mut fixed = HashMap::new();
                for (t, c) in rule.head.args.iter().zip(&a.args) {
                    match t {
                        Term::Var(v) => {
                            if fixed.get(v).is_some_and(|prev: &String| prev != c) {
                                return Some(Vec::new());
                            }
                            fixed.insert(v.clone(), c.clone());
                        }
                        Term::Const(k) if k != c => return Some(Vec::new()),
                        Term::Const(_) => {}
                    }
                }
                let vars: Vec<(String, String)> = rule.var_sorts.iter().map(|(v, s)| (v.clone(), s.clone())).collect();
                let mut disjuncts = Vec::new();
                u.for_each_binding(&vars, &fixed, &rule.body, &is_fluent, &mut |b| {
                    let mut conj = Vec::new();
                    for bl in &rule.body {
                        if let BodyLit::Lit(l) = bl {
                            if is_fluent(&l.atom.pred) {
                                match fine.atom_id(&crate::lang::ground_atom(&l.atom, b)) {
                                    Some(atom) => conj.push(FLit { atom, positive: l.positive }),
                                    None if l.positive => return,
                                    None => {}
                                }
                            }
                        }
                    }
                    disjuncts.push(conj);
                });
                Some(disjuncts)
            })
            .collect();
        CompiledBridge { formulas }
    }
}

#[derive(Debug, Clone)]
pub struct CompiledBridge {
    formulas: Vec<Option<Vec<Vec<FLit>>>>,
}

impl CompiledBridge {
    /// Value of coarse atom `atom` in the fine state, if defined.
    pub fn value(&self, atom: u32, fine: &SymbolicState) -> Option<bool> {
        self.formulas[atom as usize].as_ref().map(|d| d.iter().any(|conj| conj.iter().all(|l| fine.holds(*l))))
    }

    pub fn is_defined(&self, atom: u32) -> bool {
        self.formulas[atom as usize].is_some()
    }

    /// Coarse atoms whose bridged value disagrees with `coarse_state`.
    pub fn mismatches(&self, fine: &SymbolicState, coarse_state: &SymbolicState) -> Vec<u32> {
        (0..self.formulas.len() as u32)
            .filter(|&a| self.value(a, fine).is_some_and(|v| v != coarse_state.get(a)))
            .collect()
    }

    pub fn agrees(&self, fine: &SymbolicState, coarse_state: &SymbolicState) -> bool {
        (0..self.formulas.len() as u32).all(|a| self.value(a, fine).is_none_or(|v| v == coarse_state.get(a)))
    }

    /// The coarse state a complete fine state abstracts to; undefined atoms
    /// read as false.
    pub fn abstract_state(&self, fine: &SymbolicState) -> SymbolicState {
        let mut s = SymbolicState::all_false(self.formulas.len());
        for a in 0..self.formulas.len() as u32 {
            if self.value(a, fine) == Some(true) {
                s.set(a, true);
            }
        }
        s
    }
}
