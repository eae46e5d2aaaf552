use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ast::*;
use super::error::LangError;

/// A variable-free atom, displayed as `pred(a,b)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroundAtom {
    pub pred: String,
    pub args: Vec<String>,
}

impl GroundAtom {
    pub fn new(pred: &str, args: &[&str]) -> Self {
        GroundAtom { pred: pred.to_owned(), args: args.iter().map(|s| (*s).to_owned()).collect() }
    }

    /// Reads the `pred(a,b)` form produced by `Display`.
    pub fn parse(text: &str) -> Option<Self> {
        let text = text.trim();
        match text.split_once('(') {
            None => (!text.is_empty()).then(|| GroundAtom { pred: text.to_owned(), args: Vec::new() }),
            Some((pred, rest)) => {
                let inner = rest.strip_suffix(')')?;
                let args: Vec<String> = inner.split(',').map(|a| a.trim().to_owned()).collect();
                if pred.is_empty() || args.iter().any(|a| a.is_empty()) {
                    return None;
                }
                Some(GroundAtom { pred: pred.to_owned(), args })
            }
        }
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pred)?;
        if !self.args.is_empty() {
            write!(f, "({})", self.args.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundLiteral {
    pub atom: GroundAtom,
    pub positive: bool,
}

impl GroundLiteral {
    pub fn pos(atom: GroundAtom) -> Self {
        GroundLiteral { atom, positive: true }
    }

    pub fn neg(atom: GroundAtom) -> Self {
        GroundLiteral { atom, positive: false }
    }
}

impl fmt::Display for GroundLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.positive {
            f.write_str("-")?;
        }
        self.atom.fmt(f)
    }
}

/// Fluent literal over a grounded domain's atom table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FLit {
    pub atom: u32,
    pub positive: bool,
}

/// Constants per leaf sort plus the true static facts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Instance {
    pub constants: BTreeMap<String, BTreeSet<String>>,
    pub statics: BTreeSet<GroundAtom>,
}

impl Instance {
    pub fn add_constant(&mut self, sort: &str, name: &str) -> &mut Self {
        self.constants.entry(sort.to_owned()).or_default().insert(name.to_owned());
        self
    }

    pub fn add_static(&mut self, pred: &str, args: &[&str]) -> &mut Self {
        self.statics.insert(GroundAtom::new(pred, args));
        self
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GroundOptions {
    /// Accept sorts without constants; declarations over them simply have
    /// no ground instances.
    pub allow_empty_sorts: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Effect {
    pub head: FLit,
    pub cond: Vec<FLit>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundAction {
    pub atom: GroundAtom,
    /// `atom` rendered as text; the planner's tie-breaking key.
    pub name: String,
    pub effects: Vec<Effect>,
    /// Fluent bodies of executability conditions; any one holding blocks.
    pub blockers: Vec<Vec<FLit>>,
    /// An executability condition holds on statics alone.
    pub statically_blocked: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundConstraint {
    pub head: FLit,
    pub body: Vec<FLit>,
}

#[derive(Debug, Clone)]
pub struct GroundedDomain {
    pub resolution: Resolution,
    /// Constants of every declared sort, sorted.
    pub members: BTreeMap<String, Vec<String>>,
    pub atoms: Vec<GroundAtom>,
    atom_index: HashMap<GroundAtom, u32>,
    pub statics: BTreeSet<GroundAtom>,
    /// Sorted by name.
    pub actions: Vec<GroundAction>,
    action_index: HashMap<String, usize>,
    pub constraints: Vec<GroundConstraint>,
    /// Constraint ids whose body or head mentions each atom.
    pub constraints_by_atom: Vec<Vec<u32>>,
}

impl GroundedDomain {
    pub fn atom_id(&self, atom: &GroundAtom) -> Option<u32> {
        self.atom_index.get(atom).copied()
    }

    pub fn atom(&self, id: u32) -> &GroundAtom {
        &self.atoms[id as usize]
    }

    pub fn action_id(&self, name: &str) -> Option<usize> {
        self.action_index.get(name).copied()
    }

    pub fn action(&self, id: usize) -> &GroundAction {
        &self.actions[id]
    }

    pub fn lit(&self, lit: &GroundLiteral) -> Option<FLit> {
        self.atom_id(&lit.atom).map(|atom| FLit { atom, positive: lit.positive })
    }

    pub fn literal_text(&self, l: FLit) -> String {
        format!("{}{}", if l.positive { "" } else { "-" }, self.atom(l.atom))
    }

    pub fn has_constant(&self, sort: &str, name: &str) -> bool {
        self.members.get(sort).is_some_and(|m| m.binary_search_by(|c| c.as_str().cmp(name)).is_ok())
    }
}

/// Sort membership tables shared by the grounder and the bridge compiler.
pub(crate) struct Universe<'a> {
    pub members: BTreeMap<String, Vec<String>>,
    sets: HashMap<String, HashSet<String>>,
    pub statics: &'a BTreeSet<GroundAtom>,
}

impl<'a> Universe<'a> {
    pub fn new(desc: &SystemDescription, inst: &'a Instance, opts: GroundOptions) -> Result<Self, LangError> {
        for (sort, consts) in &inst.constants {
            if desc.sort(sort).is_none() {
                return Err(LangError::Instance(format!("constants given for undeclared sort '{sort}'")));
            }
            if !desc.is_leaf_sort(sort) && !consts.is_empty() {
                return Err(LangError::Instance(format!("constants must be given for leaf sorts; '{sort}' has subsorts")));
            }
        }
        let mut members = BTreeMap::new();
        for s in &desc.sorts {
            let mut m = BTreeSet::new();
            for leaf in desc.sorts.iter().filter(|l| desc.is_leaf_sort(&l.name) && desc.is_subsort(&l.name, &s.name)) {
                if let Some(c) = inst.constants.get(&leaf.name) {
                    m.extend(c.iter().cloned());
                }
            }
            if m.is_empty() && !opts.allow_empty_sorts {
                return Err(LangError::EmptySort(s.name.clone()));
            }
            members.insert(s.name.clone(), m.into_iter().collect::<Vec<_>>());
        }
        let sets = members.iter().map(|(k, v)| (k.clone(), v.iter().cloned().collect())).collect();
        let u = Universe { members, sets, statics: &inst.statics };
        for fact in &inst.statics {
            let decl = desc
                .statics
                .iter()
                .find(|d| d.name == fact.pred)
                .ok_or_else(|| LangError::Instance(format!("fact {fact} uses an undeclared static")))?;
            if decl.arg_sorts.len() != fact.args.len()
                || !decl.arg_sorts.iter().zip(&fact.args).all(|(s, c)| u.is_member(s, c))
            {
                return Err(LangError::Instance(format!("fact {fact} does not match the declared argument sorts")));
            }
        }
        Ok(u)
    }

    /// Tables of an already grounded domain.
    pub fn from_domain(dom: &'a GroundedDomain) -> Self {
        let sets = dom.members.iter().map(|(k, v)| (k.clone(), v.iter().cloned().collect())).collect();
        Universe { members: dom.members.clone(), sets, statics: &dom.statics }
    }

    pub fn is_member(&self, sort: &str, c: &str) -> bool {
        self.sets.get(sort).is_some_and(|s| s.contains(c))
    }

    pub fn members(&self, sort: &str) -> &[String] {
        self.members.get(sort).map_or(&[], |v| v.as_slice())
    }

    /// Calls `f` for every assignment of `vars` (in order) that satisfies
    /// the non-fluent conditions among `body`. Fluent literals are left to
    /// the caller. `is_fluent` tells the two kinds of predicate apart.
    pub fn for_each_binding(
        &self,
        vars: &[(String, String)],
        fixed: &HashMap<String, String>,
        body: &[BodyLit],
        is_fluent: &dyn Fn(&str) -> bool,
        f: &mut dyn FnMut(&HashMap<String, String>),
    ) {
        let order: Vec<&(String, String)> = vars.iter().filter(|(v, _)| !fixed.contains_key(v)).collect();
        let depth_of = |v: &str| order.iter().position(|(n, _)| n == v).map_or(0, |p| p + 1);
        // a condition is checked as soon as its last variable is bound
        let mut checks: Vec<Vec<&BodyLit>> = vec![Vec::new(); order.len() + 1];
        for b in body {
            let terms: Vec<&Term> = match b {
                BodyLit::Lit(l) if is_fluent(&l.atom.pred) => continue,
                BodyLit::Lit(l) => l.atom.args.iter().collect(),
                BodyLit::SortTest { term, .. } => vec![term],
                BodyLit::Eq(a, c) | BodyLit::Neq(a, c) => vec![a, c],
            };
            let d = terms
                .iter()
                .map(|t| match t {
                    Term::Var(v) => depth_of(v),
                    Term::Const(_) => 0,
                })
                .max()
                .unwrap_or(0);
            checks[d].push(b);
        }
        let mut binding = fixed.clone();
        if !checks[0].iter().all(|b| self.holds(b, &binding)) {
            return;
        }
        self.bind(&order, 0, &checks, &mut binding, f);
    }

    fn bind(
        &self,
        order: &[&(String, String)],
        i: usize,
        checks: &[Vec<&BodyLit>],
        binding: &mut HashMap<String, String>,
        f: &mut dyn FnMut(&HashMap<String, String>),
    ) {
        if i == order.len() {
            f(binding);
            return;
        }
        let (var, sort) = order[i];
        for c in self.members(sort) {
            binding.insert(var.clone(), c.clone());
            if checks[i + 1].iter().all(|b| self.holds(b, binding)) {
                self.bind(order, i + 1, checks, binding, f);
            }
        }
        binding.remove(var);
    }

    fn holds(&self, b: &BodyLit, binding: &HashMap<String, String>) -> bool {
        match b {
            BodyLit::Lit(l) => {
                let atom = ground_atom(&l.atom, binding);
                self.statics.contains(&atom) == l.positive
            }
            BodyLit::SortTest { sort, term } => self.is_member(sort, subst(term, binding)),
            BodyLit::Eq(a, c) => subst(a, binding) == subst(c, binding),
            BodyLit::Neq(a, c) => subst(a, binding) != subst(c, binding),
        }
    }
}

pub(crate) fn subst<'b>(t: &'b Term, binding: &'b HashMap<String, String>) -> &'b str {
    match t {
        Term::Const(c) => c,
        Term::Var(v) => binding.get(v).map(String::as_str).unwrap_or(v),
    }
}

pub(crate) fn ground_atom(a: &Atom, binding: &HashMap<String, String>) -> GroundAtom {
    GroundAtom { pred: a.pred.clone(), args: a.args.iter().map(|t| subst(t, binding).to_owned()).collect() }
}

/// Variables in first-use order: trigger, head, then body.
fn axiom_vars(ax: &Axiom) -> Vec<(String, String)> {
    let mut seen = Vec::<String>::new();
    let push_terms = |ts: &mut dyn Iterator<Item = &Term>, seen: &mut Vec<String>| {
        for t in ts {
            if let Term::Var(v) = t {
                if !seen.contains(v) {
                    seen.push(v.clone());
                }
            }
        }
    };
    if let Some(t) = &ax.trigger {
        push_terms(&mut t.args.iter(), &mut seen);
    }
    if let Some(h) = &ax.head {
        push_terms(&mut h.atom.args.iter(), &mut seen);
    }
    for b in &ax.body {
        match b {
            BodyLit::Lit(l) => push_terms(&mut l.atom.args.iter(), &mut seen),
            BodyLit::SortTest { term, .. } => push_terms(&mut std::iter::once(term), &mut seen),
            BodyLit::Eq(a, c) | BodyLit::Neq(a, c) => push_terms(&mut [a, c].into_iter(), &mut seen),
        }
    }
    seen.into_iter()
        .map(|v| {
            let s = ax.var_sorts.get(&v).cloned().unwrap_or_default();
            (v, s)
        })
        .collect()
}

fn product(members: &[&[String]], mut f: impl FnMut(&[&str])) {
    let mut idx = vec![0usize; members.len()];
    if members.iter().any(|m| m.is_empty()) {
        return;
    }
    loop {
        let row: Vec<&str> = idx.iter().zip(members).map(|(&i, m)| m[i].as_str()).collect();
        f(&row);
        // odometer, last position fastest
        let mut k = members.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < members[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

pub fn ground(desc: &SystemDescription, inst: &Instance) -> Result<GroundedDomain, LangError> {
    ground_with(desc, inst, GroundOptions::default())
}

pub fn ground_with(desc: &SystemDescription, inst: &Instance, opts: GroundOptions) -> Result<GroundedDomain, LangError> {
    let u = Universe::new(desc, inst, opts)?;

    let mut atoms = Vec::new();
    let mut atom_index = HashMap::new();
    for decl in &desc.fluents {
        let ms: Vec<&[String]> = decl.arg_sorts.iter().map(|s| u.members(s)).collect();
        product(&ms, |row| {
            let a = GroundAtom::new(&decl.name, row);
            atom_index.insert(a.clone(), atoms.len() as u32);
            atoms.push(a);
        });
    }

    let mut actions = Vec::new();
    for decl in &desc.actions {
        let ms: Vec<&[String]> = decl.arg_sorts.iter().map(|s| u.members(s)).collect();
        product(&ms, |row| {
            let atom = GroundAtom::new(&decl.name, row);
            actions.push(GroundAction {
                name: atom.to_string(),
                atom,
                effects: Vec::new(),
                blockers: Vec::new(),
                statically_blocked: false,
            });
        });
    }
    actions.sort_by(|a, b| a.name.cmp(&b.name));
    let action_index: HashMap<String, usize> = actions.iter().enumerate().map(|(i, a)| (a.name.clone(), i)).collect();

    let is_fluent = |p: &str| desc.fluents.iter().any(|f| f.name == p);
    let mut constraints = Vec::new();
    for ax in &desc.axioms {
        let vars = axiom_vars(ax);
        u.for_each_binding(&vars, &HashMap::new(), &ax.body, &is_fluent, &mut |b| {
            // fluent body literals; an atom outside the instance is false
            let mut body = Vec::new();
            for bl in &ax.body {
                if let BodyLit::Lit(l) = bl {
                    if is_fluent(&l.atom.pred) {
                        match atom_index.get(&ground_atom(&l.atom, b)) {
                            Some(&atom) => body.push(FLit { atom, positive: l.positive }),
                            None if l.positive => return,
                            None => {}
                        }
                    }
                }
            }
            body.sort();
            body.dedup();
            let head = match &ax.head {
                Some(h) => match atom_index.get(&ground_atom(&h.atom, b)) {
                    Some(&atom) => Some(FLit { atom, positive: h.positive }),
                    None => return,
                },
                None => None,
            };
            let act = match &ax.trigger {
                Some(t) => match action_index.get(&ground_atom(t, b).to_string()) {
                    Some(&i) => Some(i),
                    None => return,
                },
                None => None,
            };
            match (ax.kind, head, act) {
                (AxiomKind::CausalLaw, Some(head), Some(i)) => actions[i].effects.push(Effect { head, cond: body }),
                (AxiomKind::Executability, _, Some(i)) => {
                    if body.is_empty() {
                        actions[i].statically_blocked = true;
                    }
                    actions[i].blockers.push(body);
                }
                (AxiomKind::StateConstraint, Some(head), None) => constraints.push(GroundConstraint { head, body }),
                _ => {}
            }
        });
    }

    let mut constraints_by_atom: Vec<Vec<u32>> = vec![Vec::new(); atoms.len()];
    for (i, c) in constraints.iter().enumerate() {
        for l in c.body.iter().chain(std::iter::once(&c.head)) {
            let ids = &mut constraints_by_atom[l.atom as usize];
            if ids.last() != Some(&(i as u32)) {
                ids.push(i as u32);
            }
        }
    }

    Ok(GroundedDomain {
        resolution: desc.resolution,
        members: u.members,
        atoms,
        atom_index,
        statics: inst.statics.clone(),
        actions,
        action_index,
        constraints,
        constraints_by_atom,
    })
}
