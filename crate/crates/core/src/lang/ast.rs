use std::collections::BTreeMap;
use std::fmt;

/// Source position, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Resolution {
    #[default]
    Coarse,
    Fine,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SortDecl {
    pub name: String,
    pub parent: Option<String>,
    pub pos: Pos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeclKind {
    Static,
    Fluent,
    Action,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateDecl {
    pub name: String,
    pub arg_sorts: Vec<String>,
    pub kind: DeclKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) | Term::Const(v) => f.write_str(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub pred: String,
    pub args: Vec<Term>,
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pred)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                a.fmt(f)?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Literal {
    pub positive: bool,
    pub atom: Atom,
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.positive {
            f.write_str("-")?;
        }
        self.atom.fmt(f)
    }
}

/// Body element of an axiom.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BodyLit {
    Lit(Literal),
    /// `sort(X)`: membership test, also narrows the variable's sort.
    SortTest { sort: String, term: Term },
    Eq(Term, Term),
    Neq(Term, Term),
}

impl fmt::Display for BodyLit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BodyLit::Lit(l) => l.fmt(f),
            BodyLit::SortTest { sort, term } => write!(f, "{sort}({term})"),
            BodyLit::Eq(a, b) => write!(f, "{a} = {b}"),
            BodyLit::Neq(a, b) => write!(f, "{a} != {b}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AxiomKind {
    CausalLaw,
    StateConstraint,
    Executability,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Axiom {
    pub kind: AxiomKind,
    /// Fluent literal; absent for executability conditions.
    pub head: Option<Literal>,
    pub body: Vec<BodyLit>,
    /// Action atom of causal laws and executability conditions.
    pub trigger: Option<Atom>,
    /// Sort of every variable, inferred from argument positions.
    pub var_sorts: BTreeMap<String, String>,
    pub pos: Pos,
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.kind, &self.trigger, &self.head) {
            (AxiomKind::CausalLaw, Some(t), Some(h)) => write!(f, "{t} causes {h}")?,
            (AxiomKind::StateConstraint, _, Some(h)) => write!(f, "{h}")?,
            (AxiomKind::Executability, Some(t), _) => write!(f, "impossible {t}")?,
            _ => f.write_str("<malformed axiom>")?,
        }
        if !self.body.is_empty() {
            f.write_str(" if ")?;
            for (i, b) in self.body.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                b.fmt(f)?;
            }
        }
        f.write_str(".")
    }
}

/// A parsed and checked action description.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SystemDescription {
    pub resolution: Resolution,
    pub sorts: Vec<SortDecl>,
    pub statics: Vec<PredicateDecl>,
    pub fluents: Vec<PredicateDecl>,
    pub actions: Vec<PredicateDecl>,
    pub axioms: Vec<Axiom>,
}

impl SystemDescription {
    pub fn with_resolution(mut self, resolution: Resolution) -> Self {
        self.resolution = resolution;
        self
    }

    pub fn sort(&self, name: &str) -> Option<&SortDecl> {
        self.sorts.iter().find(|s| s.name == name)
    }

    pub fn predicate(&self, name: &str) -> Option<&PredicateDecl> {
        self.statics
            .iter()
            .chain(&self.fluents)
            .chain(&self.actions)
            .find(|p| p.name == name)
    }

    pub fn is_leaf_sort(&self, name: &str) -> bool {
        !self.sorts.iter().any(|s| s.parent.as_deref() == Some(name))
    }

    /// `sub` equals `sup` or lies below it in the hierarchy.
    pub fn is_subsort(&self, sub: &str, sup: &str) -> bool {
        let mut cur = Some(sub);
        // the hierarchy is a forest, so this terminates
        while let Some(s) = cur {
            if s == sup {
                return true;
            }
            cur = self.sort(s).and_then(|d| d.parent.as_deref());
        }
        false
    }

    pub fn axioms_of(&self, kind: AxiomKind) -> impl Iterator<Item = &Axiom> {
        self.axioms.iter().filter(move |a| a.kind == kind)
    }
}

/// `coarse_atom iff fine_body.` Variables of the head are bound by the
/// coarse atom; the remaining ones are existential.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BridgeRule {
    pub head: Atom,
    pub body: Vec<BodyLit>,
    /// Sorts of the body-only variables, taken from the fine description.
    pub var_sorts: BTreeMap<String, String>,
    pub pos: Pos,
}
