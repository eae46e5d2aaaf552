//! Reader for the action description DSL.
//!
//! ```text
//! sorts:
//!   thing.
//!   robot < thing.
//! fluents:
//!   in_hand(robot, object).
//! actions:
//!   put_down(robot, object).
//! axioms:
//!   put_down(R, O) causes -in_hand(R, O).
//!   impossible put_down(R, O) if -in_hand(R, O).
//! ```
//!
//! `%` starts a comment. Variables start with an uppercase letter,
//! constants with a lowercase letter or digit.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::ast::*;
use super::error::LangError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Dot,
    Colon,
    Minus,
    Lt,
    Eq,
    Neq,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: Pos,
}

fn lex(text: &str) -> Result<Vec<Token>, LangError> {
    let mut out = Vec::new();
    let mut line = 1u32;
    let mut col = 1u32;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let pos = Pos { line, col };
        let mut advance = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        match c {
            '%' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    advance(&mut chars);
                }
            }
            c if c.is_whitespace() => {
                advance(&mut chars);
            }
            '(' | ')' | ',' | '.' | ':' | '-' | '<' | '=' => {
                advance(&mut chars);
                let tok = match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ',' => Tok::Comma,
                    '.' => Tok::Dot,
                    ':' => Tok::Colon,
                    '-' => Tok::Minus,
                    '<' => Tok::Lt,
                    _ => Tok::Eq,
                };
                out.push(Token { tok, pos });
            }
            '!' => {
                advance(&mut chars);
                if chars.peek() != Some(&'=') {
                    return Err(LangError::Parse { pos, message: "expected '!='".into() });
                }
                advance(&mut chars);
                out.push(Token { tok: Tok::Neq, pos });
            }
            c if c.is_ascii_alphanumeric() || c == '_' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    // '-' is allowed inside names such as easy-1 but never leads one
                    if c.is_ascii_alphanumeric() || c == '_' || (c == '-' && !s.is_empty() && next_is_name(&chars)) {
                        s.push(c);
                        advance(&mut chars);
                    } else {
                        break;
                    }
                }
                out.push(Token { tok: Tok::Ident(s), pos });
            }
            other => {
                return Err(LangError::Parse { pos, message: format!("unexpected character '{other}'") });
            }
        }
    }
    Ok(out)
}

/// True when the character after the peeked '-' continues a name.
fn next_is_name(chars: &std::iter::Peekable<std::str::Chars>) -> bool {
    let mut it = chars.clone();
    it.next();
    matches!(it.next(), Some(c) if c.is_ascii_alphanumeric())
}

fn is_var(name: &str) -> bool {
    name.starts_with(|c: char| c.is_ascii_uppercase())
}

struct Cursor<'a> {
    toks: &'a [Token],
    i: usize,
    end: Pos,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.i)
    }

    fn peek_at(&self, k: usize) -> Option<&'a Tok> {
        self.toks.get(self.i + k).map(|t| &t.tok)
    }

    fn pos(&self) -> Pos {
        self.peek().map_or(self.end, |t| t.pos)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, LangError> {
        Err(LangError::Parse { pos: self.pos(), message: message.into() })
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek().map(|t| &t.tok) == Some(tok) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), LangError> {
        if self.eat(&tok) {
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn ident(&mut self) -> Result<(String, Pos), LangError> {
        match self.peek() {
            Some(Token { tok: Tok::Ident(s), pos }) => {
                self.i += 1;
                Ok((s.clone(), *pos))
            }
            _ => self.err("expected a name"),
        }
    }

    fn keyword(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Some(Token { tok: Tok::Ident(s), .. }) if s == kw) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn term(&mut self) -> Result<Term, LangError> {
        let (name, _) = self.ident()?;
        Ok(if is_var(&name) { Term::Var(name) } else { Term::Const(name) })
    }

    fn atom(&mut self) -> Result<(Atom, Pos), LangError> {
        let (pred, pos) = self.ident()?;
        if is_var(&pred) {
            return Err(LangError::Parse { pos, message: format!("'{pred}' is a variable, expected a predicate") });
        }
        let mut args = Vec::new();
        if self.eat(&Tok::LParen) {
            loop {
                args.push(self.term()?);
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(Tok::Comma, "',' or ')'")?;
            }
        }
        Ok((Atom { pred, args }, pos))
    }

    fn literal(&mut self) -> Result<(Literal, Pos), LangError> {
        let positive = !self.eat(&Tok::Minus);
        let (atom, pos) = self.atom()?;
        Ok((Literal { positive, atom }, pos))
    }

    fn body(&mut self) -> Result<Vec<(BodyLit, Pos)>, LangError> {
        let mut out = Vec::new();
        loop {
            let pos = self.pos();
            // comparison: Term (=|!=) Term
            let is_cmp = matches!(self.peek_at(1), Some(Tok::Eq | Tok::Neq));
            if is_cmp {
                let a = self.term()?;
                let neq = self.eat(&Tok::Neq);
                if !neq {
                    self.expect(Tok::Eq, "'=' or '!='")?;
                }
                let b = self.term()?;
                out.push((if neq { BodyLit::Neq(a, b) } else { BodyLit::Eq(a, b) }, pos));
            } else {
                let (lit, pos) = self.literal()?;
                out.push((BodyLit::Lit(lit), pos));
            }
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Sorts,
    Statics,
    Fluents,
    Actions,
    Axioms,
}

struct RawAxiom {
    kind: AxiomKind,
    head: Option<(Literal, Pos)>,
    trigger: Option<(Atom, Pos)>,
    body: Vec<(BodyLit, Pos)>,
    pos: Pos,
}

/// Parses and checks a description. Errors carry the position of the
/// offending token.
pub fn parse_description(text: &str) -> Result<SystemDescription, LangError> {
    let toks = lex(text)?;
    let end = toks.last().map_or(Pos { line: 1, col: 1 }, |t| t.pos);
    let mut cur = Cursor { toks: &toks, i: 0, end };
    let mut desc = SystemDescription::default();
    let mut raw = Vec::new();
    let mut section = Section::None;
    let mut seen_sections = BTreeSet::new();

    while cur.peek().is_some() {
        if let (Some(Tok::Ident(name)), Some(Tok::Colon)) = (cur.peek_at(0), cur.peek_at(1)) {
            let pos = cur.pos();
            section = match name.as_str() {
                "sorts" => Section::Sorts,
                "statics" => Section::Statics,
                "fluents" => Section::Fluents,
                "actions" => Section::Actions,
                "axioms" => Section::Axioms,
                other => return Err(LangError::Parse { pos, message: format!("unknown section '{other}'") }),
            };
            if !seen_sections.insert(name.clone()) {
                return Err(LangError::Parse { pos, message: format!("section '{name}' appears twice") });
            }
            cur.i += 2;
            continue;
        }
        match section {
            Section::None => return cur.err("statement outside of a section"),
            Section::Sorts => {
                let (name, pos) = cur.ident()?;
                let parent = if cur.eat(&Tok::Lt) { Some(cur.ident()?.0) } else { None };
                desc.sorts.push(SortDecl { name, parent, pos });
            }
            Section::Statics | Section::Fluents | Section::Actions => {
                let (name, pos) = cur.ident()?;
                let mut arg_sorts = Vec::new();
                if cur.eat(&Tok::LParen) {
                    loop {
                        arg_sorts.push(cur.ident()?.0);
                        if cur.eat(&Tok::RParen) {
                            break;
                        }
                        cur.expect(Tok::Comma, "',' or ')'")?;
                    }
                }
                let kind = match section {
                    Section::Statics => DeclKind::Static,
                    Section::Fluents => DeclKind::Fluent,
                    _ => DeclKind::Action,
                };
                let decl = PredicateDecl { name, arg_sorts, kind, pos };
                match kind {
                    DeclKind::Static => desc.statics.push(decl),
                    DeclKind::Fluent => desc.fluents.push(decl),
                    DeclKind::Action => desc.actions.push(decl),
                }
            }
            Section::Axioms => raw.push(axiom(&mut cur)?),
        }
        cur.expect(Tok::Dot, "'.' at end of statement")?;
    }

    check_declarations(&desc)?;
    for r in raw {
        let ax = check_axiom(&desc, r)?;
        desc.axioms.push(ax);
    }
    check_stratified(&desc)?;
    Ok(desc)
}

/// Parses a `bridge:` file. Heads are checked against `coarse` and bodies
/// against `fine`.
pub(crate) fn parse_bridge_rules(
    text: &str,
    coarse: &SystemDescription,
    fine: &SystemDescription,
) -> Result<Vec<BridgeRule>, LangError> {
    let toks = lex(text)?;
    let end = toks.last().map_or(Pos { line: 1, col: 1 }, |t| t.pos);
    let mut cur = Cursor { toks: &toks, i: 0, end };
    if !(cur.keyword("bridge") && cur.eat(&Tok::Colon)) {
        return cur.err("expected 'bridge:'");
    }
    let mut rules = Vec::new();
    while cur.peek().is_some() {
        let pos = cur.pos();
        let (head, head_pos) = cur.atom()?;
        if !cur.keyword("iff") {
            return cur.err("expected 'iff'");
        }
        let body = cur.body()?;
        cur.expect(Tok::Dot, "'.' at end of statement")?;

        let mut hc = SortCollector { desc: coarse, vars: HashMap::new() };
        hc.atom(&head, head_pos, &[DeclKind::Fluent])?;
        let mut bc = SortCollector { desc: fine, vars: HashMap::new() };
        let mut checked = Vec::with_capacity(body.len());
        for (b, bpos) in body {
            let b = match b {
                BodyLit::Lit(l) if fine.sort(&l.atom.pred).is_some() && l.positive && l.atom.args.len() == 1 => {
                    let term = l.atom.args[0].clone();
                    bc.note(&term, &l.atom.pred, bpos)?;
                    BodyLit::SortTest { sort: l.atom.pred, term }
                }
                BodyLit::Lit(l) => {
                    bc.atom(&l.atom, bpos, &[DeclKind::Fluent, DeclKind::Static])?;
                    BodyLit::Lit(l)
                }
                other => other,
            };
            checked.push(b);
        }
        let var_sorts = bc
            .vars
            .into_iter()
            .filter(|(v, _)| !hc.vars.contains_key(v))
            .map(|(v, (s, _))| (v, s))
            .collect();
        rules.push(BridgeRule { head, body: checked, var_sorts, pos });
    }
    Ok(rules)
}

fn axiom(cur: &mut Cursor) -> Result<RawAxiom, LangError> {
    let pos = cur.pos();
    if cur.keyword("impossible") {
        let trigger = cur.atom()?;
        let body = if cur.keyword("if") { cur.body()? } else { Vec::new() };
        return Ok(RawAxiom { kind: AxiomKind::Executability, head: None, trigger: Some(trigger), body, pos });
    }
    let (first, first_pos) = cur.literal()?;
    if cur.keyword("causes") {
        if !first.positive {
            return Err(LangError::Parse { pos: first_pos, message: "an action cannot be negated".into() });
        }
        let head = cur.literal()?;
        let body = if cur.keyword("if") { cur.body()? } else { Vec::new() };
        return Ok(RawAxiom {
            kind: AxiomKind::CausalLaw,
            head: Some(head),
            trigger: Some((first.atom, first_pos)),
            body,
            pos,
        });
    }
    let body = if cur.keyword("if") { cur.body()? } else { Vec::new() };
    Ok(RawAxiom { kind: AxiomKind::StateConstraint, head: Some((first, first_pos)), trigger: None, body, pos })
}

fn check_declarations(desc: &SystemDescription) -> Result<(), LangError> {
    let mut names = BTreeSet::new();
    for s in &desc.sorts {
        if !names.insert(s.name.as_str()) {
            return Err(LangError::Sort { pos: s.pos, message: format!("sort '{}' declared twice", s.name) });
        }
    }
    for s in &desc.sorts {
        if let Some(p) = &s.parent {
            if desc.sort(p).is_none() {
                return Err(LangError::Undeclared { pos: s.pos, name: p.clone() });
            }
        }
        // walking up must terminate within |sorts| steps
        let mut cur = s.parent.as_deref();
        for _ in 0..=desc.sorts.len() {
            match cur {
                None => break,
                Some(p) if p == s.name => {
                    return Err(LangError::Sort { pos: s.pos, message: format!("sort '{}' is its own ancestor", s.name) })
                }
                Some(p) => cur = desc.sort(p).and_then(|d| d.parent.as_deref()),
            }
        }
    }
    let mut preds = BTreeSet::new();
    for p in desc.statics.iter().chain(&desc.fluents).chain(&desc.actions) {
        if names.contains(p.name.as_str()) || !preds.insert(p.name.as_str()) {
            return Err(LangError::Sort { pos: p.pos, message: format!("name '{}' declared twice", p.name) });
        }
        for s in &p.arg_sorts {
            if desc.sort(s).is_none() {
                return Err(LangError::Undeclared { pos: p.pos, name: s.clone() });
            }
        }
    }
    Ok(())
}

struct SortCollector<'a> {
    desc: &'a SystemDescription,
    vars: HashMap<String, (String, Pos)>,
}

impl<'a> SortCollector<'a> {
    fn note(&mut self, term: &Term, sort: &str, pos: Pos) -> Result<(), LangError> {
        let Term::Var(v) = term else { return Ok(()) };
        match self.vars.get(v) {
            None => {
                self.vars.insert(v.clone(), (sort.to_owned(), pos));
            }
            Some((prev, _)) => {
                if self.desc.is_subsort(sort, prev) {
                    self.vars.insert(v.clone(), (sort.to_owned(), pos));
                } else if !self.desc.is_subsort(prev, sort) {
                    return Err(LangError::Sort {
                        pos,
                        message: format!("variable {v} used both as {prev} and as {sort}"),
                    });
                }
            }
        }
        Ok(())
    }

    fn atom(&mut self, atom: &Atom, pos: Pos, allowed: &[DeclKind]) -> Result<(), LangError> {
        let decl = self
            .desc
            .predicate(&atom.pred)
            .ok_or_else(|| LangError::Undeclared { pos, name: atom.pred.clone() })?;
        if !allowed.contains(&decl.kind) {
            return Err(LangError::Sort {
                pos,
                message: format!("'{}' is a {:?} and cannot appear here", atom.pred, decl.kind),
            });
        }
        if decl.arg_sorts.len() != atom.args.len() {
            return Err(LangError::Sort {
                pos,
                message: format!(
                    "'{}' takes {} argument(s), {} given",
                    atom.pred,
                    decl.arg_sorts.len(),
                    atom.args.len()
                ),
            });
        }
        for (t, s) in atom.args.iter().zip(&decl.arg_sorts) {
            self.note(t, s, pos)?;
        }
        Ok(())
    }
}

fn check_axiom(desc: &SystemDescription, raw: RawAxiom) -> Result<Axiom, LangError> {
    let mut sc = SortCollector { desc, vars: HashMap::new() };
    if let Some((t, pos)) = &raw.trigger {
        sc.atom(t, *pos, &[DeclKind::Action])?;
    }
    if let Some((h, pos)) = &raw.head {
        sc.atom(&h.atom, *pos, &[DeclKind::Fluent])?;
    }
    let mut body = Vec::with_capacity(raw.body.len());
    for (b, pos) in raw.body {
        let b = match b {
            // a unary atom naming a sort is a membership test
            BodyLit::Lit(l) if desc.sort(&l.atom.pred).is_some() => {
                if !l.positive || l.atom.args.len() != 1 {
                    return Err(LangError::Sort {
                        pos,
                        message: format!("sort test '{l}' must be positive and unary"),
                    });
                }
                let term = l.atom.args[0].clone();
                sc.note(&term, &l.atom.pred, pos)?;
                BodyLit::SortTest { sort: l.atom.pred, term }
            }
            BodyLit::Lit(l) => {
                sc.atom(&l.atom, pos, &[DeclKind::Fluent, DeclKind::Static])?;
                BodyLit::Lit(l)
            }
            other => other,
        };
        body.push((b, pos));
    }
    // every variable of a comparison must be bound elsewhere
    for (b, pos) in &body {
        if let BodyLit::Eq(x, y) | BodyLit::Neq(x, y) = b {
            for t in [x, y] {
                if let Term::Var(v) = t {
                    if !sc.vars.contains_key(v) {
                        return Err(LangError::Sort { pos: *pos, message: format!("cannot infer the sort of {v}") });
                    }
                }
            }
        }
    }
    let var_sorts: BTreeMap<String, String> = sc.vars.into_iter().map(|(v, (s, _))| (v, s)).collect();
    Ok(Axiom {
        kind: raw.kind,
        head: raw.head.map(|(h, _)| h),
        body: body.into_iter().map(|(b, _)| b).collect(),
        trigger: raw.trigger.map(|(t, _)| t),
        var_sorts,
        pos: raw.pos,
    })
}

/// Rejects constraint sets in which a fluent literal can derive its own
/// complement: the signed dependency graph may not put `f` and `-f` in one
/// strongly connected component.
fn check_stratified(desc: &SystemDescription) -> Result<(), LangError> {
    let mut nodes: Vec<(String, bool)> = Vec::new();
    let mut index: HashMap<(String, bool), usize> = HashMap::new();
    let mut id = |n: (String, bool), nodes: &mut Vec<(String, bool)>| {
        *index.entry(n.clone()).or_insert_with(|| {
            nodes.push(n);
            nodes.len() - 1
        })
    };
    let mut edges: Vec<(usize, usize, Pos)> = Vec::new();
    let fluent = |name: &str| desc.fluents.iter().any(|f| f.name == name);
    for ax in desc.axioms_of(AxiomKind::StateConstraint) {
        let Some(h) = &ax.head else { continue };
        let to = id((h.atom.pred.clone(), h.positive), &mut nodes);
        for b in &ax.body {
            if let BodyLit::Lit(l) = b {
                if fluent(&l.atom.pred) {
                    let from = id((l.atom.pred.clone(), l.positive), &mut nodes);
                    edges.push((from, to, ax.pos));
                }
            }
        }
    }
    let n = nodes.len();
    let mut reach = vec![vec![false; n]; n];
    for (a, b, _) in &edges {
        reach[*a][*b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    for (i, (pred, sign)) in nodes.iter().enumerate() {
        if let Some(&j) = index.get(&(pred.clone(), !sign)) {
            if reach[i][j] && reach[j][i] {
                let pos = edges.iter().find(|(a, b, _)| *a == i || *b == i).map(|e| e.2).unwrap_or_default();
                return Err(LangError::NotStratified {
                    pos,
                    message: format!("'{pred}' and '-{pred}' depend on each other through state constraints"),
                });
            }
        }
    }
    Ok(())
}
