//! Stratified Datalog with negation and denial constraints.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};

/// A ground atom.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub predicate: String,
    pub args: Vec<String>,
}

impl Literal {
    pub fn new<S: Into<String>>(predicate: &str, args: impl IntoIterator<Item = S>) -> Self {
        Literal {
            predicate: predicate.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }
}

fn write_constant(f: &mut fmt::Formatter<'_>, c: &str) -> fmt::Result {
    let atom = c
        .chars()
        .next()
        .is_some_and(|ch| ch.is_ascii_lowercase() || ch.is_ascii_digit())
        && c.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_');
    if atom {
        f.write_str(c)
    } else {
        write!(f, "{c:?}")
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        if self.args.is_empty() {
            return Ok(());
        }
        f.write_str("(")?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write_constant(f, a)?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Const(String),
    Var(String),
}

pub fn c(s: &str) -> Term {
    Term::Const(s.into())
}

pub fn v(s: &str) -> Term {
    Term::Var(s.into())
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub predicate: String,
    pub terms: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: &str, terms: Vec<Term>) -> Self {
        Atom {
            predicate: predicate.into(),
            terms,
        }
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().filter_map(|t| match t {
            Term::Var(v) => Some(v.as_str()),
            Term::Const(_) => None,
        })
    }

    /// Extends `binding` so that this atom matches `lit`.
    fn unify(&self, lit: &Literal, binding: &Binding) -> Option<Binding> {
        if self.predicate != lit.predicate || self.terms.len() != lit.args.len() {
            return None;
        }
        let mut out = binding.clone();
        for (t, a) in self.terms.iter().zip(&lit.args) {
            match t {
                Term::Const(k) if k != a => return None,
                Term::Const(_) => {}
                Term::Var(name) => match out.get(name) {
                    Some(bound) if bound != a => return None,
                    Some(_) => {}
                    None => {
                        out.insert(name.clone(), a.clone());
                    }
                },
            }
        }
        Some(out)
    }

    pub fn ground(&self, binding: &Binding) -> Option<Literal> {
        let args = self
            .terms
            .iter()
            .map(|t| match t {
                Term::Const(k) => Some(k.clone()),
                Term::Var(name) => binding.get(name).cloned(),
            })
            .collect::<Option<Vec<_>>>()?;
        Some(Literal {
            predicate: self.predicate.clone(),
            args,
        })
    }
}

pub type Binding = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BodyLiteral {
    pub positive: bool,
    pub atom: Atom,
}

pub fn pos(atom: Atom) -> BodyLiteral {
    BodyLiteral { positive: true, atom }
}

pub fn neg(atom: Atom) -> BodyLiteral {
    BodyLiteral {
        positive: false,
        atom,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub head: Atom,
    pub body: Vec<BodyLiteral>,
}

impl Rule {
    /// Every variable must occur in a positive body literal.
    fn check_safe(&self) -> Result<()> {
        let bound: BTreeSet<&str> = self
            .body
            .iter()
            .filter(|b| b.positive)
            .flat_map(|b| b.atom.vars())
            .collect();
        let unsafe_var = self
            .head
            .vars()
            .chain(
                self.body
                    .iter()
                    .filter(|b| !b.positive)
                    .flat_map(|b| b.atom.vars()),
            )
            .find(|v| !bound.contains(v));
        match unsafe_var {
            Some(v) => Err(Error::InvalidProgram(format!(
                "variable {v} in rule for {} is not bound by a positive literal",
                self.head.predicate
            ))),
            None => Ok(()),
        }
    }
}

/// Facts, rules and a constraint given as denials: the constraint is
/// violated when any denial body holds in the model.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SymbolicProgram {
    pub facts: BTreeSet<Literal>,
    pub rules: Vec<Rule>,
    pub denials: Vec<Vec<BodyLiteral>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Sat,
    Unsat,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveResult {
    pub status: Status,
    pub derived: BTreeSet<Literal>,
}

/// All bindings under which `body` holds in `model`.
pub fn satisfying_bindings(body: &[BodyLiteral], model: &BTreeSet<Literal>) -> Vec<Binding> {
    let mut bindings = vec![Binding::new()];
    for lit in body.iter().filter(|b| b.positive) {
        let mut next = Vec::new();
        for b in &bindings {
            for fact in model.iter().filter(|f| f.predicate == lit.atom.predicate) {
                if let Some(ext) = lit.atom.unify(fact, b) {
                    next.push(ext);
                }
            }
        }
        bindings = next;
    }
    bindings
        .into_iter()
        .filter(|b| {
            body.iter()
                .filter(|l| !l.positive)
                .all(|l| match l.atom.ground(b) {
                    Some(g) => !model.contains(&g),
                    None => false,
                })
        })
        .collect()
}

impl SymbolicProgram {
    /// Stratum per head predicate; errors if negation runs through a cycle.
    pub fn stratify(&self) -> Result<BTreeMap<String, usize>> {
        let mut preds: BTreeSet<&str> = self.facts.iter().map(|f| f.predicate.as_str()).collect();
        for r in &self.rules {
            preds.insert(&r.head.predicate);
            preds.extend(r.body.iter().map(|b| b.atom.predicate.as_str()));
        }
        let mut stratum: BTreeMap<String, usize> = preds.iter().map(|p| (p.to_string(), 0)).collect();
        let limit = preds.len();
        loop {
            let mut changed = false;
            for r in &self.rules {
                for b in &r.body {
                    let need = stratum[&b.atom.predicate] + usize::from(!b.positive);
                    let head = stratum.get_mut(&r.head.predicate).expect("collected");
                    if *head < need {
                        *head = need;
                        changed = true;
                        if need > limit {
                            return Err(Error::NonStratified(format!(
                                "negative cycle through {}",
                                r.head.predicate
                            )));
                        }
                    }
                }
            }
            if !changed {
                return Ok(stratum);
            }
        }
    }

    /// Least model, computed stratum by stratum.
    pub fn model(&self) -> Result<BTreeSet<Literal>> {
        for r in &self.rules {
            r.check_safe()?;
        }
        let strata = self.stratify()?;
        let top = strata.values().copied().max().unwrap_or(0);
        let mut model = self.facts.clone();
        for level in 0..=top {
            let rules: Vec<&Rule> = self
                .rules
                .iter()
                .filter(|r| strata[&r.head.predicate] == level)
                .collect();
            loop {
                let mut fresh = Vec::new();
                for r in &rules {
                    for b in satisfying_bindings(&r.body, &model) {
                        if let Some(g) = r.head.ground(&b) {
                            if !model.contains(&g) {
                                fresh.push(g);
                            }
                        }
                    }
                }
                if fresh.is_empty() {
                    break;
                }
                model.extend(fresh);
            }
        }
        Ok(model)
    }

    pub fn solve(&self) -> Result<SolveResult> {
        let derived = self.model()?;
        let violated = self
            .denials
            .iter()
            .any(|d| !satisfying_bindings(d, &derived).is_empty());
        Ok(SolveResult {
            status: if violated { Status::Unsat } else { Status::Sat },
            derived,
        })
    }
}
