//! Conjunctive queries and their structural analyses.

mod parse;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub use parse::parse_cq;

use crate::error::{Error, Result};

/// A query term. Individuals order before variables, each group by name,
/// which coincides with the order of their printed forms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Const(String),
    Var(String),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn constant(name: impl Into<String>) -> Self {
        Term::Const(name.into())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }

    pub fn as_const(&self) -> Option<&str> {
        match self {
            Term::Const(c) => Some(c),
            Term::Var(_) => None,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn is_in(&self, vars: &BTreeSet<String>) -> bool {
        self.as_var().is_some_and(|v| vars.contains(v))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Const(c) => write!(f, "\"{c}\""),
        }
    }
}

/// Atom variants are declared in canonical order: concept atoms, then role
/// atoms, then (in)equalities.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QueryAtom {
    Concept(String, Term),
    Role(String, Term, Term),
    Eq(Term, Term),
    /// Only built internally, by realisability probes.
    Neq(Term, Term),
}

impl QueryAtom {
    pub fn concept(name: impl Into<String>, t: Term) -> Self {
        QueryAtom::Concept(name.into(), t)
    }

    pub fn role(name: impl Into<String>, s: Term, o: Term) -> Self {
        QueryAtom::Role(name.into(), s, o)
    }

    /// An equality with its operands in normal order (variable first).
    pub fn eq(a: Term, b: Term) -> Self {
        let (a, b) = normal_pair(a, b);
        QueryAtom::Eq(a, b)
    }

    pub fn neq(a: Term, b: Term) -> Self {
        let (a, b) = normal_pair(a, b);
        QueryAtom::Neq(a, b)
    }

    pub fn terms(&self) -> Vec<&Term> {
        match self {
            QueryAtom::Concept(_, t) => vec![t],
            QueryAtom::Role(_, s, o) | QueryAtom::Eq(s, o) | QueryAtom::Neq(s, o) => vec![s, o],
        }
    }

    /// Concept and role atoms.
    pub fn is_relational(&self) -> bool {
        matches!(self, QueryAtom::Concept(..) | QueryAtom::Role(..))
    }

    pub fn mentions_any(&self, vars: &BTreeSet<String>) -> bool {
        self.terms().into_iter().any(|t| t.is_in(vars))
    }
}

fn normal_pair(a: Term, b: Term) -> (Term, Term) {
    match (&a, &b) {
        (Term::Const(_), Term::Var(_)) => (b, a),
        (Term::Var(_), Term::Const(_)) => (a, b),
        _ if b < a => (b, a),
        _ => (a, b),
    }
}

impl fmt::Display for QueryAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryAtom::Concept(a, t) => write!(f, "{a}({t})"),
            QueryAtom::Role(p, s, o) => write!(f, "{p}({s},{o})"),
            QueryAtom::Eq(s, o) => write!(f, "{s} = {o}"),
            QueryAtom::Neq(s, o) => write!(f, "{s} != {o}"),
        }
    }
}

/// A conjunctive query: answer variables plus a multiset of atoms, kept
/// sorted canonically so that structural equality ignores atom order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CQ {
    answer_vars: Vec<String>,
    atoms: Vec<QueryAtom>,
}

impl CQ {
    /// Builds a query, checking that answer variables are distinct and that
    /// the query is safe.
    pub fn new(answer_vars: Vec<String>, atoms: Vec<QueryAtom>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for v in &answer_vars {
            if !seen.insert(v.as_str()) {
                return Err(Error::RepeatedAnswerVariable(v.clone()));
            }
        }
        let q = CQ::from_parts(answer_vars, atoms);
        q.check_safety()?;
        Ok(q)
    }

    pub(crate) fn from_parts(answer_vars: Vec<String>, mut atoms: Vec<QueryAtom>) -> Self {
        atoms.sort();
        CQ { answer_vars, atoms }
    }

    pub fn answer_vars(&self) -> &[String] {
        &self.answer_vars
    }

    pub fn arity(&self) -> usize {
        self.answer_vars.len()
    }

    pub fn atoms(&self) -> &[QueryAtom] {
        &self.atoms
    }

    pub fn relational_atoms(&self) -> impl Iterator<Item = &QueryAtom> {
        self.atoms.iter().filter(|a| a.is_relational())
    }

    /// All variables, answer variables included.
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.answer_vars.iter().cloned().collect();
        for atom in &self.atoms {
            for t in atom.terms() {
                if let Term::Var(v) = t {
                    out.insert(v.clone());
                }
            }
        }
        out
    }

    pub fn existential_vars(&self) -> BTreeSet<String> {
        let mut vars = self.vars();
        for v in &self.answer_vars {
            vars.remove(v);
        }
        vars
    }

    pub fn individuals(&self) -> BTreeSet<String> {
        self.atoms
            .iter()
            .flat_map(|a| a.terms())
            .filter_map(|t| t.as_const().map(str::to_string))
            .collect()
    }

    /// Every term mentioned by the query; answer variables count as mentioned.
    pub fn terms(&self) -> BTreeSet<Term> {
        let mut out: BTreeSet<Term> = self.answer_vars.iter().map(Term::var).collect();
        for atom in &self.atoms {
            out.extend(atom.terms().into_iter().cloned());
        }
        out
    }

    /// Number of concept and role atoms, repetitions included.
    pub fn relational_atom_count(&self) -> usize {
        self.relational_atoms().count()
    }

    pub fn has_inequalities(&self) -> bool {
        self.atoms.iter().any(|a| matches!(a, QueryAtom::Neq(..)))
    }

    pub fn eq_classes(&self) -> EqClasses {
        EqClasses::of(self)
    }

    pub fn check_safety(&self) -> Result<()> {
        let classes = self.eq_classes();
        let bound: BTreeSet<Term> = self
            .relational_atoms()
            .flat_map(|a| a.terms())
            .map(|t| classes.representative(t).clone())
            .collect();
        for v in self.vars() {
            if !bound.contains(classes.representative(&Term::Var(v.clone()))) {
                return Err(Error::UnsafeVariable(v));
            }
        }
        Ok(())
    }

    /// Diagnostics for suspicious but legal queries.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for class in self.eq_classes().classes() {
            let consts: Vec<&Term> = class.iter().filter(|t| !t.is_var()).collect();
            if consts.len() > 1 {
                let names: Vec<String> = consts.iter().map(|t| t.to_string()).collect();
                out.push(format!(
                    "distinct individuals {} are equated; the query has no answers",
                    names.join(", ")
                ));
            }
        }
        out
    }

    pub fn gaifman(&self) -> GaifmanGraph {
        GaifmanGraph::of(self)
    }

    pub fn is_rooted(&self) -> bool {
        self.non_rooted_component().is_none()
    }

    pub fn ensure_rooted(&self) -> Result<()> {
        match self.non_rooted_component() {
            None => Ok(()),
            Some(component) => {
                let names: Vec<String> = component.iter().map(|t| t.to_string()).collect();
                Err(Error::NotRooted(names.join(", ")))
            }
        }
    }

    /// Terms of the first Gaifman component without an answer variable or
    /// individual.
    fn non_rooted_component(&self) -> Option<BTreeSet<Term>> {
        let classes = self.eq_classes();
        let answers: BTreeSet<String> = self.answer_vars.iter().cloned().collect();
        let graph = self.gaifman();
        for component in graph.components() {
            let terms: BTreeSet<Term> = component
                .iter()
                .flat_map(|rep| classes.class_of(rep).iter().cloned())
                .collect();
            let anchored = terms.iter().any(|t| match t {
                Term::Const(_) => true,
                Term::Var(v) => answers.contains(v),
            });
            if !anchored {
                return Some(terms);
            }
        }
        None
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for CQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q({}) :-", self.answer_vars.join(", "))?;
        for (idx, atom) in self.atoms.iter().enumerate() {
            let sep = if idx == 0 { " " } else { ", " };
            write!(f, "{sep}{atom}")?;
        }
        Ok(())
    }
}

/// The equivalence on terms generated by the equality atoms. Each class is
/// represented by its least term, so a class with an individual is
/// represented by an individual.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EqClasses {
    rep: BTreeMap<Term, Term>,
    members: BTreeMap<Term, BTreeSet<Term>>,
}

impl EqClasses {
    fn of(q: &CQ) -> Self {
        let terms = q.terms();
        let mut parent: BTreeMap<Term, Term> = terms.iter().map(|t| (t.clone(), t.clone())).collect();
        fn find(parent: &mut BTreeMap<Term, Term>, t: &Term) -> Term {
            let mut cur = t.clone();
            loop {
                let next = parent[&cur].clone();
                if next == cur {
                    break;
                }
                cur = next;
            }
            let root = cur;
            let mut cur = t.clone();
            while cur != root {
                let next = parent[&cur].clone();
                parent.insert(cur, root.clone());
                cur = next;
            }
            root
        }
        for atom in q.atoms() {
            if let QueryAtom::Eq(a, b) = atom {
                let ra = find(&mut parent, a);
                let rb = find(&mut parent, b);
                if ra != rb {
                    let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
                    parent.insert(hi, lo);
                }
            }
        }
        let mut grouped: BTreeMap<Term, BTreeSet<Term>> = BTreeMap::new();
        for t in &terms {
            let root = find(&mut parent, t);
            grouped.entry(root).or_default().insert(t.clone());
        }
        let mut rep = BTreeMap::new();
        let mut members = BTreeMap::new();
        for class in grouped.into_values() {
            let least = class.iter().next().expect("non-empty class").clone();
            for t in &class {
                rep.insert(t.clone(), least.clone());
            }
            members.insert(least, class);
        }
        EqClasses { rep, members }
    }

    /// The class representative; terms unknown to the query represent
    /// themselves.
    pub fn representative<'a>(&'a self, t: &'a Term) -> &'a Term {
        self.rep.get(t).unwrap_or(t)
    }

    pub fn class_of(&self, t: &Term) -> &BTreeSet<Term> {
        &self.members[self.representative(t)]
    }

    pub fn same(&self, a: &Term, b: &Term) -> bool {
        self.representative(a) == self.representative(b)
    }

    pub fn classes(&self) -> impl Iterator<Item = &BTreeSet<Term>> {
        self.members.values()
    }

    pub fn representatives(&self) -> impl Iterator<Item = &Term> {
        self.members.keys()
    }
}

/// Nodes are equality-class representatives; one undirected edge per role
/// atom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GaifmanGraph {
    nodes: BTreeSet<Term>,
    edges: BTreeSet<(Term, Term)>,
}

impl GaifmanGraph {
    fn of(q: &CQ) -> Self {
        let classes = q.eq_classes();
        let nodes: BTreeSet<Term> = classes.representatives().cloned().collect();
        let mut edges = BTreeSet::new();
        for atom in q.atoms() {
            if let QueryAtom::Role(_, s, o) = atom {
                let a = classes.representative(s).clone();
                let b = classes.representative(o).clone();
                edges.insert(if a <= b { (a, b) } else { (b, a) });
            }
        }
        GaifmanGraph { nodes, edges }
    }

    pub fn nodes(&self) -> &BTreeSet<Term> {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<(Term, Term)> {
        &self.edges
    }

    pub fn components(&self) -> Vec<BTreeSet<Term>> {
        self.components_within(|_| true)
    }

    /// Connected components of the subgraph induced by nodes satisfying `keep`.
    pub fn components_within(&self, keep: impl Fn(&Term) -> bool) -> Vec<BTreeSet<Term>> {
        let mut adj: BTreeMap<&Term, Vec<&Term>> = BTreeMap::new();
        for (a, b) in &self.edges {
            if keep(a) && keep(b) {
                adj.entry(a).or_default().push(b);
                adj.entry(b).or_default().push(a);
            }
        }
        let mut seen: BTreeSet<&Term> = BTreeSet::new();
        let mut out = Vec::new();
        for start in self.nodes.iter().filter(|n| keep(n)) {
            if seen.contains(start) {
                continue;
            }
            let mut component = BTreeSet::new();
            let mut stack = vec![start];
            while let Some(n) = stack.pop() {
                if !seen.insert(n) {
                    continue;
                }
                component.insert(n.clone());
                if let Some(next) = adj.get(n) {
                    stack.extend(next.iter().copied());
                }
            }
            out.push(component);
        }
        out
    }
}

/// No equality relates a variable of `z` to a term outside `z`.
pub fn equality_consistent(q: &CQ, z: &BTreeSet<String>) -> bool {
    q.atoms().iter().all(|atom| match atom {
        QueryAtom::Eq(a, b) => a.is_in(z) == b.is_in(z),
        _ => true,
    })
}

/// Splits an equality-consistent `z` into its maximal subsets connected
/// through nodes inside `z`, each closed under equality classes.
pub fn ma_connected_partition(q: &CQ, z: &BTreeSet<String>) -> Vec<BTreeSet<String>> {
    if z.is_empty() {
        return Vec::new();
    }
    let classes = q.eq_classes();
    let inside = |rep: &Term| classes.class_of(rep).iter().any(|t| t.is_in(z));
    let mut out: Vec<BTreeSet<String>> = q
        .gaifman()
        .components_within(inside)
        .into_iter()
        .map(|component| {
            component
                .iter()
                .flat_map(|rep| classes.class_of(rep).iter())
                .filter_map(|t| t.as_var().map(str::to_string))
                .collect()
        })
        .collect();
    out.sort();
    out
}

/// Atoms of `q` mentioning a variable of `z_prime` (the subquery φ_{z'}).
pub fn subquery_atoms<'a>(q: &'a CQ, z_prime: &BTreeSet<String>) -> Vec<&'a QueryAtom> {
    q.atoms().iter().filter(|a| a.mentions_any(z_prime)).collect()
}

/// Role atoms of φ_{z'} with exactly one side in `z_prime`, in canonical
/// order.
pub fn linking_candidates<'a>(q: &'a CQ, z_prime: &BTreeSet<String>) -> Vec<&'a QueryAtom> {
    q.atoms()
        .iter()
        .filter(|a| match a {
            QueryAtom::Role(_, s, o) => s.is_in(z_prime) != o.is_in(z_prime),
            _ => false,
        })
        .collect()
}

/// The canonically least role atom linking `z_prime` to a term outside it.
pub fn linking_atom(q: &CQ, z_prime: &BTreeSet<String>) -> Result<QueryAtom> {
    linking_candidates(q, z_prime)
        .into_iter()
        .next()
        .cloned()
        .ok_or_else(|| Error::MissingLinkingAtom(join_vars(z_prime)))
}

/// The outside terms `t_{z'}` met by role atoms of φ_{z'}.
pub fn outside_terms(q: &CQ, z_prime: &BTreeSet<String>) -> BTreeSet<Term> {
    linking_candidates(q, z_prime)
        .into_iter()
        .filter_map(|a| match a {
            QueryAtom::Role(_, s, o) if s.is_in(z_prime) => Some(o.clone()),
            QueryAtom::Role(_, s, _) => Some(s.clone()),
            _ => None,
        })
        .collect()
}

pub(crate) fn join_vars(vars: &BTreeSet<String>) -> String {
    vars.iter().cloned().collect::<Vec<_>>().join(", ")
}
