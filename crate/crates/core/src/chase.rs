//! Bag interpretations and the staged canonical bag model.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::sync::Arc;

use crate::error::{checked_add, Error, Result};
use crate::ontology::{Assertion, BagABox, BagOntology, Concept, Role, TBox};
use crate::par::{self, Execution};
use crate::query::CQ;

/// A domain element: an individual or the anonymous `w^j_{parent,role}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Element {
    Named(String),
    Anon(Arc<AnonElement>),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AnonElement {
    pub parent: Element,
    pub role: Role,
    pub index: u64,
}

impl Element {
    pub fn named(name: impl Into<String>) -> Self {
        Element::Named(name.into())
    }

    pub fn anon(parent: Element, role: Role, index: u64) -> Self {
        Element::Anon(Arc::new(AnonElement { parent, role, index }))
    }

    pub fn is_named(&self) -> bool {
        matches!(self, Element::Named(_))
    }

    pub fn name(&self) -> Option<&str> {
        match self {
            Element::Named(n) => Some(n),
            Element::Anon(_) => None,
        }
    }

    /// Number of anonymous steps from the nearest individual.
    pub fn depth(&self) -> usize {
        match self {
            Element::Named(_) => 0,
            Element::Anon(a) => 1 + a.parent.depth(),
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Named(n) => f.write_str(n),
            Element::Anon(a) => write!(f, "_w({},{},{})", a.parent, a.role, a.index),
        }
    }
}

/// A finite bag interpretation. Individuals interpret as themselves.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BagInterpretation {
    domain: BTreeSet<Element>,
    concepts: BTreeMap<String, BTreeMap<Element, u64>>,
    roles: BTreeMap<String, BTreeMap<(Element, Element), u64>>,
}

impl BagInterpretation {
    pub fn new() -> Self {
        BagInterpretation::default()
    }

    /// The interpretation `C₀` read off an ABox.
    pub fn from_abox(abox: &BagABox) -> Self {
        let mut i = BagInterpretation::new();
        for (assertion, m) in abox.iter() {
            match assertion {
                Assertion::Concept { concept, individual } => {
                    i.set_concept(concept, Element::named(individual.clone()), m);
                }
                Assertion::Role { role, subject, object } => {
                    i.set_role(role, Element::named(subject.clone()), Element::named(object.clone()), m);
                }
            }
        }
        i
    }

    pub fn add_element(&mut self, e: Element) {
        self.domain.insert(e);
    }

    /// Sets `A^I(e) = m`; zero removes the entry.
    pub fn set_concept(&mut self, name: &str, e: Element, m: u64) {
        self.domain.insert(e.clone());
        let ext = self.concepts.entry(name.to_string()).or_default();
        if m == 0 {
            ext.remove(&e);
        } else {
            ext.insert(e, m);
        }
    }

    pub fn set_role(&mut self, name: &str, s: Element, o: Element, m: u64) {
        self.domain.insert(s.clone());
        self.domain.insert(o.clone());
        let ext = self.roles.entry(name.to_string()).or_default();
        if m == 0 {
            ext.remove(&(s, o));
        } else {
            ext.insert((s, o), m);
        }
    }

    pub fn add_concept(&mut self, name: &str, e: Element, m: u64) -> Result<()> {
        let cur = self.concept(name, &e);
        self.set_concept(name, e, checked_add(cur, m, "building an interpretation")?);
        Ok(())
    }

    pub fn add_role(&mut self, name: &str, s: Element, o: Element, m: u64) -> Result<()> {
        let cur = self.role(name, &s, &o);
        self.set_role(name, s, o, checked_add(cur, m, "building an interpretation")?);
        Ok(())
    }

    pub fn domain(&self) -> &BTreeSet<Element> {
        &self.domain
    }

    pub fn concept(&self, name: &str, e: &Element) -> u64 {
        self.concepts.get(name).and_then(|ext| ext.get(e)).copied().unwrap_or(0)
    }

    pub fn role(&self, name: &str, s: &Element, o: &Element) -> u64 {
        self.roles
            .get(name)
            .and_then(|ext| ext.get(&(s.clone(), o.clone())))
            .copied()
            .unwrap_or(0)
    }

    pub fn concept_ext(&self, name: &str) -> Option<&BTreeMap<Element, u64>> {
        self.concepts.get(name)
    }

    pub fn role_ext(&self, name: &str) -> Option<&BTreeMap<(Element, Element), u64>> {
        self.roles.get(name)
    }

    pub fn concept_exts(&self) -> impl Iterator<Item = (&String, &BTreeMap<Element, u64>)> {
        self.concepts.iter()
    }

    pub fn role_exts(&self) -> impl Iterator<Item = (&String, &BTreeMap<(Element, Element), u64>)> {
        self.roles.iter()
    }

    /// `C^I(e)` for a basic concept; `(∃R)^I(e)` sums `R^I(e, v)` over `v`.
    pub fn basic(&self, c: &Concept, e: &Element) -> u64 {
        match c {
            Concept::Atomic(name) => self.concept(name, e),
            Concept::Exists(r) => {
                let Some(ext) = self.roles.get(r.name()) else {
                    return 0;
                };
                let mut sum = 0u64;
                for ((s, o), m) in ext {
                    let hit = if r.is_inverse() { o == e } else { s == e };
                    if hit {
                        sum = sum.saturating_add(*m);
                    }
                }
                sum
            }
        }
    }

    /// Every basic concept with a positive value, per element, in one pass.
    pub fn basic_values(&self) -> BTreeMap<Element, BTreeMap<Concept, u64>> {
        let mut out: BTreeMap<Element, BTreeMap<Concept, u64>> =
            self.domain.iter().map(|e| (e.clone(), BTreeMap::new())).collect();
        for (name, ext) in &self.concepts {
            for (e, m) in ext {
                out.entry(e.clone())
                    .or_default()
                    .insert(Concept::atomic(name.clone()), *m);
            }
        }
        for (name, ext) in &self.roles {
            let fwd = Concept::Exists(Role::atomic(name.clone()));
            let bwd = Concept::Exists(Role::inverse_of(name.clone()));
            for ((s, o), m) in ext {
                let slot = out.entry(s.clone()).or_default().entry(fwd.clone()).or_insert(0);
                *slot = slot.saturating_add(*m);
                let slot = out.entry(o.clone()).or_default().entry(bwd.clone()).or_insert(0);
                *slot = slot.saturating_add(*m);
            }
        }
        out
    }

    pub fn named_elements(&self) -> impl Iterator<Item = &Element> {
        self.domain.iter().filter(|e| e.is_named())
    }

    pub fn anonymous_count(&self) -> usize {
        self.domain.iter().filter(|e| !e.is_named()).count()
    }

    /// Bag containment `self ⊆ other` on every extension, and on domains.
    pub fn is_contained_in(&self, other: &BagInterpretation) -> bool {
        self.domain.is_subset(&other.domain)
            && self
                .concepts
                .iter()
                .all(|(name, ext)| ext.iter().all(|(e, m)| *m <= other.concept(name, e)))
            && self
                .roles
                .iter()
                .all(|(name, ext)| ext.iter().all(|((s, o), m)| *m <= other.role(name, s, o)))
    }

    /// Sorted `A(el) m` / `P(el1,el2) m` lines: concepts first, then roles.
    pub fn dump_lines(&self) -> Vec<String> {
        let mut lines = Vec::new();
        for (name, ext) in &self.concepts {
            for (e, m) in ext {
                lines.push(format!("{name}({e}) {m}"));
            }
        }
        for (name, ext) in &self.roles {
            for ((s, o), m) in ext {
                lines.push(format!("{name}({s},{o}) {m}"));
            }
        }
        lines
    }

    /// Drops empty extension maps so equality ignores vocabulary residue.
    fn normalise(&mut self) {
        self.concepts.retain(|_, ext| !ext.is_empty());
        self.roles.retain(|_, ext| !ext.is_empty());
    }
}

/// Closure values at `u`: for each `C`, the maximum of `C₀^I(u)` over all
/// `C₀` with `T ⊨ C₀ ⊑ C`. Zero values are omitted.
pub fn concept_closure(i: &BagInterpretation, u: &Element, tbox: &TBox) -> BTreeMap<Concept, u64> {
    let mut values: BTreeMap<Concept, u64> = BTreeMap::new();
    for (name, ext) in i.concept_exts() {
        if let Some(m) = ext.get(u) {
            values.insert(Concept::atomic(name.clone()), *m);
        }
    }
    for (name, _) in i.role_exts() {
        for r in [Role::atomic(name.clone()), Role::inverse_of(name.clone())] {
            let c = Concept::Exists(r);
            let m = i.basic(&c, u);
            if m > 0 {
                values.insert(c, m);
            }
        }
    }
    close_values(&values, tbox)
}

fn close_values(values: &BTreeMap<Concept, u64>, tbox: &TBox) -> BTreeMap<Concept, u64> {
    let mut out: BTreeMap<Concept, u64> = BTreeMap::new();
    for (c, m) in values {
        if *m == 0 {
            continue;
        }
        for d in tbox.subsumers(c) {
            let slot = out.entry(d).or_insert(0);
            *slot = (*slot).max(*m);
        }
    }
    out
}

struct ElementUpdate {
    concepts: Vec<(String, u64)>,
    new_pairs: Vec<(String, Element, Element)>,
}

/// One chase stage: closure values on every old element, plus one fresh
/// anonymous successor per unit of existential deficit.
pub fn chase_step(prev: &BagInterpretation, tbox: &TBox) -> BagInterpretation {
    chase_step_with(prev, tbox, Execution::Auto)
}

pub fn chase_step_with(prev: &BagInterpretation, tbox: &TBox, exec: Execution) -> BagInterpretation {
    let values = prev.basic_values();
    let elements: Vec<(&Element, &BTreeMap<Concept, u64>)> = values.iter().collect();
    let updates = par::map(exec, &elements, |(u, vals)| {
        let closure = close_values(vals, tbox);
        let mut update = ElementUpdate {
            concepts: Vec::new(),
            new_pairs: Vec::new(),
        };
        for (c, m) in &closure {
            match c {
                Concept::Atomic(name) => update.concepts.push((name.clone(), *m)),
                Concept::Exists(r) => {
                    let have = vals.get(c).copied().unwrap_or(0);
                    for j in 1..=m.saturating_sub(have) {
                        let w = Element::anon((*u).clone(), r.clone(), j);
                        let pair = if r.is_inverse() {
                            (w, (*u).clone())
                        } else {
                            ((*u).clone(), w)
                        };
                        update.new_pairs.push((r.name().to_string(), pair.0, pair.1));
                    }
                }
            }
        }
        update
    });

    let mut next = prev.clone();
    for ((u, _), update) in elements.iter().zip(updates) {
        for (name, m) in update.concepts {
            next.set_concept(&name, (*u).clone(), m);
        }
        for (name, s, o) in update.new_pairs {
            debug_assert_eq!(next.role(&name, &s, &o), 0, "anonymous element reused");
            next.set_role(&name, s, o, 1);
        }
    }
    next.normalise();
    next
}

/// Stages `C₀ … C_d` of the canonical bag model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChaseResult {
    stages: Vec<BagInterpretation>,
}

impl ChaseResult {
    pub fn depth(&self) -> usize {
        self.stages.len() - 1
    }

    pub fn stages(&self) -> &[BagInterpretation] {
        &self.stages
    }

    pub fn stage(&self, i: usize) -> Option<&BagInterpretation> {
        self.stages.get(i)
    }

    /// The union of all stages, which is the last one since stages grow.
    pub fn union(&self) -> &BagInterpretation {
        self.stages.last().expect("at least C0")
    }

    pub fn into_union(mut self) -> BagInterpretation {
        self.stages.pop().expect("at least C0")
    }

    /// `# depth=d` followed by the sorted extension lines of the union.
    pub fn dump(&self) -> String {
        let mut out = format!("# depth={}\n", self.depth());
        for line in self.union().dump_lines() {
            let _ = writeln!(out, "{line}");
        }
        out
    }
}

pub fn chase(k: &BagOntology, depth: usize) -> Result<ChaseResult> {
    chase_with(k, depth, Execution::Auto)
}

pub fn chase_with(k: &BagOntology, depth: usize, exec: Execution) -> Result<ChaseResult> {
    k.tbox.ensure_core()?;
    if !k.is_satisfiable() {
        return Err(Error::UnsatisfiableOntology);
    }
    Ok(chase_unchecked(&k.tbox, &k.abox, depth, exec))
}

pub(crate) fn chase_unchecked(tbox: &TBox, abox: &BagABox, depth: usize, exec: Execution) -> ChaseResult {
    let mut base = BagInterpretation::from_abox(abox);
    base.normalise();
    let mut stages = vec![base];
    for _ in 0..depth {
        let prev = stages.last().expect("non-empty");
        let next = chase_step_with(prev, tbox, exec);
        stages.push(next);
    }
    ChaseResult { stages }
}

/// Depth that makes evaluation of a rooted query over the chase exact:
/// the number of concept and role atoms, repetitions included.
pub fn required_depth(q: &CQ) -> usize {
    q.relational_atom_count()
}
