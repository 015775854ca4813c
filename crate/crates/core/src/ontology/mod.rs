//! Vocabulary, TBoxes and bag ABoxes for DL-Lite_core and DL-Lite_R.
//!
//! A [`TBox`] precomputes its subsumption closure at construction so that
//! `entails_concept` and the subsumee/subsumer queries used by the chase and
//! the rewriting are lookups. Satisfiability is decided on the support of the
//! ABox: multiplicities never influence it.

mod text;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

pub(crate) use text::is_identifier;
pub use text::{parse_abox, parse_tbox};

use crate::error::{checked_add, Error, Result};

/// Prefix reserved for the fresh individuals of realisability probes.
pub const RESERVED_PREFIX: &str = "_probe_";

/// An atomic role `P` or its inverse `P-`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Role {
    name: String,
    inverse: bool,
}

impl Role {
    pub fn atomic(name: impl Into<String>) -> Self {
        Role {
            name: name.into(),
            inverse: false,
        }
    }

    pub fn inverse_of(name: impl Into<String>) -> Self {
        Role {
            name: name.into(),
            inverse: true,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_inverse(&self) -> bool {
        self.inverse
    }

    /// `P` ↦ `P-`, `P-` ↦ `P`.
    pub fn inv(&self) -> Role {
        Role {
            name: self.name.clone(),
            inverse: !self.inverse,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inverse {
            write!(f, "{}-", self.name)
        } else {
            f.write_str(&self.name)
        }
    }
}

/// A basic concept: `A` or `∃R`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Concept {
    Atomic(String),
    Exists(Role),
}

impl Concept {
    pub fn atomic(name: impl Into<String>) -> Self {
        Concept::Atomic(name.into())
    }

    pub fn exists(role: Role) -> Self {
        Concept::Exists(role)
    }
}

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Concept::Atomic(name) => f.write_str(name),
            Concept::Exists(role) => write!(f, "EX {role}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Axiom {
    ConceptIncl(Concept, Concept),
    RoleIncl(Role, Role),
    ConceptDisj(Concept, Concept),
    RoleDisj(Role, Role),
}

impl Axiom {
    pub fn is_role_axiom(&self) -> bool {
        matches!(self, Axiom::RoleIncl(..) | Axiom::RoleDisj(..))
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axiom::ConceptIncl(sub, sup) => write!(f, "{sub} SUB {sup}"),
            Axiom::RoleIncl(sub, sup) => write!(f, "{sub} SUBR {sup}"),
            Axiom::ConceptDisj(a, b) => write!(f, "DISJ {a} {b}"),
            Axiom::RoleDisj(a, b) => write!(f, "DISJR {a} {b}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum TBoxKind {
    #[default]
    Core,
    R,
}

impl fmt::Display for TBoxKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TBoxKind::Core => f.write_str("CORE"),
            TBoxKind::R => f.write_str("R"),
        }
    }
}

/// A finite set of axioms together with its entailment closure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TBox {
    kind: TBoxKind,
    axioms: BTreeSet<Axiom>,
    // Strict subsumers of each concept node; reflexivity is implicit.
    concept_sups: BTreeMap<Concept, BTreeSet<Concept>>,
    concept_subs: BTreeMap<Concept, BTreeSet<Concept>>,
    role_sups: BTreeMap<Role, BTreeSet<Role>>,
}

impl Default for TBox {
    fn default() -> Self {
        TBox::empty()
    }
}

impl TBox {
    pub fn empty() -> Self {
        TBox {
            kind: TBoxKind::Core,
            axioms: BTreeSet::new(),
            concept_sups: BTreeMap::new(),
            concept_subs: BTreeMap::new(),
            role_sups: BTreeMap::new(),
        }
    }

    pub fn new(kind: TBoxKind, axioms: impl IntoIterator<Item = Axiom>) -> Result<Self> {
        let axioms: BTreeSet<Axiom> = axioms.into_iter().collect();
        if kind == TBoxKind::Core {
            if let Some(ax) = axioms.iter().find(|a| a.is_role_axiom()) {
                return Err(Error::RoleAxiomInCore(ax.to_string()));
            }
        }

        let mut role_edges: BTreeMap<Role, BTreeSet<Role>> = BTreeMap::new();
        for ax in &axioms {
            if let Axiom::RoleIncl(sub, sup) = ax {
                role_edges.entry(sub.clone()).or_default().insert(sup.clone());
                role_edges.entry(sub.inv()).or_default().insert(sup.inv());
            }
        }
        let role_sups = transitive_closure(&role_edges);

        let mut concept_edges: BTreeMap<Concept, BTreeSet<Concept>> = BTreeMap::new();
        for ax in &axioms {
            match ax {
                Axiom::ConceptIncl(sub, sup) => {
                    concept_edges.entry(sub.clone()).or_default().insert(sup.clone());
                }
                Axiom::RoleIncl(sub, sup) => {
                    concept_edges
                        .entry(Concept::Exists(sub.clone()))
                        .or_default()
                        .insert(Concept::Exists(sup.clone()));
                    concept_edges
                        .entry(Concept::Exists(sub.inv()))
                        .or_default()
                        .insert(Concept::Exists(sup.inv()));
                }
                _ => {}
            }
        }
        let concept_sups = transitive_closure(&concept_edges);
        let mut concept_subs: BTreeMap<Concept, BTreeSet<Concept>> = BTreeMap::new();
        for (sub, sups) in &concept_sups {
            for sup in sups {
                concept_subs.entry(sup.clone()).or_default().insert(sub.clone());
            }
        }

        Ok(TBox {
            kind,
            axioms,
            concept_sups,
            concept_subs,
            role_sups,
        })
    }

    /// Shorthand for a DL-Lite_core TBox.
    pub fn core(axioms: impl IntoIterator<Item = Axiom>) -> Result<Self> {
        TBox::new(TBoxKind::Core, axioms)
    }

    pub fn kind(&self) -> TBoxKind {
        self.kind
    }

    pub fn axioms(&self) -> impl Iterator<Item = &Axiom> {
        self.axioms.iter()
    }

    pub fn len(&self) -> usize {
        self.axioms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axioms.is_empty()
    }

    pub fn ensure_core(&self) -> Result<()> {
        match self.kind {
            TBoxKind::Core => Ok(()),
            TBoxKind::R => Err(Error::UnsupportedTBoxKind),
        }
    }

    pub fn entails_concept(&self, sub: &Concept, sup: &Concept) -> bool {
        sub == sup || self.concept_sups.get(sub).is_some_and(|sups| sups.contains(sup))
    }

    pub fn entails_role(&self, sub: &Role, sup: &Role) -> bool {
        sub == sup || self.role_sups.get(sub).is_some_and(|sups| sups.contains(sup))
    }

    /// Every `D` with `T ⊨ C ⊑ D`, `C` included, in canonical order.
    pub fn subsumers(&self, concept: &Concept) -> BTreeSet<Concept> {
        let mut out = self.concept_sups.get(concept).cloned().unwrap_or_default();
        out.insert(concept.clone());
        out
    }

    /// Every `C₀` with `T ⊨ C₀ ⊑ C`, `C` included, in canonical order.
    pub fn subsumees(&self, concept: &Concept) -> BTreeSet<Concept> {
        let mut out = self.concept_subs.get(concept).cloned().unwrap_or_default();
        out.insert(concept.clone());
        out
    }

    pub fn role_subsumers(&self, role: &Role) -> BTreeSet<Role> {
        let mut out = self.role_sups.get(role).cloned().unwrap_or_default();
        out.insert(role.clone());
        out
    }

    pub fn concept_closure_of<'a>(&self, seeds: impl IntoIterator<Item = &'a Concept>) -> BTreeSet<Concept> {
        let mut out = BTreeSet::new();
        for seed in seeds {
            out.extend(self.subsumers(seed));
        }
        out
    }

    fn concept_disjoint(&self, set: &BTreeSet<Concept>) -> bool {
        self.axioms.iter().any(|ax| match ax {
            Axiom::ConceptDisj(a, b) => set.contains(a) && set.contains(b),
            _ => false,
        })
    }

    fn role_disjoint(&self, set: &BTreeSet<Role>) -> bool {
        self.axioms.iter().any(|ax| match ax {
            Axiom::RoleDisj(a, b) => {
                (set.contains(a) && set.contains(b)) || (set.contains(&a.inv()) && set.contains(&b.inv()))
            }
            _ => false,
        })
    }

    pub fn has_disjointness(&self) -> bool {
        self.axioms
            .iter()
            .any(|ax| matches!(ax, Axiom::ConceptDisj(..) | Axiom::RoleDisj(..)))
    }

    /// Atomic role names mentioned anywhere in the TBox.
    pub fn role_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let add_concept = |c: &Concept, out: &mut BTreeSet<String>| {
            if let Concept::Exists(r) = c {
                out.insert(r.name().to_string());
            }
        };
        for ax in &self.axioms {
            match ax {
                Axiom::ConceptIncl(a, b) | Axiom::ConceptDisj(a, b) => {
                    add_concept(a, &mut out);
                    add_concept(b, &mut out);
                }
                Axiom::RoleIncl(a, b) | Axiom::RoleDisj(a, b) => {
                    out.insert(a.name().to_string());
                    out.insert(b.name().to_string());
                }
            }
        }
        out
    }
}

fn transitive_closure<N: Ord + Clone>(edges: &BTreeMap<N, BTreeSet<N>>) -> BTreeMap<N, BTreeSet<N>> {
    let mut out = BTreeMap::new();
    for start in edges.keys() {
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<&N> = edges[start].iter().collect();
        while let Some(node) = queue.pop_front() {
            if seen.insert(node.clone()) {
                if let Some(next) = edges.get(node) {
                    queue.extend(next.iter());
                }
            }
        }
        seen.remove(start);
        out.insert(start.clone(), seen);
    }
    out
}

/// A ground assertion over atomic vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Assertion {
    Concept {
        concept: String,
        individual: String,
    },
    Role {
        role: String,
        subject: String,
        object: String,
    },
}

impl Assertion {
    pub fn concept(concept: impl Into<String>, individual: impl Into<String>) -> Self {
        Assertion::Concept {
            concept: concept.into(),
            individual: individual.into(),
        }
    }

    pub fn role(role: impl Into<String>, subject: impl Into<String>, object: impl Into<String>) -> Self {
        Assertion::Role {
            role: role.into(),
            subject: subject.into(),
            object: object.into(),
        }
    }

    pub fn individuals(&self) -> Vec<&str> {
        match self {
            Assertion::Concept { individual, .. } => vec![individual],
            Assertion::Role { subject, object, .. } => vec![subject, object],
        }
    }
}

impl fmt::Display for Assertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Assertion::Concept { concept, individual } => write!(f, "{concept}({individual})"),
            Assertion::Role { role, subject, object } => write!(f, "{role}({subject},{object})"),
        }
    }
}

/// A finite bag of assertions; zero multiplicities are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BagABox {
    entries: BTreeMap<Assertion, u64>,
}

impl BagABox {
    pub fn new() -> Self {
        BagABox::default()
    }

    /// Adds `multiplicity` copies of `assertion`; repeated insertions sum.
    pub fn insert(&mut self, assertion: Assertion, multiplicity: u64) -> Result<()> {
        if multiplicity == 0 {
            return Ok(());
        }
        let slot = self.entries.entry(assertion).or_insert(0);
        *slot = checked_add(*slot, multiplicity, "summing ABox multiplicities")?;
        Ok(())
    }

    pub fn multiplicity(&self, assertion: &Assertion) -> u64 {
        self.entries.get(assertion).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Assertion, u64)> {
        self.entries.iter().map(|(a, m)| (a, *m))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn individuals(&self) -> BTreeSet<String> {
        self.entries
            .keys()
            .flat_map(|a| a.individuals())
            .map(str::to_string)
            .collect()
    }

    /// Same support, every multiplicity set to one.
    pub fn flattened(&self) -> BagABox {
        BagABox {
            entries: self.entries.keys().map(|a| (a.clone(), 1)).collect(),
        }
    }

    pub fn scaled(&self, factor: u64) -> Result<BagABox> {
        let mut out = BagABox::new();
        for (a, m) in self.iter() {
            let m = m
                .checked_mul(factor)
                .ok_or(Error::MultiplicityOverflow("scaling ABox multiplicities"))?;
            out.insert(a.clone(), m)?;
        }
        Ok(out)
    }
}

impl FromIterator<(Assertion, u64)> for BagABox {
    /// Panics on multiplicity overflow; use [`BagABox::insert`] for untrusted input.
    fn from_iter<I: IntoIterator<Item = (Assertion, u64)>>(iter: I) -> Self {
        let mut abox = BagABox::new();
        for (a, m) in iter {
            abox.insert(a, m).expect("ABox multiplicity overflow");
        }
        abox
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BagOntology {
    pub tbox: TBox,
    pub abox: BagABox,
}

impl BagOntology {
    pub fn new(tbox: TBox, abox: BagABox) -> Self {
        BagOntology { tbox, abox }
    }

    pub fn is_satisfiable(&self) -> bool {
        is_satisfiable(self)
    }
}

/// Bag satisfiability, decided on the set support of the ABox.
pub fn is_satisfiable(k: &BagOntology) -> bool {
    let tbox = &k.tbox;
    if !tbox.has_disjointness() {
        return true;
    }

    let mut seeds: BTreeMap<&str, BTreeSet<Concept>> = BTreeMap::new();
    let mut pairs: BTreeMap<(&str, &str), BTreeSet<Role>> = BTreeMap::new();
    for (assertion, _) in k.abox.iter() {
        match assertion {
            Assertion::Concept { concept, individual } => {
                seeds
                    .entry(individual)
                    .or_default()
                    .insert(Concept::atomic(concept.clone()));
            }
            Assertion::Role { role, subject, object } => {
                let p = Role::atomic(role.clone());
                seeds.entry(subject).or_default().insert(Concept::Exists(p.clone()));
                seeds.entry(object).or_default().insert(Concept::Exists(p.inv()));
                pairs.entry((subject, object)).or_default().insert(p.clone());
                pairs.entry((object, subject)).or_default().insert(p.inv());
            }
        }
    }

    // (a) named elements
    let mut frontier: Vec<Role> = Vec::new();
    for concepts in seeds.values() {
        let closure = tbox.concept_closure_of(concepts);
        if tbox.concept_disjoint(&closure) {
            return false;
        }
        frontier.extend(closure.into_iter().filter_map(|c| match c {
            Concept::Exists(r) => Some(r),
            Concept::Atomic(_) => None,
        }));
    }

    // (b) asserted pairs
    for roles in pairs.values() {
        let closure: BTreeSet<Role> = roles.iter().flat_map(|r| tbox.role_subsumers(r)).collect();
        if tbox.role_disjoint(&closure) {
            return false;
        }
    }

    // (c) anonymous successors generated through activated roles
    let mut activated: BTreeSet<Role> = BTreeSet::new();
    while let Some(role) = frontier.pop() {
        if !activated.insert(role.clone()) {
            continue;
        }
        let closure = tbox.subsumers(&Concept::Exists(role.inv()));
        if tbox.concept_disjoint(&closure) {
            return false;
        }
        if tbox.role_disjoint(&tbox.role_subsumers(&role)) {
            return false;
        }
        for c in closure {
            if let Concept::Exists(next) = c {
                if !activated.contains(&next) {
                    frontier.push(next);
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(name: &str) -> Concept {
        Concept::atomic(name)
    }

    fn ex(name: &str) -> Concept {
        Concept::Exists(Role::atomic(name))
    }

    fn ex_inv(name: &str) -> Concept {
        Concept::Exists(Role::inverse_of(name))
    }

    fn t_ex() -> TBox {
        TBox::core([
            Axiom::ConceptIncl(a("SalEmp"), a("Emp")),
            Axiom::ConceptIncl(a("ITEmp"), a("Emp")),
            Axiom::ConceptIncl(a("Emp"), ex("hasMngr")),
            Axiom::ConceptIncl(ex_inv("hasMngr"), a("Mngr")),
        ])
        .unwrap()
    }

    #[test]
    fn inverse_of_inverse_is_base() {
        let r = Role::atomic("P");
        assert_eq!(r.inv().inv(), r);
        assert_eq!(r.inv().to_string(), "P-");
    }

    #[test]
    fn running_example_entailments() {
        let t = t_ex();
        assert!(t.entails_concept(&a("SalEmp"), &a("Emp")));
        assert!(t.entails_concept(&a("SalEmp"), &ex("hasMngr")));
        assert!(!t.entails_concept(&a("Emp"), &a("SalEmp")));
        assert!(t.entails_concept(&a("Unknown"), &a("Unknown")));
        assert!(!t.entails_concept(&a("Unknown"), &a("Emp")));
    }

    #[test]
    fn two_step_reachability() {
        let t = TBox::core([Axiom::ConceptIncl(a("A"), a("B")), Axiom::ConceptIncl(a("B"), ex("P"))]).unwrap();
        assert!(t.entails_concept(&a("A"), &ex("P")));
        assert_eq!(t.subsumees(&ex("P")), BTreeSet::from([a("A"), a("B"), ex("P")]));
    }

    #[test]
    fn role_entailment_respects_inverses() {
        let t = TBox::new(TBoxKind::R, [Axiom::RoleIncl(Role::atomic("R"), Role::atomic("S"))]).unwrap();
        assert!(t.entails_role(&Role::inverse_of("R"), &Role::inverse_of("S")));
        assert!(!t.entails_role(&Role::atomic("S"), &Role::atomic("R")));
        assert!(TBox::empty().entails_role(&Role::atomic("R"), &Role::atomic("R")));
        assert!(t.entails_concept(&ex("R"), &ex("S")));
        assert!(t.entails_concept(&ex_inv("R"), &ex_inv("S")));
    }

    #[test]
    fn core_rejects_role_axioms() {
        let err = TBox::core([Axiom::RoleDisj(Role::atomic("R"), Role::atomic("S"))]).unwrap_err();
        assert!(matches!(err, Error::RoleAxiomInCore(_)));
    }

    #[test]
    fn satisfiability_examples() {
        let abox: BagABox = [
            (Assertion::concept("SalEmp", "Lee"), 3),
            (Assertion::concept("ITEmp", "Lee"), 2),
            (Assertion::role("hasMngr", "Lee", "Hill"), 2),
        ]
        .into_iter()
        .collect();
        assert!(is_satisfiable(&BagOntology::new(t_ex(), abox.clone())));
        assert!(is_satisfiable(&BagOntology::new(TBox::empty(), abox)));

        let disj = TBox::core([Axiom::ConceptDisj(a("A"), a("B"))]).unwrap();
        let clash: BagABox = [(Assertion::concept("A", "a"), 1), (Assertion::concept("B", "a"), 1)]
            .into_iter()
            .collect();
        assert!(!is_satisfiable(&BagOntology::new(disj.clone(), clash)));
        let apart: BagABox = [(Assertion::concept("A", "a"), 1), (Assertion::concept("B", "b"), 1)]
            .into_iter()
            .collect();
        assert!(is_satisfiable(&BagOntology::new(disj, apart)));
    }

    #[test]
    fn anonymous_clash_is_detected() {
        // a needs an R-successor, which is forced into both B and C.
        let t = TBox::core([
            Axiom::ConceptIncl(a("A"), ex("R")),
            Axiom::ConceptIncl(ex_inv("R"), a("B")),
            Axiom::ConceptIncl(ex_inv("R"), a("C")),
            Axiom::ConceptDisj(a("B"), a("C")),
        ])
        .unwrap();
        let abox: BagABox = [(Assertion::concept("A", "a"), 1)].into_iter().collect();
        assert!(!is_satisfiable(&BagOntology::new(t.clone(), abox)));
        assert!(is_satisfiable(&BagOntology::new(t, BagABox::new())));
    }

    #[test]
    fn role_disjointness_on_asserted_pairs() {
        let t = TBox::new(TBoxKind::R, [Axiom::RoleDisj(Role::atomic("P"), Role::inverse_of("S"))]).unwrap();
        let abox: BagABox = [(Assertion::role("P", "a", "b"), 1), (Assertion::role("S", "b", "a"), 1)]
            .into_iter()
            .collect();
        assert!(!is_satisfiable(&BagOntology::new(t, abox)));
    }

    #[test]
    fn abox_sums_repeated_insertions() {
        let mut abox = BagABox::new();
        abox.insert(Assertion::concept("A", "a"), 2).unwrap();
        abox.insert(Assertion::concept("A", "a"), 3).unwrap();
        abox.insert(Assertion::concept("B", "a"), 0).unwrap();
        assert_eq!(abox.multiplicity(&Assertion::concept("A", "a")), 5);
        assert_eq!(abox.len(), 1);
        assert!(abox.insert(Assertion::concept("A", "a"), u64::MAX).is_err());
    }
}
