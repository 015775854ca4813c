//! Realisability of variable sets in the anonymous part of the chase.

use std::collections::BTreeSet;
use std::fmt;

use crate::bagalg::eval_cq_neq;
use crate::chase::chase_unchecked;
use crate::error::Result;
use crate::ontology::{Assertion, BagABox, BagOntology, TBox, RESERVED_PREFIX};
use crate::par::Execution;
use crate::query::{
    equality_consistent, join_vars, linking_candidates, ma_connected_partition, outside_terms, subquery_atoms,
    QueryAtom, Term, CQ,
};

/// Which linking atom to use when several qualify. The rewriting does not
/// depend on the choice; the alternatives exist to test exactly that.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinkingChoice {
    #[default]
    Least,
    Greatest,
}

pub(crate) fn choose_linking(q: &CQ, z_prime: &BTreeSet<String>, choice: LinkingChoice) -> Result<QueryAtom> {
    let candidates = linking_candidates(q, z_prime);
    let pick = match choice {
        LinkingChoice::Least => candidates.first(),
        LinkingChoice::Greatest => candidates.last(),
    };
    pick.map(|a| (*a).clone())
        .ok_or_else(|| crate::Error::MissingLinkingAtom(join_vars(z_prime)))
}

pub fn fresh_anchor() -> String {
    format!("{RESERVED_PREFIX}a")
}

pub fn fresh_partner() -> String {
    format!("{RESERVED_PREFIX}b")
}

/// The Boolean probe query for one ma-connected subset and its two-individual
/// ABox.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Probe {
    pub subset: BTreeSet<String>,
    pub linking: QueryAtom,
    pub anchor: String,
    pub query: CQ,
    pub abox: BagABox,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProbeBuild {
    Probe(Probe),
    /// Two distinct individuals link the subset outward.
    MultipleAnchors(BTreeSet<Term>),
}

pub fn build_probe(q: &CQ, z_prime: &BTreeSet<String>) -> Result<ProbeBuild> {
    build_probe_with(q, z_prime, LinkingChoice::Least)
}

pub fn build_probe_with(q: &CQ, z_prime: &BTreeSet<String>, choice: LinkingChoice) -> Result<ProbeBuild> {
    let linking = choose_linking(q, z_prime, choice)?;
    let outside = outside_terms(q, z_prime);
    let individuals: BTreeSet<Term> = outside.iter().filter(|t| !t.is_var()).cloned().collect();
    if individuals.len() > 1 {
        return Ok(ProbeBuild::MultipleAnchors(individuals));
    }
    let anchor = individuals
        .iter()
        .next()
        .and_then(|t| t.as_const().map(str::to_string))
        .unwrap_or_else(fresh_anchor);
    let a = Term::Const(anchor.clone());

    let mut atoms: Vec<QueryAtom> = subquery_atoms(q, z_prime).into_iter().cloned().collect();
    for t in &outside {
        if t.is_var() {
            atoms.push(QueryAtom::eq(t.clone(), a.clone()));
        }
    }
    for z in z_prime {
        atoms.push(QueryAtom::neq(Term::var(z.clone()), a.clone()));
    }
    let query = CQ::from_parts(Vec::new(), atoms);

    let (role, subject, object) = match &linking {
        QueryAtom::Role(p, s, _) if !s.is_in(z_prime) => (p.clone(), anchor.clone(), fresh_partner()),
        QueryAtom::Role(p, _, _) => (p.clone(), fresh_partner(), anchor.clone()),
        _ => unreachable!("linking atoms are role atoms"),
    };
    let mut abox = BagABox::new();
    abox.insert(Assertion::role(role, subject, object), 1)?;
    Ok(ProbeBuild::Probe(Probe {
        subset: z_prime.clone(),
        linking,
        anchor,
        query,
        abox,
    }))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProbeOutcome {
    /// Value of the probe over the chase of its ABox.
    Evaluated(u64),
    MultipleAnchors(BTreeSet<Term>),
    /// The probe ABox clashes with the TBox.
    Unsatisfiable,
}

impl ProbeOutcome {
    pub fn is_realisable(&self) -> bool {
        matches!(self, ProbeOutcome::Evaluated(v) if *v >= 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeWitness {
    pub subset: BTreeSet<String>,
    pub probe: Option<Probe>,
    pub outcome: ProbeOutcome,
}

/// Checks one ma-connected subset by chasing its probe ABox.
pub fn probe_subset(tbox: &TBox, q: &CQ, z_prime: &BTreeSet<String>, choice: LinkingChoice) -> Result<ProbeWitness> {
    let probe = match build_probe_with(q, z_prime, choice)? {
        ProbeBuild::MultipleAnchors(inds) => {
            return Ok(ProbeWitness {
                subset: z_prime.clone(),
                probe: None,
                outcome: ProbeOutcome::MultipleAnchors(inds),
            })
        }
        ProbeBuild::Probe(p) => p,
    };
    let k = BagOntology::new(tbox.clone(), probe.abox.clone());
    let outcome = if !k.is_satisfiable() {
        ProbeOutcome::Unsatisfiable
    } else {
        let depth = probe.query.relational_atom_count();
        let model = chase_unchecked(tbox, &probe.abox, depth, Execution::Sequential);
        ProbeOutcome::Evaluated(eval_cq_neq(&probe.query, model.union())?.get::<&str>(&[]))
    };
    Ok(ProbeWitness {
        subset: z_prime.clone(),
        probe: Some(probe),
        outcome,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Realisable,
    NotEqualityConsistent,
    UnrealisableSubset(BTreeSet<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RealisabilityCertificate {
    pub z: BTreeSet<String>,
    pub verdict: Verdict,
    pub subsets: Vec<BTreeSet<String>>,
    pub witnesses: Vec<ProbeWitness>,
}

impl RealisabilityCertificate {
    pub fn is_realisable(&self) -> bool {
        self.verdict == Verdict::Realisable
    }

    pub(crate) fn from_witnesses(
        z: &BTreeSet<String>,
        subsets: Vec<BTreeSet<String>>,
        witnesses: Vec<ProbeWitness>,
    ) -> Self {
        let verdict = witnesses
            .iter()
            .find(|w| !w.outcome.is_realisable())
            .map_or(Verdict::Realisable, |w| Verdict::UnrealisableSubset(w.subset.clone()));
        RealisabilityCertificate {
            z: z.clone(),
            verdict,
            subsets,
            witnesses,
        }
    }

    pub(crate) fn inconsistent(z: &BTreeSet<String>) -> Self {
        RealisabilityCertificate {
            z: z.clone(),
            verdict: Verdict::NotEqualityConsistent,
            subsets: Vec::new(),
            witnesses: Vec::new(),
        }
    }
}

pub(crate) fn fmt_set(vars: &BTreeSet<String>) -> String {
    format!("{{{}}}", join_vars(vars))
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Realisable => f.write_str("realisable"),
            Verdict::NotEqualityConsistent => f.write_str("not equality-consistent"),
            Verdict::UnrealisableSubset(s) => write!(f, "unrealisable subset {}", fmt_set(s)),
        }
    }
}

impl fmt::Display for ProbeOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbeOutcome::Evaluated(v) => write!(f, "{v}"),
            ProbeOutcome::MultipleAnchors(inds) => {
                let names: Vec<String> = inds.iter().map(Term::to_string).collect();
                write!(f, "several anchors {}", names.join(", "))
            }
            ProbeOutcome::Unsatisfiable => f.write_str("probe ABox unsatisfiable"),
        }
    }
}

/// Decides whether `z` can be mapped into the anonymous part: it must be
/// equality-consistent and every ma-connected subset's probe must match.
pub fn is_realisable(tbox: &TBox, q: &CQ, z: &BTreeSet<String>) -> Result<RealisabilityCertificate> {
    tbox.ensure_core()?;
    if !equality_consistent(q, z) {
        return Ok(RealisabilityCertificate::inconsistent(z));
    }
    let subsets = ma_connected_partition(q, z);
    let witnesses = subsets
        .iter()
        .map(|s| probe_subset(tbox, q, s, LinkingChoice::Least))
        .collect::<Result<Vec<_>>>()?;
    Ok(RealisabilityCertificate::from_witnesses(z, subsets, witnesses))
}
