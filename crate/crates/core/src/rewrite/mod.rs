//! Compilation of rooted CQs over DL-Lite_core TBoxes into BALG queries
//! that evaluate directly over the ABox.
//!
//! Each subset `z` of the existential variables stands for the valuations
//! sending exactly `z` into the anonymous part of the canonical model.
//! Realisable subsets are collapsed to their linking atoms and compiled by
//! chasing concept and role atoms back to the ABox; the branches are summed.

mod realise;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

pub use realise::{
    build_probe, build_probe_with, fresh_anchor, fresh_partner, is_realisable, probe_subset, LinkingChoice, Probe,
    ProbeBuild, ProbeOutcome, ProbeWitness, RealisabilityCertificate, Verdict,
};

use crate::bagalg::{BalgDocument, BalgQuery};
use crate::error::{Error, Result};
use crate::ontology::{Concept, Role, TBox};
use crate::par::{self, Execution};
use crate::query::{equality_consistent, ma_connected_partition, outside_terms, subquery_atoms, QueryAtom, Term, CQ};

/// Upper bound on existential variables; branches are enumerated over all
/// their subsets.
pub const MAX_EXISTENTIALS: usize = 20;

/// `q_z`: each ma-connected `z' ⊆ z` replaced by its linking atom plus
/// equalities identifying the outside terms it touches.
pub fn collapse(q: &CQ, z: &BTreeSet<String>) -> Result<CQ> {
    collapse_with(q, z, LinkingChoice::Least)
}

pub fn collapse_with(q: &CQ, z: &BTreeSet<String>, choice: LinkingChoice) -> Result<CQ> {
    let mut atoms: Vec<QueryAtom> = q.atoms().to_vec();
    for z_prime in ma_connected_partition(q, z) {
        let alpha = realise::choose_linking(q, &z_prime, choice)?;
        let removed = subquery_atoms(q, &z_prime);
        for atom in removed {
            let at = atoms.iter().position(|a| a == atom).expect("atom of q");
            atoms.swap_remove(at);
        }
        let anchor_term = match &alpha {
            QueryAtom::Role(_, s, o) => {
                if s.is_in(&z_prime) {
                    o.clone()
                } else {
                    s.clone()
                }
            }
            _ => unreachable!("linking atoms are role atoms"),
        };
        for t in outside_terms(q, &z_prime) {
            if t != anchor_term {
                atoms.push(QueryAtom::eq(t, anchor_term.clone()));
            }
        }
        atoms.push(alpha);
    }
    Ok(CQ::from_parts(q.answer_vars().to_vec(), atoms))
}

struct Fresh {
    taken: BTreeSet<String>,
    next: usize,
}

impl Fresh {
    fn var(&mut self) -> String {
        loop {
            self.next += 1;
            let name = format!("_f{}", self.next);
            if self.taken.insert(name.clone()) {
                return name;
            }
        }
    }
}

fn zeta(c: &Concept, t: &Term, fresh: &mut Fresh) -> BalgQuery {
    match c {
        Concept::Atomic(a) => BalgQuery::atom(a.clone(), vec![t.clone()]),
        Concept::Exists(r) => {
            let f = fresh.var();
            let terms = if r.is_inverse() {
                vec![Term::var(f.clone()), t.clone()]
            } else {
                vec![t.clone(), Term::var(f.clone())]
            };
            BalgQuery::project(vec![f], BalgQuery::atom(r.name().to_string(), terms))
        }
    }
}

fn zeta_union(tbox: &TBox, c: &Concept, t: &Term, fresh: &mut Fresh) -> BalgQuery {
    let parts: Vec<BalgQuery> = tbox.subsumees(c).iter().map(|d| zeta(d, t, fresh)).collect();
    BalgQuery::fold(parts, BalgQuery::max_union).expect("subsumees include the concept itself")
}

/// Makes every equality class containing a variable bound by a variable
/// occurrence in a concept or role atom, so that equality filters always
/// have a bound side. A class bound only through an individual gets one
/// occurrence of that individual replaced by the class's least variable.
fn bind_classes(q: &CQ) -> Vec<QueryAtom> {
    let classes = q.eq_classes();
    let mut atoms: Vec<QueryAtom> = q.atoms().to_vec();
    let bound_vars: BTreeSet<&String> = q
        .relational_atoms()
        .flat_map(|a| a.terms())
        .filter_map(|t| match t {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        })
        .collect();
    for class in classes.classes() {
        let vars: Vec<&str> = class.iter().filter_map(Term::as_var).collect();
        let Some(first_var) = vars.first() else {
            continue;
        };
        if vars.iter().any(|v| bound_vars.contains(&v.to_string())) {
            continue;
        }
        let replacement = Term::var(*first_var);
        'search: for atom in atoms.iter_mut() {
            let slots: Vec<&mut Term> = match atom {
                QueryAtom::Concept(_, t) => vec![t],
                QueryAtom::Role(_, s, o) => vec![s, o],
                _ => continue,
            };
            for slot in slots {
                if !slot.is_var() && class.contains(slot) {
                    *slot = replacement.clone();
                    break 'search;
                }
            }
        }
    }
    atoms
}

/// Compiles a collapsed query into a BALG query over the ABox vocabulary.
pub fn chase_back(q_z: &CQ, z: &BTreeSet<String>, tbox: &TBox) -> Result<BalgQuery> {
    tbox.ensure_core()?;
    let mut fresh = Fresh {
        taken: q_z.vars(),
        next: 0,
    };
    let atoms = bind_classes(q_z);
    let mut parts: Vec<BalgQuery> = Vec::new();
    for atom in &atoms {
        match atom {
            QueryAtom::Concept(a, t) => {
                parts.push(zeta_union(tbox, &Concept::atomic(a.clone()), t, &mut fresh));
            }
            QueryAtom::Role(p, s, o) if o.is_in(z) || s.is_in(z) => {
                let (t, role) = if o.is_in(z) {
                    (s, Role::atomic(p.clone()))
                } else {
                    (o, Role::inverse_of(p.clone()))
                };
                let exists = Concept::Exists(role);
                let all = zeta_union(tbox, &exists, t, &mut fresh);
                let own = zeta(&exists, t, &mut fresh);
                parts.push(BalgQuery::diff(all, own));
            }
            QueryAtom::Role(p, s, o) => parts.push(BalgQuery::atom(p.clone(), vec![s.clone(), o.clone()])),
            QueryAtom::Eq(..) => {}
            QueryAtom::Neq(..) => {
                return Err(Error::IllFormedQuery("inequalities cannot be compiled".into()));
            }
        }
    }
    let mut body = BalgQuery::fold(parts, BalgQuery::join)
        .ok_or_else(|| Error::IllFormedQuery("query without concept or role atoms".into()))?;
    let mut bound = body.answer_vars()?;

    let mut contradictory = false;
    for class in q_z.eq_classes().classes().filter(|c| c.len() > 1) {
        let constants: BTreeSet<&Term> = class.iter().filter(|t| !t.is_var()).collect();
        contradictory |= constants.len() > 1;
        let Some(rep) = class.iter().filter_map(Term::as_var).find(|v| bound.contains(*v)) else {
            if class.iter().any(Term::is_var) {
                return Err(Error::IllFormedQuery("equality class without a bound variable".into()));
            }
            continue;
        };
        let rep = rep.to_string();
        for t in class {
            if t.as_var() == Some(rep.as_str()) {
                continue;
            }
            if let Term::Var(v) = t {
                bound.insert(v.clone());
            }
            body = BalgQuery::eq_filter(body, rep.clone(), t.clone());
        }
    }
    if contradictory {
        body = BalgQuery::diff(body.clone(), body);
    }

    let answers: BTreeSet<&String> = q_z.answer_vars().iter().collect();
    let project: Vec<String> = bound.iter().filter(|v| !answers.contains(v)).cloned().collect();
    Ok(if project.is_empty() {
        body
    } else {
        BalgQuery::project(project, body)
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Branch {
    pub z: BTreeSet<String>,
    pub collapsed: CQ,
    pub compiled: BalgQuery,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rewriting {
    pub source: CQ,
    pub tbox: TBox,
    pub certificates: Vec<RealisabilityCertificate>,
    pub branches: Vec<Branch>,
    pub combined: BalgQuery,
}

impl Rewriting {
    /// The combined query with answer columns in the source query's order.
    pub fn document(&self) -> BalgDocument {
        BalgDocument::with_order(self.combined.clone(), self.source.answer_vars().to_vec())
            .expect("rewriting answers the source variables")
    }

    /// Per-subset table: verdict, ma-connected subsets, linking atoms and
    /// probe values.
    pub fn explain(&self) -> String {
        let mut out = String::new();
        for cert in &self.certificates {
            let _ = writeln!(out, "z = {}: {}", realise::fmt_set(&cert.z), cert.verdict);
            for w in &cert.witnesses {
                let _ = write!(out, "  subset {}", realise::fmt_set(&w.subset));
                if let Some(p) = &w.probe {
                    let _ = write!(out, "  link {}  anchor {}", p.linking, p.anchor);
                }
                let _ = writeln!(out, "  probe {}", w.outcome);
            }
        }
        out
    }
}

impl fmt::Display for Rewriting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.document().to_text())
    }
}

/// Subsets of `vars` by size, then lexicographically.
pub fn canonical_subsets(vars: &BTreeSet<String>) -> Vec<BTreeSet<String>> {
    let items: Vec<&String> = vars.iter().collect();
    let mut out: Vec<BTreeSet<String>> = (0u64..(1u64 << items.len()))
        .map(|mask| {
            items
                .iter()
                .enumerate()
                .filter(|(n, _)| mask & (1 << n) != 0)
                .map(|(_, v)| (*v).clone())
                .collect()
        })
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RewriteOptions {
    pub exec: Execution,
    pub linking: LinkingChoice,
}

pub fn rewrite(q: &CQ, tbox: &TBox) -> Result<Rewriting> {
    rewrite_with(q, tbox, RewriteOptions::default())
}

pub fn rewrite_with(q: &CQ, tbox: &TBox, options: RewriteOptions) -> Result<Rewriting> {
    tbox.ensure_core()?;
    q.ensure_rooted()?;
    if q.has_inequalities() {
        return Err(Error::IllFormedQuery("inequalities cannot be compiled".into()));
    }
    let y = q.existential_vars();
    if y.len() > MAX_EXISTENTIALS {
        return Err(Error::TooManyExistentials(y.len()));
    }

    let subsets = canonical_subsets(&y);
    let partitions: Vec<Option<Vec<BTreeSet<String>>>> = subsets
        .iter()
        .map(|z| equality_consistent(q, z).then(|| ma_connected_partition(q, z)))
        .collect();
    // Probes depend on the ma-connected subset only, so each is run once.
    let distinct: Vec<BTreeSet<String>> = partitions
        .iter()
        .flatten()
        .flatten()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let probed = par::map(options.exec, &distinct, |s| probe_subset(tbox, q, s, options.linking));
    let mut witnesses: BTreeMap<BTreeSet<String>, ProbeWitness> = BTreeMap::new();
    for (s, w) in distinct.into_iter().zip(probed) {
        witnesses.insert(s, w?);
    }

    let mut certificates = Vec::with_capacity(subsets.len());
    let mut realisable = Vec::new();
    for (z, partition) in subsets.iter().zip(partitions) {
        let cert = match partition {
            None => RealisabilityCertificate::inconsistent(z),
            Some(parts) => {
                let ws = parts.iter().map(|s| witnesses[s].clone()).collect();
                RealisabilityCertificate::from_witnesses(z, parts, ws)
            }
        };
        if cert.is_realisable() {
            realisable.push(z.clone());
        }
        certificates.push(cert);
    }
    debug_assert!(realisable.first().is_some_and(BTreeSet::is_empty));

    let compiled = par::map(options.exec, &realisable, |z| -> Result<Branch> {
        let collapsed = collapse_with(q, z, options.linking)?;
        let compiled = chase_back(&collapsed, z, tbox)?;
        Ok(Branch {
            z: z.clone(),
            collapsed,
            compiled,
        })
    });
    let branches: Vec<Branch> = compiled.into_iter().collect::<Result<_>>()?;
    if !branches.first().is_some_and(|b| b.z.is_empty()) {
        return Err(Error::IllFormedQuery("missing branch for the empty subset".into()));
    }
    let combined = BalgQuery::fold(branches.iter().map(|b| b.compiled.clone()), BalgQuery::arith_union)
        .expect("at least one branch");
    combined.check()?;
    Ok(Rewriting {
        source: q.clone(),
        tbox: tbox.clone(),
        certificates,
        branches,
        combined,
    })
}
