//! Bag evaluation of conjunctive queries by backtracking over extensions.
//!
//! Variables are grouped into equality classes, one slot per class. Every
//! slot of a safe query is bound by some concept or role atom, so iterating
//! over extension entries enumerates exactly the valuations with a non-zero
//! product.

use std::collections::{BTreeMap, BTreeSet};

use super::{AnswerBag, Id, IndexedInterpretation};
use crate::chase::{BagInterpretation, ChaseResult};
use crate::error::{checked_add, checked_mul, Result};
use crate::query::{QueryAtom, Term, CQ};

// Sentinel for an individual that does not occur in the interpretation.
const ABSENT: Id = Id::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Domain {
    Any,
    Named,
    Anon,
}

impl Domain {
    fn meet(self, other: Domain) -> Option<Domain> {
        match (self, other) {
            (Domain::Any, d) | (d, Domain::Any) => Some(d),
            (a, b) if a == b => Some(a),
            _ => None,
        }
    }
}

#[derive(Debug)]
enum Step {
    Concept(String, usize),
    Role(String, usize, usize),
}

#[derive(Debug)]
struct Plan {
    domain: Vec<Domain>,
    fixed: Vec<Option<Id>>,
    steps: Vec<Step>,
    neqs: Vec<(usize, usize)>,
    answers: Vec<usize>,
}

fn plan(q: &CQ, idx: &IndexedInterpretation, anon_vars: Option<&BTreeSet<String>>) -> Option<Plan> {
    let classes = q.eq_classes();
    let reps: Vec<&Term> = classes.representatives().collect();
    let slot_of: BTreeMap<&Term, usize> = reps.iter().enumerate().map(|(n, t)| (*t, n)).collect();
    let slot = |t: &Term| slot_of[classes.representative(t)];

    let mut domain = vec![Domain::Any; reps.len()];
    let mut fixed = vec![None; reps.len()];
    for (n, rep) in reps.iter().enumerate() {
        let mut consts = classes.class_of(rep).iter().filter_map(Term::as_const);
        if let Some(c) = consts.next() {
            if consts.next().is_some() {
                return None;
            }
            fixed[n] = Some(idx.named.get(c).copied().unwrap_or(ABSENT));
            domain[n] = Domain::Named;
        }
    }
    let answer_set: BTreeSet<&str> = q.answer_vars().iter().map(String::as_str).collect();
    for v in q.vars() {
        let want = if answer_set.contains(v.as_str()) {
            Domain::Named
        } else {
            match anon_vars {
                None => Domain::Any,
                Some(z) if z.contains(&v) => Domain::Anon,
                Some(_) => Domain::Named,
            }
        };
        let n = slot(&Term::Var(v));
        domain[n] = domain[n].meet(want)?;
    }

    let mut neqs = Vec::new();
    for atom in q.atoms() {
        if let QueryAtom::Neq(a, b) = atom {
            let (sa, sb) = (slot(a), slot(b));
            if sa == sb {
                return None;
            }
            neqs.push((sa, sb));
        }
    }

    let mut pending: Vec<Step> = q
        .relational_atoms()
        .map(|a| match a {
            QueryAtom::Concept(name, t) => Step::Concept(name.clone(), slot(t)),
            QueryAtom::Role(name, s, o) => Step::Role(name.clone(), slot(s), slot(o)),
            _ => unreachable!("relational atoms only"),
        })
        .collect();
    let mut bound: Vec<bool> = fixed.iter().map(Option::is_some).collect();
    let mut steps = Vec::with_capacity(pending.len());
    while !pending.is_empty() {
        let cost = |step: &Step| -> (usize, usize) {
            match step {
                Step::Concept(name, s) => (usize::from(!bound[*s]), idx.concepts.get(name).map_or(0, |e| e.len())),
                Step::Role(name, s, o) => {
                    let free = usize::from(!bound[*s]) + usize::from(!bound[*o] && o != s);
                    (free, idx.roles.get(name).map_or(0, |e| e.pairs.len()))
                }
            }
        };
        let best = (0..pending.len())
            .min_by_key(|&n| cost(&pending[n]))
            .expect("non-empty");
        let step = pending.swap_remove(best);
        match &step {
            Step::Concept(_, s) => bound[*s] = true,
            Step::Role(_, s, o) => {
                bound[*s] = true;
                bound[*o] = true;
            }
        }
        steps.push(step);
    }

    let answers = q.answer_vars().iter().map(|v| slot(&Term::Var(v.clone()))).collect();
    Some(Plan {
        domain,
        fixed,
        steps,
        neqs,
        answers,
    })
}

struct Search<'a> {
    plan: &'a Plan,
    idx: &'a IndexedInterpretation,
    assignment: Vec<Option<Id>>,
    out: BTreeMap<Vec<Id>, u64>,
}

impl Search<'_> {
    fn fits(&self, slot: usize, id: Id) -> bool {
        match self.plan.domain[slot] {
            Domain::Any => true,
            Domain::Named => self.idx.is_named(id),
            Domain::Anon => !self.idx.is_named(id),
        }
    }

    fn run(&mut self, depth: usize, product: u64) -> Result<()> {
        let idx = self.idx;
        let Some(step) = self.plan.steps.get(depth) else {
            return self.leaf(product);
        };
        match step {
            Step::Concept(name, s) => {
                let s = *s;
                if let Some(id) = self.assignment[s] {
                    let m = if id == ABSENT { 0 } else { self.idx.concept(name, id) };
                    if m > 0 {
                        self.run(depth + 1, checked_mul(product, m, "evaluating a query")?)?;
                    }
                } else if let Some(ext) = idx.concepts.get(name) {
                    for (&id, &m) in ext {
                        if self.fits(s, id) {
                            self.assignment[s] = Some(id);
                            self.run(depth + 1, checked_mul(product, m, "evaluating a query")?)?;
                        }
                    }
                    self.assignment[s] = None;
                }
            }
            Step::Role(name, s, o) => {
                let (s, o) = (*s, *o);
                let Some(ext) = idx.roles.get(name) else {
                    return Ok(());
                };
                match (self.assignment[s], self.assignment[o]) {
                    (Some(a), Some(b)) => {
                        let m = ext.lookup.get(&(a, b)).copied().unwrap_or(0);
                        if m > 0 {
                            self.run(depth + 1, checked_mul(product, m, "evaluating a query")?)?;
                        }
                    }
                    (Some(a), None) => {
                        for &(b, m) in ext.by_subject.get(&a).map_or(&[][..], Vec::as_slice) {
                            if self.fits(o, b) {
                                self.assignment[o] = Some(b);
                                self.run(depth + 1, checked_mul(product, m, "evaluating a query")?)?;
                            }
                        }
                        self.assignment[o] = None;
                    }
                    (None, Some(b)) => {
                        for &(a, m) in ext.by_object.get(&b).map_or(&[][..], Vec::as_slice) {
                            if self.fits(s, a) {
                                self.assignment[s] = Some(a);
                                self.run(depth + 1, checked_mul(product, m, "evaluating a query")?)?;
                            }
                        }
                        self.assignment[s] = None;
                    }
                    (None, None) => {
                        for &(a, b, m) in &ext.pairs {
                            if s == o && a != b {
                                continue;
                            }
                            if self.fits(s, a) && self.fits(o, b) {
                                self.assignment[s] = Some(a);
                                self.assignment[o] = Some(b);
                                self.run(depth + 1, checked_mul(product, m, "evaluating a query")?)?;
                            }
                        }
                        self.assignment[s] = None;
                        self.assignment[o] = None;
                    }
                }
            }
        }
        Ok(())
    }

    fn leaf(&mut self, product: u64) -> Result<()> {
        for &(a, b) in &self.plan.neqs {
            if self.assignment[a] == self.assignment[b] {
                return Ok(());
            }
        }
        let mut tuple = Vec::with_capacity(self.plan.answers.len());
        for &slot in &self.plan.answers {
            match self.assignment[slot] {
                Some(id) if id != ABSENT && self.idx.is_named(id) => tuple.push(id),
                _ => return Ok(()),
            }
        }
        let entry = self.out.entry(tuple).or_insert(0);
        *entry = checked_add(*entry, product, "evaluating a query")?;
        Ok(())
    }
}

fn evaluate(q: &CQ, idx: &IndexedInterpretation, anon_vars: Option<&BTreeSet<String>>) -> Result<AnswerBag> {
    let mut bag = AnswerBag::new(q.arity());
    let Some(plan) = plan(q, idx, anon_vars) else {
        return Ok(bag);
    };
    let mut search = Search {
        plan: &plan,
        idx,
        assignment: plan.fixed.clone(),
        out: BTreeMap::new(),
    };
    search.run(0, 1)?;
    for (tuple, m) in search.out {
        let names = tuple.iter().map(|id| idx.name(*id).to_string()).collect();
        bag.insert(names, m)?;
    }
    Ok(bag)
}

/// Bag answers: the sum over valuations of the product of the multiplicities
/// of every atom image, repeated atoms counted separately. Inequality atoms,
/// when present, discard the valuations violating them.
pub fn eval_cq(q: &CQ, i: &BagInterpretation) -> Result<AnswerBag> {
    eval_cq_indexed(q, &IndexedInterpretation::new(i))
}

pub fn eval_cq_indexed(q: &CQ, idx: &IndexedInterpretation) -> Result<AnswerBag> {
    evaluate(q, idx, None)
}

/// Same as [`eval_cq`]; named separately for queries carrying inequalities.
pub fn eval_cq_neq(q: &CQ, i: &BagInterpretation) -> Result<AnswerBag> {
    eval_cq(q, i)
}

/// The share of [`eval_cq`] contributed by valuations sending exactly the
/// variables in `z` to anonymous elements.
pub fn eval_partitioned(q: &CQ, z: &BTreeSet<String>, chase: &ChaseResult) -> Result<AnswerBag> {
    eval_partitioned_indexed(q, z, &IndexedInterpretation::new(chase.union()))
}

pub fn eval_partitioned_indexed(q: &CQ, z: &BTreeSet<String>, idx: &IndexedInterpretation) -> Result<AnswerBag> {
    evaluate(q, idx, Some(z))
}
