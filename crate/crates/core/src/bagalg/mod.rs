//! Bag answers and the evaluators producing them.

pub mod balg;
mod cq;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

pub use balg::{eval_balg, eval_balg_indexed, eval_balg_ordered, parse_balg, BalgDocument, BalgQuery};
pub use cq::{eval_cq, eval_cq_indexed, eval_cq_neq, eval_partitioned, eval_partitioned_indexed};

use crate::chase::{BagInterpretation, Element};
use crate::error::{checked_add, Error, Result};

/// A finite bag of tuples of individuals. Zero entries are never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnswerBag {
    arity: usize,
    entries: BTreeMap<Vec<String>, u64>,
}

impl AnswerBag {
    pub fn new(arity: usize) -> Self {
        AnswerBag {
            arity,
            entries: BTreeMap::new(),
        }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn insert(&mut self, tuple: Vec<String>, m: u64) -> Result<()> {
        if tuple.len() != self.arity {
            return Err(Error::TupleArity {
                expected: self.arity,
                found: tuple.len(),
            });
        }
        if m == 0 {
            return Ok(());
        }
        let slot = self.entries.entry(tuple).or_insert(0);
        *slot = checked_add(*slot, m, "summing answer multiplicities")?;
        Ok(())
    }

    pub fn get<S: AsRef<str>>(&self, tuple: &[S]) -> u64 {
        let key: Vec<String> = tuple.iter().map(|s| s.as_ref().to_string()).collect();
        self.entries.get(&key).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<String>, u64)> {
        self.entries.iter().map(|(t, m)| (t, *m))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Tuples with multiplicity at least one, as a set.
    pub fn support(&self) -> Vec<Vec<String>> {
        self.entries.keys().cloned().collect()
    }

    pub fn to_text(&self) -> String {
        format!("{self}\n")
    }

    /// The first tuple, in tuple order, whose multiplicities differ.
    pub fn first_difference(&self, other: &AnswerBag) -> Option<(Vec<String>, u64, u64)> {
        let mut keys: Vec<&Vec<String>> = self.entries.keys().chain(other.entries.keys()).collect();
        keys.sort();
        keys.dedup();
        keys.into_iter().find_map(|t| {
            let a = self.entries.get(t).copied().unwrap_or(0);
            let b = other.entries.get(t).copied().unwrap_or(0);
            (a != b).then(|| (t.clone(), a, b))
        })
    }
}

pub fn format_tuple(tuple: &[String]) -> String {
    format!("({})", tuple.join(","))
}

impl fmt::Display for AnswerBag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return f.write_str("EMPTY");
        }
        for (idx, (tuple, m)) in self.entries.iter().enumerate() {
            if idx > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{} {m}", format_tuple(tuple))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BagOp {
    Intersection,
    MaxUnion,
    ArithUnion,
    Difference,
}

/// Pointwise min, max, sum or truncated difference.
pub fn bag_ops(op: BagOp, b1: &AnswerBag, b2: &AnswerBag) -> Result<AnswerBag> {
    if b1.arity != b2.arity {
        return Err(Error::ArityMismatch(b1.arity, b2.arity));
    }
    let mut out = AnswerBag::new(b1.arity);
    let mut keys: Vec<&Vec<String>> = b1.entries.keys().chain(b2.entries.keys()).collect();
    keys.sort();
    keys.dedup();
    for t in keys {
        let a = b1.entries.get(t).copied().unwrap_or(0);
        let b = b2.entries.get(t).copied().unwrap_or(0);
        let m = match op {
            BagOp::Intersection => a.min(b),
            BagOp::MaxUnion => a.max(b),
            BagOp::ArithUnion => checked_add(a, b, "taking an arithmetic union")?,
            BagOp::Difference => a.saturating_sub(b),
        };
        out.insert(t.clone(), m)?;
    }
    Ok(out)
}

pub(crate) type Id = u32;

#[derive(Debug, Default)]
pub(crate) struct RoleIndex {
    pub pairs: Vec<(Id, Id, u64)>,
    pub by_subject: HashMap<Id, Vec<(Id, u64)>>,
    pub by_object: HashMap<Id, Vec<(Id, u64)>>,
    pub lookup: HashMap<(Id, Id), u64>,
}

/// An interpretation with elements interned to dense ids.
#[derive(Debug)]
pub struct IndexedInterpretation {
    pub(crate) elements: Vec<Element>,
    pub(crate) named: HashMap<String, Id>,
    pub(crate) concepts: HashMap<String, HashMap<Id, u64>>,
    pub(crate) roles: HashMap<String, RoleIndex>,
}

impl IndexedInterpretation {
    pub fn new(i: &BagInterpretation) -> Self {
        let elements: Vec<Element> = i.domain().iter().cloned().collect();
        let ids: HashMap<Element, Id> = elements.iter().enumerate().map(|(n, e)| (e.clone(), n as Id)).collect();
        let named = elements
            .iter()
            .enumerate()
            .filter_map(|(n, e)| e.name().map(|s| (s.to_string(), n as Id)))
            .collect();
        let concepts = i
            .concept_exts()
            .map(|(name, ext)| (name.clone(), ext.iter().map(|(e, m)| (ids[e], *m)).collect()))
            .collect();
        let roles = i
            .role_exts()
            .map(|(name, ext)| {
                let mut idx = RoleIndex::default();
                for ((s, o), m) in ext {
                    let (s, o) = (ids[s], ids[o]);
                    idx.pairs.push((s, o, *m));
                    idx.by_subject.entry(s).or_default().push((o, *m));
                    idx.by_object.entry(o).or_default().push((s, *m));
                    idx.lookup.insert((s, o), *m);
                }
                (name.clone(), idx)
            })
            .collect();
        IndexedInterpretation {
            elements,
            named,
            concepts,
            roles,
        }
    }

    pub(crate) fn is_named(&self, id: Id) -> bool {
        self.elements[id as usize].is_named()
    }

    pub(crate) fn name(&self, id: Id) -> &str {
        self.elements[id as usize].name().expect("named element")
    }

    pub(crate) fn concept(&self, name: &str, id: Id) -> u64 {
        self.concepts
            .get(name)
            .and_then(|ext| ext.get(&id))
            .copied()
            .unwrap_or(0)
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }
}
