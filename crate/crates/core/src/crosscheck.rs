//! Runs the chase and the rewriting side by side and compares the bags.

use std::fmt;

use crate::bagalg::{eval_cq, format_tuple, AnswerBag, BalgQuery};
use crate::chase::{chase_unchecked, required_depth, BagInterpretation};
use crate::error::{Error, Result};
use crate::generate;
use crate::ontology::BagOntology;
use crate::par::{self, Execution};
use crate::query::CQ;
use crate::rewrite::{rewrite_with, RewriteOptions, Rewriting};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Agree(AnswerBag),
    Differ {
        tuple: Vec<String>,
        by_chase: u64,
        by_rewrite: u64,
    },
    Error(Error),
}

impl Outcome {
    pub fn passed(&self) -> bool {
        matches!(self, Outcome::Agree(_))
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Agree(bag) => write!(f, "PASS\n{bag}"),
            Outcome::Differ {
                tuple,
                by_chase,
                by_rewrite,
            } => write!(
                f,
                "FAIL {}: chase {by_chase}, rewrite {by_rewrite}",
                format_tuple(tuple)
            ),
            Outcome::Error(e) => write!(f, "ERROR {e}"),
        }
    }
}

pub fn compare(by_chase: AnswerBag, by_rewrite: &AnswerBag) -> Outcome {
    match by_chase.first_difference(by_rewrite) {
        None => Outcome::Agree(by_chase),
        Some((tuple, a, b)) => Outcome::Differ {
            tuple,
            by_chase: a,
            by_rewrite: b,
        },
    }
}

fn prepared(q: &CQ, k: &BagOntology, exec: Execution) -> Result<(AnswerBag, Rewriting)> {
    k.tbox.ensure_core()?;
    q.ensure_rooted()?;
    if !k.is_satisfiable() {
        return Err(Error::UnsatisfiableOntology);
    }
    let c = chase_unchecked(&k.tbox, &k.abox, required_depth(q), exec);
    let by_chase = eval_cq(q, c.union())?;
    let rw = rewrite_with(
        q,
        &k.tbox,
        RewriteOptions {
            exec,
            ..RewriteOptions::default()
        },
    )?;
    Ok((by_chase, rw))
}

pub fn crosscheck(q: &CQ, k: &BagOntology) -> Outcome {
    crosscheck_with(q, k, Execution::Auto)
}

pub fn crosscheck_with(q: &CQ, k: &BagOntology, exec: Execution) -> Outcome {
    crosscheck_query(q, k, exec, |rw| rw.combined.clone())
}

/// As `crosscheck`, but evaluates `build(rewriting)` in place of the
/// combined rewriting.
pub fn crosscheck_query(q: &CQ, k: &BagOntology, exec: Execution, build: impl Fn(&Rewriting) -> BalgQuery) -> Outcome {
    let run = || -> Result<Outcome> {
        let (by_chase, rw) = prepared(q, k, exec)?;
        let c0 = BagInterpretation::from_abox(&k.abox);
        let by_rewrite = crate::bagalg::eval_balg_ordered(&build(&rw), q.answer_vars(), &c0)?;
        Ok(compare(by_chase, &by_rewrite))
    };
    run().unwrap_or_else(Outcome::Error)
}

/// The combined rewriting with one branch dropped, or `None` when only the
/// empty-subset branch exists.
pub fn drop_last_branch(rw: &Rewriting) -> Option<BalgQuery> {
    let n = rw.branches.len();
    (n > 1).then(|| {
        BalgQuery::fold(
            rw.branches[..n - 1].iter().map(|b| b.compiled.clone()),
            BalgQuery::arith_union,
        )
        .expect("non-empty")
    })
}

#[derive(Debug, Clone)]
pub struct BatchReport {
    pub seed: u64,
    pub outcomes: Vec<(u64, Outcome)>,
}

impl BatchReport {
    pub fn passed(&self) -> usize {
        self.outcomes.iter().filter(|(_, o)| o.passed()).count()
    }

    pub fn failed(&self) -> usize {
        self.outcomes.len() - self.passed()
    }
}

impl fmt::Display for BatchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, o) in &self.outcomes {
            if !o.passed() {
                writeln!(f, "instance {n}: {o}")?;
            }
        }
        write!(
            f,
            "seed {}: {} passed, {} failed",
            self.seed,
            self.passed(),
            self.failed()
        )
    }
}

/// Cross-checks `count` random instances generated from `seed`.
pub fn batch(seed: u64, count: usize, exec: Execution) -> BatchReport {
    let indices: Vec<u64> = (0..count as u64).collect();
    let outcomes = par::map(exec, &indices, |&n| {
        let inst = generate::instance(seed, n);
        (n, crosscheck_with(&inst.query, &inst.ontology, Execution::Sequential))
    });
    BatchReport { seed, outcomes }
}
