//! Bag certain answers and the BagCert decision problem.

use std::fmt;
use std::str::FromStr;

use crate::bagalg::{eval_cq, AnswerBag};
use crate::chase::{chase_unchecked, required_depth, BagInterpretation};
use crate::error::{Error, Result};
use crate::ontology::BagOntology;
use crate::par::Execution;
use crate::query::CQ;
use crate::rewrite::{rewrite_with, RewriteOptions};

fn ensure_answerable(q: &CQ, k: &BagOntology) -> Result<()> {
    k.tbox.ensure_core()?;
    q.ensure_rooted()?;
    if !k.is_satisfiable() {
        return Err(Error::UnsatisfiableOntology);
    }
    Ok(())
}

/// Evaluates `q` over the canonical model, chased as deep as `q` needs.
pub fn certain_answers(q: &CQ, k: &BagOntology) -> Result<AnswerBag> {
    answers_via(q, k, Via::Chase, Execution::Auto)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Via {
    #[default]
    Chase,
    Rewrite,
    Both,
}

impl FromStr for Via {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "chase" => Ok(Via::Chase),
            "rewrite" => Ok(Via::Rewrite),
            "both" => Ok(Via::Both),
            _ => Err(format!(
                "unknown evaluation path `{s}` (expected chase, rewrite or both)"
            )),
        }
    }
}

/// Answers through the chase, through the rewriting over the bare ABox, or
/// both, in which case disagreement is an error.
pub fn answers_via(q: &CQ, k: &BagOntology, via: Via, exec: Execution) -> Result<AnswerBag> {
    ensure_answerable(q, k)?;
    let by_chase = || -> Result<AnswerBag> {
        let c = chase_unchecked(&k.tbox, &k.abox, required_depth(q), exec);
        eval_cq(q, c.union())
    };
    let by_rewrite = || -> Result<AnswerBag> {
        let rw = rewrite_with(
            q,
            &k.tbox,
            RewriteOptions {
                exec,
                ..RewriteOptions::default()
            },
        )?;
        rw.document().eval(&BagInterpretation::from_abox(&k.abox))
    };
    match via {
        Via::Chase => by_chase(),
        Via::Rewrite => by_rewrite(),
        Via::Both => {
            let a = by_chase()?;
            let b = by_rewrite()?;
            match a.first_difference(&b) {
                None => Ok(a),
                Some((t, m1, m2)) => Err(Error::ViaMismatch(format!(
                    "{} has multiplicity {m1} by chase and {m2} by rewriting",
                    crate::bagalg::format_tuple(&t)
                ))),
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Threshold {
    Finite(u64),
    Infinity,
}

impl Threshold {
    pub fn is_met_by(self, m: u64) -> bool {
        match self {
            Threshold::Finite(k) => m >= k,
            Threshold::Infinity => false,
        }
    }
}

impl FromStr for Threshold {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Threshold::Infinity),
            t => t
                .parse()
                .map(Threshold::Finite)
                .map_err(|_| format!("invalid threshold `{s}`")),
        }
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Finite(k) => write!(f, "{k}"),
            Threshold::Infinity => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CertRequest {
    pub query: CQ,
    pub ontology: BagOntology,
    pub tuple: Vec<String>,
    pub threshold: Threshold,
}

impl CertRequest {
    pub fn new(query: CQ, ontology: BagOntology, tuple: Vec<String>, threshold: Threshold) -> Result<Self> {
        if tuple.len() != query.arity() {
            return Err(Error::TupleArity {
                expected: query.arity(),
                found: tuple.len(),
            });
        }
        Ok(CertRequest {
            query,
            ontology,
            tuple,
            threshold,
        })
    }
}

/// Parses a tuple written as `(a,b)`; the parentheses are optional.
pub fn parse_tuple(s: &str) -> Result<Vec<String>> {
    let s = s.trim();
    let inner = s
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .unwrap_or(s)
        .trim();
    if inner.is_empty() {
        return Ok(Vec::new());
    }
    inner
        .split(',')
        .map(|p| {
            let p = p.trim();
            if crate::ontology::is_identifier(p) {
                Ok(p.to_string())
            } else {
                Err(Error::syntax(1, 1, format!("invalid individual `{p}` in tuple")))
            }
        })
        .collect()
}

/// Threshold comparison on the certain multiplicity of the request's tuple.
pub fn bag_cert(r: &CertRequest, via: Via) -> Result<bool> {
    bag_cert_with(r, via, Execution::Auto)
}

pub fn bag_cert_with(r: &CertRequest, via: Via, exec: Execution) -> Result<bool> {
    let answers = answers_via(&r.query, &r.ontology, via, exec)?;
    Ok(r.threshold.is_met_by(answers.get(&r.tuple)))
}
