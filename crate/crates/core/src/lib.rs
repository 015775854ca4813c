//! Ontology-based data access under bag semantics for DL-Lite.
//!
//! The crate materialises canonical bag models of DL-Lite_core ontologies
//! ([`chase`]), evaluates conjunctive and BALG queries over bag
//! interpretations ([`bagalg`]), and compiles rooted conjunctive queries into
//! BALG queries that run directly over the ABox ([`rewrite`]). The
//! [`answer`] and [`crosscheck`] modules tie these together.

pub mod answer;
pub mod bagalg;
pub mod chase;
pub mod crosscheck;
pub mod error;
pub mod generate;
pub mod ontology;
pub mod par;
pub mod query;
pub mod rewrite;
pub mod three_col;

pub use answer::{bag_cert, certain_answers, CertRequest, Threshold, Via};
pub use bagalg::{AnswerBag, BagOp};
pub use chase::{chase, BagInterpretation, ChaseResult, Element};
pub use error::{Error, Result};
pub use ontology::{Assertion, Axiom, BagABox, BagOntology, Concept, Role, TBox, TBoxKind};
pub use query::{parse_cq, QueryAtom, Term, CQ};
pub use rewrite::{rewrite, Rewriting};
