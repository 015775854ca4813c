use std::fmt;

use thiserror::Error;

/// Position of a syntax error inside an input text (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("syntax error at {location}: {message}")]
    Syntax { location: Location, message: String },

    #[error("unsafe query: variable `{0}` is not bound by any non-equality atom")]
    UnsafeVariable(String),

    #[error("answer variable `{0}` is repeated in the query head")]
    RepeatedAnswerVariable(String),

    #[error("name `{0}` uses the reserved `_probe_` namespace")]
    ReservedName(String),

    #[error("role axiom `{0}` is not allowed in a DL-Lite_core TBox")]
    RoleAxiomInCore(String),

    #[error("query is not rooted: component {{{0}}} contains no answer variable or individual")]
    NotRooted(String),

    #[error("operation requires a DL-Lite_core TBox, found a DL-Lite_R TBox")]
    UnsupportedTBoxKind,

    #[error("the ontology is unsatisfiable")]
    UnsatisfiableOntology,

    #[error("multiplicity overflow while {0}")]
    MultiplicityOverflow(&'static str),

    #[error("ill-formed BALG query: {0}")]
    IllFormedQuery(String),

    #[error("arity mismatch: {0} vs {1}")]
    ArityMismatch(usize, usize),

    #[error("tuple arity {found} does not match the {expected} answer variables of the query")]
    TupleArity { expected: usize, found: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("query has {0} existential variables; at most {max} are supported", max = crate::rewrite::MAX_EXISTENTIALS)]
    TooManyExistentials(usize),

    #[error("linking atom missing for variables {{{0}}}")]
    MissingLinkingAtom(String),

    #[error("chase and rewriting disagree: {0}")]
    ViaMismatch(String),
}

impl Error {
    pub(crate) fn syntax(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Syntax {
            location: Location { line, column },
            message: message.into(),
        }
    }

    /// Refusals on semantic grounds (as opposed to malformed input).
    pub fn is_semantic_refusal(&self) -> bool {
        matches!(
            self,
            Error::NotRooted(_)
                | Error::UnsupportedTBoxKind
                | Error::UnsatisfiableOntology
                | Error::TooManyExistentials(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn checked_add(a: u64, b: u64, during: &'static str) -> Result<u64> {
    a.checked_add(b).ok_or(Error::MultiplicityOverflow(during))
}

pub(crate) fn checked_mul(a: u64, b: u64, during: &'static str) -> Result<u64> {
    a.checked_mul(b).ok_or(Error::MultiplicityOverflow(during))
}
