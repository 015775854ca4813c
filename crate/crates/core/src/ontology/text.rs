//! Line-oriented text formats for TBoxes and bag ABoxes.

use std::fmt::Write as _;

use super::{Assertion, Axiom, BagABox, Concept, Role, TBox, TBoxKind, RESERVED_PREFIX};
use crate::error::{Error, Result};

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(idx) => &line[..idx],
        None => line,
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

struct Tokens<'a> {
    line: usize,
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(line: usize, text: &'a str) -> Self {
        let mut items = Vec::new();
        let mut start = None;
        for (idx, ch) in text.char_indices() {
            if ch.is_whitespace() {
                if let Some(s) = start.take() {
                    items.push((s, &text[s..idx]));
                }
            } else if start.is_none() {
                start = Some(idx);
            }
        }
        if let Some(s) = start {
            items.push((s, &text[s..]));
        }
        Tokens { line, items, pos: 0 }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        let column = self
            .items
            .get(self.pos)
            .or(self.items.last())
            .map(|(c, _)| c + 1)
            .unwrap_or(1);
        Error::syntax(self.line, column, message)
    }

    fn peek(&self) -> Option<&'a str> {
        self.items.get(self.pos).map(|(_, t)| *t)
    }

    fn next(&mut self) -> Option<&'a str> {
        let tok = self.peek();
        self.pos += 1;
        tok
    }

    fn done(&self) -> bool {
        self.pos >= self.items.len()
    }

    fn role(&mut self) -> Result<Role> {
        let tok = self.next().ok_or_else(|| self.err("expected a role"))?;
        let (name, inverse) = match tok.strip_suffix('-') {
            Some(base) => (base, true),
            None => (tok, false),
        };
        if !is_identifier(name) {
            self.pos -= 1;
            return Err(self.err(format!("invalid role name `{tok}`")));
        }
        Ok(if inverse {
            Role::inverse_of(name)
        } else {
            Role::atomic(name)
        })
    }

    fn concept(&mut self) -> Result<Concept> {
        match self.peek() {
            Some("EX") => {
                self.next();
                Ok(Concept::Exists(self.role()?))
            }
            Some(tok) if is_identifier(tok) && !is_keyword(tok) => {
                self.next();
                Ok(Concept::atomic(tok))
            }
            Some(tok) => Err(self.err(format!("expected a concept, found `{tok}`"))),
            None => Err(self.err("expected a concept")),
        }
    }

    fn expect(&mut self, keyword: &str) -> Result<()> {
        match self.peek() {
            Some(tok) if tok == keyword => {
                self.next();
                Ok(())
            }
            Some(tok) => Err(self.err(format!("expected `{keyword}`, found `{tok}`"))),
            None => Err(self.err(format!("expected `{keyword}`"))),
        }
    }
}

fn is_keyword(tok: &str) -> bool {
    matches!(tok, "EX" | "SUB" | "SUBR" | "DISJ" | "DISJR" | "KIND")
}

/// Parses the TBox text format. The optional `KIND CORE` / `KIND R` header
/// must precede every axiom.
pub fn parse_tbox(input: &str) -> Result<TBox> {
    let mut kind: Option<TBoxKind> = None;
    let mut axioms = Vec::new();
    let mut role_axiom_line = None;
    for (idx, raw) in input.lines().enumerate() {
        let line_no = idx + 1;
        let mut toks = Tokens::new(line_no, strip_comment(raw));
        if toks.done() {
            continue;
        }
        let axiom = match toks.peek() {
            Some("KIND") => {
                toks.next();
                if kind.is_some() || !axioms.is_empty() {
                    return Err(toks.err("KIND must appear once, before any axiom"));
                }
                kind = Some(match toks.next() {
                    Some("CORE") => TBoxKind::Core,
                    Some("R") => TBoxKind::R,
                    _ => {
                        toks.pos -= 1;
                        return Err(toks.err("expected CORE or R"));
                    }
                });
                if !toks.done() {
                    return Err(toks.err("unexpected trailing input"));
                }
                continue;
            }
            Some("DISJ") => {
                toks.next();
                let lhs = toks.concept()?;
                Axiom::ConceptDisj(lhs, toks.concept()?)
            }
            Some("DISJR") => {
                toks.next();
                let lhs = toks.role()?;
                Axiom::RoleDisj(lhs, toks.role()?)
            }
            _ => {
                if toks.items.get(1).map(|(_, t)| *t) == Some("SUBR") {
                    let sub = toks.role()?;
                    toks.expect("SUBR")?;
                    Axiom::RoleIncl(sub, toks.role()?)
                } else {
                    let sub = toks.concept()?;
                    toks.expect("SUB")?;
                    Axiom::ConceptIncl(sub, toks.concept()?)
                }
            }
        };
        if !toks.done() {
            return Err(toks.err("unexpected trailing input"));
        }
        if axiom.is_role_axiom() && role_axiom_line.is_none() {
            role_axiom_line = Some(line_no);
        }
        axioms.push(axiom);
    }
    let kind = kind.unwrap_or_default();
    if kind == TBoxKind::Core {
        if let Some(line) = role_axiom_line {
            return Err(Error::syntax(line, 1, "role axioms require `KIND R`"));
        }
    }
    TBox::new(kind, axioms)
}

impl TBox {
    pub fn to_text(&self) -> String {
        let mut out = format!("KIND {}\n", self.kind());
        for ax in self.axioms() {
            let _ = writeln!(out, "{ax}");
        }
        out
    }
}

fn check_name(line: usize, col: usize, name: &str) -> Result<()> {
    if !is_identifier(name) {
        return Err(Error::syntax(line, col, format!("invalid name `{name}`")));
    }
    if name.starts_with(RESERVED_PREFIX) {
        return Err(Error::ReservedName(name.to_string()));
    }
    Ok(())
}

/// Parses `A(a) 3` / `P(a,b) 2` lines; the count defaults to 1 and repeated
/// lines for one assertion sum.
pub fn parse_abox(input: &str) -> Result<BagABox> {
    let mut abox = BagABox::new();
    for (idx, raw) in input.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw);
        let trimmed = line.trim_start();
        if trimmed.trim().is_empty() {
            continue;
        }
        let offset = line.len() - trimmed.len();
        let col = |i: usize| offset + i + 1;

        let open = trimmed
            .find('(')
            .ok_or_else(|| Error::syntax(line_no, col(0), "expected `(`"))?;
        let close = trimmed
            .find(')')
            .ok_or_else(|| Error::syntax(line_no, col(open), "expected `)`"))?;
        if close < open {
            return Err(Error::syntax(line_no, col(close), "unbalanced parentheses"));
        }
        let pred = trimmed[..open].trim();
        check_name(line_no, col(0), pred)?;
        let args: Vec<&str> = trimmed[open + 1..close].split(',').map(str::trim).collect();
        for arg in &args {
            check_name(line_no, col(open + 1), arg)?;
        }
        let rest = trimmed[close + 1..].trim();
        let count = if rest.is_empty() {
            1
        } else {
            rest.parse::<u64>()
                .map_err(|_| Error::syntax(line_no, col(close + 1), format!("invalid multiplicity `{rest}`")))?
        };
        if count == 0 {
            return Err(Error::syntax(line_no, col(close + 1), "multiplicity must be positive"));
        }
        let assertion = match args.as_slice() {
            [ind] => Assertion::concept(pred, *ind),
            [s, o] => Assertion::role(pred, *s, *o),
            _ => {
                return Err(Error::syntax(
                    line_no,
                    col(open),
                    "assertions take one or two arguments",
                ))
            }
        };
        abox.insert(assertion, count)?;
    }
    Ok(abox)
}

impl BagABox {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (a, m) in self.iter() {
            let _ = writeln!(out, "{a} {m}");
        }
        out
    }
}
