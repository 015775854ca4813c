//! Parser for `q(x, z) :- Edge(x, y), hasColour(x, z), w = y`.
//!
//! Quoted tokens are individuals and unquoted tokens are variables.

use super::{QueryAtom, Term, CQ};
use crate::error::{Error, Result};
use crate::ontology::RESERVED_PREFIX;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Quoted(String),
    LParen,
    RParen,
    Comma,
    Equals,
    Turnstile,
    Dot,
}

struct Lexed {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(input: &str) -> Result<Vec<Lexed>> {
    let mut out = Vec::new();
    for (idx, raw) in input.lines().enumerate() {
        let line = idx + 1;
        let chars: Vec<(usize, char)> = raw.char_indices().collect();
        let mut i = 0;
        while i < chars.len() {
            let (_, ch) = chars[i];
            let column = i + 1;
            let push = |tok, out: &mut Vec<Lexed>| out.push(Lexed { tok, line, column });
            match ch {
                '#' => break,
                c if c.is_whitespace() => {}
                '(' => push(Tok::LParen, &mut out),
                ')' => push(Tok::RParen, &mut out),
                ',' => push(Tok::Comma, &mut out),
                '=' => push(Tok::Equals, &mut out),
                '.' => push(Tok::Dot, &mut out),
                ':' => {
                    if chars.get(i + 1).map(|c| c.1) != Some('-') {
                        return Err(Error::syntax(line, column, "expected `:-`"));
                    }
                    i += 1;
                    push(Tok::Turnstile, &mut out);
                }
                '"' => {
                    let start = i + 1;
                    let mut end = start;
                    while end < chars.len() && chars[end].1 != '"' {
                        end += 1;
                    }
                    if end >= chars.len() {
                        return Err(Error::syntax(line, column, "unterminated quoted individual"));
                    }
                    let name: String = chars[start..end].iter().map(|c| c.1).collect();
                    if name.is_empty() || !crate::ontology::is_identifier(&name) {
                        return Err(Error::syntax(line, column, format!("invalid individual `{name}`")));
                    }
                    push(Tok::Quoted(name), &mut out);
                    i = end;
                }
                c if c.is_ascii_alphanumeric() || c == '_' => {
                    let mut end = i;
                    while end < chars.len() && (chars[end].1.is_ascii_alphanumeric() || chars[end].1 == '_') {
                        end += 1;
                    }
                    let name: String = chars[i..end].iter().map(|c| c.1).collect();
                    push(Tok::Ident(name), &mut out);
                    i = end - 1;
                }
                '!' => {
                    return Err(Error::syntax(
                        line,
                        column,
                        "inequalities are not part of the query language",
                    ))
                }
                other => return Err(Error::syntax(line, column, format!("unexpected character `{other}`"))),
            }
            i += 1;
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|l| &l.tok)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|l| &l.tok)
    }

    fn err(&self, message: impl Into<String>) -> Error {
        let (line, column) = self.toks.get(self.pos).map(|l| (l.line, l.column)).unwrap_or(self.end);
        Error::syntax(line, column, message)
    }

    fn bump(&mut self) -> Option<Tok> {
        let tok = self.toks.get(self.pos).map(|l| l.tok.clone());
        self.pos += 1;
        tok
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(name)) => {
                let name = name.clone();
                self.pos += 1;
                Ok(name)
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    fn term(&mut self) -> Result<Term> {
        match self.peek() {
            Some(Tok::Ident(name)) => {
                let name = name.clone();
                self.pos += 1;
                Ok(Term::Var(name))
            }
            Some(Tok::Quoted(name)) => {
                let name = name.clone();
                if name.starts_with(RESERVED_PREFIX) {
                    return Err(Error::ReservedName(name));
                }
                self.pos += 1;
                Ok(Term::Const(name))
            }
            _ => Err(self.err("expected a term")),
        }
    }

    fn atom(&mut self) -> Result<QueryAtom> {
        if matches!(self.peek(), Some(Tok::Ident(_))) && self.peek2() == Some(&Tok::LParen) {
            let pred = self.ident("a predicate")?;
            self.bump();
            let first = self.term()?;
            let atom = if self.peek() == Some(&Tok::Comma) {
                self.bump();
                let second = self.term()?;
                QueryAtom::Role(pred, first, second)
            } else {
                QueryAtom::Concept(pred, first)
            };
            self.expect(Tok::RParen, "`)`")?;
            Ok(atom)
        } else {
            let lhs = self.term()?;
            self.expect(Tok::Equals, "`=` or `(`")?;
            let rhs = self.term()?;
            Ok(QueryAtom::eq(lhs, rhs))
        }
    }
}

/// Parses a query and checks its safety.
pub fn parse_cq(input: &str) -> Result<CQ> {
    let toks = lex(input)?;
    let last_line = input.lines().count().max(1);
    let last_col = input.lines().last().map(|l| l.chars().count() + 1).unwrap_or(1);
    let mut p = Parser {
        toks,
        pos: 0,
        end: (last_line, last_col),
    };
    p.ident("a query name")?;
    p.expect(Tok::LParen, "`(`")?;
    let mut head = Vec::new();
    if p.peek() != Some(&Tok::RParen) {
        loop {
            match p.peek() {
                Some(Tok::Ident(_)) => head.push(p.ident("an answer variable")?),
                _ => return Err(p.err("expected an answer variable")),
            }
            if p.peek() == Some(&Tok::Comma) {
                p.bump();
            } else {
                break;
            }
        }
    }
    p.expect(Tok::RParen, "`)`")?;
    p.expect(Tok::Turnstile, "`:-`")?;
    let mut atoms = Vec::new();
    if !matches!(p.peek(), None | Some(Tok::Dot)) {
        loop {
            atoms.push(p.atom()?);
            if p.peek() == Some(&Tok::Comma) {
                p.bump();
            } else {
                break;
            }
        }
    }
    if p.peek() == Some(&Tok::Dot) {
        p.bump();
    }
    if p.peek().is_some() {
        return Err(p.err("unexpected trailing input"));
    }
    CQ::new(head, atoms)
}
