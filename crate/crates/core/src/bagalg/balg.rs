//! BALG queries: abstract syntax, well-formedness, evaluation and the
//! s-expression text form.

use std::collections::{BTreeSet, HashMap};
use std::fmt::{self, Write as _};

use super::{AnswerBag, Id, IndexedInterpretation};
use crate::chase::BagInterpretation;
use crate::error::{checked_add, checked_mul, Error, Result};
use crate::ontology::{is_identifier, RESERVED_PREFIX};
use crate::query::Term;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BalgQuery {
    /// `A(t)` or `P(t1, t2)`.
    Atom(String, Vec<Term>),
    Join(Box<BalgQuery>, Box<BalgQuery>),
    /// Keeps the valuations with `x = t`; a variable `t` joins the answer
    /// variables.
    EqFilter(Box<BalgQuery>, String, Term),
    /// Sums away the listed variables.
    Project(Vec<String>, Box<BalgQuery>),
    MaxUnion(Box<BalgQuery>, Box<BalgQuery>),
    ArithUnion(Box<BalgQuery>, Box<BalgQuery>),
    Diff(Box<BalgQuery>, Box<BalgQuery>),
}

impl BalgQuery {
    pub fn atom(pred: impl Into<String>, terms: Vec<Term>) -> Self {
        BalgQuery::Atom(pred.into(), terms)
    }

    pub fn join(a: BalgQuery, b: BalgQuery) -> Self {
        BalgQuery::Join(Box::new(a), Box::new(b))
    }

    pub fn eq_filter(q: BalgQuery, x: impl Into<String>, t: Term) -> Self {
        BalgQuery::EqFilter(Box::new(q), x.into(), t)
    }

    pub fn project(vars: Vec<String>, q: BalgQuery) -> Self {
        BalgQuery::Project(vars, Box::new(q))
    }

    pub fn max_union(a: BalgQuery, b: BalgQuery) -> Self {
        BalgQuery::MaxUnion(Box::new(a), Box::new(b))
    }

    pub fn arith_union(a: BalgQuery, b: BalgQuery) -> Self {
        BalgQuery::ArithUnion(Box::new(a), Box::new(b))
    }

    pub fn diff(a: BalgQuery, b: BalgQuery) -> Self {
        BalgQuery::Diff(Box::new(a), Box::new(b))
    }

    /// Left-nested fold; `None` for an empty list.
    pub fn fold(
        items: impl IntoIterator<Item = BalgQuery>,
        combine: fn(BalgQuery, BalgQuery) -> BalgQuery,
    ) -> Option<BalgQuery> {
        items.into_iter().reduce(combine)
    }

    /// Answer variables, checking every side condition on the way up.
    pub fn answer_vars(&self) -> Result<BTreeSet<String>> {
        match self {
            BalgQuery::Atom(pred, terms) => {
                if terms.is_empty() || terms.len() > 2 {
                    return Err(Error::IllFormedQuery(format!(
                        "atom `{pred}` has {} arguments",
                        terms.len()
                    )));
                }
                Ok(terms.iter().filter_map(|t| t.as_var().map(str::to_string)).collect())
            }
            BalgQuery::Join(a, b) => {
                let mut vars = a.answer_vars()?;
                vars.extend(b.answer_vars()?);
                Ok(vars)
            }
            BalgQuery::EqFilter(q, x, t) => {
                let mut vars = q.answer_vars()?;
                if !vars.contains(x) {
                    return Err(Error::IllFormedQuery(format!(
                        "equality filter on `{x}`, which the filtered query does not bind"
                    )));
                }
                if let Term::Var(v) = t {
                    vars.insert(v.clone());
                }
                Ok(vars)
            }
            BalgQuery::Project(ys, q) => {
                let mut vars = q.answer_vars()?;
                let mut seen = BTreeSet::new();
                for y in ys {
                    if !seen.insert(y) {
                        return Err(Error::IllFormedQuery(format!("`{y}` projected twice")));
                    }
                    if !vars.remove(y) {
                        return Err(Error::IllFormedQuery(format!(
                            "projected variable `{y}` is not an answer variable of the inner query"
                        )));
                    }
                }
                Ok(vars)
            }
            BalgQuery::MaxUnion(a, b) | BalgQuery::ArithUnion(a, b) | BalgQuery::Diff(a, b) => {
                let va = a.answer_vars()?;
                let vb = b.answer_vars()?;
                if va != vb {
                    return Err(Error::IllFormedQuery(format!(
                        "{} over different variables {{{}}} and {{{}}}",
                        self.keyword(),
                        crate::query::join_vars(&va),
                        crate::query::join_vars(&vb)
                    )));
                }
                Ok(va)
            }
        }
    }

    pub fn check(&self) -> Result<()> {
        self.answer_vars().map(|_| ())
    }

    fn keyword(&self) -> &'static str {
        match self {
            BalgQuery::Atom(..) => "atom",
            BalgQuery::Join(..) => "join",
            BalgQuery::EqFilter(..) => "eq-filter",
            BalgQuery::Project(..) => "project",
            BalgQuery::MaxUnion(..) => "max-union",
            BalgQuery::ArithUnion(..) => "arith-union",
            BalgQuery::Diff(..) => "diff",
        }
    }

    fn children(&self) -> Vec<&BalgQuery> {
        match self {
            BalgQuery::Atom(..) => vec![],
            BalgQuery::EqFilter(q, ..) | BalgQuery::Project(_, q) => vec![q],
            BalgQuery::Join(a, b) | BalgQuery::MaxUnion(a, b) | BalgQuery::ArithUnion(a, b) | BalgQuery::Diff(a, b) => {
                vec![a, b]
            }
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self.children().into_iter().map(BalgQuery::node_count).sum::<usize>()
    }

    /// Whether any node satisfies `pred`.
    pub fn any_node(&self, pred: &dyn Fn(&BalgQuery) -> bool) -> bool {
        pred(self) || self.children().into_iter().any(|c| c.any_node(pred))
    }

    pub fn individuals(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_individuals(&mut out);
        out
    }

    fn collect_individuals(&self, out: &mut BTreeSet<String>) {
        match self {
            BalgQuery::Atom(_, terms) => out.extend(terms.iter().filter_map(|t| t.as_const().map(str::to_string))),
            BalgQuery::EqFilter(q, _, Term::Const(c)) => {
                out.insert(c.clone());
                q.collect_individuals(out);
            }
            _ => self.children().into_iter().for_each(|c| c.collect_individuals(out)),
        }
    }

    /// Every variable name used anywhere, bound or not.
    pub fn all_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            BalgQuery::Atom(_, terms) => out.extend(terms.iter().filter_map(|t| t.as_var().map(str::to_string))),
            BalgQuery::EqFilter(q, x, t) => {
                out.insert(x.clone());
                if let Term::Var(v) = t {
                    out.insert(v.clone());
                }
                q.collect_vars(out);
            }
            BalgQuery::Project(ys, q) => {
                out.extend(ys.iter().cloned());
                q.collect_vars(out);
            }
            _ => self.children().into_iter().for_each(|c| c.collect_vars(out)),
        }
    }
}

/// A relation over element ids: `vars` sorted, every row aligned with them.
struct Relation {
    vars: Vec<String>,
    rows: HashMap<Vec<Id>, u64>,
}

impl Relation {
    fn position(&self, v: &str) -> Option<usize> {
        self.vars.iter().position(|x| x == v)
    }

    fn add(&mut self, row: Vec<Id>, m: u64) -> Result<()> {
        if m == 0 {
            return Ok(());
        }
        let slot = self.rows.entry(row).or_insert(0);
        *slot = checked_add(*slot, m, "evaluating a BALG query")?;
        Ok(())
    }

    fn empty(vars: Vec<String>) -> Relation {
        Relation {
            vars,
            rows: HashMap::new(),
        }
    }
}

fn sorted_vars(vars: BTreeSet<String>) -> Vec<String> {
    vars.into_iter().collect()
}

fn eval_node(q: &BalgQuery, idx: &IndexedInterpretation) -> Result<Relation> {
    match q {
        BalgQuery::Atom(pred, terms) => eval_atom(pred, terms, idx),
        BalgQuery::Join(a, b) => {
            let ra = eval_node(a, idx)?;
            let rb = eval_node(b, idx)?;
            join(&ra, &rb)
        }
        BalgQuery::EqFilter(inner, x, t) => {
            let r = eval_node(inner, idx)?;
            let px = r.position(x).expect("checked");
            match t {
                Term::Const(c) => {
                    let mut out = Relation::empty(r.vars.clone());
                    if let Some(&id) = idx.named.get(c) {
                        for (row, m) in r.rows {
                            if row[px] == id {
                                out.add(row, m)?;
                            }
                        }
                    }
                    Ok(out)
                }
                Term::Var(v) => match r.position(v) {
                    Some(pv) => {
                        let mut out = Relation::empty(r.vars.clone());
                        for (row, m) in r.rows {
                            if row[px] == row[pv] {
                                out.add(row, m)?;
                            }
                        }
                        Ok(out)
                    }
                    None => {
                        let mut vars: BTreeSet<String> = r.vars.iter().cloned().collect();
                        vars.insert(v.clone());
                        let vars = sorted_vars(vars);
                        let at = vars.iter().position(|y| y == v).expect("inserted");
                        let mut out = Relation::empty(vars);
                        for (mut row, m) in r.rows {
                            let value = row[px];
                            row.insert(at, value);
                            out.add(row, m)?;
                        }
                        Ok(out)
                    }
                },
            }
        }
        BalgQuery::Project(ys, inner) => {
            let r = eval_node(inner, idx)?;
            let keep: Vec<usize> = (0..r.vars.len()).filter(|&n| !ys.contains(&r.vars[n])).collect();
            let mut out = Relation::empty(keep.iter().map(|&n| r.vars[n].clone()).collect());
            for (row, m) in r.rows {
                out.add(keep.iter().map(|&n| row[n]).collect(), m)?;
            }
            Ok(out)
        }
        BalgQuery::MaxUnion(a, b) | BalgQuery::ArithUnion(a, b) | BalgQuery::Diff(a, b) => {
            let ra = eval_node(a, idx)?;
            let rb = eval_node(b, idx)?;
            let mut out = Relation::empty(ra.vars.clone());
            match q {
                BalgQuery::MaxUnion(..) => {
                    out.rows = ra.rows;
                    for (row, m) in rb.rows {
                        let slot = out.rows.entry(row).or_insert(0);
                        *slot = (*slot).max(m);
                    }
                }
                BalgQuery::ArithUnion(..) => {
                    out.rows = ra.rows;
                    for (row, m) in rb.rows {
                        out.add(row, m)?;
                    }
                }
                _ => {
                    for (row, m) in ra.rows {
                        let sub = rb.rows.get(&row).copied().unwrap_or(0);
                        out.add(row, m.saturating_sub(sub))?;
                    }
                }
            }
            Ok(out)
        }
    }
}

fn eval_atom(pred: &str, terms: &[Term], idx: &IndexedInterpretation) -> Result<Relation> {
    let vars = sorted_vars(terms.iter().filter_map(|t| t.as_var().map(str::to_string)).collect());
    let mut out = Relation::empty(vars);
    let resolve = |values: &[Id]| -> Option<Vec<Id>> {
        let mut row: Vec<Option<Id>> = vec![None; out.vars.len()];
        for (t, &value) in terms.iter().zip(values) {
            match t {
                Term::Const(c) => {
                    if idx.named.get(c) != Some(&value) {
                        return None;
                    }
                }
                Term::Var(v) => {
                    let p = out.vars.iter().position(|x| x == v).expect("var");
                    match row[p] {
                        Some(prev) if prev != value => return None,
                        _ => row[p] = Some(value),
                    }
                }
            }
        }
        row.into_iter().collect()
    };
    let mut rows = Vec::new();
    match terms.len() {
        1 => {
            if let Some(ext) = idx.concepts.get(pred) {
                for (&e, &m) in ext {
                    if let Some(row) = resolve(&[e]) {
                        rows.push((row, m));
                    }
                }
            }
        }
        _ => {
            if let Some(ext) = idx.roles.get(pred) {
                for &(s, o, m) in &ext.pairs {
                    if let Some(row) = resolve(&[s, o]) {
                        rows.push((row, m));
                    }
                }
            }
        }
    }
    for (row, m) in rows {
        out.add(row, m)?;
    }
    Ok(out)
}

fn join(a: &Relation, b: &Relation) -> Result<Relation> {
    let shared: Vec<(usize, usize)> = a
        .vars
        .iter()
        .enumerate()
        .filter_map(|(pa, v)| b.position(v).map(|pb| (pa, pb)))
        .collect();
    let mut vars: BTreeSet<String> = a.vars.iter().cloned().collect();
    vars.extend(b.vars.iter().cloned());
    let vars = sorted_vars(vars);
    let source: Vec<(bool, usize)> = vars
        .iter()
        .map(|v| match a.position(v) {
            Some(p) => (true, p),
            None => (false, b.position(v).expect("from b")),
        })
        .collect();

    let mut buckets: HashMap<Vec<Id>, Vec<(&Vec<Id>, u64)>> = HashMap::new();
    for (row, m) in &b.rows {
        let key = shared.iter().map(|&(_, pb)| row[pb]).collect();
        buckets.entry(key).or_default().push((row, *m));
    }
    let mut out = Relation::empty(vars);
    for (ra, ma) in &a.rows {
        let key: Vec<Id> = shared.iter().map(|&(pa, _)| ra[pa]).collect();
        let Some(matches) = buckets.get(&key) else {
            continue;
        };
        for (rb, mb) in matches {
            let row = source
                .iter()
                .map(|&(from_a, p)| if from_a { ra[p] } else { rb[p] })
                .collect();
            out.add(row, checked_mul(*ma, *mb, "evaluating a BALG join")?)?;
        }
    }
    Ok(out)
}

/// Evaluates `q`, answer columns in sorted variable order.
pub fn eval_balg(q: &BalgQuery, i: &BagInterpretation) -> Result<AnswerBag> {
    let vars: Vec<String> = q.answer_vars()?.into_iter().collect();
    eval_balg_ordered(q, &vars, i)
}

pub fn eval_balg_ordered(q: &BalgQuery, order: &[String], i: &BagInterpretation) -> Result<AnswerBag> {
    eval_balg_indexed(q, order, &IndexedInterpretation::new(i))
}

/// Evaluates `q` and keeps the tuples of individuals, columns in `order`.
pub fn eval_balg_indexed(q: &BalgQuery, order: &[String], idx: &IndexedInterpretation) -> Result<AnswerBag> {
    let vars = q.answer_vars()?;
    let wanted: BTreeSet<String> = order.iter().cloned().collect();
    if wanted != vars || wanted.len() != order.len() {
        return Err(Error::IllFormedQuery(format!(
            "answer order ({}) does not list the answer variables {{{}}}",
            order.join(", "),
            crate::query::join_vars(&vars)
        )));
    }
    let rel = eval_node(q, idx)?;
    let cols: Vec<usize> = order.iter().map(|v| rel.position(v).expect("checked")).collect();
    let mut bag = AnswerBag::new(order.len());
    'rows: for (row, m) in rel.rows {
        let mut tuple = Vec::with_capacity(cols.len());
        for &c in &cols {
            if !idx.is_named(row[c]) {
                continue 'rows;
            }
            tuple.push(idx.name(row[c]).to_string());
        }
        bag.insert(tuple, m)?;
    }
    Ok(bag)
}

// Text form.

fn write_term(out: &mut String, t: &Term) {
    let _ = write!(out, "{t}");
}

fn write_compact(q: &BalgQuery, out: &mut String) {
    match q {
        BalgQuery::Atom(pred, terms) => {
            let _ = write!(out, "(atom {pred}");
            for t in terms {
                out.push(' ');
                write_term(out, t);
            }
            out.push(')');
        }
        BalgQuery::EqFilter(inner, x, t) => {
            out.push_str("(eq-filter ");
            write_compact(inner, out);
            let _ = write!(out, " {x} ");
            write_term(out, t);
            out.push(')');
        }
        BalgQuery::Project(ys, inner) => {
            let _ = write!(out, "(project ({}) ", ys.join(" "));
            write_compact(inner, out);
            out.push(')');
        }
        _ => {
            let _ = write!(out, "({}", q.keyword());
            for child in flat_operands(q) {
                out.push(' ');
                write_compact(child, out);
            }
            out.push(')');
        }
    }
}

/// Operands of a binary node, flattening a left-nested chain of the same
/// associative operator. Difference is never flattened.
fn flat_operands(q: &BalgQuery) -> Vec<&BalgQuery> {
    fn same(a: &BalgQuery, b: &BalgQuery) -> bool {
        matches!(
            (a, b),
            (BalgQuery::Join(..), BalgQuery::Join(..))
                | (BalgQuery::MaxUnion(..), BalgQuery::MaxUnion(..))
                | (BalgQuery::ArithUnion(..), BalgQuery::ArithUnion(..))
        )
    }
    match q {
        BalgQuery::Join(a, b) | BalgQuery::MaxUnion(a, b) | BalgQuery::ArithUnion(a, b) => {
            let mut ops = if same(q, a) { flat_operands(a) } else { vec![&**a] };
            ops.push(b);
            ops
        }
        BalgQuery::Diff(a, b) => vec![a, b],
        _ => vec![],
    }
}

const LINE_WIDTH: usize = 88;

fn write_pretty(q: &BalgQuery, indent: usize, out: &mut String) {
    let mut compact = String::new();
    write_compact(q, &mut compact);
    if indent + compact.len() <= LINE_WIDTH {
        out.push_str(&compact);
        return;
    }
    let pad = " ".repeat(indent + 2);
    match q {
        BalgQuery::Atom(..) => out.push_str(&compact),
        BalgQuery::EqFilter(inner, x, t) => {
            let _ = write!(out, "(eq-filter\n{pad}");
            write_pretty(inner, indent + 2, out);
            let _ = write!(out, "\n{pad}{x} ");
            write_term(out, t);
            out.push(')');
        }
        BalgQuery::Project(ys, inner) => {
            let _ = write!(out, "(project ({})\n{pad}", ys.join(" "));
            write_pretty(inner, indent + 2, out);
            out.push(')');
        }
        _ => {
            out.push('(');
            out.push_str(q.keyword());
            for child in flat_operands(q) {
                let _ = write!(out, "\n{pad}");
                write_pretty(child, indent + 2, out);
            }
            out.push(')');
        }
    }
}

impl BalgQuery {
    pub fn to_sexpr(&self) -> String {
        let mut out = String::new();
        write_compact(self, &mut out);
        out
    }

    pub fn to_pretty(&self) -> String {
        let mut out = String::new();
        write_pretty(self, 0, &mut out);
        out
    }
}

impl fmt::Display for BalgQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_sexpr())
    }
}

/// A query together with the column order of its answers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalgDocument {
    pub answer_vars: Vec<String>,
    pub query: BalgQuery,
}

impl BalgDocument {
    /// Checks the query and fixes answers in sorted variable order.
    pub fn new(query: BalgQuery) -> Result<Self> {
        let answer_vars = query.answer_vars()?.into_iter().collect();
        Ok(BalgDocument { answer_vars, query })
    }

    pub fn with_order(query: BalgQuery, answer_vars: Vec<String>) -> Result<Self> {
        let vars = query.answer_vars()?;
        let listed: BTreeSet<String> = answer_vars.iter().cloned().collect();
        if listed != vars || listed.len() != answer_vars.len() {
            return Err(Error::IllFormedQuery(format!(
                "header ({}) does not list the answer variables {{{}}}",
                answer_vars.join(" "),
                crate::query::join_vars(&vars)
            )));
        }
        Ok(BalgDocument { answer_vars, query })
    }

    pub fn eval(&self, i: &BagInterpretation) -> Result<AnswerBag> {
        eval_balg_ordered(&self.query, &self.answer_vars, i)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("(query ({})\n  ", self.answer_vars.join(" "));
        write_pretty(&self.query, 2, &mut out);
        out.push_str(")\n");
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum SexTok {
    Open,
    Close,
    Word(String),
    Quoted(String),
}

struct Sexp {
    toks: Vec<(SexTok, usize, usize)>,
    pos: usize,
    end: (usize, usize),
}

fn lex_sexp(input: &str) -> Result<Vec<(SexTok, usize, usize)>> {
    let mut out = Vec::new();
    for (ln, raw) in input.lines().enumerate() {
        let chars: Vec<char> = raw.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let col = i + 1;
            match chars[i] {
                ';' | '#' => break,
                c if c.is_whitespace() => {}
                '(' => out.push((SexTok::Open, ln + 1, col)),
                ')' => out.push((SexTok::Close, ln + 1, col)),
                '"' => {
                    let start = i + 1;
                    let mut end = start;
                    while end < chars.len() && chars[end] != '"' {
                        end += 1;
                    }
                    if end >= chars.len() {
                        return Err(Error::syntax(ln + 1, col, "unterminated quoted individual"));
                    }
                    let name: String = chars[start..end].iter().collect();
                    if !is_identifier(&name) {
                        return Err(Error::syntax(ln + 1, col, format!("invalid individual `{name}`")));
                    }
                    out.push((SexTok::Quoted(name), ln + 1, col));
                    i = end;
                }
                _ => {
                    let mut end = i;
                    while end < chars.len() && !chars[end].is_whitespace() && !matches!(chars[end], '(' | ')' | '"') {
                        end += 1;
                    }
                    out.push((SexTok::Word(chars[i..end].iter().collect()), ln + 1, col));
                    i = end - 1;
                }
            }
            i += 1;
        }
    }
    Ok(out)
}

impl Sexp {
    fn err(&self, message: impl Into<String>) -> Error {
        let (line, col) = self.toks.get(self.pos).map(|t| (t.1, t.2)).unwrap_or(self.end);
        Error::syntax(line, col, message)
    }

    fn peek(&self) -> Option<&SexTok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn open(&mut self) -> Result<()> {
        if self.peek() == Some(&SexTok::Open) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err("expected `(`"))
        }
    }

    fn close(&mut self) -> Result<()> {
        if self.peek() == Some(&SexTok::Close) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err("expected `)`"))
        }
    }

    fn word(&mut self, what: &str) -> Result<String> {
        match self.peek() {
            Some(SexTok::Word(w)) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    fn var(&mut self) -> Result<String> {
        let v = self.word("a variable")?;
        if !is_identifier(&v) {
            self.pos -= 1;
            return Err(self.err(format!("invalid variable `{v}`")));
        }
        Ok(v)
    }

    fn term(&mut self) -> Result<Term> {
        match self.peek() {
            Some(SexTok::Quoted(c)) => {
                let c = c.clone();
                if c.starts_with(RESERVED_PREFIX) {
                    return Err(Error::ReservedName(c));
                }
                self.pos += 1;
                Ok(Term::Const(c))
            }
            Some(SexTok::Word(_)) => Ok(Term::Var(self.var()?)),
            _ => Err(self.err("expected a term")),
        }
    }

    fn var_list(&mut self) -> Result<Vec<String>> {
        self.open()?;
        let mut vars = Vec::new();
        while self.peek() != Some(&SexTok::Close) {
            vars.push(self.var()?);
        }
        self.close()?;
        Ok(vars)
    }

    fn query(&mut self) -> Result<BalgQuery> {
        self.open()?;
        let head_pos = self.pos;
        let head = self.word("an operator")?;
        let q = match head.as_str() {
            "atom" => {
                let pred = self.word("a predicate")?;
                if !is_identifier(&pred) {
                    self.pos -= 1;
                    return Err(self.err(format!("invalid predicate `{pred}`")));
                }
                let mut terms = Vec::new();
                while self.peek() != Some(&SexTok::Close) {
                    terms.push(self.term()?);
                }
                if terms.is_empty() || terms.len() > 2 {
                    return Err(self.err("atoms take one or two terms"));
                }
                BalgQuery::Atom(pred, terms)
            }
            "eq-filter" => {
                let inner = self.query()?;
                let x = self.var()?;
                let t = self.term()?;
                BalgQuery::eq_filter(inner, x, t)
            }
            "project" => {
                let ys = self.var_list()?;
                BalgQuery::project(ys, self.query()?)
            }
            "join" | "max-union" | "arith-union" | "diff" => {
                let mut ops = Vec::new();
                while self.peek() != Some(&SexTok::Close) {
                    ops.push(self.query()?);
                }
                if ops.len() < 2 || (head == "diff" && ops.len() != 2) {
                    return Err(self.err(format!("wrong number of operands for `{head}`")));
                }
                let combine: fn(BalgQuery, BalgQuery) -> BalgQuery = match head.as_str() {
                    "join" => BalgQuery::join,
                    "max-union" => BalgQuery::max_union,
                    "arith-union" => BalgQuery::arith_union,
                    _ => BalgQuery::diff,
                };
                BalgQuery::fold(ops, combine).expect("two operands")
            }
            _ => {
                self.pos = head_pos;
                return Err(self.err(format!("unknown operator `{head}`")));
            }
        };
        self.close()?;
        Ok(q)
    }
}

/// Parses a BALG query, optionally wrapped as `(query (x ...) body)` to fix
/// the order of answer columns.
pub fn parse_balg(input: &str) -> Result<BalgDocument> {
    let toks = lex_sexp(input)?;
    let end = (
        input.lines().count().max(1),
        input.lines().last().map_or(1, |l| l.chars().count() + 1),
    );
    let mut p = Sexp { toks, pos: 0, end };
    let wrapped = matches!(
        (p.toks.first(), p.toks.get(1)),
        (Some((SexTok::Open, ..)), Some((SexTok::Word(w), ..))) if w == "query"
    );
    let doc = if wrapped {
        p.open()?;
        p.word("`query`")?;
        let order = p.var_list()?;
        let q = p.query()?;
        p.close()?;
        (Some(order), q)
    } else {
        (None, p.query()?)
    };
    if p.peek().is_some() {
        return Err(p.err("unexpected trailing input"));
    }
    match doc {
        (Some(order), q) => BalgDocument::with_order(q, order),
        (None, q) => BalgDocument::new(q),
    }
}
