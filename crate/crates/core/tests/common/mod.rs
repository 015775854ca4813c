//! Independent reference implementations used to check the engine: a
//! brute-force CQ evaluator, a naive BALG evaluator, a set-semantics chase
//! and a few fixtures and random generators.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use bago_core::bagalg::{AnswerBag, BalgQuery};
use bago_core::ontology::{parse_abox, parse_tbox};
use bago_core::{
    Assertion, Axiom, BagABox, BagInterpretation, BagOntology, Concept, Element, QueryAtom, Role, TBox, Term, CQ,
};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn k_ex() -> BagOntology {
    BagOntology::new(
        parse_tbox("SalEmp SUB Emp\nITEmp SUB Emp\nEmp SUB EX hasMngr\nEX hasMngr- SUB Mngr\n").unwrap(),
        parse_abox("SalEmp(Lee) 3\nITEmp(Lee) 2\nhasMngr(Lee,Hill) 2\n").unwrap(),
    )
}

pub fn t_r() -> TBox {
    parse_tbox("Emp SUB EX hasMngr\nEX hasMngr- SUB Mngr\n").unwrap()
}

pub fn k_r() -> BagOntology {
    BagOntology::new(t_r(), parse_abox("Emp(Lee) 1\nMngr(Hill) 1\n").unwrap())
}

pub fn single_chain() -> BagOntology {
    BagOntology::new(
        parse_tbox("A SUB EX R\nEX R- SUB B\n").unwrap(),
        parse_abox("A(a) 3\nR(a,b) 2\nB(b) 3\n").unwrap(),
    )
}

pub fn twin_chain() -> BagOntology {
    BagOntology::new(
        parse_tbox("A SUB EX R\nEX R- SUB B\nC SUB EX P\nEX P- SUB D\n").unwrap(),
        parse_abox("A(a) 3\nR(a,b) 2\nB(b) 3\nC(a) 8\nP(a,b) 8\nD(b) 8\n").unwrap(),
    )
}

fn term_value(t: &Term, val: &BTreeMap<String, Element>) -> Option<Element> {
    match t {
        Term::Const(c) => Some(Element::named(c.clone())),
        Term::Var(v) => val.get(v).cloned(),
    }
}

fn atom_multiplicity(i: &BagInterpretation, atom: &QueryAtom, val: &BTreeMap<String, Element>) -> u64 {
    let get = |t: &Term| term_value(t, val).expect("bound term");
    match atom {
        QueryAtom::Concept(a, t) => i.concept(a, &get(t)),
        QueryAtom::Role(p, s, o) => i.role(p, &get(s), &get(o)),
        QueryAtom::Eq(a, b) => u64::from(get(a) == get(b)),
        QueryAtom::Neq(a, b) => u64::from(get(a) != get(b)),
    }
}

fn all_valuations(vars: &[String], domain: &[Element]) -> Vec<BTreeMap<String, Element>> {
    let mut out = vec![BTreeMap::new()];
    for v in vars {
        let mut next = Vec::with_capacity(out.len() * domain.len());
        for val in &out {
            for e in domain {
                let mut val = val.clone();
                val.insert(v.clone(), e.clone());
                next.push(val);
            }
        }
        out = next;
    }
    out
}

fn cq_vars(q: &CQ) -> Vec<String> {
    let mut vars: BTreeSet<String> = q.answer_vars().iter().cloned().collect();
    for atom in q.atoms() {
        for t in atom.terms() {
            if let Term::Var(v) = t {
                vars.insert(v.clone());
            }
        }
    }
    vars.into_iter().collect()
}

/// Sums, over every valuation of all variables into the domain, the product
/// of atom multiplicities; answers range over individuals only.
pub fn brute_cq(q: &CQ, i: &BagInterpretation) -> AnswerBag {
    let domain: Vec<Element> = i.domain().iter().cloned().collect();
    let mut out = AnswerBag::new(q.answer_vars().len());
    for val in all_valuations(&cq_vars(q), &domain) {
        let mut m: u64 = 1;
        for atom in q.atoms() {
            let k = atom_multiplicity(i, atom, &val);
            m = m.checked_mul(k).expect("small test values");
            if m == 0 {
                break;
            }
        }
        if m == 0 {
            continue;
        }
        let tuple: Option<Vec<String>> = q
            .answer_vars()
            .iter()
            .map(|x| val[x].name().map(str::to_string))
            .collect();
        if let Some(tuple) = tuple {
            out.insert(tuple, m).unwrap();
        }
    }
    out
}

/// Free variables of a BALG query, recomputed without the engine.
pub fn balg_vars(q: &BalgQuery) -> BTreeSet<String> {
    let term_vars =
        |ts: &[Term]| -> BTreeSet<String> { ts.iter().filter_map(|t| t.as_var().map(str::to_string)).collect() };
    match q {
        BalgQuery::Atom(_, ts) => term_vars(ts),
        BalgQuery::Join(a, b) => balg_vars(a).union(&balg_vars(b)).cloned().collect(),
        BalgQuery::EqFilter(a, x, t) => {
            let mut vs = balg_vars(a);
            vs.insert(x.clone());
            vs.extend(term_vars(std::slice::from_ref(t)));
            vs
        }
        BalgQuery::Project(ys, a) => {
            let mut vs = balg_vars(a);
            for y in ys {
                vs.remove(y);
            }
            vs
        }
        BalgQuery::MaxUnion(a, _) | BalgQuery::ArithUnion(a, _) | BalgQuery::Diff(a, _) => balg_vars(a),
    }
}

fn balg_value(q: &BalgQuery, val: &BTreeMap<String, Element>, i: &BagInterpretation, domain: &[Element]) -> u64 {
    match q {
        BalgQuery::Atom(p, ts) => {
            let es: Vec<Element> = ts.iter().map(|t| term_value(t, val).expect("bound")).collect();
            match es.as_slice() {
                [e] => i.concept(p, e),
                [s, o] => i.role(p, s, o),
                _ => panic!("unexpected arity"),
            }
        }
        BalgQuery::Join(a, b) => balg_value(a, val, i, domain) * balg_value(b, val, i, domain),
        BalgQuery::EqFilter(a, x, t) => {
            if val.get(x) == term_value(t, val).as_ref() {
                balg_value(a, val, i, domain)
            } else {
                0
            }
        }
        BalgQuery::Project(ys, a) => {
            let inner = balg_vars(a);
            let ys: Vec<String> = ys.iter().filter(|y| inner.contains(*y)).cloned().collect();
            all_valuations(&ys, domain)
                .into_iter()
                .map(|ext| {
                    let mut v = val.clone();
                    v.extend(ext);
                    balg_value(a, &v, i, domain)
                })
                .sum()
        }
        BalgQuery::MaxUnion(a, b) => balg_value(a, val, i, domain).max(balg_value(b, val, i, domain)),
        BalgQuery::ArithUnion(a, b) => balg_value(a, val, i, domain) + balg_value(b, val, i, domain),
        BalgQuery::Diff(a, b) => balg_value(a, val, i, domain).saturating_sub(balg_value(b, val, i, domain)),
    }
}

/// Evaluates node by node on explicit valuations, summing projections over
/// the whole domain.
pub fn naive_balg(q: &BalgQuery, order: &[String], i: &BagInterpretation) -> AnswerBag {
    let domain: Vec<Element> = i.domain().iter().cloned().collect();
    let named: Vec<Element> = domain.iter().filter(|e| e.is_named()).cloned().collect();
    let mut out = AnswerBag::new(order.len());
    for val in all_valuations(order, &named) {
        let m = balg_value(q, &val, i, &domain);
        let tuple = order.iter().map(|x| val[x].name().unwrap().to_string()).collect();
        out.insert(tuple, m).unwrap();
    }
    out
}

/// Set-semantics canonical model, truncated at a given depth.
pub struct SetModel {
    names: Vec<Option<String>>,
    depth: Vec<usize>,
    labels: HashSet<(Concept, usize)>,
    edges: HashSet<(String, usize, usize)>,
}

impl SetModel {
    fn holds(&self, c: &Concept, u: usize) -> bool {
        self.labels.contains(&(c.clone(), u))
    }

    fn has_edge(&self, r: &Role, u: usize) -> bool {
        self.edges
            .iter()
            .any(|(p, s, o)| p == r.name() && if r.is_inverse() { *o == u } else { *s == u })
    }

    fn individual(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n.as_deref() == Some(name))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }
}

pub fn set_chase(tbox: &TBox, abox: &BagABox, max_depth: usize) -> SetModel {
    let mut m = SetModel {
        names: Vec::new(),
        depth: Vec::new(),
        labels: HashSet::new(),
        edges: HashSet::new(),
    };
    let ind = |m: &mut SetModel, a: &str| -> usize {
        if let Some(u) = m.individual(a) {
            return u;
        }
        m.names.push(Some(a.to_string()));
        m.depth.push(0);
        m.names.len() - 1
    };
    for (assertion, _) in abox.iter() {
        match assertion {
            Assertion::Concept { concept, individual } => {
                let u = ind(&mut m, individual);
                m.labels.insert((Concept::atomic(concept.clone()), u));
            }
            Assertion::Role { role, subject, object } => {
                let s = ind(&mut m, subject);
                let o = ind(&mut m, object);
                m.edges.insert((role.clone(), s, o));
                m.labels.insert((Concept::Exists(Role::atomic(role.clone())), s));
                m.labels.insert((Concept::Exists(Role::inverse_of(role.clone())), o));
            }
        }
    }
    let inclusions: Vec<(Concept, Concept)> = tbox
        .axioms()
        .filter_map(|a| match a {
            Axiom::ConceptIncl(b1, b2) => Some((b1.clone(), b2.clone())),
            _ => None,
        })
        .collect();
    loop {
        let mut changed = false;
        for u in 0..m.names.len() {
            for (b1, b2) in &inclusions {
                if m.holds(b1, u) && !m.holds(b2, u) {
                    m.labels.insert((b2.clone(), u));
                    changed = true;
                }
            }
        }
        for u in 0..m.names.len() {
            if m.depth[u] >= max_depth {
                continue;
            }
            let wanted: Vec<Role> = m
                .labels
                .iter()
                .filter_map(|(c, v)| match c {
                    Concept::Exists(r) if *v == u => Some(r.clone()),
                    _ => None,
                })
                .collect();
            for r in wanted {
                if m.has_edge(&r, u) {
                    continue;
                }
                let v = m.names.len();
                m.names.push(None);
                m.depth.push(m.depth[u] + 1);
                let edge = if r.is_inverse() { (v, u) } else { (u, v) };
                m.edges.insert((r.name().to_string(), edge.0, edge.1));
                m.labels.insert((Concept::Exists(r.inv()), v));
                changed = true;
            }
        }
        if !changed {
            return m;
        }
    }
}

/// Set-semantics satisfiability: no element carries two disjoint concepts.
pub fn set_satisfiable(tbox: &TBox, abox: &BagABox) -> bool {
    let m = set_chase(tbox, abox, 6);
    tbox.axioms().all(|a| match a {
        Axiom::ConceptDisj(b1, b2) => (0..m.len()).all(|u| !(m.holds(b1, u) && m.holds(b2, u))),
        _ => true,
    })
}

fn set_match(q: &CQ, m: &SetModel, atoms: &[&QueryAtom], val: &mut HashMap<String, usize>) -> bool {
    let Some((atom, rest)) = atoms.split_first() else {
        let mut val = val.clone();
        let e = |val: &HashMap<String, usize>, t: &Term| match t {
            Term::Var(v) => val.get(v).copied(),
            Term::Const(c) => m.individual(c),
        };
        loop {
            let mut grew = false;
            for a in q.atoms() {
                if let QueryAtom::Eq(s, t) = a {
                    for (x, y) in [(s, t), (t, s)] {
                        if let (Term::Var(v), None, Some(u)) = (x, e(&val, x), e(&val, y)) {
                            val.insert(v.clone(), u);
                            grew = true;
                        }
                    }
                }
            }
            if !grew {
                break;
            }
        }
        return q.atoms().iter().all(|a| match a {
            QueryAtom::Eq(s, t) | QueryAtom::Neq(s, t) => {
                let same = e(&val, s).is_some() && e(&val, s) == e(&val, t);
                matches!(a, QueryAtom::Eq(..)) == same
            }
            _ => true,
        });
    };
    let candidates: Vec<Vec<(Term, usize)>> = match atom {
        QueryAtom::Concept(a, t) => m
            .labels
            .iter()
            .filter(|(c, _)| *c == Concept::atomic(a.clone()))
            .map(|(_, u)| vec![(t.clone(), *u)])
            .collect(),
        QueryAtom::Role(p, s, o) => m
            .edges
            .iter()
            .filter(|(r, _, _)| r == p)
            .map(|(_, x, y)| vec![(s.clone(), *x), (o.clone(), *y)])
            .collect(),
        _ => unreachable!("only relational atoms are matched"),
    };
    for binding in candidates {
        let mut added = Vec::new();
        let mut ok = true;
        for (t, u) in binding {
            match &t {
                Term::Const(c) => ok &= m.individual(c) == Some(u),
                Term::Var(v) => match val.get(v) {
                    Some(w) => ok &= *w == u,
                    None => {
                        val.insert(v.clone(), u);
                        added.push(v.clone());
                    }
                },
            }
        }
        if ok && set_match(q, m, rest, val) {
            return true;
        }
        for v in added {
            val.remove(&v);
        }
    }
    false
}

/// Answer tuples of `q` over the set canonical model of `⟨T, A⟩`.
pub fn set_certain(q: &CQ, tbox: &TBox, abox: &BagABox) -> BTreeSet<Vec<String>> {
    let m = set_chase(tbox, abox, q.atoms().len() + 1);
    let named: Vec<usize> = (0..m.len()).filter(|u| m.names[*u].is_some()).collect();
    let relational: Vec<&QueryAtom> = q.atoms().iter().filter(|a| a.is_relational()).collect();
    let mut out = BTreeSet::new();
    let mut tuples: Vec<Vec<usize>> = vec![vec![]];
    for _ in q.answer_vars() {
        tuples = tuples
            .into_iter()
            .flat_map(|t| {
                named.iter().map(move |u| {
                    let mut t = t.clone();
                    t.push(*u);
                    t
                })
            })
            .collect();
    }
    for t in tuples {
        let mut val: HashMap<String, usize> = q.answer_vars().iter().cloned().zip(t.iter().copied()).collect();
        if set_match(q, &m, &relational, &mut val) {
            out.insert(t.iter().map(|u| m.names[*u].clone().unwrap()).collect());
        }
    }
    out
}

pub fn random_interpretation(rng: &mut ChaCha8Rng) -> BagInterpretation {
    let mut i = BagInterpretation::new();
    let named = rng.gen_range(1..=3);
    let mut elements: Vec<Element> = ["a", "b", "c"][..named].iter().map(|n| Element::named(*n)).collect();
    let anon = rng.gen_range(0..=6 - named);
    for k in 0..anon {
        let parent = elements[rng.gen_range(0..elements.len())].clone();
        elements.push(Element::anon(parent, Role::atomic("P"), k as u64 + 1));
    }
    for e in &elements {
        i.add_element(e.clone());
    }
    for c in ["A", "B"] {
        for e in &elements {
            if rng.gen_bool(0.4) {
                i.set_concept(c, e.clone(), rng.gen_range(1..=3));
            }
        }
    }
    for p in ["P", "R"] {
        for s in &elements {
            for o in &elements {
                if rng.gen_bool(0.2) {
                    i.set_role(p, s.clone(), o.clone(), rng.gen_range(1..=3));
                }
            }
        }
    }
    i
}

fn random_term(rng: &mut ChaCha8Rng, vars: &[&str]) -> Term {
    if rng.gen_ratio(1, 6) {
        Term::constant(*["a", "b", "d"].choose(rng).unwrap())
    } else {
        Term::var(*vars.choose(rng).unwrap())
    }
}

/// Any safe CQ with at most five atoms, rooted or not, possibly with
/// equalities and inequalities.
pub fn random_cq(rng: &mut ChaCha8Rng) -> CQ {
    let vars = ["x", "y", "z", "u"];
    loop {
        let n = rng.gen_range(1..=5);
        let atoms: Vec<QueryAtom> = (0..n)
            .map(|_| match rng.gen_range(0..12) {
                0..=3 => QueryAtom::concept(*["A", "B"].choose(rng).unwrap(), random_term(rng, &vars)),
                4..=9 => QueryAtom::role(
                    *["P", "R"].choose(rng).unwrap(),
                    random_term(rng, &vars),
                    random_term(rng, &vars),
                ),
                10 => QueryAtom::eq(random_term(rng, &vars), random_term(rng, &vars)),
                _ => QueryAtom::neq(random_term(rng, &vars), random_term(rng, &vars)),
            })
            .collect();
        let mut used: Vec<String> = atoms
            .iter()
            .flat_map(|a| a.terms())
            .filter_map(|t| t.as_var().map(str::to_string))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        used.shuffle(rng);
        let k = rng.gen_range(0..=used.len().min(2));
        if let Ok(q) = CQ::new(used[..k].to_vec(), atoms) {
            return q;
        }
    }
}

fn random_atom(rng: &mut ChaCha8Rng, vars: &[&str]) -> BalgQuery {
    if rng.gen_bool(0.4) {
        BalgQuery::atom(*["A", "B"].choose(rng).unwrap(), vec![random_term(rng, vars)])
    } else {
        BalgQuery::atom(
            *["P", "R"].choose(rng).unwrap(),
            vec![random_term(rng, vars), random_term(rng, vars)],
        )
    }
}

/// Adjusts `b` to have exactly the variables `target`.
fn fit(rng: &mut ChaCha8Rng, b: BalgQuery, target: &BTreeSet<String>) -> BalgQuery {
    let vars = balg_vars(&b);
    let extra: Vec<String> = vars.difference(target).cloned().collect();
    let mut b = if extra.is_empty() {
        b
    } else {
        BalgQuery::project(extra, b)
    };
    for v in target.difference(&vars) {
        let c = *["A", "B"].choose(rng).unwrap();
        b = BalgQuery::join(b, BalgQuery::atom(c, vec![Term::var(v.clone())]));
    }
    b
}

/// A well-formed BALG query over at most three variables.
pub fn random_balg(rng: &mut ChaCha8Rng, depth: usize) -> BalgQuery {
    let vars = ["x", "y", "z"];
    if depth == 0 || rng.gen_ratio(1, 4) {
        return random_atom(rng, &vars);
    }
    let a = random_balg(rng, depth - 1);
    let va = balg_vars(&a);
    match rng.gen_range(0..6) {
        0 => BalgQuery::join(a, random_balg(rng, depth - 1)),
        1 if !va.is_empty() => {
            let x = va.iter().nth(rng.gen_range(0..va.len())).unwrap().clone();
            let t = random_term(rng, &vars);
            BalgQuery::eq_filter(a, x, t)
        }
        2 if !va.is_empty() => {
            let ys: Vec<String> = va.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
            if ys.is_empty() {
                a
            } else {
                BalgQuery::project(ys, a)
            }
        }
        3 => {
            let b = random_balg(rng, depth - 1);
            BalgQuery::max_union(a, fit(rng, b, &va))
        }
        4 => {
            let b = random_balg(rng, depth - 1);
            BalgQuery::arith_union(a, fit(rng, b, &va))
        }
        _ => {
            let b = random_balg(rng, depth - 1);
            BalgQuery::diff(a, fit(rng, b, &va))
        }
    }
}

fn permutations(items: &[String]) -> Vec<Vec<String>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for k in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(k);
        for mut p in permutations(&rest) {
            p.insert(0, head.clone());
            out.push(p);
        }
    }
    out
}

fn norm_term(t: &Term, names: &BTreeMap<String, String>) -> String {
    match t {
        Term::Const(c) => format!("'{c}"),
        Term::Var(v) => names.get(v).cloned().unwrap_or_else(|| v.clone()),
    }
}

fn flatten<'a>(q: &'a BalgQuery, kind: std::mem::Discriminant<BalgQuery>, out: &mut Vec<&'a BalgQuery>) {
    let (a, b) = match q {
        BalgQuery::Join(a, b) | BalgQuery::MaxUnion(a, b) | BalgQuery::ArithUnion(a, b)
            if std::mem::discriminant(q) == kind =>
        {
            (a, b)
        }
        _ => {
            out.push(q);
            return;
        }
    };
    flatten(a, kind, out);
    flatten(b, kind, out);
}

fn norm(q: &BalgQuery, names: &BTreeMap<String, String>, level: usize) -> String {
    match q {
        BalgQuery::Atom(p, ts) => {
            let ts: Vec<String> = ts.iter().map(|t| norm_term(t, names)).collect();
            format!("{p}({})", ts.join(","))
        }
        BalgQuery::Join(..) | BalgQuery::MaxUnion(..) | BalgQuery::ArithUnion(..) => {
            let tag = match q {
                BalgQuery::Join(..) => "join",
                BalgQuery::MaxUnion(..) => "max",
                _ => "sum",
            };
            let mut parts = Vec::new();
            flatten(q, std::mem::discriminant(q), &mut parts);
            let mut parts: Vec<String> = parts.iter().map(|p| norm(p, names, level)).collect();
            parts.sort();
            format!("{tag}[{}]", parts.join(";"))
        }
        BalgQuery::EqFilter(a, x, t) => format!(
            "eq({},{},{})",
            norm(a, names, level),
            names.get(x).cloned().unwrap_or_else(|| x.clone()),
            norm_term(t, names)
        ),
        BalgQuery::Project(ys, a) => permutations(ys)
            .into_iter()
            .map(|perm| {
                let mut inner = names.clone();
                for (k, y) in perm.iter().enumerate() {
                    inner.insert(y.clone(), format!("#{level}.{k}"));
                }
                format!("proj{}({})", ys.len(), norm(a, &inner, level + 1))
            })
            .min()
            .unwrap(),
        BalgQuery::Diff(a, b) => format!("diff({},{})", norm(a, names, level), norm(b, names, level)),
    }
}

/// Canonical text of a BALG query up to renaming of projected variables and
/// reordering of joins and unions.
pub fn alpha_normal(q: &BalgQuery) -> String {
    norm(q, &BTreeMap::new(), 0)
}
