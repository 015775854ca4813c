//! Graph 3-colourability gadgets: ontologies, queries and thresholds whose
//! certain answers encode non-3-colourability, plus the explicit models
//! built from a colouring.

use std::collections::{BTreeMap, BTreeSet};

use crate::chase::{BagInterpretation, Element};
use crate::error::{Error, Result};
use crate::ontology::{is_identifier, parse_tbox, Assertion, BagABox, TBox};
use crate::query::{parse_cq, CQ};

pub const AUX: &str = "aux";
pub const COLOURS: [(&str, &str); 3] = [("r", "col_r"), ("g", "col_g"), ("b", "col_b")];

fn reserved(name: &str) -> bool {
    name == AUX || COLOURS.iter().any(|(_, ind)| *ind == name)
}

/// An undirected connected graph without self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    vertices: BTreeSet<String>,
    edges: BTreeSet<(String, String)>,
}

impl Graph {
    pub fn new(
        vertices: impl IntoIterator<Item = String>,
        edges: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self> {
        let vertices: BTreeSet<String> = vertices.into_iter().collect();
        if vertices.is_empty() {
            return Err(Error::InvalidGraph("no vertices".into()));
        }
        for v in &vertices {
            if !is_identifier(v) {
                return Err(Error::InvalidGraph(format!("invalid vertex name `{v}`")));
            }
            if reserved(v) {
                return Err(Error::InvalidGraph(format!(
                    "vertex name `{v}` is reserved for the gadget"
                )));
            }
        }
        let mut norm = BTreeSet::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop on `{u}`")));
            }
            for x in [&u, &v] {
                if !vertices.contains(x) {
                    return Err(Error::InvalidGraph(format!("edge uses undeclared vertex `{x}`")));
                }
            }
            norm.insert(if u < v { (u, v) } else { (v, u) });
        }
        let g = Graph { vertices, edges: norm };
        if !g.is_connected() {
            return Err(Error::InvalidGraph("graph is not connected".into()));
        }
        Ok(g)
    }

    pub fn vertices(&self) -> &BTreeSet<String> {
        &self.vertices
    }

    /// Edges with the smaller endpoint first.
    pub fn edges(&self) -> &BTreeSet<(String, String)> {
        &self.edges
    }

    fn is_connected(&self) -> bool {
        let start = self.vertices.iter().next().expect("non-empty");
        let mut seen: BTreeSet<&String> = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for (a, b) in &self.edges {
                let next = if a == u {
                    b
                } else if b == u {
                    a
                } else {
                    continue;
                };
                if seen.insert(next) {
                    stack.push(next);
                }
            }
        }
        seen.len() == self.vertices.len()
    }

    pub fn complete(n: usize) -> Self {
        let vs: Vec<String> = (1..=n).map(|i| format!("v{i}")).collect();
        let mut es = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                es.push((vs[i].clone(), vs[j].clone()));
            }
        }
        Graph::new(vs, es).expect("complete graphs are valid")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("v");
        for v in &self.vertices {
            out.push(' ');
            out.push_str(v);
        }
        out.push('\n');
        for (u, v) in &self.edges {
            out.push_str(&format!("e {u} {v}\n"));
        }
        out
    }
}

/// Reads `v a b c` vertex lines and `e a b` edge lines; `#` starts a comment.
pub fn parse_graph(text: &str) -> Result<Graph> {
    let mut vertices = Vec::new();
    let mut edges = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut words = line.split_whitespace();
        match words.next() {
            Some("v") => vertices.extend(words.map(str::to_string)),
            Some("e") => {
                let ends: Vec<&str> = words.collect();
                let [u, v] = ends[..] else {
                    return Err(Error::syntax(n + 1, 1, "edge lines need exactly two vertices"));
                };
                edges.push((u.to_string(), v.to_string()));
            }
            _ => return Err(Error::syntax(n + 1, 1, "expected a `v` or `e` line")),
        }
    }
    Graph::new(vertices, edges)
}

/// Reads `vertex colour` lines with colours among `r`, `g`, `b`.
pub fn parse_colouring(text: &str, g: &Graph) -> Result<BTreeMap<String, char>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let words: Vec<&str> = line.split_whitespace().collect();
        let [v, c] = words[..] else {
            return Err(Error::syntax(n + 1, 1, "expected `vertex colour`"));
        };
        let colour = match c {
            "r" => 'r',
            "g" => 'g',
            "b" => 'b',
            _ => return Err(Error::syntax(n + 1, 1, format!("unknown colour `{c}`"))),
        };
        if !g.vertices.contains(v) {
            return Err(Error::InvalidGraph(format!("colouring mentions unknown vertex `{v}`")));
        }
        if out.insert(v.to_string(), colour).is_some() {
            return Err(Error::InvalidGraph(format!("vertex `{v}` coloured twice")));
        }
    }
    if let Some(v) = g.vertices.iter().find(|v| !out.contains_key(*v)) {
        return Err(Error::InvalidGraph(format!("vertex `{v}` has no colour")));
    }
    Ok(out)
}

pub fn is_proper(g: &Graph, colouring: &BTreeMap<String, char>) -> bool {
    g.edges.iter().all(|(u, v)| colouring[u] != colouring[v])
}

fn colour_individual(c: char) -> &'static str {
    COLOURS
        .iter()
        .find(|(k, _)| k.starts_with(c))
        .map(|(_, ind)| *ind)
        .expect("colour among r, g, b")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Variant {
    #[default]
    Core,
    R,
}

#[derive(Debug, Clone)]
pub struct Gadget {
    pub variant: Variant,
    pub tbox: TBox,
    pub abox: BagABox,
    pub query: CQ,
    pub tuple: Vec<String>,
    pub threshold: u64,
}

fn add(abox: &mut BagABox, a: Assertion, m: u64) {
    abox.insert(a, m).expect("small multiplicities");
}

/// The reduction for `g`: `g` is not 3-colourable exactly when the certain
/// multiplicity of `tuple` reaches `threshold`.
pub fn gen_3col(g: &Graph, variant: Variant) -> Gadget {
    let n = g.vertices.len() as u64;
    let mut abox = BagABox::new();
    for u in &g.vertices {
        add(&mut abox, Assertion::concept("Vertex", u), 1);
    }
    for (u, v) in &g.edges {
        add(&mut abox, Assertion::role("Edge", u, v), 1);
        add(&mut abox, Assertion::role("Edge", v, u), 1);
    }
    add(&mut abox, Assertion::concept("Vertex", AUX), 1);
    add(&mut abox, Assertion::role("Edge", AUX, AUX), 1);
    add(&mut abox, Assertion::role("hasColour", AUX, "col_r"), 1);
    let threshold = 3 * n + 2;
    match variant {
        Variant::Core => {
            add(&mut abox, Assertion::concept("ACol", "col_r"), n + 1);
            add(&mut abox, Assertion::concept("ACol", "col_g"), n);
            add(&mut abox, Assertion::concept("ACol", "col_b"), n);
            Gadget {
                variant,
                tbox: parse_tbox("Vertex SUB EX hasColour\nEX hasColour- SUB ACol\n").expect("fixed TBox"),
                abox,
                query: parse_cq("q() :- Edge(x,y), hasColour(x,z), hasColour(y,z), ACol(w)").expect("fixed query"),
                tuple: vec![],
                threshold,
            }
        }
        Variant::R => {
            for u in &g.vertices {
                for (_, c) in COLOURS {
                    add(&mut abox, Assertion::role("Assign", u, c), 1);
                }
            }
            add(&mut abox, Assertion::role("Assign", AUX, "col_r"), 1);
            add(&mut abox, Assertion::role("Reachable", AUX, AUX), 1);
            for u in &g.vertices {
                add(&mut abox, Assertion::role("Reachable", AUX, u), 1);
                add(&mut abox, Assertion::role("Reachable", u, AUX), 1);
                for v in &g.vertices {
                    if u != v {
                        add(&mut abox, Assertion::role("Reachable", u, v), 1);
                    }
                }
            }
            Gadget {
                variant,
                tbox: parse_tbox("KIND R\nVertex SUB EX hasColour\nhasColour SUBR Assign\n").expect("fixed TBox"),
                abox,
                query: parse_cq(
                    "q(w) :- Edge(x,y), hasColour(x,z), hasColour(y,z), Assign(x,w), Assign(y,w), \
                     Reachable(x,k), Assign(k,l)",
                )
                .expect("fixed query"),
                tuple: vec!["col_r".into()],
                threshold,
            }
        }
    }
}

/// The model of the core gadget that follows `colouring`.
pub fn colouring_model(g: &Graph, colouring: &BTreeMap<String, char>) -> BagInterpretation {
    let n = g.vertices.len() as u64;
    let mut i = BagInterpretation::new();
    let named = |s: &str| Element::named(s);
    for v in g.vertices.iter().map(String::as_str).chain([AUX]) {
        i.set_concept("Vertex", named(v), 1);
    }
    for (_, c) in COLOURS {
        i.add_element(named(c));
    }
    for (u, v) in &g.edges {
        i.set_role("Edge", named(u), named(v), 1);
        i.set_role("Edge", named(v), named(u), 1);
    }
    i.set_role("Edge", named(AUX), named(AUX), 1);
    for (u, c) in colouring {
        i.set_role("hasColour", named(u), named(colour_individual(*c)), 1);
    }
    i.set_role("hasColour", named(AUX), named("col_r"), 1);
    i.set_concept("ACol", named("col_r"), n + 1);
    i.set_concept("ACol", named("col_g"), n);
    i.set_concept("ACol", named("col_b"), n);
    i
}
