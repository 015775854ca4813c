//! Seeded random instances: small core TBoxes, bag ABoxes and rooted CQs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ontology::{Assertion, Axiom, BagABox, BagOntology, Concept, Role, TBox};
use crate::query::{QueryAtom, Term, CQ};

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub concepts: Vec<String>,
    pub roles: Vec<String>,
    pub individuals: Vec<String>,
    pub variables: Vec<String>,
    pub max_axioms: usize,
    pub max_assertions: usize,
    pub max_multiplicity: u64,
    pub max_atoms: usize,
    /// Percentage chance that an axiom is a disjointness.
    pub disjointness_pct: u32,
}

impl Default for GenConfig {
    fn default() -> Self {
        let names = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        GenConfig {
            concepts: names(&["A", "B", "C"]),
            roles: names(&["P", "R"]),
            individuals: names(&["a", "b", "c"]),
            variables: names(&["x", "y", "z", "u"]),
            max_axioms: 10,
            max_assertions: 12,
            max_multiplicity: 5,
            max_atoms: 4,
            disjointness_pct: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub seed: u64,
    pub ontology: BagOntology,
    pub query: CQ,
}

pub struct Generator {
    rng: ChaCha8Rng,
    config: GenConfig,
}

impl Generator {
    pub fn new(seed: u64) -> Self {
        Self::with_config(seed, GenConfig::default())
    }

    pub fn with_config(seed: u64, config: GenConfig) -> Self {
        Generator {
            rng: ChaCha8Rng::seed_from_u64(seed),
            config,
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn pick<'a>(&mut self, xs: &'a [String]) -> &'a String {
        xs.choose(&mut self.rng).expect("non-empty vocabulary")
    }

    fn role(&mut self) -> Role {
        let name = self.pick(&self.config.roles.clone()).clone();
        if self.rng.gen_bool(0.5) {
            Role::inverse_of(name)
        } else {
            Role::atomic(name)
        }
    }

    pub fn basic_concept(&mut self) -> Concept {
        if self.rng.gen_bool(0.5) {
            Concept::atomic(self.pick(&self.config.concepts.clone()).clone())
        } else {
            Concept::Exists(self.role())
        }
    }

    pub fn tbox(&mut self) -> TBox {
        let n = self.rng.gen_range(0..=self.config.max_axioms);
        let axioms: Vec<Axiom> = (0..n)
            .map(|_| {
                let a = self.basic_concept();
                let b = self.basic_concept();
                if self.rng.gen_ratio(self.config.disjointness_pct, 100) {
                    Axiom::ConceptDisj(a, b)
                } else {
                    Axiom::ConceptIncl(a, b)
                }
            })
            .collect();
        TBox::core(axioms).expect("concept axioms only")
    }

    pub fn abox(&mut self) -> BagABox {
        let n = self
            .rng
            .gen_range(self.config.max_assertions / 2..=self.config.max_assertions);
        let individuals = self.config.individuals.clone();
        let mut abox = BagABox::new();
        for _ in 0..n {
            let assertion = if self.rng.gen_bool(0.5) {
                Assertion::concept(
                    self.pick(&self.config.concepts.clone()).clone(),
                    self.pick(&individuals).clone(),
                )
            } else {
                Assertion::role(
                    self.pick(&self.config.roles.clone()).clone(),
                    self.pick(&individuals).clone(),
                    self.pick(&individuals).clone(),
                )
            };
            let m = self.rng.gen_range(1..=self.config.max_multiplicity);
            if abox.multiplicity(&assertion) > 0 {
                continue;
            }
            abox.insert(assertion, m).expect("small multiplicities");
        }
        abox
    }

    fn term(&mut self, used: &[String]) -> Term {
        if self.rng.gen_ratio(1, 6) {
            Term::constant(self.pick(&self.config.individuals.clone()).clone())
        } else if !used.is_empty() && self.rng.gen_bool(0.6) {
            Term::var(self.pick(used).clone())
        } else {
            Term::var(self.pick(&self.config.variables.clone()).clone())
        }
    }

    /// A candidate CQ; may be unsafe or unrooted. Later atoms tend to reuse
    /// earlier variables, so most candidates are connected.
    pub fn cq_candidate(&mut self) -> Option<CQ> {
        let n = self.rng.gen_range(1..=self.config.max_atoms);
        let mut atoms = Vec::with_capacity(n);
        let mut used: Vec<String> = Vec::new();
        for _ in 0..n {
            let roll = self.rng.gen_range(0..10);
            let atom = match roll {
                0..=3 => QueryAtom::concept(self.pick(&self.config.concepts.clone()).clone(), self.term(&used)),
                4..=8 => {
                    let s = self.term(&used);
                    let o = self.term(&used);
                    QueryAtom::role(self.pick(&self.config.roles.clone()).clone(), s, o)
                }
                _ => QueryAtom::eq(self.term(&used), self.term(&used)),
            };
            for t in atom.terms() {
                if let Some(v) = t.as_var() {
                    if !used.iter().any(|u| u == v) {
                        used.push(v.to_string());
                    }
                }
            }
            atoms.push(atom);
        }
        let mut vars: Vec<String> = atoms
            .iter()
            .filter(|a| a.is_relational())
            .flat_map(|a| a.terms())
            .filter_map(|t| t.as_var().map(str::to_string))
            .collect();
        vars.sort();
        vars.dedup();
        vars.shuffle(&mut self.rng);
        let k = self.rng.gen_range(0..=vars.len().min(2));
        let mut answers: Vec<String> = vars.into_iter().take(k).collect();
        answers.sort();
        CQ::new(answers, atoms).ok()
    }

    pub fn rooted_cq(&mut self) -> CQ {
        loop {
            if let Some(q) = self.cq_candidate().filter(CQ::is_rooted) {
                return q;
            }
        }
    }

    /// A satisfiable core ontology with a rooted query.
    pub fn instance(&mut self, seed: u64) -> Instance {
        let ontology = loop {
            let k = BagOntology::new(self.tbox(), self.abox());
            if k.is_satisfiable() {
                break k;
            }
        };
        Instance {
            seed,
            ontology,
            query: self.rooted_cq(),
        }
    }
}

/// The `n`-th instance of the corpus rooted at `seed`; each instance has
/// its own stream so instances can be regenerated independently.
pub fn instance(seed: u64, n: u64) -> Instance {
    let s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(n);
    Generator::new(s).instance(s)
}

pub fn corpus(seed: u64, count: usize) -> Vec<Instance> {
    (0..count as u64).map(|n| instance(seed, n)).collect()
}
