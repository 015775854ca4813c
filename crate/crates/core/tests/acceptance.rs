//! Acceptance checks, one PASS/FAIL line each.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use bago_core::answer::answers_via;
use bago_core::bagalg::{eval_balg_ordered, eval_cq, eval_partitioned, AnswerBag, BalgQuery};
use bago_core::chase::{chase, required_depth};
use bago_core::generate::{self, Generator};
use bago_core::ontology::parse_abox;
use bago_core::par::Execution;
use bago_core::rewrite::canonical_subsets;
use bago_core::three_col::{colouring_model, gen_3col, parse_colouring, parse_graph, Variant};
use bago_core::{
    bag_cert, certain_answers, parse_cq, rewrite, BagInterpretation, BagOntology, CertRequest, Element, Error, Role,
    Term, Threshold, Via,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;

const CORPUS_SEED: u64 = 2024;
const CORPUS_SIZE: usize = 200;

type Check = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn bag(arity: usize, entries: &[(&[&str], u64)]) -> AnswerBag {
    let mut b = AnswerBag::new(arity);
    for (t, m) in entries {
        b.insert(t.iter().map(|s| s.to_string()).collect(), *m).unwrap();
    }
    b
}

fn both_paths(q: &str, k: &BagOntology) -> std::result::Result<(AnswerBag, AnswerBag), String> {
    let q = parse_cq(q).map_err(|e| e.to_string())?;
    let c = answers_via(&q, k, Via::Chase, Execution::Auto).map_err(|e| e.to_string())?;
    let r = answers_via(&q, k, Via::Rewrite, Execution::Auto).map_err(|e| e.to_string())?;
    Ok((c, r))
}

fn criterion_1() -> Check {
    let (c, r) = both_paths("q(x) :- hasMngr(x,y)", &k_ex())?;
    let want = bag(1, &[(&["Lee"], 3)]);
    ensure!(c == want, "chase path gave {c}");
    ensure!(r == want, "rewrite path gave {r}");
    let q = parse_cq("q(x) :- hasMngr(x,y)").unwrap();
    let req = |k| CertRequest::new(q.clone(), k_ex(), vec!["Lee".into()], k).unwrap();
    for via in [Via::Chase, Via::Rewrite] {
        ensure!(
            bag_cert(&req(Threshold::Finite(3)), via).unwrap(),
            "BagCert >= 3 rejected"
        );
        ensure!(
            !bag_cert(&req(Threshold::Finite(4)), via).unwrap(),
            "BagCert >= 4 accepted"
        );
    }
    Ok("q_ex over K_ex = {Lee -> 3} via chase and rewrite".into())
}

fn criterion_2() -> Check {
    let k = k_r();
    let lee = Element::named("Lee");
    let hill = Element::named("Hill");
    let w = Element::anon(lee.clone(), Role::atomic("hasMngr"), 1);
    let mut model = BagInterpretation::new();
    model.set_concept("Emp", lee.clone(), 1);
    model.set_concept("Mngr", hill.clone(), 1);
    model.set_concept("Mngr", w.clone(), 1);
    model.set_role("hasMngr", lee.clone(), w.clone(), 1);

    let c = chase(&k, 3).map_err(|e| e.to_string())?;
    let mut stage1 = model.clone();
    stage1.set_concept("Mngr", w.clone(), 0);
    ensure!(
        c.stage(1).unwrap() == &stage1,
        "C1 differs:\n{}",
        c.stage(1).unwrap().dump_lines().join("\n")
    );
    ensure!(c.stage(2).unwrap() == &model, "C2 differs from the canonical model");
    ensure!(c.stage(3).unwrap() == &model, "chase not at a fixpoint by stage 2");

    let q_nr = parse_cq("q() :- Mngr(y)").unwrap();
    let on_chase = eval_cq(&q_nr, c.union()).map_err(|e| e.to_string())?;
    ensure!(
        on_chase == bag(0, &[(&[], 2)]),
        "q_nr over the canonical model gave {on_chase}"
    );
    ensure!(brute_cq(&q_nr, c.union()) == on_chase, "brute force disagrees on q_nr");
    let i_nr = BagInterpretation::from_abox(&parse_abox("Emp(Lee)\nhasMngr(Lee,Hill)\nMngr(Hill)\n").unwrap());
    let on_nr = eval_cq(&q_nr, &i_nr).map_err(|e| e.to_string())?;
    ensure!(on_nr == bag(0, &[(&[], 1)]), "q_nr over I_nr gave {on_nr}");
    ensure!(
        matches!(certain_answers(&q_nr, &k), Err(Error::NotRooted(_))),
        "q_nr was not refused as unrooted"
    );
    Ok(
        "canonical model of K_r element-for-element (C1 without Mngr(w), complete from C2); q_nr: 2 vs 1; refused"
            .into(),
    )
}

fn criterion_3() -> Check {
    let q = parse_cq("q(x) :- hasMngr(x,y), Mngr(y)").unwrap();
    let rw = rewrite(&q, &t_r()).map_err(|e| e.to_string())?;
    let zs: Vec<BTreeSet<String>> = rw.branches.iter().map(|b| b.z.clone()).collect();
    ensure!(
        zs == vec![BTreeSet::new(), BTreeSet::from(["y".to_string()])],
        "branches for {zs:?}"
    );
    let v = |s: &str| Term::var(s);
    let expected_empty = BalgQuery::project(
        vec!["y".into()],
        BalgQuery::join(
            BalgQuery::atom("hasMngr", vec![v("x"), v("y")]),
            BalgQuery::max_union(
                BalgQuery::atom("Mngr", vec![v("y")]),
                BalgQuery::project(vec!["z".into()], BalgQuery::atom("hasMngr", vec![v("z"), v("y")])),
            ),
        ),
    );
    let exists_mngr = || BalgQuery::project(vec!["y".into()], BalgQuery::atom("hasMngr", vec![v("x"), v("y")]));
    let expected_y = BalgQuery::diff(
        BalgQuery::max_union(BalgQuery::atom("Emp", vec![v("x")]), exists_mngr()),
        exists_mngr(),
    );
    ensure!(
        alpha_normal(&rw.branches[0].compiled) == alpha_normal(&expected_empty),
        "z = {{}} branch is {}",
        rw.branches[0].compiled
    );
    ensure!(
        alpha_normal(&rw.branches[1].compiled) == alpha_normal(&expected_y),
        "z = {{y}} branch is {}",
        rw.branches[1].compiled
    );
    let (c, r) = both_paths("q(x) :- hasMngr(x,y), Mngr(y)", &k_r())?;
    let want = bag(1, &[(&["Lee"], 1)]);
    ensure!(c == want && r == want, "chase {c} / rewrite {r}");
    Ok("two branches, structurally equal to the hand-written ones; {Lee -> 1} on both paths".into())
}

fn criterion_4() -> Check {
    let (c, r) = both_paths("q(x) :- R(x,y), B(y)", &single_chain())?;
    ensure!(c.get(&["a"]) == 7, "first fixture via chase gave {c}");
    ensure!(r == c, "first fixture via rewrite gave {r}");
    let (c2, r2) = both_paths("q(x,z) :- R(x,y), B(y), P(z,u), D(u)", &twin_chain())?;
    ensure!(c2.get(&["a", "a"]) == 448, "second fixture via chase gave {c2}");
    ensure!(r2 == c2, "second fixture via rewrite gave {r2}");
    Ok(format!(
        "a -> {}, (a,a) -> {} on both paths",
        c.get(&["a"]),
        c2.get(&["a", "a"])
    ))
}

fn corpus() -> Vec<generate::Instance> {
    generate::corpus(CORPUS_SEED, CORPUS_SIZE)
}

fn criterion_5() -> Check {
    let mut agree = 0;
    let mut trivial = 0;
    for inst in corpus() {
        let q = &inst.query;
        let k = &inst.ontology;
        let c = chase(k, required_depth(q)).map_err(|e| e.to_string())?;
        let by_chase = eval_cq(q, c.union()).map_err(|e| e.to_string())?;
        let rw = rewrite(q, &k.tbox).map_err(|e| format!("instance {}: {e}", inst.seed))?;
        let by_rewrite = rw
            .document()
            .eval(&BagInterpretation::from_abox(&k.abox))
            .map_err(|e| e.to_string())?;
        ensure!(
            by_chase == by_rewrite,
            "instance seed {}: {q} -> chase {by_chase} / rewrite {by_rewrite}",
            inst.seed
        );
        agree += 1;
        trivial += usize::from(by_chase.is_empty());
    }
    Ok(format!(
        "{agree}/{CORPUS_SIZE} exact multiset matches ({trivial} with empty answers)"
    ))
}

fn criterion_6() -> Check {
    for inst in corpus() {
        let q = &inst.query;
        let c = chase(&inst.ontology, required_depth(q)).map_err(|e| e.to_string())?;
        let whole = eval_cq(q, c.union()).map_err(|e| e.to_string())?;
        let mut sum = AnswerBag::new(q.arity());
        for z in canonical_subsets(&q.existential_vars()) {
            let part = eval_partitioned(q, &z, &c).map_err(|e| e.to_string())?;
            for (t, m) in part.iter() {
                sum.insert(t.clone(), m).unwrap();
            }
        }
        ensure!(sum == whole, "instance seed {}: {q}: sum {sum} vs {whole}", inst.seed);
    }
    Ok(format!("{CORPUS_SIZE}/{CORPUS_SIZE} instances"))
}

fn criterion_7() -> Check {
    for inst in corpus() {
        let q = &inst.query;
        let n = required_depth(q);
        let c = chase(&inst.ontology, n + 3).map_err(|e| e.to_string())?;
        let at_n = eval_cq(q, c.stage(n).unwrap()).map_err(|e| e.to_string())?;
        let at_n3 = eval_cq(q, c.union()).map_err(|e| e.to_string())?;
        ensure!(
            at_n == at_n3,
            "instance seed {}: {q}: C_n {at_n} vs C_n+3 {at_n3}",
            inst.seed
        );
    }
    Ok(format!("{CORPUS_SIZE}/{CORPUS_SIZE} instances"))
}

fn criterion_8() -> Check {
    for inst in corpus() {
        let q = &inst.query;
        let k = &inst.ontology;
        let expected = set_certain(q, &k.tbox, &k.abox);
        let flat = BagOntology::new(k.tbox.clone(), k.abox.flattened());
        let support: BTreeSet<Vec<String>> = certain_answers(q, &flat)
            .map_err(|e| e.to_string())?
            .support()
            .into_iter()
            .collect();
        ensure!(
            support == expected,
            "instance seed {}: {q}: {support:?} vs {expected:?}",
            inst.seed
        );
        let bag_support: BTreeSet<Vec<String>> = certain_answers(q, k)
            .map_err(|e| e.to_string())?
            .support()
            .into_iter()
            .collect();
        ensure!(
            bag_support == expected,
            "instance seed {}: support changes with multiplicities",
            inst.seed
        );
    }
    let mut sat = 0;
    let mut unsat = 0;
    for seed in 0..300 {
        let mut g = Generator::new(seed);
        let k = BagOntology::new(g.tbox(), g.abox());
        let verdict = k.is_satisfiable();
        ensure!(
            verdict == set_satisfiable(&k.tbox, &k.abox),
            "seed {seed}: satisfiability differs from the oracle"
        );
        let flat = BagOntology::new(k.tbox.clone(), k.abox.flattened());
        let scaled = BagOntology::new(k.tbox.clone(), k.abox.scaled(4).unwrap());
        ensure!(
            flat.is_satisfiable() == verdict && scaled.is_satisfiable() == verdict,
            "seed {seed}: satisfiability depends on multiplicities"
        );
        if verdict {
            sat += 1;
        } else {
            unsat += 1;
        }
    }
    Ok(format!(
        "{CORPUS_SIZE} answer sets match the set oracle; 300 satisfiability verdicts ({sat} sat, {unsat} unsat) invariant"
    ))
}

fn criterion_9() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let cases = 600;
    for n in 0..cases {
        let i = random_interpretation(&mut rng);
        let q = random_cq(&mut rng);
        let got = eval_cq(&q, &i).map_err(|e| e.to_string())?;
        let want = brute_cq(&q, &i);
        ensure!(got == want, "CQ case {n}: {q}: {got} vs {want}");

        let b = random_balg(&mut rng, 3);
        let order: Vec<String> = balg_vars(&b).into_iter().collect();
        let got = eval_balg_ordered(&b, &order, &i).map_err(|e| format!("BALG case {n}: {b}: {e}"))?;
        let want = naive_balg(&b, &order, &i);
        ensure!(got == want, "BALG case {n}: {b}: {got} vs {want}");
    }
    Ok(format!(
        "{cases} CQ and {cases} BALG cases on interpretations with at most 6 elements"
    ))
}

fn criterion_10() -> Check {
    let graphs = [
        (
            "K3",
            "v a b c\ne a b\ne b c\ne a c\n",
            "a r\nb g\nc b\n",
            "a r\nb r\nc g\n",
        ),
        (
            "K4 minus an edge",
            "v a b c d\ne a b\ne a c\ne b c\ne b d\ne c d\n",
            "a r\nb g\nc b\nd r\n",
            "a r\nb g\nc b\nd g\n",
        ),
    ];
    let mut report = Vec::new();
    for (name, graph, good, bad) in graphs {
        let g = parse_graph(graph).map_err(|e| e.to_string())?;
        let n = g.vertices().len() as u64;
        let gadget = gen_3col(&g, Variant::Core);
        let value = |colouring: &str| -> std::result::Result<u64, String> {
            let c = parse_colouring(colouring, &g).map_err(|e| e.to_string())?;
            let m = colouring_model(&g, &c);
            let got = eval_cq(&gadget.query, &m).map_err(|e| e.to_string())?;
            ensure!(brute_cq(&gadget.query, &m) == got, "brute force disagrees");
            Ok(got.get::<&str>(&[]))
        };
        let v_good = value(good)?;
        let v_bad = value(bad)?;
        ensure!(v_good == 3 * n + 1, "{name}: valid colouring gave {v_good}");
        ensure!(v_bad >= 2 * (3 * n + 1), "{name}: invalid colouring gave {v_bad}");
        report.push(format!("{name}: {v_good} valid, {v_bad} invalid"));
    }
    Ok(report.join("; "))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("employee golden answer", criterion_1),
        ("manager canonical model and non-rooted query", criterion_2),
        ("rewriting golden branches", criterion_3),
        ("arithmetic-union fixtures", criterion_4),
        ("chase vs rewriting on the random corpus", criterion_5),
        ("partition identity", criterion_6),
        ("depth sufficiency", criterion_7),
        ("set-semantics compatibility", criterion_8),
        ("oracle equivalence", criterion_9),
        ("3-colourability models", criterion_10),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let start = Instant::now();
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let ms = t.elapsed().as_millis();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{ms} ms]", n + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{ms} ms]", n + 1);
            }
        }
    }
    println!(
        "{} of 10 criteria passed in {} ms",
        10 - failed,
        start.elapsed().as_millis()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
