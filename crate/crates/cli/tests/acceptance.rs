//! One line per acceptance criterion; exits nonzero if any fails.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use admg_core::checks::{
    check_augmentation, check_ef, check_gm, check_lm, check_nm, check_um, disjoint_triples,
};
use admg_core::corpus::{
    clique_latent_table, dyadic_law, perturb, random_admg, random_bidirected, random_table,
    random_unconfounded,
};
use admg_core::fixing::fixable_sets;
use admg_core::sim::{
    generate_system, verify_consistency, verify_fixing_identity, verify_swig_markov, EquationSystem,
};
use admg_core::transform::{
    enumerate_bidirected_cliques, expand_clique, expand_noise, expand_pairwise,
    m_separated_by_augmentation, marginalize, CliqueScope,
};
use admg_core::walk::m_connected_oracle;
use admg_core::{parse_graph, GraphClass, JointTable, MixedGraph, Rational, Scalar, StateSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;


type Outcome = Result<String, String>;

const CLIQUES6: &str = "vertices: V1 V2 V3 V4 V5 V6\n\
    V1 <-> V2\nV1 <-> V3\nV2 <-> V4\nV4 <-> V5\nV4 -> V3\nV4 -> V6\n";
const VERMA: &str = "vertices: V1 V2 V3 V4\nV1 -> V2\nV2 -> V3\nV3 -> V4\nV2 <-> V4\n";

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn clique_codes(g: &MixedGraph) -> String {
    enumerate_bidirected_cliques(g, CliqueScope::All)
        .into_iter()
        .map(|c| {
            c.iter()
                .map(|v| g.label(v).trim_start_matches('V'))
                .collect::<String>()
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn clique_projection() -> Outcome {
    let g = parse_graph(CLIQUES6).map_err(err)?;
    let keep = g.set_of(&["V1", "V2", "V3", "V5", "V6"]).map_err(err)?;
    let m = marginalize(&g, keep).map_err(err)?;
    let edges: Vec<String> = m
        .bidirected_edges()
        .map(|(a, b)| format!("{}{}", m.label(a), m.label(b)))
        .collect();
    let want = ["V1V2", "V1V3", "V2V3", "V2V6", "V3V5", "V3V6", "V5V6"];
    ensure(edges == want, || format!("bidirected edges {edges:?}"))?;
    ensure(m.directed_count() == 0, || {
        "unexpected directed edges".into()
    })?;
    let before = clique_codes(&g);
    ensure(before == "1, 2, 3, 4, 5, 6, 12, 13, 24, 45", || {
        format!("cliques before: {before}")
    })?;
    let after = clique_codes(&m);
    ensure(
        after == "1, 2, 3, 5, 6, 12, 13, 23, 26, 35, 36, 56, 123, 236, 356",
        || format!("cliques after: {after}"),
    )?;
    Ok("7 bidirected edges, 10 and 15 cliques".into())
}

fn separation_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut queries = 0;
    for i in 0..200 {
        let n = 1 + i % 5;
        let g = random_admg(&mut rng, n, 0.4, 0.3);
        for q in disjoint_triples(g.all()) {
            let fast = g.m_connected(&q).map_err(err)?;
            let walks = m_connected_oracle(&g, &q, 2 * n);
            let aug = !m_separated_by_augmentation(&g, &q).map_err(err)?;
            ensure(fast == walks && fast == aug, || {
                format!("disagreement on\n{g}query {q:?}: reach={fast} walk={walks} aug={aug}")
            })?;
            queries += 1;
        }
    }
    Ok(format!("{queries} queries over 200 graphs"))
}

fn unconfounded_equivalences() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let verdicts = |g: &MixedGraph, t: &JointTable<Rational>| -> Result<[bool; 5], String> {
        let order = g.topological_orders(1).map_err(err)?.remove(0);
        Ok([
            check_lm(g, t, &order, 0.0).map_err(err)?.passed,
            check_gm(g, t, 0.0).map_err(err)?.passed,
            check_augmentation(g, t, 0.0).map_err(err)?.passed,
            check_ef(g, t, 0.0).map_err(err)?.passed,
            check_nm(g, t, 0.0).map_err(err)?.passed,
        ])
    };
    let mut rejected = 0;
    for i in 0..100 {
        let n = 1 + i % 4;
        let g = random_unconfounded(&mut rng, n, 0.5, 0.5);
        let member = clique_latent_table(&mut rng, &g, 2, 2).map_err(err)?;
        let v = verdicts(&g, &member)?;
        ensure(v.iter().all(|&x| x), || {
            format!("member rejected {v:?} on\n{g}")
        })?;
        let other = perturb(&mut rng, &member);
        let v = verdicts(&g, &other)?;
        ensure(v.iter().all(|&x| x == v[0]), || {
            format!("verdicts differ {v:?} on\n{g}")
        })?;
        rejected += usize::from(!v[0]);
    }
    Ok(format!(
        "100 members pass; 100 perturbed agree ({rejected} rejected by all five)"
    ))
}

/// `sum_{v2} p(v4 | v1, v2, v3) p(v2 | v1)`, indexed `[v1][v3][v4]`.
fn verma_functional(p2: &[Vec<Rational>], p4: &[Vec<Rational>]) -> Vec<Vec<Vec<Rational>>> {
    (0..2)
        .map(|v1| {
            (0..2)
                .map(|v3| {
                    (0..2)
                        .map(|v4| {
                            (0..2).fold(Rational::from_ratio(0, 1), |acc, v2| {
                                acc + p4[v1 * 4 + v2 * 2 + v3][v4].clone() * p2[v1][v2].clone()
                            })
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

fn verma_strictness() -> Outcome {
    let g = parse_graph(VERMA).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let member = clique_latent_table(&mut rng, &g, 2, 2).map_err(err)?;
    ensure(check_gm(&g, &member, 0.0).map_err(err)?.passed, || {
        "member fails GM".into()
    })?;
    ensure(check_nm(&g, &member, 0.0).map_err(err)?.passed, || {
        "member fails NM".into()
    })?;

    let start = Instant::now();
    let mut draws = 0;
    let table = loop {
        draws += 1;
        if start.elapsed() > Duration::from_secs(300) {
            return Err(format!("no candidate after {draws} draws"));
        }
        let p1 = dyadic_law(&mut rng, 2);
        let p2: Vec<Vec<Rational>> = (0..2).map(|_| dyadic_law(&mut rng, 2)).collect();
        let p3: Vec<Vec<Rational>> = (0..2).map(|_| dyadic_law(&mut rng, 2)).collect();
        let p4: Vec<Vec<Rational>> = (0..8).map(|_| dyadic_law(&mut rng, 2)).collect();
        let f = verma_functional(&p2, &p4);
        if f[0] == f[1] {
            continue;
        }
        let mut probs = Vec::with_capacity(16);
        for idx in 0..16usize {
            let (v1, v2, v3, v4) = (idx >> 3 & 1, idx >> 2 & 1, idx >> 1 & 1, idx & 1);
            probs.push(
                p1[v1].clone()
                    * p2[v1][v2].clone()
                    * p3[v2][v3].clone()
                    * p4[v1 * 4 + v2 * 2 + v3][v4].clone(),
            );
        }
        let space = StateSpace::for_graph(&g, 2).map_err(err)?;
        break JointTable::new(space, probs).map_err(err)?;
    };
    ensure(check_gm(&g, &table, 0.0).map_err(err)?.passed, || {
        "candidate fails GM".into()
    })?;
    let nm = check_nm(&g, &table, 0.0).map_err(err)?;
    ensure(!nm.passed, || "candidate passes NM".into())?;
    let w = nm
        .violations
        .iter()
        .find(|v| v.fixed == ["V3"])
        .ok_or_else(|| "no violation with {V3} fixed".to_string())?;
    Ok(format!(
        "{draws} draw(s); witness {} with {{V3}} fixed",
        w.constraint
    ))
}

fn systems() -> Result<Vec<EquationSystem>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    (0..50)
        .map(|i| {
            let n = 1 + i % 4;
            let g = random_admg(&mut rng, n, 0.5, 0.5);
            generate_system(&g, rng.gen(), 2, 2).map_err(err)
        })
        .collect()
}

fn fixing_identity(systems: &[EquationSystem]) -> Outcome {
    let (mut sets, mut checks, mut skipped) = (0, 0, 0);
    for s in systems {
        for fs in fixable_sets(s.graph()).map_err(err)? {
            let r = verify_fixing_identity(s, fs.set, true).map_err(err)?;
            ensure(r.passed, || format!("{:?} on\n{}", r.violations, s.graph()))?;
            sets += 1;
            checks += r.checked;
            skipped += r.skipped_slices;
        }
    }
    Ok(format!(
        "{sets} fixable sets, {checks} comparisons, {skipped} undefined slices"
    ))
}

fn equations_imply_nested(systems: &[EquationSystem]) -> Outcome {
    for s in systems {
        let r = check_nm(s.graph(), &s.induced_joint(), 0.0).map_err(err)?;
        ensure(r.passed, || format!("{:?} on\n{}", r.violations, s.graph()))?;
    }
    Ok(format!("{} induced laws pass NM", systems.len()))
}

fn consistency_and_swig(systems: &[EquationSystem]) -> Outcome {
    let mut interventions = 0;
    for s in systems {
        let r = verify_consistency(s);
        ensure(r.passed, || {
            format!("consistency {:?} on\n{}", r.violations, s.graph())
        })?;
        for iv in s
            .interventions()
            .into_iter()
            .filter(|i| matches!(i.len(), 1 | 2))
        {
            let r = verify_swig_markov(s, &iv).map_err(err)?;
            ensure(r.passed, || {
                format!("swig {iv:?}: {:?} on\n{}", r.violations, s.graph())
            })?;
            interventions += 1;
        }
    }
    Ok(format!(
        "{} systems consistent; {interventions} interventions pass GM",
        systems.len()
    ))
}

fn expansion_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for i in 0..200 {
        let g = random_admg(&mut rng, 1 + i % 6, 0.4, 0.4);
        let dags = [
            expand_pairwise(&g).map_err(err)?,
            expand_clique(&g, CliqueScope::All).map_err(err)?,
        ];
        for e in &dags {
            ensure(e.classify().contains(&GraphClass::Dag), || {
                format!("not a DAG:\n{e}")
            })?;
        }
        let noise = expand_noise(&g).map_err(err)?;
        ensure(noise.classify().contains(&GraphClass::Unconfounded), || {
            format!("not unconfounded:\n{noise}")
        })?;
        for e in dags.iter().chain([&noise]) {
            let back = marginalize(e, g.all()).map_err(err)?;
            ensure(back == g, || format!("round trip of\n{g}gave\n{back}"))?;
        }
    }
    Ok("200 graphs, 3 expansions each".into())
}

fn bidirected_um_gm() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut verdicts = BTreeSet::new();
    for i in 0..100 {
        let g = random_bidirected(&mut rng, 1 + i % 5, 0.5);
        let member = clique_latent_table(&mut rng, &g, 2, 2).map_err(err)?;
        let tables = [
            member.clone(),
            perturb(&mut rng, &member),
            random_table(&mut rng, StateSpace::for_graph(&g, 2).map_err(err)?),
        ];
        for t in &tables {
            let um = check_um(&g, t, 0.0).map_err(err)?.passed;
            let gm = check_gm(&g, t, 0.0).map_err(err)?.passed;
            ensure(um == gm, || format!("UM={um} GM={gm} on\n{g}"))?;
            verdicts.insert(um);
        }
    }
    ensure(verdicts.len() == 2, || {
        "corpus lacks members or non-members".into()
    })?;
    Ok("300 tables over 100 graphs agree".into())
}

fn cli_golden() -> Outcome {
    let bad = golden::mismatches();
    ensure(bad.is_empty(), || format!("mismatched: {bad:?}"))?;
    Ok(format!("{} invocations byte-stable", golden::CASES.len()))
}

fn main() {
    let mut failed = 0;
    let mut report = |n: usize, name: &str, budget: u64, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = f();
        let took = start.elapsed();
        let outcome = outcome.and_then(|detail| {
            if took > Duration::from_secs(budget) {
                Err(format!("took {took:.2?}, budget {budget}s"))
            } else {
                Ok(detail)
            }
        });
        match outcome {
            Ok(detail) => println!("criterion {n:>2}: PASS  {name}: {detail} ({took:.2?})"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n:>2}: FAIL  {name}: {detail}");
            }
        }
    };
    report(
        1,
        "clique marginalization golden",
        1,
        &mut clique_projection,
    );
    report(
        2,
        "m-separation triple oracle",
        120,
        &mut separation_oracles,
    );
    report(
        3,
        "unconfounded model equivalences",
        600,
        &mut unconfounded_equivalences,
    );
    report(
        4,
        "global Markov strictly contains nested Markov",
        300,
        &mut verma_strictness,
    );
    let systems = systems();
    let with_systems = |f: fn(&[EquationSystem]) -> Outcome| {
        let s = &systems;
        move || s.as_deref().map_err(Clone::clone).and_then(f)
    };
    report(
        5,
        "fixing identification identity",
        600,
        &mut with_systems(fixing_identity),
    );
    report(
        6,
        "equation systems imply nested Markov",
        600,
        &mut with_systems(equations_imply_nested),
    );
    report(
        7,
        "consistency and SWIG global Markov",
        600,
        &mut with_systems(consistency_and_swig),
    );
    report(8, "expansion round trip", 60, &mut expansion_round_trip);
    report(
        9,
        "bidirected UM and GM coincide",
        300,
        &mut bidirected_um_gm,
    );
    report(10, "CLI golden suite", 60, &mut cli_golden);
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
