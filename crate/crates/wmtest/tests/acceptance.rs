//! Acceptance suite. Every criterion prints one PASS/FAIL line; the test
//! fails if any criterion does.

mod common;

use std::collections::BTreeSet;
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wmtest::axioms::{compute_ob, compute_ob_one_hop, evaluate_axiom, Axiom, MemoryModel};
use wmtest::decide::{brute_force_decide, decide, Options, Outcome, Verdict};
use wmtest::hardness::{
    all_1in3, brute_force_1in3, bounded_value_transform, generate, parse_formula, plan, witness_extension, Family,
    Formula,
};
use wmtest::model::AbstractExecution;
use wmtest::check_concrete;

type Check = Result<String, String>;

const SEARCH_BUDGET: u64 = 10_000_000;
const RANDOM_EXECUTIONS: usize = 500;
/// Node budgets on reduction instances in the lattice check: the
/// interleaving explorers never finish there, and the rf search only
/// finishes quickly under the models an instance was built for.
const OPERATIONAL_BUDGET: u64 = 500;
const CROSS_BUDGET: u64 = 2_000;

const ALL_MODELS: [MemoryModel; 9] = [
    MemoryModel::SC,
    MemoryModel::TSO,
    MemoryModel::PSO,
    MemoryModel::Relaxed,
    MemoryModel::RelaxedAcyclic,
    MemoryModel::WRA,
    MemoryModel::RA,
    MemoryModel::SRA,
    MemoryModel::CM,
];

const RA_MODELS: [MemoryModel; 4] = [MemoryModel::WRA, MemoryModel::RA, MemoryModel::SRA, MemoryModel::CM];

fn family_models(family: Family) -> &'static [MemoryModel] {
    match family {
        Family::RelaxedAcyclic => &[MemoryModel::RelaxedAcyclic],
        Family::Ra => &RA_MODELS,
    }
}

fn formula(text: &str) -> Formula {
    parse_formula(text).expect("corpus formula")
}

/// Chain formula over n variables: clause i is (i, i+1, i+2), wrapping.
fn chain(n: usize, m: usize) -> Formula {
    let clauses = (0..m).map(|i| {
        let a = i % (n - 2);
        [a + 1, a + 2, a + 3]
    });
    Formula::new(n, clauses.collect()).expect("chain formula")
}

/// Satisfiable formulas with n ≤ 5 and m ≤ 3, the unsatisfiable 4-clause
/// instance on four variables and two unsatisfiable 4-clause instances on
/// five.
fn formula_corpus() -> Vec<Formula> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut out = vec![formula("3 1\n1 2 3")];
    for (n, m, take) in [(4, 1, 3), (4, 2, 3), (4, 3, 3), (5, 1, 7), (5, 2, 7), (5, 3, 7)] {
        let triples: Vec<[usize; 3]> = (1..=n)
            .flat_map(|a| (a + 1..=n).flat_map(move |b| (b + 1..=n).map(move |c| [a, b, c])))
            .collect();
        let mut seen = BTreeSet::new();
        while seen.len() < take {
            let mut clauses: Vec<[usize; 3]> = triples.choose_multiple(&mut rng, m).copied().collect();
            clauses.sort();
            seen.insert(clauses);
        }
        out.extend(seen.into_iter().map(|c| Formula::new(n, c).expect("sampled formula")));
    }
    out.push(formula("4 4\n1 2 3\n1 2 4\n1 3 4\n2 3 4"));
    out.push(formula("5 4\n1 2 3\n1 2 4\n1 2 5\n3 4 5"));
    out.push(formula("5 4\n1 2 4\n1 3 5\n2 3 4\n2 4 5"));
    out
}

fn label(f: &Formula) -> String {
    f.to_string().trim().replace('\n', "; ")
}

fn opts(budget: u64) -> Options {
    Options {
        budget: Some(budget),
        memo: true,
    }
}

fn definite(v: &Verdict) -> Result<bool, String> {
    match v.outcome {
        Outcome::Consistent => Ok(true),
        Outcome::Inconsistent => Ok(false),
        Outcome::Inconclusive => Err(format!("{} inconclusive after {} nodes", v.model, v.stats.nodes)),
    }
}

fn axiom_matrix() -> Check {
    let start = Instant::now();
    let named = [
        Axiom::WriteCoherence,
        Axiom::StrongWriteCoherence,
        Axiom::ReadCoherence,
        Axiom::WeakReadCoherence,
        Axiom::PorfAcyclicity,
        Axiom::RelaxedWriteCoherence,
        Axiom::RelaxedReadCoherence,
    ];
    let examples = common::axiom_examples();
    for ((name, x), axiom) in examples.iter().zip(named) {
        if evaluate_axiom(x, axiom) {
            return Err(format!("({name}) satisfies {axiom}"));
        }
    }
    let b = &examples[1].1;
    for axiom in [Axiom::WriteCoherence, Axiom::ReadCoherence, Axiom::WeakReadCoherence, Axiom::PorfAcyclicity] {
        if !evaluate_axiom(b, axiom) {
            return Err(format!("(b) violates {axiom}"));
        }
    }
    for m in [MemoryModel::RA, MemoryModel::WRA, MemoryModel::Relaxed, MemoryModel::RelaxedAcyclic] {
        if !check_concrete(b, m).unwrap() {
            return Err(format!("(b) rejected by {m}"));
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(1) {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!("{} executions, each violates its axiom; (b) passes the other four", examples.len()))
}

fn round_trip(corpus: &[Formula]) -> Check {
    let mut checked = 0;
    let (mut sat, mut unsat) = (0, 0);
    for f in corpus {
        let expected = brute_force_1in3(f).unwrap().is_some();
        if expected {
            sat += 1;
        } else {
            unsat += 1;
        }
        for family in [Family::RelaxedAcyclic, Family::Ra] {
            let x = generate(f, family);
            for &m in family_models(family) {
                let got = definite(&decide(&x, m, opts(SEARCH_BUDGET))).map_err(|e| format!("{}: {e}", label(f)))?;
                if got != expected {
                    return Err(format!("{} ({family}, {m}): consistent={got}, satisfiable={expected}", label(f)));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{} formulas ({sat} sat, {unsat} unsat), {checked} verdicts match", corpus.len()))
}

fn witness_completeness(corpus: &[Formula]) -> Check {
    let mut witnesses = 0;
    for f in corpus {
        for a in all_1in3(f).unwrap() {
            let relaxed = witness_extension(f, &a, Family::RelaxedAcyclic).map_err(|e| e.to_string())?;
            if !check_concrete(&relaxed, MemoryModel::RelaxedAcyclic).unwrap() {
                return Err(format!("{} with {a}: relaxed-acyclic witness rejected", label(f)));
            }
            let ra = witness_extension(f, &a, Family::Ra).map_err(|e| e.to_string())?;
            for m in [MemoryModel::SRA, MemoryModel::CM] {
                if !check_concrete(&ra, m).unwrap() {
                    return Err(format!("{} with {a}: ra witness rejected by {m}", label(f)));
                }
            }
            witnesses += 2;
        }
    }
    Ok(format!("{witnesses} witnesses accepted"))
}

fn distinct_values(x: &AbstractExecution) -> usize {
    x.events().iter().map(|e| e.value()).collect::<BTreeSet<_>>().len()
}

fn bounded_values(corpus: &[Formula]) -> Check {
    let mut checked = 0;
    for f in corpus {
        for family in [Family::RelaxedAcyclic, Family::Ra] {
            let p = plan(f, family);
            let x = p.execution();
            let y = bounded_value_transform(&x, &p).map_err(|e| e.to_string())?;
            for &m in family_models(family) {
                let before = definite(&decide(&x, m, opts(SEARCH_BUDGET)))?;
                let after = definite(&decide(&y, m, opts(SEARCH_BUDGET))).map_err(|e| format!("{}: {e}", label(f)))?;
                if before != after {
                    return Err(format!("{} ({family}, {m}): {before} before, {after} after", label(f)));
                }
                checked += 1;
            }
        }
    }
    let mut counts = Vec::new();
    let mut varying = Vec::new();
    for family in [Family::RelaxedAcyclic, Family::Ra] {
        let sizes: Vec<usize> = [(3, 1), (4, 2), (5, 3), (6, 4), (7, 5)]
            .iter()
            .map(|&(n, m)| {
                let p = plan(&chain(n, m), family);
                distinct_values(&bounded_value_transform(&p.execution(), &p).unwrap())
            })
            .collect();
        let listed = sizes.iter().map(ToString::to_string).collect::<Vec<_>>().join("/");
        counts.push(format!("{family} {listed} values for (n,m) = (3,1)..(7,5)"));
        if sizes[..3].iter().any(|&c| c != sizes[0]) {
            varying.push(family);
        }
    }
    let detail = format!("{checked} verdicts preserved; {}", counts.join(", "));
    if varying.is_empty() {
        Ok(detail)
    } else {
        let names = varying.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ");
        Err(format!("{detail}; count not constant over (3,1), (4,2), (5,3) for {names}"))
    }
}

/// Exact fit of `events = a·nm + b·n + c·m + d` through four sizes, then
/// the residual on every size.
fn bilinear_fit(points: &[((i64, i64), i64)]) -> Result<[i64; 4], String> {
    let at = |n: i64, m: i64| points.iter().find(|p| p.0 == (n, m)).map(|p| p.1).expect("grid point");
    let (n0, m0, n1, m1) = (3, 1, 5, 3);
    let (dn, dm) = (n1 - n0, m1 - m0);
    let mixed = at(n1, m1) - at(n1, m0) - at(n0, m1) + at(n0, m0);
    if mixed % (dn * dm) != 0 {
        return Err(format!("non-integer n·m coefficient {mixed}/{}", dn * dm));
    }
    let a = mixed / (dn * dm);
    let b = (at(n1, m0) - at(n0, m0) - a * dn * m0) / dn;
    let c = (at(n0, m1) - at(n0, m0) - a * n0 * dm) / dm;
    let d = at(n0, m0) - a * n0 * m0 - b * n0 - c * m0;
    for &((n, m), e) in points {
        let residual = e - (a * n * m + b * n + c * m + d);
        if residual != 0 {
            return Err(format!("residual {residual} at (n,m)=({n},{m})"));
        }
    }
    Ok([a, b, c, d])
}

fn structural_counts(corpus: &[Formula]) -> Check {
    let mut instances = 0;
    for family in [Family::RelaxedAcyclic, Family::Ra] {
        let locations = match family {
            Family::RelaxedAcyclic => 14,
            Family::Ra => 26,
        };
        if family.thread_names().len() != 23 || family.location_names().len() != locations {
            return Err(format!("{family}: declared names have the wrong size"));
        }
        for f in corpus.iter().filter(|f| f.clauses().len() >= 2) {
            let x = generate(f, family);
            if x.threads().len() != 23 || x.locations().len() != locations {
                return Err(format!(
                    "{} ({family}): {} threads, {} locations",
                    label(f),
                    x.threads().len(),
                    x.locations().len()
                ));
            }
            instances += 1;
        }
    }
    let mut fits = Vec::new();
    for family in [Family::RelaxedAcyclic, Family::Ra] {
        let sizes = [(3, 1), (5, 1), (3, 3), (5, 3), (4, 2), (6, 4), (7, 5)];
        let points: Vec<((i64, i64), i64)> = sizes
            .iter()
            .map(|&(n, m)| ((n as i64, m as i64), generate(&chain(n, m), family).len() as i64))
            .collect();
        let [a, b, c, d] = bilinear_fit(&points).map_err(|e| format!("{family}: {e}"))?;
        fits.push(format!("{family} events = {a}nm{b:+}n{c:+}m{d:+}"));
    }
    Ok(format!(
        "{instances} instances with m >= 2 have 23 threads and 14/26 locations; residual 0 over 7 sizes: {}",
        fits.join(", ")
    ))
}

fn random_corpus() -> Vec<AbstractExecution> {
    common::corpus(41, RANDOM_EXECUTIONS)
}

fn oracle_equivalence(corpus: &[AbstractExecution]) -> Check {
    let start = Instant::now();
    let mut compared = 0;
    for x in corpus {
        for m in ALL_MODELS {
            let fast = decide(x, m, Options::default());
            let slow = brute_force_decide(x, m).map_err(|e| e.to_string())?;
            if fast.outcome != slow.outcome {
                return Err(format!(
                    "{m}: decider {:?}, oracle {:?}\n{}",
                    fast.outcome,
                    slow.outcome,
                    wmtest::io::serialize_abstract(x)
                ));
            }
            compared += 1;
        }
    }
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(300) {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!("{} executions, {compared} verdicts agree", corpus.len()))
}

const IMPLICATIONS: [(MemoryModel, MemoryModel); 10] = [
    (MemoryModel::SC, MemoryModel::TSO),
    (MemoryModel::TSO, MemoryModel::CM),
    (MemoryModel::TSO, MemoryModel::SRA),
    (MemoryModel::TSO, MemoryModel::PSO),
    (MemoryModel::SRA, MemoryModel::RA),
    (MemoryModel::RA, MemoryModel::WRA),
    (MemoryModel::RA, MemoryModel::RelaxedAcyclic),
    (MemoryModel::CM, MemoryModel::WRA),
    (MemoryModel::PSO, MemoryModel::RelaxedAcyclic),
    (MemoryModel::RelaxedAcyclic, MemoryModel::Relaxed),
];

fn same_verdict(a: &Verdict, b: &Verdict) -> bool {
    a.outcome == b.outcome && a.witness == b.witness && a.stats == b.stats && a.diagnostic == b.diagnostic
}

/// Returns the number of implications left undecided by a budget.
fn check_lattice(x: &AbstractExecution, budget_for: impl Fn(MemoryModel) -> Option<u64>) -> Result<usize, String> {
    let verdicts: Vec<Verdict> = ALL_MODELS
        .iter()
        .map(|&m| decide(x, m, Options { budget: budget_for(m), memo: true }))
        .collect();
    let of = |m: MemoryModel| &verdicts[ALL_MODELS.iter().position(|&k| k == m).unwrap()];
    let mut undecided = 0;
    for (strong, weak) in IMPLICATIONS {
        match (of(strong).outcome, of(weak).outcome) {
            (Outcome::Consistent, Outcome::Inconsistent) => {
                return Err(format!("{strong} consistent but {weak} not\n{}", wmtest::io::serialize_abstract(x)))
            }
            (Outcome::Inconclusive, _) | (_, Outcome::Inconclusive) => undecided += 1,
            _ => {}
        }
    }
    for (alias, base) in [(MemoryModel::CC, MemoryModel::WRA), (MemoryModel::CCv, MemoryModel::SRA)] {
        let v = decide(x, alias, Options { budget: budget_for(base), memo: true });
        if !same_verdict(&v, of(base)) {
            return Err(format!("{alias} differs from {base}\n{}", wmtest::io::serialize_abstract(x)));
        }
    }
    Ok(undecided)
}

fn lattice(random: &[AbstractExecution], formulas: &[Formula]) -> Check {
    for x in random {
        let undecided = check_lattice(x, |_| None)?;
        assert_eq!(undecided, 0, "unbounded decisions are definite");
    }
    let mut generated = 0;
    let mut undecided = 0;
    let mut definite_pairs = 0;
    for f in formulas {
        for family in [Family::RelaxedAcyclic, Family::Ra] {
            let p = plan(f, family);
            let x = p.execution();
            let y = bounded_value_transform(&x, &p).map_err(|e| e.to_string())?;
            for x in [x, y] {
                let u = check_lattice(&x, |m| {
                    Some(if m.is_operational() { OPERATIONAL_BUDGET } else { CROSS_BUDGET })
                })
                .map_err(|e| format!("{} ({family}): {e}", label(f)))?;
                undecided += u;
                definite_pairs += IMPLICATIONS.len() - u;
                generated += 1;
            }
        }
    }
    Ok(format!(
        "{} random executions fully decided; {generated} generator outputs: {definite_pairs} implications checked, \
         {undecided} undecided (budgets {OPERATIONAL_BUDGET} interleaving / {CROSS_BUDGET} rf-search nodes); aliases identical",
        random.len()
    ))
}

fn litmus() -> Check {
    let cases = [
        ("store buffering", common::store_buffering(), vec![(MemoryModel::TSO, true), (MemoryModel::SC, false)]),
        ("message passing", common::message_passing(), vec![(MemoryModel::PSO, true), (MemoryModel::TSO, false)]),
        (
            "load buffering",
            common::load_buffering(),
            vec![(MemoryModel::TSO, false), (MemoryModel::PSO, false), (MemoryModel::Relaxed, true)],
        ),
    ];
    let mut checked = 0;
    for (name, x, expect) in cases {
        for (m, want) in expect {
            let got = decide(&x, m, Options::default()).is_consistent();
            let oracle = brute_force_decide(&x, m).unwrap().is_consistent();
            if got != want || oracle != want {
                return Err(format!("{name} under {m}: decider {got}, oracle {oracle}, expected {want}"));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} verdicts as expected"))
}

fn observed_before(random: &[AbstractExecution], formulas: &[Formula]) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut events = 0;
    for x in random {
        let Some(c) = common::random_concrete(x, &mut rng) else { continue };
        for t in 0..x.threads().len() {
            let mut prev: Option<wmtest::Relation> = None;
            for &e in x.thread_events(t) {
                let ob = compute_ob(&c, e);
                if !compute_ob_one_hop(&c, e).is_subset(&ob) {
                    return Err(format!("one-hop ob not contained in ob at {}", x.id(e)));
                }
                if let Some(p) = &prev {
                    if !p.is_subset(&ob) {
                        return Err(format!("ob shrinks along po at {}", x.id(e)));
                    }
                }
                prev = Some(ob);
                events += 1;
            }
        }
    }
    let mut threads = 0;
    for f in formulas {
        for a in all_1in3(f).unwrap() {
            let w = witness_extension(f, &a, Family::Ra).map_err(|e| e.to_string())?;
            let x = w.base();
            for t in 0..x.threads().len() {
                let Some(&last) = x.thread_events(t).last() else { continue };
                if compute_ob_one_hop(&w, last) != compute_ob(&w, last) {
                    return Err(format!("{} with {a}: one-hop ob differs on thread {}", label(f), x.threads()[t]));
                }
                threads += 1;
            }
        }
    }
    Ok(format!("{events} events on random executions; one-hop ob = ob on {threads} witness threads"))
}

#[test]
fn acceptance() {
    let formulas = formula_corpus();
    let random = random_corpus();
    let sat: Vec<Formula> = formulas.iter().filter(|f| brute_force_1in3(f).unwrap().is_some()).cloned().collect();
    let criteria: Vec<(&str, Box<dyn Fn() -> Check + Sync + '_>)> = vec![
        ("axiom matrix", Box::new(axiom_matrix)),
        ("reduction round trip", Box::new(|| round_trip(&formulas))),
        ("witness completeness", Box::new(|| witness_completeness(&sat))),
        ("bounded-value preservation", Box::new(|| bounded_values(&formulas))),
        ("structural counts", Box::new(|| structural_counts(&formulas))),
        ("oracle equivalence", Box::new(|| oracle_equivalence(&random))),
        ("lattice monotonicity", Box::new(|| lattice(&random, &formulas))),
        ("operational litmus", Box::new(litmus)),
        ("observed-before properties", Box::new(|| observed_before(&random, &sat))),
    ];
    let results: Vec<(Check, Duration)> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria
            .iter()
            .map(|(name, run)| {
                s.spawn(move || {
                    let start = Instant::now();
                    let r = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
                        let msg = e
                            .downcast_ref::<String>()
                            .cloned()
                            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                            .unwrap_or_default();
                        Err(format!("panicked: {msg}"))
                    });
                    eprintln!("finished {name} in {:.1}s", start.elapsed().as_secs_f64());
                    (r, start.elapsed())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("criterion thread")).collect()
    });
    let mut failed = Vec::new();
    for (i, ((name, _), (result, took))) in criteria.iter().zip(results).enumerate() {
        match result {
            Ok(detail) => println!("criterion {} {name}: PASS ({:.1}s) {detail}", i + 1, took.as_secs_f64()),
            Err(detail) => {
                println!("criterion {} {name}: FAIL ({:.1}s) {detail}", i + 1, took.as_secs_f64());
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
