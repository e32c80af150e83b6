#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wmtest::model::{AbstractExecution, ConcreteExecution, ExecutionBuilder, Kind};

/// Random abstract execution: at most 10 events, 3 threads (one of them
/// possibly `init`), 3 locations and 3 values.
pub fn random_execution(rng: &mut ChaCha8Rng) -> AbstractExecution {
    let locs = ["x", "y", "z"];
    let nloc = rng.gen_range(1..=3);
    let nthreads = rng.gen_range(1..=3);
    let with_init = nthreads > 1 && rng.gen_bool(0.25);
    let mut threads = Vec::new();
    let mut budget = rng.gen_range(1..=10usize);
    if with_init {
        let evs: Vec<_> = locs[..nloc]
            .iter()
            .take(budget.min(nloc))
            .map(|l| (Kind::Write, l.to_string(), 0))
            .collect();
        budget -= evs.len();
        threads.push(("init".to_string(), evs));
    }
    let workers = if with_init { nthreads - 1 } else { nthreads };
    let names = ["t1", "t2", "t3"];
    let mut blocks: Vec<Vec<(Kind, String, i64)>> = vec![Vec::new(); workers];
    for _ in 0..budget {
        let t = rng.gen_range(0..workers);
        let kind = if rng.gen_bool(0.5) { Kind::Read } else { Kind::Write };
        let loc = locs[rng.gen_range(0..nloc)].to_string();
        let lo = if with_init && kind == Kind::Read { 0 } else { 1 };
        let value = rng.gen_range(lo..=if with_init { 2 } else { 3 });
        blocks[t].push((kind, loc, value));
    }
    for (t, evs) in blocks.into_iter().enumerate() {
        threads.push((names[t].to_string(), evs));
    }
    AbstractExecution::from_threads(threads)
}

/// Random executions whose reads all have at least one candidate writer.
pub fn corpus(seed: u64, count: usize) -> Vec<AbstractExecution> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut fed = 0;
    while out.len() < count {
        let x = random_execution(&mut rng);
        let all_fed = x.reads().all(|r| !x.rf_candidates(r).is_empty());
        // Keep a few unfed ones to exercise the mismatch path.
        if all_fed || fed % 20 == 0 {
            out.push(x);
        }
        fed += 1;
    }
    out
}

/// Random concrete extension of `x`, if every read can be fed.
pub fn random_concrete(x: &AbstractExecution, rng: &mut ChaCha8Rng) -> Option<ConcreteExecution> {
    let mut rf = vec![None; x.len()];
    for r in x.reads() {
        let c = x.rf_candidates(r);
        if c.is_empty() {
            return None;
        }
        rf[r] = Some(c[rng.gen_range(0..c.len())]);
    }
    let mo = (0..x.locations().len())
        .map(|l| {
            let mut ws = x.writes_to(l);
            for i in (1..ws.len()).rev() {
                ws.swap(i, rng.gen_range(0..=i));
            }
            ws
        })
        .collect();
    Some(ConcreteExecution::new(x.clone(), rf, mo).unwrap())
}

fn exec(threads: &[(&str, &[(Kind, &str, i64)])]) -> AbstractExecution {
    let mut b = ExecutionBuilder::new();
    for (name, evs) in threads {
        b.open(name);
        for &(k, l, v) in evs.iter() {
            b.push(k, l, v);
        }
    }
    b.build()
}

use Kind::{Read as R, Write as W};

/// The seven executions illustrating each coherence axiom, in the order
/// write-coherence, strong-write-coherence, read-coherence,
/// weak-read-coherence, porf-acyclicity, relaxed-write-coherence,
/// relaxed-read-coherence.
pub fn axiom_examples() -> Vec<(&'static str, ConcreteExecution)> {
    let a = ConcreteExecution::from_ids(
        exec(&[("t1", &[(W, "x", 1), (W, "y", 1)]), ("t2", &[(R, "y", 1), (W, "x", 2)])]),
        &[("t1.2", "t2.1")],
        &[("x", vec!["t2.2", "t1.1"])],
    )
    .unwrap();
    let b = ConcreteExecution::from_ids(
        exec(&[("t1", &[(W, "y", 1), (W, "x", 1)]), ("t2", &[(W, "x", 2), (W, "y", 2)])]),
        &[],
        &[("x", vec!["t1.2", "t2.1"]), ("y", vec!["t2.2", "t1.1"])],
    )
    .unwrap();
    let c = ConcreteExecution::from_ids(
        exec(&[("t1", &[(W, "x", 1), (W, "x", 2), (W, "y", 1)]), ("t2", &[(R, "y", 1), (R, "x", 1)])]),
        &[("t1.3", "t2.1"), ("t1.1", "t2.2")],
        &[("x", vec!["t1.1", "t1.2"])],
    )
    .unwrap();
    let d = ConcreteExecution::from_ids(
        exec(&[("t1", &[(W, "x", 1), (W, "y", 1)]), ("t2", &[(R, "y", 1), (W, "x", 2), (R, "x", 1)])]),
        &[("t1.2", "t2.1"), ("t1.1", "t2.3")],
        &[("x", vec!["t1.1", "t2.2"])],
    )
    .unwrap();
    let e = ConcreteExecution::from_ids(
        exec(&[("t1", &[(R, "x", 1), (W, "y", 1)]), ("t2", &[(R, "y", 1), (W, "x", 1)])]),
        &[("t2.2", "t1.1"), ("t1.2", "t2.1")],
        &[],
    )
    .unwrap();
    let f = ConcreteExecution::from_ids(
        exec(&[("t1", &[(W, "x", 1), (W, "x", 2)])]),
        &[],
        &[("x", vec!["t1.2", "t1.1"])],
    )
    .unwrap();
    let g = ConcreteExecution::from_ids(
        exec(&[("t1", &[(W, "x", 1), (W, "x", 2)]), ("t2", &[(R, "x", 2), (R, "x", 1)])]),
        &[("t1.2", "t2.1"), ("t1.1", "t2.2")],
        &[("x", vec!["t1.1", "t1.2"])],
    )
    .unwrap();
    vec![("a", a), ("b", b), ("c", c), ("d", d), ("e", e), ("f", f), ("g", g)]
}

pub fn store_buffering() -> AbstractExecution {
    exec(&[
        ("init", &[(W, "x", 0), (W, "y", 0)]),
        ("t1", &[(W, "x", 1), (R, "y", 0)]),
        ("t2", &[(W, "y", 1), (R, "x", 0)]),
    ])
}

pub fn message_passing() -> AbstractExecution {
    exec(&[
        ("init", &[(W, "x", 0), (W, "y", 0)]),
        ("t1", &[(W, "x", 1), (W, "y", 1)]),
        ("t2", &[(R, "y", 1), (R, "x", 0)]),
    ])
}

pub fn load_buffering() -> AbstractExecution {
    exec(&[("t1", &[(R, "x", 1), (W, "y", 1)]), ("t2", &[(R, "y", 1), (W, "x", 1)])])
}
