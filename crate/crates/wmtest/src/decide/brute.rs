//! Exhaustive oracle, written independently of the optimized deciders.

use super::{DecideError, Stats, Verdict};
use crate::axioms::{check_concrete, MemoryModel};
use crate::model::{AbstractExecution, ConcreteExecution, Kind, INIT_THREAD};

/// Largest execution the oracle accepts.
pub const BRUTE_FORCE_LIMIT: usize = 12;

/// Decides by enumeration: every rf choice and every per-location mo
/// permutation for axiomatic models, every run of the transition system
/// (without memoization) for SC, TSO and PSO.
pub fn brute_force_decide(x: &AbstractExecution, model: MemoryModel) -> Result<Verdict, DecideError> {
    if x.len() > BRUTE_FORCE_LIMIT {
        return Err(DecideError::TooLarge(x.len()));
    }
    let mut stats = Stats::default();
    let found = if model.is_operational() {
        explore(x, model, &mut stats)
    } else {
        enumerate(x, model, &mut stats)
    };
    Ok(match found {
        Some(w) => Verdict::consistent(model, w, stats),
        None => Verdict::inconsistent(model, stats, None),
    })
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// All combinations picking one element from each list.
fn product<T: Clone>(lists: &[Vec<T>]) -> Vec<Vec<T>> {
    lists.iter().fold(vec![Vec::new()], |acc, list| {
        acc.iter()
            .flat_map(|prefix| {
                list.iter().map(move |item| {
                    let mut p = prefix.clone();
                    p.push(item.clone());
                    p
                })
            })
            .collect()
    })
}

fn enumerate(x: &AbstractExecution, model: MemoryModel, stats: &mut Stats) -> Option<ConcreteExecution> {
    let reads: Vec<usize> = x.reads().collect();
    let writers: Vec<Vec<usize>> = reads
        .iter()
        .map(|&r| {
            x.writes()
                .filter(|&w| x.event(w).location() == x.event(r).location() && x.event(w).value() == x.event(r).value())
                .collect()
        })
        .collect();
    let orders: Vec<Vec<Vec<usize>>> = (0..x.locations().len())
        .map(|l| permutations(&x.writes().filter(|&w| x.loc_of(w) == l).collect::<Vec<_>>()))
        .collect();
    let mo_choices = product(&orders);
    for choice in product(&writers) {
        let mut rf = vec![None; x.len()];
        for (&r, &w) in reads.iter().zip(&choice) {
            rf[r] = Some(w);
        }
        for mo in &mo_choices {
            stats.nodes += 1;
            let c = ConcreteExecution::new(x.clone(), rf.clone(), mo.clone()).expect("enumerated execution is well formed");
            if check_concrete(&c, model).expect("axiomatic model") {
                return Some(c);
            }
        }
    }
    None
}

#[derive(Clone)]
struct Machine {
    done: Vec<bool>,
    /// Pending writes, keyed by (thread, location) for PSO and by thread
    /// otherwise (location slot unused).
    buffers: Vec<(usize, Option<usize>, Vec<usize>)>,
    memory: Vec<Option<usize>>,
    rf: Vec<Option<usize>>,
    mo: Vec<Vec<usize>>,
}

fn explore(x: &AbstractExecution, model: MemoryModel, stats: &mut Stats) -> Option<ConcreteExecution> {
    let m = Machine {
        done: vec![false; x.len()],
        buffers: Vec::new(),
        memory: vec![None; x.locations().len()],
        rf: vec![None; x.len()],
        mo: vec![Vec::new(); x.locations().len()],
    };
    step(x, model.canonical(), m, stats)
}

fn buffer_key(model: MemoryModel, x: &AbstractExecution, e: usize) -> (usize, Option<usize>) {
    let t = x.thread_of(e);
    match model {
        MemoryModel::PSO => (t, Some(x.loc_of(e))),
        _ => (t, None),
    }
}

fn step(x: &AbstractExecution, model: MemoryModel, m: Machine, stats: &mut Stats) -> Option<ConcreteExecution> {
    stats.nodes += 1;
    if m.done.iter().all(|&d| d) && m.buffers.iter().all(|b| b.2.is_empty()) {
        return Some(ConcreteExecution::new(x.clone(), m.rf, m.mo).expect("run is well formed"));
    }
    let init_busy = (0..x.len()).any(|e| {
        x.event(e).thread() == INIT_THREAD
            && (!m.done[e] || m.buffers.iter().any(|b| b.2.contains(&e)))
    });
    for e in 0..x.len() {
        if m.done[e] || (0..x.len()).any(|p| x.po().contains(p, e) && !m.done[p]) {
            continue;
        }
        if init_busy && x.event(e).thread() != INIT_THREAD {
            continue;
        }
        let ev = x.event(e);
        let l = x.loc_of(e);
        let mut n = m.clone();
        n.done[e] = true;
        match ev.kind() {
            Kind::Write if model == MemoryModel::SC => {
                n.memory[l] = Some(e);
                n.mo[l].push(e);
            }
            Kind::Write => {
                let key = buffer_key(model, x, e);
                match n.buffers.iter_mut().find(|b| (b.0, b.1) == key) {
                    Some(b) => b.2.push(e),
                    None => n.buffers.push((key.0, key.1, vec![e])),
                }
            }
            Kind::Read => {
                let t = x.thread_of(e);
                let own = n
                    .buffers
                    .iter()
                    .filter(|b| b.0 == t)
                    .flat_map(|b| b.2.iter().copied())
                    .filter(|&w| x.loc_of(w) == l)
                    .max_by_key(|&w| x.po_index(w));
                let Some(w) = own.or(n.memory[l]) else { continue };
                if x.event(w).value() != ev.value() {
                    continue;
                }
                n.rf[e] = Some(w);
            }
        }
        if let Some(found) = step(x, model, n, stats) {
            return Some(found);
        }
    }
    for i in 0..m.buffers.len() {
        if m.buffers[i].2.is_empty() {
            continue;
        }
        let mut n = m.clone();
        let w = n.buffers[i].2.remove(0);
        n.memory[x.loc_of(w)] = Some(w);
        n.mo[x.loc_of(w)].push(w);
        if let Some(found) = step(x, model, n, stats) {
            return Some(found);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ExecutionBuilder;

    #[test]
    fn empty_is_consistent_everywhere() {
        for m in MemoryModel::ALL {
            assert!(brute_force_decide(&AbstractExecution::empty(), m).unwrap().is_consistent(), "{m}");
        }
    }

    #[test]
    fn guard_rejects_large_inputs() {
        let mut b = ExecutionBuilder::new().thread("t1");
        for v in 0..13 {
            b = b.write("x", v);
        }
        assert_eq!(brute_force_decide(&b.build(), MemoryModel::SC).unwrap_err(), DecideError::TooLarge(13));
    }

    #[test]
    fn reversed_reads_are_not_relaxed() {
        let x = ExecutionBuilder::new()
            .thread("t1")
            .write("x", 1)
            .write("x", 2)
            .thread("t2")
            .read("x", 2)
            .read("x", 1)
            .build();
        assert!(!brute_force_decide(&x, MemoryModel::Relaxed).unwrap().is_consistent());
    }
}
