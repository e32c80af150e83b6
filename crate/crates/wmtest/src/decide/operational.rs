//! Store-buffer transition systems for SC, TSO and PSO.
//!
//! A state records how many events of each thread have executed, the
//! pending writes of every buffer and the last write flushed to each
//! location. SC has no buffers; TSO has one FIFO per thread; PSO one per
//! thread and location. Events of the `init` thread run (and drain) before
//! anything else.

use std::collections::{HashSet, VecDeque};

use serde::Serialize;

use super::{unfed_read, Counter, Options, OutOfBudget, Stats, Verdict};
use crate::axioms::MemoryModel;
use crate::model::{AbstractExecution, ConcreteExecution, Kind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BufferMode {
    /// Writes hit memory immediately.
    None,
    /// One FIFO per thread.
    PerThread,
    /// One FIFO per thread and location.
    PerLocation,
}

impl BufferMode {
    pub fn of(model: MemoryModel) -> Option<BufferMode> {
        match model {
            MemoryModel::SC => Some(BufferMode::None),
            MemoryModel::TSO => Some(BufferMode::PerThread),
            MemoryModel::PSO => Some(BufferMode::PerLocation),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "step", rename_all = "lowercase")]
pub enum Step {
    /// The next event of a thread executes (buffer write, buffer read or
    /// memory read; a direct memory write under SC).
    Execute { event: String },
    /// The oldest pending write of a buffer reaches memory.
    Flush { event: String },
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct State {
    next: Vec<usize>,
    buffers: Vec<VecDeque<usize>>,
    memory: Vec<Option<usize>>,
    flushed: Vec<usize>,
}

struct Lts<'a> {
    x: &'a AbstractExecution,
    mode: BufferMode,
    rf: Option<&'a [Option<usize>]>,
    mo: Option<&'a [Vec<usize>]>,
    readers: Vec<Vec<usize>>,
    nloc: usize,
}

enum Move {
    Execute(usize),
    Flush(usize),
}

impl<'a> Lts<'a> {
    fn new(
        x: &'a AbstractExecution,
        mode: BufferMode,
        rf: Option<&'a [Option<usize>]>,
        mo: Option<&'a [Vec<usize>]>,
    ) -> Self {
        let mut readers = vec![Vec::new(); x.len()];
        if let Some(rf) = rf {
            for (r, w) in rf.iter().enumerate() {
                if let Some(w) = *w {
                    readers[w].push(r);
                }
            }
        }
        Lts {
            x,
            mode,
            rf,
            mo,
            readers,
            nloc: x.locations().len(),
        }
    }

    fn initial(&self) -> State {
        let nbuf = match self.mode {
            BufferMode::None => 0,
            BufferMode::PerThread => self.x.threads().len(),
            BufferMode::PerLocation => self.x.threads().len() * self.nloc,
        };
        State {
            next: vec![0; self.x.threads().len()],
            buffers: vec![VecDeque::new(); nbuf],
            memory: vec![None; self.nloc],
            flushed: vec![0; self.nloc],
        }
    }

    fn buffer_of(&self, t: usize, l: usize) -> usize {
        match self.mode {
            BufferMode::PerLocation => t * self.nloc + l,
            _ => t,
        }
    }

    fn executed(&self, s: &State, e: usize) -> bool {
        s.next[self.x.thread_of(e)] > self.x.po_index(e)
    }

    fn init_pending(&self, s: &State) -> bool {
        if !self.x.has_init() {
            return false;
        }
        if s.next[0] < self.x.thread_events(0).len() {
            return true;
        }
        match self.mode {
            BufferMode::None => false,
            BufferMode::PerThread => !s.buffers[0].is_empty(),
            BufferMode::PerLocation => s.buffers[..self.nloc].iter().any(|b| !b.is_empty()),
        }
    }

    fn is_final(&self, s: &State) -> bool {
        (0..self.x.threads().len()).all(|t| s.next[t] == self.x.thread_events(t).len())
            && s.buffers.iter().all(VecDeque::is_empty)
    }

    /// Memory update: `w` becomes the visible write of its location.
    fn commit(&self, s: &mut State, w: usize) -> bool {
        let l = self.x.loc_of(w);
        if let Some(mo) = self.mo {
            if mo[l].get(s.flushed[l]) != Some(&w) {
                return false;
            }
        }
        if let Some(old) = s.memory[l] {
            // With rf fixed, readers of the overwritten write are lost.
            if self.readers[old].iter().any(|&r| !self.executed(s, r)) {
                return false;
            }
        }
        s.memory[l] = Some(w);
        s.flushed[l] += 1;
        true
    }

    fn moves(&self, s: &State) -> Vec<Move> {
        let init_pending = self.init_pending(s);
        let mut out = Vec::new();
        for t in 0..self.x.threads().len() {
            if init_pending && !(self.x.has_init() && t == 0) {
                continue;
            }
            if let Some(&e) = self.x.thread_events(t).get(s.next[t]) {
                out.push(Move::Execute(e));
            }
        }
        for (b, buf) in s.buffers.iter().enumerate() {
            if !buf.is_empty() {
                out.push(Move::Flush(b));
            }
        }
        out
    }

    /// Applies a move; `None` if its rule's premise fails. Returns the new
    /// state and, for reads, the write read from.
    fn apply(&self, s: &State, mv: &Move) -> Option<(State, Option<usize>)> {
        let mut n = s.clone();
        match *mv {
            Move::Flush(b) => {
                let w = n.buffers[b].pop_front()?;
                self.commit(&mut n, w).then_some((n, None))
            }
            Move::Execute(e) => {
                let t = self.x.thread_of(e);
                let l = self.x.loc_of(e);
                let ev = self.x.event(e);
                n.next[t] += 1;
                match ev.kind() {
                    Kind::Write => {
                        if self.mode == BufferMode::None {
                            if !self.commit(&mut n, e) {
                                return None;
                            }
                        } else {
                            let b = self.buffer_of(t, l);
                            n.buffers[b].push_back(e);
                        }
                        Some((n, None))
                    }
                    Kind::Read => {
                        let own = match self.mode {
                            BufferMode::None => None,
                            _ => n.buffers[self.buffer_of(t, l)]
                                .iter()
                                .rev()
                                .copied()
                                .find(|&w| self.x.loc_of(w) == l),
                        };
                        let w = own.or(n.memory[l])?;
                        if self.x.event(w).value() != ev.value() {
                            return None;
                        }
                        if let Some(rf) = self.rf {
                            if rf[e] != Some(w) {
                                return None;
                            }
                        }
                        Some((n, Some(w)))
                    }
                }
            }
        }
    }

    fn dfs(
        &self,
        s: State,
        memo: &mut Option<HashSet<State>>,
        counter: &mut Counter,
        path: &mut Vec<Move>,
    ) -> Result<bool, OutOfBudget> {
        if self.is_final(&s) {
            return Ok(true);
        }
        if let Some(seen) = memo.as_mut() {
            if !seen.insert(s.clone()) {
                counter.stats.memo_hits += 1;
                return Ok(false);
            }
        }
        counter.tick()?;
        for mv in self.moves(&s) {
            if let Some((n, _)) = self.apply(&s, &mv) {
                path.push(mv);
                if self.dfs(n, memo, counter, path)? {
                    return Ok(true);
                }
                path.pop();
            }
        }
        Ok(false)
    }

    /// Re-runs a move sequence, building rf and mo.
    fn run(&self, path: &[Move]) -> Option<(Vec<Option<usize>>, Vec<Vec<usize>>)> {
        let mut s = self.initial();
        let mut rf = vec![None; self.x.len()];
        let mut mo = vec![Vec::new(); self.nloc];
        for mv in path {
            let (n, read_from) = self.apply(&s, mv)?;
            match *mv {
                Move::Execute(e) => {
                    if let Some(w) = read_from {
                        rf[e] = Some(w);
                    } else if self.mode == BufferMode::None {
                        mo[self.x.loc_of(e)].push(e);
                    }
                }
                Move::Flush(b) => {
                    let w = s.buffers[b][0];
                    mo[self.x.loc_of(w)].push(w);
                }
            }
            s = n;
        }
        self.is_final(&s).then_some((rf, mo))
    }

    fn step(&self, s: &State, mv: &Move) -> Step {
        match *mv {
            Move::Execute(e) => Step::Execute {
                event: self.x.id(e).to_string(),
            },
            Move::Flush(b) => Step::Flush {
                event: self.x.id(s.buffers[b][0]).to_string(),
            },
        }
    }
}

pub(crate) fn decide_fixed(
    x: &AbstractExecution,
    model: MemoryModel,
    rf: Option<&[Option<usize>]>,
    mo: Option<&[Vec<usize>]>,
    opts: Options,
) -> Verdict {
    let mode = BufferMode::of(model).expect("operational model");
    if let Some(diag) = unfed_read(x) {
        return Verdict::inconsistent(model, Stats::default(), Some(diag));
    }
    let lts = Lts::new(x, mode, rf, mo);
    let mut counter = Counter::new(opts.budget);
    let mut memo = opts.memo.then(HashSet::new);
    let mut path = Vec::new();
    match lts.dfs(lts.initial(), &mut memo, &mut counter, &mut path) {
        Err(OutOfBudget) => Verdict::inconclusive(model, counter.stats),
        Ok(false) => Verdict::inconsistent(model, counter.stats, None),
        Ok(true) => {
            let (rf, mo) = lts.run(&path).expect("found path replays");
            let mut trace = Vec::with_capacity(path.len());
            let mut s = lts.initial();
            for mv in &path {
                trace.push(lts.step(&s, mv));
                s = lts.apply(&s, mv).expect("found path replays").0;
            }
            let witness = ConcreteExecution::new(x.clone(), rf, mo).expect("operational witness is well formed");
            let mut v = Verdict::consistent(model, witness, counter.stats);
            v.trace = Some(trace);
            v
        }
    }
}

/// Consistent iff some interleaving respecting po lets every read see the
/// latest write to its location.
pub fn decide_sc(x: &AbstractExecution, opts: Options) -> Verdict {
    decide_fixed(x, MemoryModel::SC, None, None, opts)
}

/// SC on the projection of `x` to location `loc`. The witness is over the
/// projection.
pub fn decide_sc_location(x: &AbstractExecution, loc: &str, opts: Options) -> Verdict {
    let proj = match x.location_index(loc) {
        Some(l) => x.project(l).0,
        None => AbstractExecution::empty(),
    };
    decide_sc(&proj, opts)
}

pub fn decide_tso(x: &AbstractExecution, opts: Options) -> Verdict {
    decide_fixed(x, MemoryModel::TSO, None, None, opts)
}

pub fn decide_pso(x: &AbstractExecution, opts: Options) -> Verdict {
    decide_fixed(x, MemoryModel::PSO, None, None, opts)
}

/// Checks a transition sequence against the rules of `model` and returns
/// the concrete execution it induces.
pub fn replay(x: &AbstractExecution, model: MemoryModel, trace: &[Step]) -> Result<ConcreteExecution, String> {
    let mode = BufferMode::of(model.canonical()).ok_or_else(|| format!("{model} is not operational"))?;
    let lts = Lts::new(x, mode, None, None);
    let mut s = lts.initial();
    let mut path = Vec::with_capacity(trace.len());
    for (i, step) in trace.iter().enumerate() {
        let mv = match step {
            Step::Execute { event } => {
                let e = x.index_of(event).ok_or_else(|| format!("step {i}: unknown event {event}"))?;
                Move::Execute(e)
            }
            Step::Flush { event } => {
                let w = x.index_of(event).ok_or_else(|| format!("step {i}: unknown event {event}"))?;
                let b = (0..s.buffers.len())
                    .find(|&b| s.buffers[b].front() == Some(&w))
                    .ok_or_else(|| format!("step {i}: {event} is not at the head of a buffer"))?;
                Move::Flush(b)
            }
        };
        if !lts.moves(&s).iter().any(|m| same_move(m, &mv)) {
            return Err(format!("step {i}: not enabled"));
        }
        s = lts.apply(&s, &mv).ok_or_else(|| format!("step {i}: rule premise fails"))?.0;
        path.push(mv);
    }
    let (rf, mo) = lts.run(&path).ok_or("trace does not reach a final state")?;
    ConcreteExecution::new(x.clone(), rf, mo).map_err(|e| e.to_string())
}

fn same_move(a: &Move, b: &Move) -> bool {
    match (a, b) {
        (Move::Execute(x), Move::Execute(y)) | (Move::Flush(x), Move::Flush(y)) => x == y,
        _ => false,
    }
}
