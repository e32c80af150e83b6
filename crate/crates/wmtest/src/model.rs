//! Events, abstract and concrete executions, and the derived relations
//! (happens-before, location restriction, conflicting triplets).

use std::collections::HashMap;
use std::fmt;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::relation::Relation;

/// Name of the thread whose events precede every other event in po.
pub const INIT_THREAD: &str = "init";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Kind {
    Read,
    Write,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Read => "R",
            Kind::Write => "W",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Event {
    id: String,
    thread: String,
    kind: Kind,
    location: String,
    value: i64,
}

impl Event {
    pub fn id(&self) -> &str {
        &self.id
    }
    pub fn thread(&self) -> &str {
        &self.thread
    }
    pub fn kind(&self) -> Kind {
        self.kind
    }
    pub fn location(&self) -> &str {
        &self.location
    }
    pub fn value(&self) -> i64 {
        self.value
    }
    pub fn is_read(&self) -> bool {
        self.kind == Kind::Read
    }
    pub fn is_write(&self) -> bool {
        self.kind == Kind::Write
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}({},{})", self.id, self.kind, self.location, self.value)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("unknown event `{0}`")]
    UnknownEvent(String),
    #[error("rf source `{0}` is not a write")]
    RfSourceNotWrite(String),
    #[error("rf target `{0}` is not a read")]
    RfTargetNotRead(String),
    #[error("rf {0} -> {1} joins different locations or values")]
    RfValueMismatch(String, String),
    #[error("read `{0}` has more than one rf writer")]
    DuplicateRf(String),
    #[error("read `{0}` has no rf writer")]
    MissingRf(String),
    #[error("mo for location `{0}` is not a total order over its writes")]
    MoNotTotal(String),
    #[error("mo given for unknown location `{0}`")]
    UnknownLocation(String),
    #[error("mo entry `{0}` is not a write to `{1}`")]
    MoWrongEvent(String, String),
}

/// Events plus program order. Event ids are `<thread>.<k>` with `k`
/// counting from 1 in po order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AbstractExecution {
    events: Vec<Event>,
    threads: Vec<String>,
    thread_events: Vec<Vec<usize>>,
    locations: Vec<String>,
    thread_of: Vec<usize>,
    loc_of: Vec<usize>,
    po_index: Vec<usize>,
    index: HashMap<String, usize>,
    po: Relation,
}

/// Accumulates threads and events; `thread` reopens an existing thread.
#[derive(Default, Clone, Debug)]
pub struct ExecutionBuilder {
    threads: Vec<(String, Vec<(Kind, String, i64)>)>,
    current: Option<usize>,
}

impl ExecutionBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn thread(mut self, name: &str) -> Self {
        self.open(name);
        self
    }

    pub fn write(mut self, loc: &str, value: i64) -> Self {
        self.push(Kind::Write, loc, value);
        self
    }

    pub fn read(mut self, loc: &str, value: i64) -> Self {
        self.push(Kind::Read, loc, value);
        self
    }

    pub fn open(&mut self, name: &str) {
        let pos = match self.threads.iter().position(|(n, _)| n == name) {
            Some(p) => p,
            None => {
                self.threads.push((name.to_string(), Vec::new()));
                self.threads.len() - 1
            }
        };
        self.current = Some(pos);
    }

    /// Appends to the most recently opened thread.
    pub fn push(&mut self, kind: Kind, loc: &str, value: i64) {
        let cur = self.current.expect("no thread opened");
        self.threads[cur].1.push((kind, loc.to_string(), value));
    }

    /// Appends to `thread`, opening it if needed.
    pub fn push_to(&mut self, thread: &str, kind: Kind, loc: &str, value: i64) {
        self.open(thread);
        self.push(kind, loc, value);
    }

    pub fn build(self) -> AbstractExecution {
        AbstractExecution::from_threads(self.threads)
    }
}

impl AbstractExecution {
    /// Builds an execution from thread blocks in declaration order. The
    /// `init` thread, if any, is moved to the front and its events are
    /// po-before all other events.
    pub fn from_threads(mut threads: Vec<(String, Vec<(Kind, String, i64)>)>) -> Self {
        if let Some(p) = threads.iter().position(|(n, _)| n == INIT_THREAD) {
            let init = threads.remove(p);
            threads.insert(0, init);
        }
        let mut events = Vec::new();
        let mut names = Vec::new();
        let mut thread_events = Vec::new();
        let mut locations: Vec<String> = Vec::new();
        let mut loc_ids: HashMap<String, usize> = HashMap::new();
        let mut thread_of = Vec::new();
        let mut loc_of = Vec::new();
        let mut po_index = Vec::new();
        for (t, (name, evs)) in threads.into_iter().enumerate() {
            let mut ids = Vec::with_capacity(evs.len());
            for (k, (kind, loc, value)) in evs.into_iter().enumerate() {
                let l = *loc_ids.entry(loc.clone()).or_insert_with(|| {
                    locations.push(loc.clone());
                    locations.len() - 1
                });
                ids.push(events.len());
                thread_of.push(t);
                loc_of.push(l);
                po_index.push(k);
                events.push(Event {
                    id: format!("{}.{}", name, k + 1),
                    thread: name.clone(),
                    kind,
                    location: loc,
                    value,
                });
            }
            names.push(name);
            thread_events.push(ids);
        }
        let n = events.len();
        let mut po = Relation::empty(n);
        for ids in &thread_events {
            for (i, &a) in ids.iter().enumerate() {
                for &b in &ids[i + 1..] {
                    po.insert(a, b);
                }
            }
        }
        if names.first().map(String::as_str) == Some(INIT_THREAD) {
            for &a in &thread_events[0] {
                for b in thread_events[0].len()..n {
                    po.insert(a, b);
                }
            }
        }
        let index = events
            .iter()
            .enumerate()
            .map(|(i, e)| (e.id.clone(), i))
            .collect();
        AbstractExecution {
            events,
            threads: names,
            thread_events,
            locations,
            thread_of,
            loc_of,
            po_index,
            index,
            po,
        }
    }

    pub fn empty() -> Self {
        Self::from_threads(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn event(&self, i: usize) -> &Event {
        &self.events[i]
    }

    pub fn id(&self, i: usize) -> &str {
        &self.events[i].id
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn threads(&self) -> &[String] {
        &self.threads
    }

    /// Event indices of thread `t` in po order.
    pub fn thread_events(&self, t: usize) -> &[usize] {
        &self.thread_events[t]
    }

    pub fn thread_index(&self, name: &str) -> Option<usize> {
        self.threads.iter().position(|n| n == name)
    }

    pub fn thread_of(&self, e: usize) -> usize {
        self.thread_of[e]
    }

    /// Position of `e` within its thread.
    pub fn po_index(&self, e: usize) -> usize {
        self.po_index[e]
    }

    pub fn locations(&self) -> &[String] {
        &self.locations
    }

    pub fn location_index(&self, name: &str) -> Option<usize> {
        self.locations.iter().position(|n| n == name)
    }

    pub fn loc_of(&self, e: usize) -> usize {
        self.loc_of[e]
    }

    pub fn has_init(&self) -> bool {
        self.threads.first().map(String::as_str) == Some(INIT_THREAD)
    }

    pub fn po(&self) -> &Relation {
        &self.po
    }

    pub fn reads(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&e| self.events[e].is_read())
    }

    pub fn writes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&e| self.events[e].is_write())
    }

    /// Events accessing location index `l`.
    pub fn location_mask(&self, l: usize) -> FixedBitSet {
        let mut m = FixedBitSet::with_capacity(self.len());
        for e in 0..self.len() {
            if self.loc_of[e] == l {
                m.insert(e);
            }
        }
        m
    }

    pub fn write_mask(&self) -> FixedBitSet {
        let mut m = FixedBitSet::with_capacity(self.len());
        for e in self.writes() {
            m.insert(e);
        }
        m
    }

    /// Writes to location index `l`, in event order.
    pub fn writes_to(&self, l: usize) -> Vec<usize> {
        self.writes().filter(|&w| self.loc_of[w] == l).collect()
    }

    /// Same-location same-value writes a read could take its value from,
    /// ordered by thread then po position.
    pub fn rf_candidates(&self, r: usize) -> Vec<usize> {
        let ev = &self.events[r];
        self.writes()
            .filter(|&w| self.loc_of[w] == self.loc_of[r] && self.events[w].value == ev.value)
            .collect()
    }

    /// Projection onto the events accessing location index `l`, keeping
    /// thread names and relative po order. Returns the projection and the
    /// map from its event indices back to ours.
    pub fn project(&self, l: usize) -> (AbstractExecution, Vec<usize>) {
        let mut threads = Vec::new();
        let mut back = Vec::new();
        for (t, name) in self.threads.iter().enumerate() {
            let evs: Vec<_> = self.thread_events[t]
                .iter()
                .filter(|&&e| self.loc_of[e] == l)
                .map(|&e| {
                    back.push(e);
                    let ev = &self.events[e];
                    (ev.kind, ev.location.clone(), ev.value)
                })
                .collect();
            threads.push((name.clone(), evs));
        }
        (AbstractExecution::from_threads(threads), back)
    }

    /// Thread blocks as accepted by `from_threads`.
    pub fn to_threads(&self) -> Vec<(String, Vec<(Kind, String, i64)>)> {
        self.threads
            .iter()
            .enumerate()
            .map(|(t, name)| {
                let evs = self.thread_events[t]
                    .iter()
                    .map(|&e| {
                        let ev = &self.events[e];
                        (ev.kind, ev.location.clone(), ev.value)
                    })
                    .collect();
                (name.clone(), evs)
            })
            .collect()
    }
}

/// An abstract execution resolved with reads-from and per-location
/// modification orders.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConcreteExecution {
    base: AbstractExecution,
    rf: Vec<Option<usize>>,
    mo: Vec<Vec<usize>>,
}

impl ConcreteExecution {
    /// `rf[r]` is the writer of read `r`; `mo[l]` lists the writes of
    /// location index `l` in modification order.
    pub fn new(
        base: AbstractExecution,
        rf: Vec<Option<usize>>,
        mo: Vec<Vec<usize>>,
    ) -> Result<Self, ModelError> {
        check_rf(&base, &rf)?;
        for r in base.reads() {
            if rf[r].is_none() {
                return Err(ModelError::MissingRf(base.id(r).to_string()));
            }
        }
        check_mo(&base, &mo)?;
        Ok(ConcreteExecution { base, rf, mo })
    }

    /// Builds from id pairs. `mo` entries are `(location, writes in order)`;
    /// locations left out get their writes in event order.
    pub fn from_ids(
        base: AbstractExecution,
        rf: &[(&str, &str)],
        mo: &[(&str, Vec<&str>)],
    ) -> Result<Self, ModelError> {
        let lookup = |id: &str| {
            base.index_of(id)
                .ok_or_else(|| ModelError::UnknownEvent(id.to_string()))
        };
        let mut rf_vec = vec![None; base.len()];
        for (w, r) in rf {
            let (w, r) = (lookup(w)?, lookup(r)?);
            if rf_vec[r].is_some() {
                return Err(ModelError::DuplicateRf(base.id(r).to_string()));
            }
            rf_vec[r] = Some(w);
        }
        let mut mo_vec: Vec<Vec<usize>> =
            (0..base.locations().len()).map(|l| base.writes_to(l)).collect();
        for (loc, order) in mo {
            let l = base
                .location_index(loc)
                .ok_or_else(|| ModelError::UnknownLocation(loc.to_string()))?;
            mo_vec[l] = order.iter().map(|id| lookup(id)).collect::<Result<_, _>>()?;
        }
        ConcreteExecution::new(base, rf_vec, mo_vec)
    }

    pub fn base(&self) -> &AbstractExecution {
        &self.base
    }

    pub fn into_parts(self) -> (AbstractExecution, Vec<Option<usize>>, Vec<Vec<usize>>) {
        (self.base, self.rf, self.mo)
    }

    pub fn rf_map(&self) -> &[Option<usize>] {
        &self.rf
    }

    pub fn writer_of(&self, r: usize) -> usize {
        self.rf[r].expect("read without writer")
    }

    pub fn mo_order(&self, l: usize) -> &[usize] {
        &self.mo[l]
    }

    pub fn mo_orders(&self) -> &[Vec<usize>] {
        &self.mo
    }

    pub fn rf(&self) -> Relation {
        rf_relation(self.base.len(), &self.rf)
    }

    /// The union of the per-location total orders, transitively closed.
    pub fn mo(&self) -> Relation {
        let mut rel = Relation::empty(self.base.len());
        for order in &self.mo {
            for (i, &a) in order.iter().enumerate() {
                for &b in &order[i + 1..] {
                    rel.insert(a, b);
                }
            }
        }
        rel
    }
}

pub(crate) fn rf_relation(n: usize, rf: &[Option<usize>]) -> Relation {
    Relation::from_pairs(
        n,
        rf.iter()
            .enumerate()
            .filter_map(|(r, w)| w.map(|w| (w, r))),
    )
}

/// Checks that each given rf edge joins a write to a read of the same
/// location and value. Missing entries are allowed.
pub fn check_rf(base: &AbstractExecution, rf: &[Option<usize>]) -> Result<(), ModelError> {
    for (r, w) in rf.iter().enumerate() {
        let Some(w) = *w else { continue };
        let (we, re) = (base.event(w), base.event(r));
        if !we.is_write() {
            return Err(ModelError::RfSourceNotWrite(we.id.clone()));
        }
        if !re.is_read() {
            return Err(ModelError::RfTargetNotRead(re.id.clone()));
        }
        if we.location != re.location || we.value != re.value {
            return Err(ModelError::RfValueMismatch(we.id.clone(), re.id.clone()));
        }
    }
    Ok(())
}

fn check_mo(base: &AbstractExecution, mo: &[Vec<usize>]) -> Result<(), ModelError> {
    if mo.len() != base.locations().len() {
        return Err(ModelError::MoNotTotal(String::from("<all>")));
    }
    for (l, order) in mo.iter().enumerate() {
        let loc = &base.locations()[l];
        for &w in order {
            if !base.event(w).is_write() || base.loc_of(w) != l {
                return Err(ModelError::MoWrongEvent(base.id(w).to_string(), loc.clone()));
            }
        }
        let mut sorted = order.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != order.len() || sorted != base.writes_to(l) {
            return Err(ModelError::MoNotTotal(loc.clone()));
        }
    }
    Ok(())
}

/// `hb = (po ∪ rf)+`. Cyclic unions show up as reflexive pairs.
pub fn compute_hb(x: &ConcreteExecution) -> Relation {
    x.base.po().union(&x.rf()).transitive_closure()
}

/// `(w, r, w2)`: `r` reads from `w`, `w2` is another write to the same
/// location.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConflictTriplet {
    pub w: usize,
    pub r: usize,
    pub w2: usize,
}

pub fn conflicting_triplets(x: &ConcreteExecution) -> Vec<ConflictTriplet> {
    let base = &x.base;
    let mut out = Vec::new();
    for r in base.reads() {
        let w = x.writer_of(r);
        for w2 in base.writes_to(base.loc_of(r)) {
            if w2 != w {
                out.push(ConflictTriplet { w, r, w2 });
            }
        }
    }
    out
}

/// `B_x`: pairs of `rel` with both endpoints on `loc`.
pub fn restrict_to_location(rel: &Relation, x: &AbstractExecution, loc: &str) -> Relation {
    match x.location_index(loc) {
        Some(l) => rel.restrict(&x.location_mask(l)),
        None => Relation::empty(rel.size()),
    }
}
