//! Reads-from search for the Relaxed-Acyclic, WRA, RA, SRA and CM models,
//! plus Relaxed via SC on every location.
//!
//! The search assigns one read at a time, always picking a read with the
//! fewest remaining candidates, so forced choices propagate without
//! branching. Partial assignments are pruned with conditions that can only
//! get worse as more rf edges are added; the exact model check runs once
//! every read has a writer.

use fixedbitset::FixedBitSet;

use super::operational::decide_fixed;
use super::{unfed_read, Counter, Options, OutOfBudget, Stats, Verdict};
use crate::axioms::{check_concrete, MemoryModel};
use crate::model::{AbstractExecution, ConcreteExecution};
use crate::relation::Relation;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flavor {
    RelaxedAcyclic,
    SRA,
}

/// Whether the partial modification order `pmo` is minimally coherent for
/// the given reads-from, i.e. has a total extension satisfying the model.
/// `rf` must give every read a writer.
pub fn minimal_coherence_check(x: &AbstractExecution, rf: &Relation, pmo: &Relation, flavor: Flavor) -> bool {
    let porf = x.po().union(rf);
    let mut writer = vec![None; x.len()];
    for (w, r) in rf.pairs() {
        writer[r] = Some(w);
    }
    match flavor {
        Flavor::RelaxedAcyclic => {
            if !porf.is_acyclic() {
                return false;
            }
            for l in 0..x.locations().len() {
                let mask = x.location_mask(l);
                let local = porf.restrict(&mask);
                let reach = local.transitive_closure();
                let full = local.union(&pmo.restrict(&mask)).transitive_closure();
                if !full.is_irreflexive() {
                    return false;
                }
                for r in x.reads().filter(|&r| x.loc_of(r) == l) {
                    let Some(w) = writer[r] else { return false };
                    for w2 in x.writes_to(l) {
                        if w2 != w && reach.contains(w2, r) && !full.contains(w2, w) {
                            return false;
                        }
                    }
                }
            }
            true
        }
        Flavor::SRA => {
            let hb = porf.transitive_closure();
            let full = hb.union(pmo).transitive_closure();
            if !full.is_irreflexive() {
                return false;
            }
            for r in x.reads() {
                let Some(w) = writer[r] else { return false };
                for w2 in x.writes_to(x.loc_of(r)) {
                    if w2 != w && hb.contains(w2, r) && !full.contains(w2, w) {
                        return false;
                    }
                }
            }
            true
        }
    }
}

/// True if some bit is set in all of `a`, `b`, `c` other than `skip`.
fn meet3(a: &FixedBitSet, b: &FixedBitSet, c: &FixedBitSet, skip: usize) -> bool {
    let (sa, sb, sc) = (a.as_slice(), b.as_slice(), c.as_slice());
    let bits = usize::BITS as usize;
    for i in 0..sa.len() {
        let mut m = sa[i] & sb[i] & sc[i];
        if skip / bits == i {
            m &= !(1 << (skip % bits));
        }
        if m != 0 {
            return true;
        }
    }
    false
}

struct Problem<'a> {
    x: &'a AbstractExecution,
    model: MemoryModel,
    reads: Vec<usize>,
    cands: Vec<Vec<usize>>,
    wmask: Vec<FixedBitSet>,
    /// Per location: its events, and the local index of every event.
    loc_events: Vec<Vec<usize>>,
    local: Vec<usize>,
    /// Per location: local mask of its writes.
    local_wmask: Vec<FixedBitSet>,
    /// Position of each event within its thread, scaled to a common range.
    time: Vec<u64>,
}

#[derive(Clone)]
struct State {
    rf: Vec<Option<usize>>,
    /// Reads with a writer, and the readers of every write.
    assigned: FixedBitSet,
    readers: Vec<Vec<usize>>,
    /// Remaining candidates of every unassigned read.
    dom: Vec<Vec<usize>>,
    hb: Relation,
    hbt: Relation,
    /// Relaxed-Acyclic only: per location, the closure of po, rf and the
    /// forced mo edges over local indices.
    loc: Vec<Relation>,
}

/// Inserts `(a, b)` into the closed relation `rel` whose transpose is `rt`.
fn close_insert(rel: &mut Relation, rt: &mut Relation, a: usize, b: usize) {
    if rel.contains(a, b) {
        return;
    }
    let (srcs, dsts) = ends(rel, rt, a, b);
    for s in srcs.ones() {
        rel.insert_row(s, &dsts);
    }
    for d in dsts.ones() {
        rt.insert_row(d, &srcs);
    }
}

/// Events reaching `a` and events reached from `b`, both inclusive.
fn ends(rel: &Relation, rt: &Relation, a: usize, b: usize) -> (FixedBitSet, FixedBitSet) {
    let mut srcs = rt.row(a).clone();
    srcs.insert(a);
    let mut dsts = rel.row(b).clone();
    dsts.insert(b);
    (srcs, dsts)
}

/// True if `a ∩ b ∩ c` has a bit other than `skip`, where `a` and `b` are
/// optionally widened by `wa` and `wb`.
fn meet3_widened(
    a: &FixedBitSet,
    wa: Option<&FixedBitSet>,
    b: &FixedBitSet,
    wb: Option<&FixedBitSet>,
    c: &FixedBitSet,
    skip: usize,
) -> bool {
    let bits = usize::BITS as usize;
    let (sa, sb, sc) = (a.as_slice(), b.as_slice(), c.as_slice());
    let (wa, wb) = (wa.map(FixedBitSet::as_slice), wb.map(FixedBitSet::as_slice));
    for i in 0..sc.len() {
        if sc[i] == 0 {
            continue;
        }
        let mut m = (sa[i] | wa.map_or(0, |w| w[i])) & (sb[i] | wb.map_or(0, |w| w[i])) & sc[i];
        if skip / bits == i {
            m &= !(1 << (skip % bits));
        }
        if m != 0 {
            return true;
        }
    }
    false
}

/// Closed insertion without a transpose; fine for the small per-location
/// relations.
fn close_insert_small(rel: &mut Relation, a: usize, b: usize) {
    if rel.contains(a, b) {
        return;
    }
    let mut dsts = rel.row(b).clone();
    dsts.insert(b);
    for s in 0..rel.size() {
        if s == a || rel.contains(s, a) {
            for d in dsts.ones() {
                rel.insert(s, d);
            }
        }
    }
}

impl<'a> Problem<'a> {
    fn new(x: &'a AbstractExecution, model: MemoryModel, fixed: Option<&[Option<usize>]>) -> Self {
        let n = x.len();
        let reads: Vec<usize> = x.reads().collect();
        let mut cands = vec![Vec::new(); n];
        for &r in &reads {
            cands[r] = match fixed {
                Some(rf) => rf[r]
                    .into_iter()
                    .filter(|&w| x.rf_candidates(r).contains(&w))
                    .collect(),
                None => x.rf_candidates(r),
            };
        }
        let nloc = x.locations().len();
        let mut wmask = vec![FixedBitSet::with_capacity(n); nloc];
        for w in x.writes() {
            wmask[x.loc_of(w)].insert(w);
        }
        let mut loc_events = vec![Vec::new(); nloc];
        let mut local = vec![0; n];
        for e in 0..n {
            let l = x.loc_of(e);
            local[e] = loc_events[l].len();
            loc_events[l].push(e);
        }
        let local_wmask = loc_events
            .iter()
            .map(|evs| {
                let mut m = FixedBitSet::with_capacity(evs.len());
                for (i, &e) in evs.iter().enumerate() {
                    if x.event(e).is_write() {
                        m.insert(i);
                    }
                }
                m
            })
            .collect();
        let time = (0..n)
            .map(|e| {
                let len = x.thread_events(x.thread_of(e)).len() as u64;
                (x.po_index(e) as u64 + 1) * 1_000_000 / (len + 1)
            })
            .collect();
        Problem {
            time,
            x,
            model,
            reads,
            cands,
            wmask,
            loc_events,
            local,
            local_wmask,
        }
    }

    fn relaxed(&self) -> bool {
        self.model == MemoryModel::RelaxedAcyclic
    }

    fn initial(&self) -> State {
        let po = self.x.po().clone();
        let hbt = po.inverse();
        let loc = if self.relaxed() {
            self.loc_events
                .iter()
                .map(|evs| {
                    Relation::from_pairs(
                        evs.len(),
                        evs.iter().enumerate().flat_map(|(i, &a)| {
                            evs.iter()
                                .enumerate()
                                .filter(move |&(_, &b)| self.x.po().contains(a, b))
                                .map(move |(j, _)| (i, j))
                        }),
                    )
                })
                .collect()
        } else {
            Vec::new()
        };
        State {
            rf: vec![None; self.x.len()],
            assigned: FixedBitSet::with_capacity(self.x.len()),
            readers: vec![Vec::new(); self.x.len()],
            dom: self.cands.clone(),
            hb: po,
            hbt,
            loc,
        }
    }

    /// Whether `w` can still feed `r` given the edges fixed so far.
    fn valid(&self, s: &State, r: usize, w: usize) -> bool {
        if s.hb.contains(r, w) {
            return false;
        }
        let l = self.x.loc_of(r);
        if self.relaxed() {
            let g = &s.loc[l];
            let (lr, lw) = (self.local[r], self.local[w]);
            if g.contains(lr, lw) {
                return false;
            }
            // Some other write sits between w and r: it would have to be
            // mo-before w while w reaches it.
            let mut col = FixedBitSet::with_capacity(g.size());
            for i in self.local_wmask[l].ones() {
                if g.contains(i, lr) {
                    col.insert(i);
                }
            }
            !meet3(g.row(lw), &col, &self.local_wmask[l], lw)
        } else {
            // Adding w -> r must keep weak read coherence for r and for
            // every read already assigned.
            let (srcs, dsts) = ends(&s.hb, &s.hbt, w, r);
            let wider = |r2: usize, w2: usize| {
                let ws = srcs.contains(w2);
                let rd = dsts.contains(r2);
                (ws || rd)
                    && meet3_widened(
                        s.hb.row(w2),
                        ws.then_some(&dsts),
                        s.hbt.row(r2),
                        rd.then_some(&srcs),
                        &self.wmask[self.x.loc_of(r2)],
                        w2,
                    )
            };
            if wider(r, w) {
                return false;
            }
            // Only reads after r or fed from before w can change.
            let mut touched = dsts.clone();
            touched.intersect_with(&s.assigned);
            for w2 in srcs.ones() {
                touched.extend(s.readers[w2].iter().copied());
            }
            !touched.ones().any(|r2| wider(r2, s.rf[r2].expect("assigned")))
        }
    }

    fn assign(&self, s: &mut State, r: usize, w: usize) -> bool {
        if s.hb.contains(r, w) {
            return false;
        }
        s.rf[r] = Some(w);
        s.assigned.insert(r);
        s.readers[w].push(r);
        close_insert(&mut s.hb, &mut s.hbt, w, r);
        if self.relaxed() {
            let l = self.x.loc_of(r);
            let g = &mut s.loc[l];
            close_insert_small(g, self.local[w], self.local[r]);
            self.saturate(s, l)
        } else {
            true
        }
    }

    /// Adds forced mo edges on location `l` until stable; false on a cycle.
    fn saturate(&self, s: &mut State, l: usize) -> bool {
        self.saturate_local(&mut s.loc[l], &s.rf, l)
    }

    fn saturate_local(&self, g: &mut Relation, rf: &[Option<usize>], l: usize) -> bool {
        let evs = &self.loc_events[l];
        loop {
            let mut changed = false;
            for (lr, &r) in evs.iter().enumerate() {
                let Some(w) = rf[r] else { continue };
                let lw = self.local[w];
                for lw2 in self.local_wmask[l].ones() {
                    if lw2 != lw && g.contains(lw2, lr) && !g.contains(lw2, lw) {
                        close_insert_small(g, lw2, lw);
                        changed = true;
                    }
                    if lw2 != lw && g.contains(lw, lw2) && !g.contains(lr, lw2) {
                        close_insert_small(g, lr, lw2);
                        changed = true;
                    }
                }
            }
            if !g.is_irreflexive() {
                return false;
            }
            if !changed {
                return true;
            }
        }
    }

    /// Narrows the candidates of unassigned reads on each location and
    /// records the coherence edges every remaining choice implies: a write
    /// below all candidates of a read precedes the read, a write above all
    /// of them follows it, and reads after the read can no longer see the
    /// writes below. False if some read runs out of candidates.
    fn propagate(&self, s: &mut State, doms: &mut [(usize, Vec<usize>)]) -> bool {
        let mut by_loc: Vec<Vec<usize>> = vec![Vec::new(); self.loc_events.len()];
        for (i, (r, _)) in doms.iter().enumerate() {
            by_loc[self.x.loc_of(*r)].push(i);
        }
        for (l, idx) in by_loc.iter().enumerate() {
            if idx.is_empty() {
                continue;
            }
            let wmask = &self.local_wmask[l];
            let size = wmask.len();
            let mut local: Vec<FixedBitSet> = idx
                .iter()
                .map(|&i| {
                    let mut m = FixedBitSet::with_capacity(size);
                    for &w in &doms[i].1 {
                        m.insert(self.local[w]);
                    }
                    m
                })
                .collect();
            let reads: Vec<usize> = idx.iter().map(|&i| self.local[doms[i].0]).collect();
            let mut changed = true;
            while changed {
                changed = false;
                for a in 0..idx.len() {
                    let la = reads[a];
                    let g = &s.loc[l];
                    let mut col = FixedBitSet::with_capacity(size);
                    for i in wmask.ones() {
                        if g.contains(i, la) {
                            col.insert(i);
                        }
                    }
                    let stale: Vec<usize> = local[a]
                        .ones()
                        .filter(|&lw| g.contains(la, lw) || meet3(g.row(lw), &col, wmask, lw))
                        .collect();
                    for lw in stale {
                        local[a].set(lw, false);
                    }
                    if local[a].is_clear() {
                        return false;
                    }
                    let mut below = FixedBitSet::with_capacity(size);
                    let mut above = wmask.clone();
                    for lw in wmask.ones() {
                        if local[a].is_subset(g.row(lw)) {
                            below.insert(lw);
                        }
                    }
                    for lw in local[a].ones() {
                        above.intersect_with(g.row(lw));
                    }
                    let new_below: Vec<usize> = below.ones().filter(|&lw| !g.contains(lw, la)).collect();
                    let new_above: Vec<usize> = above.ones().filter(|&lw| !g.contains(la, lw)).collect();
                    for b in 0..idx.len() {
                        let lb = reads[b];
                        let drop = if g.contains(la, lb) {
                            &below
                        } else if g.contains(lb, la) {
                            &above
                        } else {
                            continue;
                        };
                        if !local[b].is_disjoint(drop) {
                            local[b].difference_with(drop);
                            if local[b].is_clear() {
                                return false;
                            }
                            changed = true;
                        }
                    }
                    if !new_below.is_empty() || !new_above.is_empty() {
                        let g = &mut s.loc[l];
                        for lw in new_below {
                            close_insert_small(g, lw, la);
                        }
                        for lw in new_above {
                            close_insert_small(g, la, lw);
                        }
                        if !self.saturate(s, l) {
                            return false;
                        }
                        changed = true;
                    }
                }
            }
            for (k, &i) in idx.iter().enumerate() {
                doms[i].1.retain(|&w| local[k].contains(self.local[w]));
            }
        }
        true
    }

    /// The hb counterpart of `propagate`: whatever happens before every
    /// candidate of a read happens before the read, writes below all
    /// candidates are hidden from the reads after it, and writes above all
    /// candidates are too new for the reads before it.
    fn propagate_hb(&self, s: &mut State, doms: &mut [(usize, Vec<usize>)]) -> bool {
        let n = self.x.len();
        let mut sets: Vec<FixedBitSet> = doms
            .iter()
            .map(|(_, d)| {
                let mut m = FixedBitSet::with_capacity(n);
                m.extend(d.iter().copied());
                m
            })
            .collect();
        let mut stale = false;
        let mut changed = true;
        while changed {
            changed = false;
            let recheck = std::mem::take(&mut stale);
            for a in 0..doms.len() {
                let r = doms[a].0;
                if recheck {
                    // Only the read's own coherence; the full check runs on
                    // the next pass of the search.
                    let wm = &self.wmask[self.x.loc_of(r)];
                    let drop: Vec<usize> = sets[a]
                        .ones()
                        .filter(|&w| s.hb.contains(r, w) || meet3(s.hb.row(w), s.hbt.row(r), wm, w))
                        .collect();
                    for w in drop {
                        sets[a].set(w, false);
                    }
                }
                if sets[a].is_clear() {
                    return false;
                }
                let wmask = &self.wmask[self.x.loc_of(r)];
                let mut below: Option<FixedBitSet> = None;
                let mut above = wmask.clone();
                for w in sets[a].ones() {
                    let mut pre = s.hbt.row(w).clone();
                    pre.insert(w);
                    match below.as_mut() {
                        Some(b) => b.intersect_with(&pre),
                        None => below = Some(pre),
                    }
                    above.intersect_with(s.hb.row(w));
                }
                let below = below.expect("nonempty");
                if below.contains(r) || !below.is_disjoint(s.hb.row(r)) {
                    return false;
                }
                if !below.is_subset(s.hbt.row(r)) {
                    let mut dsts = s.hb.row(r).clone();
                    dsts.insert(r);
                    for src in below.ones() {
                        s.hb.insert_row(src, &dsts);
                    }
                    for d in dsts.ones() {
                        s.hbt.insert_row(d, &below);
                    }
                    stale = true;
                    changed = true;
                }
                let mut hidden = below;
                hidden.intersect_with(wmask);
                hidden.difference_with(&sets[a]);
                for b in 0..doms.len() {
                    let r2 = doms[b].0;
                    if b == a || self.x.loc_of(r2) != self.x.loc_of(r) {
                        continue;
                    }
                    let drop = if s.hb.contains(r, r2) {
                        &hidden
                    } else if s.hb.contains(r2, r) {
                        &above
                    } else {
                        continue;
                    };
                    if !sets[b].is_disjoint(drop) {
                        sets[b].difference_with(drop);
                        if sets[b].is_clear() {
                            return false;
                        }
                        changed = true;
                    }
                }
            }
        }
        for (k, (_, d)) in doms.iter_mut().enumerate() {
            d.retain(|&w| sets[k].contains(w));
        }
        true
    }

    /// Narrows domains, propagates and assigns forced reads until nothing
    /// changes. Returns the open reads with their domains, or `None` if
    /// some read has no writer left.
    fn settle(&self, s: &mut State, counter: &mut Counter) -> Result<Option<Vec<(usize, Vec<usize>)>>, OutOfBudget> {
        loop {
            let mut doms: Vec<(usize, Vec<usize>)> = Vec::new();
            for &r in &self.reads {
                if s.rf[r].is_some() {
                    continue;
                }
                let mut dom = std::mem::take(&mut s.dom[r]);
                dom.retain(|&w| self.valid(s, r, w));
                if dom.is_empty() {
                    return Ok(None);
                }
                doms.push((r, dom));
            }
            if doms.iter().all(|(_, d)| d.len() > 1) {
                let ok = if self.relaxed() {
                    self.propagate(s, &mut doms)
                } else {
                    self.propagate_hb(s, &mut doms)
                };
                if !ok {
                    return Ok(None);
                }
            }
            // Forced reads go in one batch, each rechecked against the
            // ones before it.
            let mut forced = false;
            for (r, dom) in &doms {
                if let [w] = dom[..] {
                    counter.tick()?;
                    if !self.valid(s, *r, w) || !self.assign(s, *r, w) {
                        return Ok(None);
                    }
                    forced = true;
                }
            }
            for (r, dom) in &doms {
                s.dom[*r] = dom.clone();
            }
            if !forced {
                return Ok(Some(doms));
            }
        }
    }

    fn search(&self, mut s: State, counter: &mut Counter) -> Result<Option<ConcreteExecution>, OutOfBudget> {
        let Some(mut doms) = self.settle(&mut s, counter)? else { return Ok(None) };
        if doms.is_empty() {
            return self.leaf(&s, counter);
        }
        let k = (0..doms.len())
            .min_by_key(|&k| (doms[k].1.len(), self.time[doms[k].0]))
            .expect("nonempty");
        let (r, mut valid) = doms.swap_remove(k);
        valid.sort_by_key(|&w| self.time[w].abs_diff(self.time[r]));
        for w in valid {
            counter.tick()?;
            let mut child = s.clone();
            if self.assign(&mut child, r, w) {
                if let Some(found) = self.search(child, counter)? {
                    return Ok(Some(found));
                }
            }
        }
        Ok(None)
    }

    /// Forced mo edges: `(w2, w)` whenever `w2` happens before a reader of
    /// `w`, plus hb between same-location writes.
    fn forced(&self, s: &State) -> Relation {
        let n = self.x.len();
        let mut f = Relation::empty(n);
        for l in 0..self.wmask.len() {
            for a in self.wmask[l].ones() {
                let mut row = s.hb.row(a).clone();
                row.intersect_with(&self.wmask[l]);
                for b in row.ones() {
                    f.insert(a, b);
                }
            }
        }
        for &r in &self.reads {
            let w = s.rf[r].expect("leaf");
            let l = self.x.loc_of(r);
            for w2 in self.wmask[l].ones() {
                if w2 != w && s.hbt.contains(r, w2) {
                    f.insert(w2, w);
                }
            }
        }
        f
    }

    fn mo_from_order(&self, order: &[usize]) -> Vec<Vec<usize>> {
        let mut mo = vec![Vec::new(); self.wmask.len()];
        for &e in order {
            if self.x.event(e).is_write() {
                mo[self.x.loc_of(e)].push(e);
            }
        }
        mo
    }

    fn leaf(&self, s: &State, counter: &mut Counter) -> Result<Option<ConcreteExecution>, OutOfBudget> {
        let x = self.x;
        let rf = s.rf.clone();
        let mo = match self.model {
            MemoryModel::RelaxedAcyclic => {
                // Any linear extension of the saturated location graphs is a
                // coherent mo; replay per location only if that fails.
                let mut mo = Vec::with_capacity(self.loc_events.len());
                for (l, evs) in self.loc_events.iter().enumerate() {
                    let order = s.loc[l].topological_order().expect("saturated graph is acyclic");
                    mo.push(order.into_iter().map(|i| evs[i]).filter(|&e| self.x.event(e).is_write()).collect());
                }
                let witness = ConcreteExecution::new(x.clone(), rf.clone(), mo).expect("search witness is well formed");
                if check_concrete(&witness, MemoryModel::RelaxedAcyclic).expect("axiomatic") {
                    return Ok(Some(witness));
                }
                let opts = Options { budget: counter.budget, memo: true };
                return replay_locations(x, Some(&rf), opts, counter);
            }
            MemoryModel::SRA => match s.hb.union(&self.forced(s)).topological_order() {
                Some(order) => self.mo_from_order(&order),
                None => return Ok(None),
            },
            MemoryModel::RA => match self.forced(s).topological_order() {
                Some(order) => self.mo_from_order(&order),
                None => return Ok(None),
            },
            _ => {
                let order = self
                    .forced(s)
                    .topological_order()
                    .or_else(|| s.hb.topological_order())
                    .expect("hb is acyclic");
                self.mo_from_order(&order)
            }
        };
        let witness = ConcreteExecution::new(x.clone(), rf, mo).expect("search witness is well formed");
        if self.model == MemoryModel::CM && !check_concrete(&witness, MemoryModel::CM).expect("axiomatic") {
            return Ok(None);
        }
        debug_assert!(check_concrete(&witness, self.model).unwrap());
        Ok(Some(witness))
    }
}

pub(crate) fn decide_search(
    x: &AbstractExecution,
    model: MemoryModel,
    fixed: Option<&[Option<usize>]>,
    opts: Options,
) -> Verdict {
    let model = model.canonical();
    assert!(
        matches!(
            model,
            MemoryModel::WRA | MemoryModel::RA | MemoryModel::SRA | MemoryModel::RelaxedAcyclic | MemoryModel::CM
        ),
        "{model} is not decided by rf search"
    );
    if let Some(diag) = unfed_read(x) {
        return Verdict::inconsistent(model, Stats::default(), Some(diag));
    }
    let problem = Problem::new(x, model, fixed);
    let mut counter = Counter::new(opts.budget);
    let mut init = problem.initial();
    if problem.relaxed() && !(0..x.locations().len()).all(|l| problem.saturate(&mut init, l)) {
        return Verdict::inconsistent(model, counter.stats, None);
    }
    match problem.search(init, &mut counter) {
        Err(OutOfBudget) => Verdict::inconclusive(model, counter.stats),
        Ok(None) => Verdict::inconsistent(model, counter.stats, None),
        Ok(Some(w)) => Verdict::consistent(model, w, counter.stats),
    }
}

/// Backtracking rf search for WRA, RA, SRA and Relaxed-Acyclic (CC and CCv
/// resolve to WRA and SRA).
pub fn decide_ra_family(x: &AbstractExecution, model: MemoryModel, opts: Options) -> Verdict {
    let mut v = decide_search(x, model, None, opts);
    v.model = model;
    v
}

/// The WRA search with observed-before acyclicity checked on complete
/// assignments.
pub fn decide_cm(x: &AbstractExecution, opts: Options) -> Verdict {
    decide_search(x, MemoryModel::CM, None, opts)
}

/// Per-location SC by interleaving exploration, optionally with rf fixed.
/// `Ok(None)` if some location fails.
fn replay_locations(
    x: &AbstractExecution,
    rf: Option<&[Option<usize>]>,
    opts: Options,
    counter: &mut Counter,
) -> Result<Option<ConcreteExecution>, OutOfBudget> {
    per_location(x, rf, opts, counter, |proj, rf, opts| {
        decide_fixed(proj, MemoryModel::SC, rf, None, opts)
    })
}

/// Per-location SC through the rf search: on a single location SC and
/// Relaxed-Acyclic coincide.
fn relaxed_fixed(
    x: &AbstractExecution,
    rf: Option<&[Option<usize>]>,
    opts: Options,
    counter: &mut Counter,
) -> Result<Option<ConcreteExecution>, OutOfBudget> {
    per_location(x, rf, opts, counter, |proj, rf, opts| {
        decide_search(proj, MemoryModel::RelaxedAcyclic, rf, opts)
    })
}

fn per_location(
    x: &AbstractExecution,
    rf: Option<&[Option<usize>]>,
    opts: Options,
    counter: &mut Counter,
    decide_one: impl Fn(&AbstractExecution, Option<&[Option<usize>]>, Options) -> Verdict,
) -> Result<Option<ConcreteExecution>, OutOfBudget> {
    let mut full_rf = vec![None; x.len()];
    let mut mo = vec![Vec::new(); x.locations().len()];
    for l in 0..x.locations().len() {
        let (proj, back) = x.project(l);
        let proj_rf: Option<Vec<Option<usize>>> = rf.map(|rf| {
            let fwd: std::collections::HashMap<usize, usize> =
                back.iter().enumerate().map(|(i, &e)| (e, i)).collect();
            back.iter().map(|&e| rf[e].map(|w| fwd[&w])).collect()
        });
        let budget = opts.budget.map(|b| b.saturating_sub(counter.stats.nodes));
        let v = decide_one(&proj, proj_rf.as_deref(), Options { budget, memo: true });
        counter.stats.nodes += v.stats.nodes;
        counter.stats.memo_hits += v.stats.memo_hits;
        if v.is_inconclusive() {
            return Err(OutOfBudget);
        }
        let Some(w) = v.witness else { return Ok(None) };
        for (i, writer) in w.rf_map().iter().enumerate() {
            if let Some(wr) = writer {
                full_rf[back[i]] = Some(back[*wr]);
            }
        }
        mo[l] = w.mo_order(0).iter().map(|&i| back[i]).collect();
    }
    let witness = ConcreteExecution::new(x.clone(), full_rf, mo).expect("per-location witness is well formed");
    Ok(Some(witness))
}

pub(crate) fn decide_relaxed_fixed(x: &AbstractExecution, rf: Option<&[Option<usize>]>, opts: Options) -> Verdict {
    if let Some(diag) = unfed_read(x) {
        return Verdict::inconsistent(MemoryModel::Relaxed, Stats::default(), Some(diag));
    }
    let mut counter = Counter::new(opts.budget);
    match relaxed_fixed(x, rf, opts, &mut counter) {
        Err(OutOfBudget) => Verdict::inconclusive(MemoryModel::Relaxed, counter.stats),
        Ok(None) => Verdict::inconsistent(MemoryModel::Relaxed, counter.stats, None),
        Ok(Some(w)) => Verdict::consistent(MemoryModel::Relaxed, w, counter.stats),
    }
}

/// Relaxed holds iff every single-location projection is SC.
pub fn decide_relaxed(x: &AbstractExecution, opts: Options) -> Verdict {
    decide_relaxed_fixed(x, None, opts)
}
