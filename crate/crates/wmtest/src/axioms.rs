//! Coherence axioms, model axiom sets and the observed-before relation.

use std::fmt;
use std::str::FromStr;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{compute_hb, conflicting_triplets, ConcreteExecution, ConflictTriplet};
use crate::relation::Relation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axiom {
    WriteCoherence,
    StrongWriteCoherence,
    ReadCoherence,
    WeakReadCoherence,
    PorfAcyclicity,
    RelaxedWriteCoherence,
    RelaxedReadCoherence,
    ObAcyclicity,
    /// `acy(po_x ∪ rf_x ∪ mo_x)` for every location. Part of the Relaxed
    /// models so that they coincide with per-location SC.
    LocationAcyclicity,
}

impl Axiom {
    pub const ALL: [Axiom; 9] = [
        Axiom::WriteCoherence,
        Axiom::StrongWriteCoherence,
        Axiom::ReadCoherence,
        Axiom::WeakReadCoherence,
        Axiom::PorfAcyclicity,
        Axiom::RelaxedWriteCoherence,
        Axiom::RelaxedReadCoherence,
        Axiom::ObAcyclicity,
        Axiom::LocationAcyclicity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axiom::WriteCoherence => "write-coherence",
            Axiom::StrongWriteCoherence => "strong-write-coherence",
            Axiom::ReadCoherence => "read-coherence",
            Axiom::WeakReadCoherence => "weak-read-coherence",
            Axiom::PorfAcyclicity => "porf-acyclicity",
            Axiom::RelaxedWriteCoherence => "relaxed-write-coherence",
            Axiom::RelaxedReadCoherence => "relaxed-read-coherence",
            Axiom::ObAcyclicity => "ob-acyclicity",
            Axiom::LocationAcyclicity => "location-acyclicity",
        }
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axiom {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Axiom::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown axiom `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MemoryModel {
    SC,
    TSO,
    PSO,
    Relaxed,
    RelaxedAcyclic,
    WRA,
    RA,
    SRA,
    CC,
    CCv,
    CM,
}

impl MemoryModel {
    pub const ALL: [MemoryModel; 11] = [
        MemoryModel::SC,
        MemoryModel::TSO,
        MemoryModel::PSO,
        MemoryModel::Relaxed,
        MemoryModel::RelaxedAcyclic,
        MemoryModel::WRA,
        MemoryModel::RA,
        MemoryModel::SRA,
        MemoryModel::CC,
        MemoryModel::CCv,
        MemoryModel::CM,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MemoryModel::SC => "SC",
            MemoryModel::TSO => "TSO",
            MemoryModel::PSO => "PSO",
            MemoryModel::Relaxed => "Relaxed",
            MemoryModel::RelaxedAcyclic => "RelaxedAcyclic",
            MemoryModel::WRA => "WRA",
            MemoryModel::RA => "RA",
            MemoryModel::SRA => "SRA",
            MemoryModel::CC => "CC",
            MemoryModel::CCv => "CCv",
            MemoryModel::CM => "CM",
        }
    }

    /// Resolves the aliases CC = WRA and CCv = SRA.
    pub fn canonical(self) -> MemoryModel {
        match self {
            MemoryModel::CC => MemoryModel::WRA,
            MemoryModel::CCv => MemoryModel::SRA,
            m => m,
        }
    }

    pub fn is_operational(self) -> bool {
        matches!(self, MemoryModel::SC | MemoryModel::TSO | MemoryModel::PSO)
    }

    /// The axioms checked for this model, or `None` for the operational
    /// models.
    pub fn axioms(self) -> Option<&'static [Axiom]> {
        use Axiom::*;
        Some(match self.canonical() {
            MemoryModel::WRA => &[PorfAcyclicity, WeakReadCoherence],
            // hb must be acyclic here too, otherwise RA would accept
            // load buffering while WRA rejects it.
            MemoryModel::RA => &[WriteCoherence, ReadCoherence, PorfAcyclicity],
            MemoryModel::SRA => &[StrongWriteCoherence, ReadCoherence],
            MemoryModel::Relaxed => &[
                RelaxedWriteCoherence,
                RelaxedReadCoherence,
                LocationAcyclicity,
            ],
            MemoryModel::RelaxedAcyclic => &[
                RelaxedWriteCoherence,
                RelaxedReadCoherence,
                LocationAcyclicity,
                PorfAcyclicity,
            ],
            MemoryModel::CM => &[PorfAcyclicity, WeakReadCoherence, ObAcyclicity],
            _ => return None,
        })
    }
}

impl fmt::Display for MemoryModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MemoryModel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        MemoryModel::ALL
            .into_iter()
            .find(|m| m.name().to_ascii_lowercase() == norm)
            .ok_or_else(|| format!("unknown memory model `{s}`"))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AxiomError {
    #[error("model {0} has no axiomatic definition; use the operational decider")]
    UnsupportedModel(MemoryModel),
}

/// A falsified axiom with the smallest witnessing pair by event id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub axiom: Axiom,
    pub location: Option<String>,
    pub first: String,
    pub second: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} violated by ({}, {})", self.axiom, self.first, self.second)?;
        if let Some(loc) = &self.location {
            write!(f, " on {loc}")?;
        }
        Ok(())
    }
}

/// Shared relations of one execution, computed once per check.
struct Ctx<'a> {
    x: &'a ConcreteExecution,
    hb: Relation,
    mo: Relation,
}

impl<'a> Ctx<'a> {
    fn new(x: &'a ConcreteExecution) -> Self {
        Ctx {
            x,
            hb: compute_hb(x),
            mo: x.mo(),
        }
    }

    fn smallest(&self, axiom: Axiom, pairs: impl IntoIterator<Item = (usize, usize)>) -> Option<Violation> {
        let base = self.x.base();
        let (a, b) = pairs
            .into_iter()
            .min_by(|&(a1, b1), &(a2, b2)| (base.id(a1), base.id(b1)).cmp(&(base.id(a2), base.id(b2))))?;
        let location = (base.loc_of(a) == base.loc_of(b) && matches!(
            axiom,
            Axiom::WriteCoherence
                | Axiom::ReadCoherence
                | Axiom::WeakReadCoherence
                | Axiom::RelaxedWriteCoherence
                | Axiom::RelaxedReadCoherence
                | Axiom::LocationAcyclicity
        ))
        .then(|| base.locations()[base.loc_of(a)].clone());
        Some(Violation {
            axiom,
            location,
            first: base.id(a).to_string(),
            second: base.id(b).to_string(),
        })
    }

    fn reflexive_points(rel: &Relation) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..rel.size()).filter(|&e| rel.contains(e, e)).map(|e| (e, e))
    }

    fn check(&self, axiom: Axiom) -> Option<Violation> {
        let x = self.x;
        let base = x.base();
        let po = base.po();
        match axiom {
            Axiom::WriteCoherence => {
                let bad = self.mo.pairs().filter(|&(a, b)| self.hb.contains(b, a));
                self.smallest(axiom, bad.collect::<Vec<_>>())
            }
            Axiom::StrongWriteCoherence => {
                let closed = self.hb.union(&self.mo).transitive_closure();
                self.smallest(axiom, Self::reflexive_points(&closed).collect::<Vec<_>>())
            }
            Axiom::ReadCoherence => {
                let mut bad = Vec::new();
                for r in base.reads() {
                    let w = x.writer_of(r);
                    for w2 in self.mo.row(w).ones() {
                        if self.hb.contains(w2, r) {
                            bad.push((w2, r));
                        }
                    }
                }
                self.smallest(axiom, bad)
            }
            Axiom::WeakReadCoherence => {
                let mut bad = Vec::new();
                for r in base.reads() {
                    let w = x.writer_of(r);
                    for w2 in base.writes_to(base.loc_of(r)) {
                        if w2 != w && self.hb.contains(w, w2) && self.hb.contains(w2, r) {
                            bad.push((w2, r));
                        }
                    }
                }
                self.smallest(axiom, bad)
            }
            Axiom::PorfAcyclicity => {
                let closed = po.union(&x.rf()).transitive_closure();
                self.smallest(axiom, Self::reflexive_points(&closed).collect::<Vec<_>>())
            }
            Axiom::RelaxedWriteCoherence => {
                let bad = self.mo.pairs().filter(|&(a, b)| po.contains(b, a));
                self.smallest(axiom, bad.collect::<Vec<_>>())
            }
            Axiom::RelaxedReadCoherence => {
                let rf_po = x.rf().reflexive_closure().compose(po);
                let mut bad = Vec::new();
                for r in base.reads() {
                    let w = x.writer_of(r);
                    for w2 in self.mo.row(w).ones() {
                        if rf_po.contains(w2, r) {
                            bad.push((w2, r));
                        }
                    }
                }
                self.smallest(axiom, bad)
            }
            Axiom::ObAcyclicity => {
                let mut bad = Vec::new();
                for t in 0..base.threads().len() {
                    if let Some(ob) = compute_ob_thread(x, t) {
                        bad.extend(Self::reflexive_points(&ob));
                    }
                }
                self.smallest(axiom, bad)
            }
            Axiom::LocationAcyclicity => {
                let all = po.union(&x.rf()).union(&self.mo);
                let mut bad = Vec::new();
                for l in 0..base.locations().len() {
                    let closed = all.restrict(&base.location_mask(l)).transitive_closure();
                    bad.extend(Self::reflexive_points(&closed));
                }
                self.smallest(axiom, bad)
            }
        }
    }
}

/// The first violation of `axiom`, if any. Per-location axioms are
/// checked over every location.
pub fn axiom_violation(x: &ConcreteExecution, axiom: Axiom) -> Option<Violation> {
    Ctx::new(x).check(axiom)
}

pub fn evaluate_axiom(x: &ConcreteExecution, axiom: Axiom) -> bool {
    axiom_violation(x, axiom).is_none()
}

/// The first violated axiom of `model`, checked in the model's order.
pub fn model_violation(x: &ConcreteExecution, model: MemoryModel) -> Result<Option<Violation>, AxiomError> {
    let axioms = model.axioms().ok_or(AxiomError::UnsupportedModel(model))?;
    let ctx = Ctx::new(x);
    Ok(axioms.iter().find_map(|&a| ctx.check(a)))
}

pub fn check_concrete(x: &ConcreteExecution, model: MemoryModel) -> Result<bool, AxiomError> {
    Ok(model_violation(x, model)?.is_none())
}

/// Events in the causal past of `e`, `e` included.
fn causal_past(x: &ConcreteExecution, hb: &Relation, e: usize) -> FixedBitSet {
    let n = x.base().len();
    let mut past = FixedBitSet::with_capacity(n);
    for a in 0..n {
        if hb.contains(a, e) {
            past.insert(a);
        }
    }
    past.insert(e);
    past
}

/// Reads `r` with `(r, e) ∈ po?`.
fn po_reads_upto(x: &ConcreteExecution, e: usize) -> FixedBitSet {
    let base = x.base();
    let mut set = FixedBitSet::with_capacity(base.len());
    for r in base.reads() {
        if r == e || base.po().contains(r, e) {
            set.insert(r);
        }
    }
    set
}

/// Inserts `(a, b)` into a transitively closed relation and re-closes it.
fn insert_closed(rel: &mut Relation, a: usize, b: usize) -> bool {
    if rel.contains(a, b) {
        return false;
    }
    let mut add = rel.row(b).clone();
    add.insert(b);
    let n = rel.size();
    let sources: Vec<usize> = (0..n).filter(|&s| s == a || rel.contains(s, a)).collect();
    for s in sources {
        for t in add.ones() {
            rel.insert(s, t);
        }
    }
    true
}

fn ob_seed(x: &ConcreteExecution, hb: &Relation, e: usize) -> (Relation, FixedBitSet) {
    let past = causal_past(x, hb, e);
    (hb.restrict(&past), po_reads_upto(x, e))
}

fn relevant_triplets(x: &ConcreteExecution, reads: &FixedBitSet) -> Vec<ConflictTriplet> {
    conflicting_triplets(x)
        .into_iter()
        .filter(|t| reads.contains(t.r))
        .collect()
}

fn ob_with_hb(x: &ConcreteExecution, hb: &Relation, e: usize) -> Relation {
    let (mut ob, reads) = ob_seed(x, hb, e);
    let triplets = relevant_triplets(x, &reads);
    loop {
        let mut changed = false;
        for t in &triplets {
            if ob.contains(t.w2, t.r) {
                changed |= insert_closed(&mut ob, t.w2, t.w);
            }
        }
        if !changed {
            return ob;
        }
    }
}

/// Observed-before of event `e`: the least transitive relation containing
/// the hb pairs within `e`'s causal past (with `e` itself) and, for every
/// triplet `(w, r, w2)` with `(w2, r) ∈ ob` and `(r, e) ∈ po?`, the pair
/// `(w2, w)`.
pub fn compute_ob(x: &ConcreteExecution, e: usize) -> Relation {
    ob_with_hb(x, &compute_hb(x), e)
}

/// Like `compute_ob`, but the triplet rule only fires when `(w2, r) ∈ hb`.
pub fn compute_ob_one_hop(x: &ConcreteExecution, e: usize) -> Relation {
    let hb = compute_hb(x);
    let (mut ob, reads) = ob_seed(x, &hb, e);
    for t in relevant_triplets(x, &reads) {
        if hb.contains(t.w2, t.r) {
            insert_closed(&mut ob, t.w2, t.w);
        }
    }
    ob
}

/// `ob_t`: observed-before of the last event of thread `t`; `None` for an
/// empty thread (treated as the empty relation).
pub fn compute_ob_thread(x: &ConcreteExecution, t: usize) -> Option<Relation> {
    x.base().thread_events(t).last().map(|&e| compute_ob(x, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ExecutionBuilder;

    #[test]
    fn model_names_parse() {
        assert_eq!("relaxed-acyclic".parse::<MemoryModel>(), Ok(MemoryModel::RelaxedAcyclic));
        assert_eq!("ccv".parse::<MemoryModel>(), Ok(MemoryModel::CCv));
        assert!("POWER".parse::<MemoryModel>().is_err());
    }

    #[test]
    fn operational_models_are_rejected() {
        let x = ConcreteExecution::new(crate::model::AbstractExecution::empty(), vec![], vec![]).unwrap();
        assert_eq!(
            check_concrete(&x, MemoryModel::TSO),
            Err(AxiomError::UnsupportedModel(MemoryModel::TSO))
        );
    }

    #[test]
    fn empty_execution_satisfies_everything() {
        let x = ConcreteExecution::new(crate::model::AbstractExecution::empty(), vec![], vec![]).unwrap();
        for a in Axiom::ALL {
            assert!(evaluate_axiom(&x, a), "{a}");
        }
    }

    #[test]
    fn single_thread_latest_reads_pass_every_model() {
        let base = ExecutionBuilder::new()
            .thread("t1")
            .write("x", 1)
            .read("x", 1)
            .write("x", 2)
            .write("y", 3)
            .read("x", 2)
            .read("y", 3)
            .build();
        let x = ConcreteExecution::from_ids(
            base,
            &[("t1.1", "t1.2"), ("t1.3", "t1.5"), ("t1.4", "t1.6")],
            &[],
        )
        .unwrap();
        for m in MemoryModel::ALL.into_iter().filter(|m| !m.is_operational()) {
            assert_eq!(check_concrete(&x, m), Ok(true), "{m}");
        }
    }

    /// Hand saturation: t1 and t2 each write x, t3 observes t1's write
    /// then reads t2's. Rule 2 orders t1's write before t2's.
    #[test]
    fn ob_orders_observed_writes() {
        let base = ExecutionBuilder::new()
            .thread("t1")
            .write("x", 1)
            .thread("t2")
            .write("x", 2)
            .thread("t3")
            .read("x", 1)
            .read("x", 2)
            .build();
        let x = ConcreteExecution::from_ids(base, &[("t1.1", "t3.1"), ("t2.1", "t3.2")], &[]).unwrap();
        let idx = |id| x.base().index_of(id).unwrap();
        let e = idx("t3.2");
        let ob = compute_ob(&x, e);
        // hb pairs: t1.1 -> t3.1 -> t3.2, t2.1 -> t3.2. Triplet
        // (t2.1, t3.2, t1.1): (t1.1, t3.2) in ob gives (t1.1, t2.1).
        assert!(ob.contains(idx("t1.1"), idx("t2.1")));
        assert!(!ob.contains(idx("t2.1"), idx("t1.1")));
        assert!(ob.is_irreflexive());
        assert_eq!(ob, compute_ob_one_hop(&x, e));
    }
}
