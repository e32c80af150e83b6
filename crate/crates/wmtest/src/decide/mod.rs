//! Decision procedures for abstract executions.
//!
//! SC, TSO and PSO are explored operationally; Relaxed reduces to SC on
//! each location; Relaxed-Acyclic, WRA, RA, SRA and CM search over
//! reads-from assignments. `brute_force_decide` is an exhaustive oracle for
//! small inputs.

mod brute;
mod operational;
mod search;

use serde::Serialize;
use thiserror::Error;

use crate::axioms::MemoryModel;
use crate::model::{AbstractExecution, ConcreteExecution};

pub use brute::{brute_force_decide, BRUTE_FORCE_LIMIT};
pub use operational::{
    decide_pso, decide_sc, decide_sc_location, decide_tso, replay, BufferMode, Step,
};
pub use search::{decide_cm, decide_ra_family, decide_relaxed, minimal_coherence_check, Flavor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Consistent,
    Inconsistent,
    /// The node budget ran out before the search finished.
    Inconclusive,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub nodes: u64,
    pub memo_hits: u64,
}

#[derive(Clone, Debug)]
pub struct Verdict {
    pub model: MemoryModel,
    pub outcome: Outcome,
    pub witness: Option<ConcreteExecution>,
    /// Transition sequence of an operational witness.
    pub trace: Option<Vec<Step>>,
    pub stats: Stats,
    pub diagnostic: Option<String>,
}

impl Verdict {
    pub fn is_consistent(&self) -> bool {
        self.outcome == Outcome::Consistent
    }

    pub fn is_inconclusive(&self) -> bool {
        self.outcome == Outcome::Inconclusive
    }

    pub(crate) fn consistent(model: MemoryModel, witness: ConcreteExecution, stats: Stats) -> Self {
        Verdict {
            model,
            outcome: Outcome::Consistent,
            witness: Some(witness),
            trace: None,
            stats,
            diagnostic: None,
        }
    }

    pub(crate) fn inconsistent(model: MemoryModel, stats: Stats, diagnostic: Option<String>) -> Self {
        Verdict {
            model,
            outcome: Outcome::Inconsistent,
            witness: None,
            trace: None,
            stats,
            diagnostic,
        }
    }

    pub(crate) fn inconclusive(model: MemoryModel, stats: Stats) -> Self {
        Verdict {
            model,
            outcome: Outcome::Inconclusive,
            witness: None,
            trace: None,
            stats,
            diagnostic: Some(String::from("search budget exhausted")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Options {
    /// Maximum number of search nodes; `None` is unlimited.
    pub budget: Option<u64>,
    /// Memoize visited states in the operational explorers.
    pub memo: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            budget: None,
            memo: true,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecideError {
    #[error("execution has {0} events; the brute-force oracle accepts at most {BRUTE_FORCE_LIMIT}")]
    TooLarge(usize),
}

pub(crate) struct OutOfBudget;

/// Node counter shared by the searches.
pub(crate) struct Counter {
    pub stats: Stats,
    pub budget: Option<u64>,
}

impl Counter {
    pub fn new(budget: Option<u64>) -> Self {
        Counter {
            stats: Stats::default(),
            budget,
        }
    }

    pub fn tick(&mut self) -> Result<(), OutOfBudget> {
        self.stats.nodes += 1;
        match self.budget {
            Some(b) if self.stats.nodes > b => Err(OutOfBudget),
            _ => Ok(()),
        }
    }
}

/// The first read that no write could feed, as a diagnostic.
pub(crate) fn unfed_read(x: &AbstractExecution) -> Option<String> {
    x.reads().find(|&r| x.rf_candidates(r).is_empty()).map(|r| {
        let e = x.event(r);
        format!(
            "value mismatch: read {} of {} = {} has no matching write",
            e.id(),
            e.location(),
            e.value()
        )
    })
}

/// Decides `x` under `model` with the optimized procedure for that model.
pub fn decide(x: &AbstractExecution, model: MemoryModel, opts: Options) -> Verdict {
    let mut v = match model.canonical() {
        MemoryModel::SC => decide_sc(x, opts),
        MemoryModel::TSO => decide_tso(x, opts),
        MemoryModel::PSO => decide_pso(x, opts),
        MemoryModel::Relaxed => decide_relaxed(x, opts),
        MemoryModel::CM => decide_cm(x, opts),
        m => decide_ra_family(x, m, opts),
    };
    v.model = model;
    v
}

/// Decides `x` with its reads-from fixed to `rf`, as for a concrete
/// document given without modification order.
pub fn decide_with_rf(
    x: &AbstractExecution,
    rf: &[Option<usize>],
    model: MemoryModel,
    opts: Options,
) -> Verdict {
    let mut v = match model.canonical() {
        MemoryModel::SC | MemoryModel::TSO | MemoryModel::PSO => {
            operational::decide_fixed(x, model.canonical(), Some(rf), None, opts)
        }
        MemoryModel::Relaxed => search::decide_relaxed_fixed(x, Some(rf), opts),
        m => search::decide_search(x, m, Some(rf), opts),
    };
    v.model = model;
    v
}

/// Checks a complete concrete execution: operational models replay it
/// with rf and mo fixed, the others evaluate their axioms.
pub fn verify(c: &ConcreteExecution, model: MemoryModel, opts: Options) -> Verdict {
    let x = c.base();
    let mut v = match model.canonical() {
        m @ (MemoryModel::SC | MemoryModel::TSO | MemoryModel::PSO) => {
            operational::decide_fixed(x, m, Some(c.rf_map()), Some(c.mo_orders()), opts)
        }
        m => match crate::axioms::model_violation(c, m).expect("axiomatic model") {
            None => Verdict::consistent(m, c.clone(), Stats::default()),
            Some(violation) => Verdict::inconsistent(m, Stats::default(), Some(violation.to_string())),
        },
    };
    v.model = model;
    v
}
