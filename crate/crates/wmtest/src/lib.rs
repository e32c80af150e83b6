//! Weak-memory consistency testing.
//!
//! Executions are modelled as events with program order (`model`), resolved
//! with reads-from and modification order. `axioms` evaluates coherence
//! axioms, `decide` answers whether an abstract execution is consistent
//! under a memory model, `hardness` builds reduction instances from
//! Monotone 1-in-3 SAT formulas and `io` reads and writes the text formats.

pub mod axioms;
pub mod decide;
pub mod hardness;
pub mod io;
pub mod model;
pub mod relation;

pub use axioms::{check_concrete, evaluate_axiom, Axiom, MemoryModel};
pub use model::{AbstractExecution, ConcreteExecution, Event, ExecutionBuilder, Kind};
pub use relation::Relation;
