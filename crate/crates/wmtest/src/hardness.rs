//! Reduction from Monotone 1-in-3 SAT to consistency testing.
//!
//! `generate` builds the abstract execution for a formula, `witness_extension`
//! turns a 1-in-3 assignment into a consistent concrete execution, and
//! `bounded_value_transform` rewrites an instance over a constant value
//! domain.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::axioms::MemoryModel;
use crate::decide::{decide_with_rf, Options};
use crate::model::{AbstractExecution, ConcreteExecution, Kind};

/// Largest variable count `brute_force_1in3` accepts.
pub const SAT_LIMIT: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HardnessError {
    #[error("malformed formula header: {0}")]
    MalformedHeader(String),
    #[error("line {line}: malformed clause: {message}")]
    MalformedClause { line: usize, message: String },
    #[error("line {line}: variable {var} is outside 1..={n}")]
    IndexOutOfRange { line: usize, var: usize, n: usize },
    #[error("line {line}: clause repeats variable {var}")]
    RepeatedVariableInClause { line: usize, var: usize },
    #[error("formula needs at least one clause")]
    TooFewClauses,
    #[error("formula needs at least 3 variables, got {0}")]
    TooFewVariables(usize),
    #[error("header announces {expected} clauses but {found} were given")]
    ClauseCountMismatch { expected: usize, found: usize },
    #[error("formula has {0} variables; exhaustive search accepts at most {SAT_LIMIT}")]
    TooLarge(usize),
    #[error("malformed assignment: {0}")]
    MalformedAssignment(String),
    #[error("assignment has {found} values but the formula has {expected} variables")]
    AssignmentLength { expected: usize, found: usize },
    #[error("clause {0} does not have exactly one true variable")]
    AssignmentNotOneInThree(usize),
    #[error("execution does not match the gadget plan: {0}")]
    PlanMismatch(String),
    #[error("constructed extension was rejected under {0}")]
    WitnessRejected(MemoryModel),
}

/// A monotone CNF formula with three distinct variables per clause.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Formula {
    n: usize,
    clauses: Vec<[usize; 3]>,
}

impl Formula {
    pub fn new(n: usize, clauses: Vec<[usize; 3]>) -> Result<Self, HardnessError> {
        if n < 3 {
            return Err(HardnessError::TooFewVariables(n));
        }
        if clauses.is_empty() {
            return Err(HardnessError::TooFewClauses);
        }
        for (c, clause) in clauses.iter().enumerate() {
            let line = c + 2;
            for (k, &var) in clause.iter().enumerate() {
                if var == 0 || var > n {
                    return Err(HardnessError::IndexOutOfRange { line, var, n });
                }
                if clause[..k].contains(&var) {
                    return Err(HardnessError::RepeatedVariableInClause { line, var });
                }
            }
        }
        Ok(Formula { n, clauses })
    }

    pub fn variables(&self) -> usize {
        self.n
    }

    pub fn clauses(&self) -> &[[usize; 3]] {
        &self.clauses
    }

    /// Clause `i` (1-based) with its variables in ascending order.
    fn sorted_clause(&self, i: usize) -> [usize; 3] {
        let mut c = self.clauses[i - 1];
        c.sort_unstable();
        c
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.n, self.clauses.len())?;
        for c in &self.clauses {
            writeln!(f, "{} {} {}", c[0], c[1], c[2])?;
        }
        Ok(())
    }
}

impl FromStr for Formula {
    type Err = HardnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_formula(s)
    }
}

/// Parses `n m` followed by `m` lines of three variable indices. Blank lines
/// and `#` comments are ignored.
pub fn parse_formula(text: &str) -> Result<Formula, HardnessError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| HardnessError::MalformedHeader(String::from("empty input")))?;
    let nums: Vec<&str> = header.split_whitespace().collect();
    let parse = |s: &str| s.parse::<usize>().map_err(|_| HardnessError::MalformedHeader(header.to_string()));
    let [n, m] = nums[..] else {
        return Err(HardnessError::MalformedHeader(header.to_string()));
    };
    let (n, m) = (parse(n)?, parse(m)?);
    let mut clauses = Vec::new();
    let mut raw_lines = Vec::new();
    for (line, l) in lines {
        let vars: Result<Vec<usize>, _> = l.split_whitespace().map(str::parse::<usize>).collect();
        let vars = vars.map_err(|e| HardnessError::MalformedClause {
            line,
            message: e.to_string(),
        })?;
        let [a, b, c] = vars[..] else {
            return Err(HardnessError::MalformedClause {
                line,
                message: format!("expected 3 variables, found {}", vars.len()),
            });
        };
        clauses.push([a, b, c]);
        raw_lines.push(line);
    }
    if clauses.len() != m {
        return Err(HardnessError::ClauseCountMismatch {
            expected: m,
            found: clauses.len(),
        });
    }
    Formula::new(n, clauses).map_err(|e| match e {
        HardnessError::IndexOutOfRange { line, var, n } => HardnessError::IndexOutOfRange {
            line: raw_lines[line - 2],
            var,
            n,
        },
        HardnessError::RepeatedVariableInClause { line, var } => HardnessError::RepeatedVariableInClause {
            line: raw_lines[line - 2],
            var,
        },
        other => other,
    })
}

/// Truth values for variables `1..=n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Assignment {
    values: Vec<bool>,
}

impl Assignment {
    pub fn new(values: Vec<bool>) -> Self {
        Assignment { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value of variable `var` (1-based).
    pub fn get(&self, var: usize) -> bool {
        self.values[var - 1]
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    /// The first clause (1-based) without exactly one true variable.
    pub fn first_violated(&self, f: &Formula) -> Option<usize> {
        f.clauses
            .iter()
            .position(|c| c.iter().filter(|&&v| self.get(v)).count() != 1)
            .map(|i| i + 1)
    }

    fn check(&self, f: &Formula) -> Result<(), HardnessError> {
        if self.values.len() != f.n {
            return Err(HardnessError::AssignmentLength {
                expected: f.n,
                found: self.values.len(),
            });
        }
        match self.first_violated(f) {
            Some(c) => Err(HardnessError::AssignmentNotOneInThree(c)),
            None => Ok(()),
        }
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &v in &self.values {
            f.write_str(if v { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Assignment {
    type Err = HardnessError;

    /// One character per variable: `1`/`T`/`t` for true, `0`/`F`/`f` for false.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.trim()
            .chars()
            .filter(|c| !matches!(c, ',' | ' '))
            .map(|c| match c {
                '1' | 'T' | 't' => Ok(true),
                '0' | 'F' | 'f' => Ok(false),
                _ => Err(HardnessError::MalformedAssignment(format!("unexpected character {c:?}"))),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Assignment::new)
    }
}

fn assignments(f: &Formula) -> Result<impl Iterator<Item = Assignment> + '_, HardnessError> {
    if f.n > SAT_LIMIT {
        return Err(HardnessError::TooLarge(f.n));
    }
    Ok((0u32..1 << f.n)
        .map(move |mask| Assignment::new((0..f.n).map(|b| mask >> b & 1 == 1).collect()))
        .filter(move |a| a.first_violated(f).is_none()))
}

/// The first 1-in-3 assignment in binary counting order, if any.
pub fn brute_force_1in3(f: &Formula) -> Result<Option<Assignment>, HardnessError> {
    Ok(assignments(f)?.next())
}

/// Every 1-in-3 assignment of `f`.
pub fn all_1in3(f: &Formula) -> Result<Vec<Assignment>, HardnessError> {
    Ok(assignments(f)?.collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    /// Instances for Relaxed-Acyclic.
    RelaxedAcyclic,
    /// Instances for WRA, RA, SRA and CM.
    Ra,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::RelaxedAcyclic => "relaxed-acyclic",
            Family::Ra => "ra",
        }
    }

    /// The strongest model a witness extension satisfies.
    pub fn witness_model(self) -> MemoryModel {
        match self {
            Family::RelaxedAcyclic => MemoryModel::RelaxedAcyclic,
            Family::Ra => MemoryModel::SRA,
        }
    }

    pub fn thread_names(self) -> Vec<String> {
        let mut out: Vec<String> = (1..=6).map(|k| format!("t{k}")).collect();
        for prefix in ["f", "g"] {
            out.extend((1..=6).map(|k| format!("{prefix}{k}")));
        }
        out.extend((1..=3).map(|k| format!("h{k}")));
        out.push(String::from("p"));
        out.push(String::from("q"));
        out
    }

    /// Every location an instance may use, in the fixed location order.
    pub fn location_names(self) -> Vec<String> {
        let per_block = match self {
            Family::RelaxedAcyclic => 4,
            Family::Ra => 8,
        };
        let mut out = vec![String::from("x1"), String::from("x2")];
        for prefix in ["y", "z"] {
            out.extend((1..=per_block).map(|k| format!("{prefix}{k}")));
        }
        out.extend((1..=3).map(|k| format!("a{k}")));
        out.push(String::from("b"));
        if self == Family::Ra {
            out.extend(["hy5", "hy7", "hz5", "hz7"].map(String::from));
        }
        out
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "relaxed-acyclic" | "relaxedacyclic" | "rlx" => Ok(Family::RelaxedAcyclic),
            "ra" | "ra-family" | "wra" | "sra" => Ok(Family::Ra),
            other => Err(format!("unknown family {other:?} (expected ra or relaxed-acyclic)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Gadget {
    /// The three x1 events deciding a variable.
    Focal,
    /// Their copies on x2.
    Mirror,
    Copy,
    CopyDown,
    AtMostOne(u8),
    AtLeastOne,
}

impl Gadget {
    fn rank(self) -> usize {
        match self {
            Gadget::Focal | Gadget::Mirror | Gadget::Copy => 0,
            Gadget::CopyDown => 1,
            Gadget::AtMostOne(c) => 1 + c as usize,
            Gadget::AtLeastOne => 5,
        }
    }
}

/// The shape of a value before phase and step are attached.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ValueClass {
    Plain,
    Bar,
    Alt,
    AltBar,
}

impl ValueClass {
    fn index(self) -> i64 {
        match self {
            ValueClass::Plain => 0,
            ValueClass::Bar => 1,
            ValueClass::Alt => 2,
            ValueClass::AltBar => 3,
        }
    }
}

/// Where an event sits in the reduction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventInfo {
    pub id: String,
    pub gadget: Gadget,
    /// Clause index of the owning gadget.
    pub phase: usize,
    /// Variable index of the owning gadget; 0 for the per-clause gadgets.
    pub step: usize,
    pub class: ValueClass,
    /// Position (0..3) of the value's variable within its clause, for
    /// events of the per-clause gadgets; 0 otherwise.
    pub slot: usize,
    /// The (phase, step) next to which the event is laid out in its thread:
    /// the focal or mirror step for t1..t6, the gadget's own for the others.
    pub anchor: (usize, usize),
}

impl EventInfo {
    pub fn key(&self) -> (usize, usize) {
        (self.phase, self.step)
    }
}

/// Which write a read takes in the witness extension.
#[derive(Clone, Debug)]
enum Source {
    Fixed(usize),
    Var { var: usize, yes: Box<Source>, no: Box<Source> },
}

impl Source {
    fn var(var: usize, yes: Source, no: Source) -> Self {
        Source::Var {
            var,
            yes: Box::new(yes),
            no: Box::new(no),
        }
    }

    fn resolve(&self, a: &Assignment) -> usize {
        match self {
            Source::Fixed(w) => *w,
            Source::Var { var, yes, no } => {
                if a.get(*var) {
                    yes.resolve(a)
                } else {
                    no.resolve(a)
                }
            }
        }
    }

    fn remap(&self, map: &[usize]) -> Source {
        match self {
            Source::Fixed(w) => Source::Fixed(map[*w]),
            Source::Var { var, yes, no } => Source::var(*var, yes.remap(map), no.remap(map)),
        }
    }
}

/// Layout of a generated instance: its threads, locations, the placement
/// of every event and the reads-from choices of the witness extension.
#[derive(Clone, Debug)]
pub struct GadgetPlan {
    family: Family,
    formula: Formula,
    threads: Vec<(String, Vec<(Kind, String, i64)>)>,
    info: Vec<EventInfo>,
    sources: Vec<Option<Source>>,
}

impl GadgetPlan {
    pub fn family(&self) -> Family {
        self.family
    }

    pub fn formula(&self) -> &Formula {
        &self.formula
    }

    /// Placement of every event, indexed like the generated execution.
    pub fn events(&self) -> &[EventInfo] {
        &self.info
    }

    pub fn thread_names(&self) -> Vec<String> {
        self.family.thread_names()
    }

    pub fn location_names(&self) -> Vec<String> {
        self.family.location_names()
    }

    pub fn execution(&self) -> AbstractExecution {
        AbstractExecution::from_threads(self.threads.clone())
    }

    /// Reads-from of the witness extension for `a`.
    pub fn reads_from(&self, a: &Assignment) -> Vec<Option<usize>> {
        self.sources.iter().map(|s| s.as_ref().map(|s| s.resolve(a))).collect()
    }
}

const THREADS: usize = 23;
const T1: usize = 0;
const T2: usize = 1;
const T3: usize = 2;
const T4: usize = 3;
const T5: usize = 4;
const T6: usize = 5;
const F: usize = 6;
const G: usize = 12;
const H: usize = 18;
const P: usize = 21;
const Q: usize = 22;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Part {
    Pre,
    Center,
    Post,
}

struct Proto {
    kind: Kind,
    loc: String,
    value: i64,
    thread: usize,
    place: Option<((usize, usize), Part)>,
    info: EventInfo,
}

/// Context of one gadget instance while it is being emitted.
#[derive(Clone, Copy)]
struct Ctx {
    gadget: Gadget,
    phase: usize,
    step: usize,
}

struct Gen {
    family: Family,
    n: usize,
    m: usize,
    protos: Vec<Proto>,
    sources: Vec<(usize, Source)>,
}

use Kind::{Read as R, Write as W};
use ValueClass::{Alt, AltBar, Bar, Plain};

impl Gen {
    fn value(&self, class: ValueClass, i: usize, j: usize) -> i64 {
        let base = 2 * (i * (self.n + 1) + j) as i64;
        let alt = 2 * ((self.m + 2) * (self.n + 1)) as i64;
        match class {
            Plain => base,
            Bar => base + 1,
            Alt => alt + base,
            AltBar => alt + base + 1,
        }
    }

    /// Emits an event whose value is `class` at phase `i`, step `j`.
    #[allow(clippy::too_many_arguments)]
    fn put(
        &mut self,
        ctx: Ctx,
        thread: usize,
        place: Option<((usize, usize), Part)>,
        kind: Kind,
        loc: &str,
        class: ValueClass,
        (i, j): (usize, usize),
        slot: usize,
    ) -> usize {
        let value = self.value(class, i, j);
        self.protos.push(Proto {
            kind,
            loc: loc.to_string(),
            value,
            thread,
            place,
            info: EventInfo {
                id: String::new(),
                gadget: ctx.gadget,
                phase: ctx.phase,
                step: ctx.step,
                class,
                slot,
                anchor: place.map_or((ctx.phase, ctx.step), |(a, _)| a),
            },
        });
        self.protos.len() - 1
    }

    fn source(&mut self, read: usize, src: Source) {
        self.sources.push((read, src));
    }

    fn focal_and_mirror(&mut self, i: usize, j: usize) {
        let ctx = Ctx { gadget: Gadget::Focal, phase: i, step: j };
        let at = Some(((i, j), Part::Center));
        let w1 = self.put(ctx, T1, at, W, "x1", Plain, (i, j), 0);
        let w2 = self.put(ctx, T2, at, W, "x1", Plain, (i, j), 0);
        let r = self.put(ctx, T3, at, R, "x1", Plain, (i, j), 0);
        self.source(r, Source::var(j, Source::Fixed(w2), Source::Fixed(w1)));
        let ctx = Ctx { gadget: Gadget::Mirror, ..ctx };
        let w4 = self.put(ctx, T4, at, W, "x2", Plain, (i, j), 0);
        let w5 = self.put(ctx, T5, at, W, "x2", Plain, (i, j), 0);
        let r = self.put(ctx, T6, at, R, "x2", Plain, (i, j), 0);
        self.source(r, Source::var(j, Source::Fixed(w5), Source::Fixed(w4)));
    }

    /// Copy gadget between the focal events of phase `fi` and the mirror
    /// events of phase `mi` for variable `j`: `fi == mi` for a copy,
    /// `fi == mi + 1` for a copy-down.
    fn copy(&mut self, fi: usize, mi: usize, j: usize) {
        let down = fi != mi;
        let ctx = Ctx {
            gadget: if down { Gadget::CopyDown } else { Gadget::Copy },
            phase: mi,
            step: j,
        };
        let (l, private) = if down { ("z", G) } else { ("y", F) };
        let loc = |k: usize| format!("{l}{k}");
        let pre = Some(((fi, j), Part::Pre));
        let post = Some(((fi, j), Part::Post));
        let mpre = Some(((mi, j), Part::Pre));
        let mpost = Some(((mi, j), Part::Post));
        let (f, m) = ((fi, j), (mi, j));
        let fx = Source::Fixed;
        match self.family {
            Family::RelaxedAcyclic => {
                let t1v = self.put(ctx, T1, pre, R, &loc(1), Plain, f, 0);
                let t1u = self.put(ctx, T1, pre, R, &loc(1), Alt, f, 0);
                let t2v = self.put(ctx, T2, pre, R, &loc(2), Plain, f, 0);
                let t2u = self.put(ctx, T2, pre, R, &loc(2), Alt, f, 0);
                let t3w1 = self.put(ctx, T3, post, W, &loc(1), Plain, f, 0);
                let t3w2 = self.put(ctx, T3, post, W, &loc(2), Plain, f, 0);
                let f1b = self.put(ctx, private, None, W, &loc(1), Bar, m, 0);
                let f1v = self.put(ctx, private, None, W, &loc(1), Plain, f, 0);
                let f2u = self.put(ctx, private + 1, None, W, &loc(1), Alt, f, 0);
                let f2ub = self.put(ctx, private + 1, None, W, &loc(1), AltBar, m, 0);
                let f3ub = self.put(ctx, private + 2, None, R, &loc(1), AltBar, m, 0);
                let f3b = self.put(ctx, private + 2, None, R, &loc(1), Bar, m, 0);
                let f3w = self.put(ctx, private + 2, None, W, &loc(4), Plain, m, 0);
                let f4b = self.put(ctx, private + 3, None, W, &loc(2), Bar, m, 0);
                let f4v = self.put(ctx, private + 3, None, W, &loc(2), Plain, f, 0);
                let f5u = self.put(ctx, private + 4, None, W, &loc(2), Alt, f, 0);
                let f5ub = self.put(ctx, private + 4, None, W, &loc(2), AltBar, m, 0);
                let f6ub = self.put(ctx, private + 5, None, R, &loc(2), AltBar, m, 0);
                let f6b = self.put(ctx, private + 5, None, R, &loc(2), Bar, m, 0);
                let f6w = self.put(ctx, private + 5, None, W, &loc(3), Plain, m, 0);
                let t4r = self.put(ctx, T4, mpre, R, &loc(3), Plain, m, 0);
                let t4w = self.put(ctx, T4, mpre, W, &loc(2), Bar, m, 0);
                let t5r = self.put(ctx, T5, mpre, R, &loc(4), Plain, m, 0);
                let t5w = self.put(ctx, T5, mpre, W, &loc(1), Bar, m, 0);
                let t6w3 = self.put(ctx, T6, mpost, W, &loc(3), Plain, m, 0);
                let t6w4 = self.put(ctx, T6, mpost, W, &loc(4), Plain, m, 0);
                self.source(t1v, Source::var(j, fx(t3w1), fx(f1v)));
                self.source(t1u, fx(f2u));
                self.source(t2v, Source::var(j, fx(f4v), fx(t3w2)));
                self.source(t2u, fx(f5u));
                self.source(f3ub, fx(f2ub));
                self.source(f3b, Source::var(j, fx(f1b), fx(t5w)));
                self.source(f6ub, fx(f5ub));
                self.source(f6b, Source::var(j, fx(t4w), fx(f4b)));
                self.source(t4r, Source::var(j, fx(t6w3), fx(f6w)));
                self.source(t5r, Source::var(j, fx(f3w), fx(t6w4)));
            }
            Family::Ra => {
                let (h5, h7) = if down { ("hz5", "hz7") } else { ("hy5", "hy7") };
                self.put(ctx, T1, pre, W, &loc(1), Plain, f, 0);
                self.put(ctx, T1, pre, W, &loc(1), Bar, f, 0);
                self.put(ctx, T2, pre, W, &loc(2), Plain, f, 0);
                self.put(ctx, T2, pre, W, &loc(2), Bar, f, 0);
                let t1v = self.protos.len() - 4;
                let t2v = self.protos.len() - 2;
                let r1 = self.put(ctx, T3, post, R, &loc(1), Plain, f, 0);
                let r2 = self.put(ctx, T3, post, R, &loc(2), Plain, f, 0);
                let r3 = self.put(ctx, T3, post, R, &loc(3), Plain, f, 0);
                let r4 = self.put(ctx, T3, post, R, &loc(4), Plain, f, 0);
                let f1r5 = self.put(ctx, private, None, R, &loc(5), Plain, f, 0);
                let f1w = self.put(ctx, private, None, W, &loc(2), Plain, f, 0);
                let f1r6 = self.put(ctx, private, None, R, &loc(6), Plain, m, 0);
                let f2w3 = self.put(ctx, private + 1, None, W, &loc(3), Plain, f, 0);
                self.put(ctx, private + 1, None, W, &loc(3), Bar, f, 0);
                let f2w5 = self.put(ctx, private + 1, None, W, &loc(5), Plain, f, 0);
                let f3r = self.put(ctx, private + 2, None, R, h5, Plain, m, 0);
                let f3w = self.put(ctx, private + 2, None, W, &loc(5), Plain, f, 0);
                let f4r7 = self.put(ctx, private + 3, None, R, &loc(7), Plain, f, 0);
                let f4w = self.put(ctx, private + 3, None, W, &loc(1), Plain, f, 0);
                let f4r8 = self.put(ctx, private + 3, None, R, &loc(8), Plain, m, 0);
                let f5w4 = self.put(ctx, private + 4, None, W, &loc(4), Plain, f, 0);
                self.put(ctx, private + 4, None, W, &loc(4), Bar, f, 0);
                let f5w7 = self.put(ctx, private + 4, None, W, &loc(7), Plain, f, 0);
                let f6r = self.put(ctx, private + 5, None, R, h7, Plain, m, 0);
                let f6w = self.put(ctx, private + 5, None, W, &loc(7), Plain, f, 0);
                let t4w = self.put(ctx, T4, mpre, W, &loc(6), Plain, m, 0);
                self.put(ctx, T4, mpre, W, &loc(6), Bar, m, 0);
                let t5w = self.put(ctx, T5, mpre, W, &loc(8), Plain, m, 0);
                self.put(ctx, T5, mpre, W, &loc(8), Bar, m, 0);
                let t6h5 = self.put(ctx, T6, mpost, W, h5, Plain, m, 0);
                let t6h7 = self.put(ctx, T6, mpost, W, h7, Plain, m, 0);
                self.source(r1, Source::var(j, fx(t1v), fx(f4w)));
                self.source(r2, Source::var(j, fx(f1w), fx(t2v)));
                self.source(r3, fx(f2w3));
                self.source(r4, fx(f5w4));
                self.source(f1r5, Source::var(j, fx(f3w), fx(f2w5)));
                self.source(f1r6, fx(t4w));
                self.source(f4r8, fx(t5w));
                self.source(f4r7, Source::var(j, fx(f5w7), fx(f6w)));
                self.source(f3r, fx(t6h5));
                self.source(f6r, fx(t6h7));
            }
        }
    }

    /// At-most-one-true gadget number `c` on the `a`-th and `b`-th variables
    /// of clause `i`.
    fn at_most_one(&mut self, i: usize, c: u8, clause: [usize; 3], (sa, sb): (usize, usize)) {
        let ctx = Ctx { gadget: Gadget::AtMostOne(c), phase: i, step: 0 };
        let loc = format!("a{c}");
        let h = H + c as usize - 1;
        let (j, k) = (clause[sa], clause[sb]);
        let pre = |v: usize| Some(((i, v), Part::Pre));
        let post = |v: usize| Some(((i, v), Part::Post));
        match self.family {
            Family::RelaxedAcyclic => {
                let rj = self.put(ctx, T2, pre(j), R, &loc, Plain, (i, j), sa);
                let rk = self.put(ctx, T2, pre(k), R, &loc, Plain, (i, k), sb);
                let wj = self.put(ctx, T3, post(j), W, &loc, Plain, (i, j), sa);
                let wk = self.put(ctx, T3, post(k), W, &loc, Plain, (i, k), sb);
                let hk = self.put(ctx, h, None, W, &loc, Plain, (i, k), sb);
                let hj = self.put(ctx, h, None, W, &loc, Plain, (i, j), sa);
                self.source(rj, Source::var(j, Source::Fixed(hj), Source::Fixed(wj)));
                self.source(rk, Source::var(k, Source::Fixed(hk), Source::Fixed(wk)));
            }
            Family::Ra => {
                let wj = self.put(ctx, T2, pre(j), W, &loc, Plain, (i, j), sa);
                self.put(ctx, T2, pre(j), W, &loc, Bar, (i, j), sa);
                let wk = self.put(ctx, T2, pre(k), W, &loc, Plain, (i, k), sb);
                self.put(ctx, T2, pre(k), W, &loc, Bar, (i, k), sb);
                let rj = self.put(ctx, T3, post(j), R, &loc, Plain, (i, j), sa);
                let rk = self.put(ctx, T3, post(k), R, &loc, Plain, (i, k), sb);
                let hk = self.put(ctx, h, None, W, &loc, Plain, (i, k), sb);
                let hj = self.put(ctx, h, None, W, &loc, Plain, (i, j), sa);
                self.source(rj, Source::var(j, Source::Fixed(hj), Source::Fixed(wj)));
                self.source(rk, Source::var(k, Source::Fixed(hk), Source::Fixed(wk)));
            }
        }
    }

    fn at_least_one(&mut self, i: usize, clause: [usize; 3]) {
        let ctx = Ctx { gadget: Gadget::AtLeastOne, phase: i, step: 0 };
        let [j, k, l] = clause;
        let pre = |v: usize| Some(((i, v), Part::Pre));
        let post = |v: usize| Some(((i, v), Part::Post));
        // Per variable: the gadget's own write in t1 or t3, and the read.
        let mut own = [0; 3];
        let mut reads = [0; 3];
        for (s, &v) in clause.iter().enumerate() {
            match self.family {
                Family::RelaxedAcyclic => {
                    reads[s] = self.put(ctx, T1, pre(v), R, "b", Plain, (i, v), s);
                    own[s] = self.put(ctx, T3, post(v), W, "b", Plain, (i, v), s);
                }
                Family::Ra => {
                    own[s] = self.put(ctx, T1, pre(v), W, "b", Plain, (i, v), s);
                    self.put(ctx, T1, pre(v), W, "b", Bar, (i, v), s);
                    reads[s] = self.put(ctx, T3, post(v), R, "b", Plain, (i, v), s);
                }
            }
        }
        let pl = self.put(ctx, P, None, W, "b", Plain, (i, l), 2);
        let pj = self.put(ctx, P, None, W, "b", Plain, (i, j), 0);
        let ql = self.put(ctx, Q, None, W, "b", Plain, (i, l), 2);
        let qk = self.put(ctx, Q, None, W, "b", Plain, (i, k), 1);
        let fx = Source::Fixed;
        self.source(reads[0], Source::var(j, fx(own[0]), fx(pj)));
        self.source(reads[1], Source::var(k, fx(own[1]), fx(qk)));
        self.source(reads[2], Source::var(l, fx(own[2]), Source::var(k, fx(ql), fx(pl))));
    }

    fn finish(self, formula: Formula) -> GadgetPlan {
        let family = self.family;
        let names = family.thread_names();
        let sigma = |loc: &str| -> usize {
            let order = ["y1", "y2", "y3", "y4", "z1", "z2", "z3", "z4", "a1", "a2", "a3", "b"];
            order.iter().position(|&l| l == loc).unwrap_or(order.len())
        };
        let mut per_thread: Vec<Vec<usize>> = vec![Vec::new(); THREADS];
        for (h, p) in self.protos.iter().enumerate() {
            per_thread[p.thread].push(h);
        }
        for (t, hs) in per_thread.iter_mut().enumerate() {
            if t > T6 {
                continue;
            }
            let sorted_part = if matches!(t, T3 | T6) { Part::Post } else { Part::Pre };
            hs.sort_by_key(|&h| {
                let p = &self.protos[h];
                let (slot, part) = p.place.expect("shared-thread events have a slot");
                let rank = if family == Family::Ra && part == sorted_part { sigma(&p.loc) } else { 0 };
                (slot, part, rank, p.info.gadget.rank(), h)
            });
        }
        let mut map = vec![0; self.protos.len()];
        let mut info = vec![None; self.protos.len()];
        let mut threads = Vec::with_capacity(THREADS);
        let mut next = 0;
        for (t, hs) in per_thread.iter().enumerate() {
            let mut evs = Vec::with_capacity(hs.len());
            for (k, &h) in hs.iter().enumerate() {
                let p = &self.protos[h];
                map[h] = next;
                let mut i = p.info.clone();
                i.id = format!("{}.{}", names[t], k + 1);
                info[next] = Some(i);
                next += 1;
                evs.push((p.kind, p.loc.clone(), p.value));
            }
            threads.push((names[t].clone(), evs));
        }
        let mut sources = vec![None; next];
        for (r, s) in &self.sources {
            sources[map[*r]] = Some(s.remap(&map));
        }
        GadgetPlan {
            family,
            formula,
            threads,
            info: info.into_iter().map(|i| i.expect("every event placed")).collect(),
            sources,
        }
    }
}

/// Lays out the reduction instance of `f` for `family`.
pub fn plan(f: &Formula, family: Family) -> GadgetPlan {
    let (n, m) = (f.n, f.clauses.len());
    let mut g = Gen {
        family,
        n,
        m,
        protos: Vec::new(),
        sources: Vec::new(),
    };
    for i in 1..=m {
        for j in 1..=n {
            g.focal_and_mirror(i, j);
            g.copy(i, i, j);
            if i < m {
                g.copy(i + 1, i, j);
            }
        }
        let clause = f.sorted_clause(i);
        for (c, pair) in [(0, 1), (0, 2), (1, 2)].into_iter().enumerate() {
            g.at_most_one(i, c as u8 + 1, clause, pair);
        }
        g.at_least_one(i, clause);
    }
    g.finish(f.clone())
}

/// The abstract execution that is consistent iff `f` has a 1-in-3 assignment.
pub fn generate(f: &Formula, family: Family) -> AbstractExecution {
    plan(f, family).execution()
}

/// Extends `generate(f, family)` to a concrete execution for the 1-in-3
/// assignment `a`. Reads follow the gadget resolutions for `a`; the
/// modification order is completed by the decision procedure with that
/// reads-from fixed.
pub fn witness_extension(f: &Formula, a: &Assignment, family: Family) -> Result<ConcreteExecution, HardnessError> {
    a.check(f)?;
    let plan = plan(f, family);
    let x = plan.execution();
    let rf = plan.reads_from(a);
    let model = family.witness_model();
    decide_with_rf(&x, &rf, model, Options::default())
        .witness
        .ok_or(HardnessError::WitnessRejected(model))
}

fn check_plan(x: &AbstractExecution, plan: &GadgetPlan) -> Result<(), HardnessError> {
    let expected = plan.execution();
    if x.threads() != expected.threads() {
        return Err(HardnessError::PlanMismatch(String::from("thread names differ")));
    }
    if x.len() != expected.len() {
        return Err(HardnessError::PlanMismatch(format!(
            "{} events, plan has {}",
            x.len(),
            expected.len()
        )));
    }
    for (a, b) in x.events().iter().zip(expected.events()) {
        if a != b {
            return Err(HardnessError::PlanMismatch(format!("event {} differs from the plan", a.id())));
        }
    }
    Ok(())
}

/// An auxiliary event to be inserted into a thread.
struct Insert {
    /// Index in the thread's original event list before which it goes.
    before: usize,
    order: (bool, usize, usize, usize),
    kind: Kind,
    loc: String,
    /// Writer position among the location's writers, and block parity.
    writer: usize,
    parity: usize,
}

/// Auxiliary blocks separating the gadgets on each location. Values of
/// auxiliary events are `(writer, parity)` pairs; everything else keeps
/// its value. With `collapse` set, original values lose their phase and
/// step and all values are renumbered into a constant range.
fn separate(x: &AbstractExecution, plan: &GadgetPlan, collapse: bool) -> Result<AbstractExecution, HardnessError> {
    check_plan(x, plan)?;
    let info = plan.events();
    let order = plan.location_names();
    let aux_base = x.events().iter().map(|e| e.value()).max().unwrap_or(0) + 1;
    let mut inserts: Vec<Vec<Insert>> = (0..x.threads().len()).map(|_| Vec::new()).collect();
    for (rank, loc) in order.iter().enumerate() {
        let Some(l) = x.location_index(loc) else { continue };
        let on_loc: Vec<usize> = (0..x.len()).filter(|&e| x.loc_of(e) == l).collect();
        let keys: Vec<(usize, usize)> = on_loc.iter().map(|&e| info[e].key()).collect::<BTreeSet<_>>().into_iter().collect();
        let writers: Vec<usize> = (0..x.threads().len())
            .filter(|&t| on_loc.iter().any(|&e| x.thread_of(e) == t && x.event(e).is_write()))
            .collect();
        for t in 0..x.threads().len() {
            let mine: Vec<usize> = on_loc.iter().copied().filter(|&e| x.thread_of(e) == t).collect();
            if mine.is_empty() {
                continue;
            }
            let writes = mine.iter().any(|&e| x.event(e).is_write());
            let read_values: BTreeSet<i64> = mine.iter().filter(|&&e| x.event(e).is_read()).map(|&e| x.event(e).value()).collect();
            let sources: Vec<usize> = writers
                .iter()
                .enumerate()
                .filter(|&(_, &w)| {
                    w != t
                        && on_loc
                            .iter()
                            .any(|&e| x.thread_of(e) == w && x.event(e).is_write() && read_values.contains(&x.event(e).value()))
                })
                .map(|(k, _)| k)
                .collect();
            let me = writers.iter().position(|&w| w == t);
            for (gap, key) in keys.iter().enumerate().take(keys.len().saturating_sub(1)) {
                let parity = gap % 2;
                // Both blocks go after every event of the thread laid out in
                // the same step (the same phase, for per-clause locations) as
                // its last event on this location up to `key`.
                let before = match mine.iter().rev().find(|&&e| info[e].key() <= *key) {
                    None => 0,
                    Some(&e) => {
                        let bound = if key.1 == 0 { (info[e].anchor.0, usize::MAX) } else { info[e].anchor };
                        let evs = x.thread_events(t);
                        evs.iter().rposition(|&o| info[o].anchor <= bound).map_or(0, |p| p + 1)
                    }
                };
                if writes {
                    inserts[t].push(Insert {
                        before,
                        order: (false, rank, gap, 0),
                        kind: W,
                        loc: loc.clone(),
                        writer: me.expect("writing thread is a writer"),
                        parity,
                    });
                }
                for &s in &sources {
                    inserts[t].push(Insert {
                        before,
                        order: (true, rank, gap, s),
                        kind: R,
                        loc: loc.clone(),
                        writer: s,
                        parity,
                    });
                }
            }
        }
    }
    let aux_value = |i: &Insert| {
        let k = (2 * i.writer + i.parity) as i64;
        if collapse {
            AUX_BASE + k
        } else {
            aux_base + k
        }
    };
    let mut threads = Vec::new();
    for (t, name) in x.threads().iter().enumerate() {
        let mut ins = std::mem::take(&mut inserts[t]);
        ins.sort_by_key(|i| (i.before, i.order));
        let mut ins = ins.into_iter().peekable();
        let mut evs = Vec::new();
        let original = x.thread_events(t);
        for pos in 0..=original.len() {
            while let Some(i) = ins.next_if(|i| i.before == pos) {
                evs.push((i.kind, i.loc.clone(), aux_value(&i)));
            }
            if let Some(&e) = original.get(pos) {
                let ev = x.event(e);
                let value = if collapse { collapsed(&info[e]) } else { ev.value() };
                evs.push((ev.kind(), ev.location().to_string(), value));
            }
        }
        threads.push((name.clone(), evs));
    }
    Ok(AbstractExecution::from_threads(threads))
}

/// First value used by auxiliary events after collapsing.
const AUX_BASE: i64 = 20;

fn collapsed(info: &EventInfo) -> i64 {
    1 + info.class.index() + 4 * info.slot as i64
}

/// First step of the bounded-value transform: auxiliary write and read
/// blocks between consecutive gadgets on every location, original values
/// untouched.
pub fn insert_auxiliary(x: &AbstractExecution, plan: &GadgetPlan) -> Result<AbstractExecution, HardnessError> {
    separate(x, plan, false)
}

/// Rewrites a generated instance so that it uses a value domain whose
/// size does not depend on the formula.
pub fn bounded_value_transform(x: &AbstractExecution, plan: &GadgetPlan) -> Result<AbstractExecution, HardnessError> {
    separate(x, plan, true)
}
