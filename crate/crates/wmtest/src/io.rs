//! Text format for executions and verdict rendering.
//!
//! ```text
//! wmtest v1
//! # store buffering
//! thread t1
//! W x 1
//! R y 0
//! thread t2
//! W y 1
//! R x 0
//! rf init.2 t1.2
//! mo x init.1 t1.1
//! ```
//!
//! Event ids are `<thread>.<k>`, counted from 1 in each block. A document
//! with `rf` or `mo` lines is concrete.

use std::fmt::Write as _;

use serde_json::json;
use thiserror::Error;

use crate::decide::Verdict;
use crate::model::{AbstractExecution, ConcreteExecution, Kind, ModelError};

pub const HEADER: &str = "wmtest v1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown event `{id}`")]
    DanglingEventReference { line: usize, id: String },
    #[error("line {line}: duplicate event id `{id}`")]
    DuplicateEventId { line: usize, id: String },
    #[error("line {line}: rf {write} -> {read} joins different locations or values")]
    RfValueMismatch { line: usize, write: String, read: String },
    #[error("{0}")]
    Model(#[from] ModelError),
}

/// A parsed document. `Concrete` keeps rf (possibly partial) and, when
/// `mo` lines were given, the per-location orders.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Document {
    Abstract(AbstractExecution),
    Concrete {
        execution: AbstractExecution,
        rf: Vec<Option<usize>>,
        mo: Option<Vec<Vec<usize>>>,
    },
}

impl Document {
    pub fn execution(&self) -> &AbstractExecution {
        match self {
            Document::Abstract(x) => x,
            Document::Concrete { execution, .. } => execution,
        }
    }

    /// The full concrete execution, when rf covers every read and mo is
    /// given (or no location has two writes).
    pub fn to_concrete(&self) -> Option<Result<ConcreteExecution, ModelError>> {
        let Document::Concrete { execution, rf, mo } = self else {
            return None;
        };
        let mo = match mo {
            Some(mo) => mo.clone(),
            None => {
                let orders: Vec<Vec<usize>> = (0..execution.locations().len()).map(|l| execution.writes_to(l)).collect();
                if orders.iter().any(|o| o.len() > 1) {
                    return None;
                }
                orders
            }
        };
        Some(ConcreteExecution::new(execution.clone(), rf.clone(), mo))
    }
}

fn syntax(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        message: message.into(),
    }
}

fn valid_name(s: &str) -> bool {
    !s.is_empty() && !s.contains('#')
}

pub fn parse_execution(text: &str) -> Result<Document, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, l)) if l.split_whitespace().collect::<Vec<_>>() == ["wmtest", "v1"] => {}
        Some((n, l)) => return Err(syntax(n, format!("expected `{HEADER}`, found `{l}`"))),
        None => return Err(syntax(1, format!("missing `{HEADER}` header"))),
    }
    let mut threads: Vec<(String, Vec<(Kind, String, i64)>)> = Vec::new();
    let mut rf_lines = Vec::new();
    let mut mo_lines = Vec::new();
    for (n, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks[0] {
            "thread" => {
                let [_, name] = toks[..] else {
                    return Err(syntax(n, "expected `thread <name>`"));
                };
                if !valid_name(name) {
                    return Err(syntax(n, format!("bad thread name `{name}`")));
                }
                if threads.iter().any(|(t, _)| t == name) {
                    return Err(ParseError::DuplicateEventId {
                        line: n,
                        id: format!("{name}.1"),
                    });
                }
                if !rf_lines.is_empty() || !mo_lines.is_empty() {
                    return Err(syntax(n, "thread blocks must precede rf and mo lines"));
                }
                threads.push((name.to_string(), Vec::new()));
            }
            "W" | "R" => {
                let [k, loc, val] = toks[..] else {
                    return Err(syntax(n, format!("expected `{} <location> <value>`", toks[0])));
                };
                let value: i64 = val.parse().map_err(|_| syntax(n, format!("bad value `{val}`")))?;
                let Some(block) = threads.last_mut() else {
                    return Err(syntax(n, "event outside a thread block"));
                };
                if !rf_lines.is_empty() || !mo_lines.is_empty() {
                    return Err(syntax(n, "events must precede rf and mo lines"));
                }
                let kind = if k == "W" { Kind::Write } else { Kind::Read };
                block.1.push((kind, loc.to_string(), value));
            }
            "rf" => {
                let [_, w, r] = toks[..] else {
                    return Err(syntax(n, "expected `rf <write-id> <read-id>`"));
                };
                rf_lines.push((n, w.to_string(), r.to_string()));
            }
            "mo" => {
                if toks.len() < 2 {
                    return Err(syntax(n, "expected `mo <location> <write-id>...`"));
                }
                mo_lines.push((n, toks[1].to_string(), toks[2..].iter().map(|s| s.to_string()).collect::<Vec<_>>()));
            }
            other => return Err(syntax(n, format!("unknown directive `{other}`"))),
        }
    }
    let x = AbstractExecution::from_threads(threads);
    if rf_lines.is_empty() && mo_lines.is_empty() {
        return Ok(Document::Abstract(x));
    }
    let lookup = |line: usize, id: &str| {
        x.index_of(id).ok_or_else(|| ParseError::DanglingEventReference {
            line,
            id: id.to_string(),
        })
    };
    let mut rf = vec![None; x.len()];
    for (line, w, r) in &rf_lines {
        let (wi, ri) = (lookup(*line, w)?, lookup(*line, r)?);
        let (we, re) = (x.event(wi), x.event(ri));
        if !we.is_write() || !re.is_read() {
            return Err(syntax(*line, format!("rf must go from a write to a read: {w} -> {r}")));
        }
        if we.location() != re.location() || we.value() != re.value() {
            return Err(ParseError::RfValueMismatch {
                line: *line,
                write: w.clone(),
                read: r.clone(),
            });
        }
        if rf[ri].is_some() {
            return Err(syntax(*line, format!("read {r} already has an rf writer")));
        }
        rf[ri] = Some(wi);
    }
    let mo = if mo_lines.is_empty() {
        None
    } else {
        let mut mo: Vec<Option<Vec<usize>>> = vec![None; x.locations().len()];
        for (line, loc, ids) in &mo_lines {
            let l = x
                .location_index(loc)
                .ok_or_else(|| syntax(*line, format!("mo for unknown location `{loc}`")))?;
            if mo[l].is_some() {
                return Err(syntax(*line, format!("second mo line for `{loc}`")));
            }
            let order = ids.iter().map(|id| lookup(*line, id)).collect::<Result<Vec<_>, _>>()?;
            let mut sorted = order.clone();
            sorted.sort_unstable();
            if sorted != x.writes_to(l) {
                return Err(syntax(*line, format!("mo for `{loc}` must list each of its writes once")));
            }
            mo[l] = Some(order);
        }
        let mut full = Vec::with_capacity(mo.len());
        for (l, order) in mo.into_iter().enumerate() {
            let writes = x.writes_to(l);
            match order {
                Some(o) => full.push(o),
                None if writes.len() <= 1 => full.push(writes),
                None => {
                    return Err(syntax(0, format!("mo missing for location `{}`", x.locations()[l])));
                }
            }
        }
        Some(full)
    };
    Ok(Document::Concrete { execution: x, rf, mo })
}

fn write_threads(out: &mut String, x: &AbstractExecution) {
    for (t, name) in x.threads().iter().enumerate() {
        let _ = writeln!(out, "thread {name}");
        for &e in x.thread_events(t) {
            let ev = x.event(e);
            let _ = writeln!(out, "{} {} {}", ev.kind(), ev.location(), ev.value());
        }
    }
}

pub fn serialize_abstract(x: &AbstractExecution) -> String {
    let mut out = format!("{HEADER}\n");
    write_threads(&mut out, x);
    out
}

pub fn serialize_concrete(c: &ConcreteExecution) -> String {
    serialize_parts(c.base(), c.rf_map(), Some(c.mo_orders()))
}

fn serialize_parts(x: &AbstractExecution, rf: &[Option<usize>], mo: Option<&[Vec<usize>]>) -> String {
    let mut out = format!("{HEADER}\n");
    write_threads(&mut out, x);
    for (r, w) in rf.iter().enumerate() {
        if let Some(w) = w {
            let _ = writeln!(out, "rf {} {}", x.id(*w), x.id(r));
        }
    }
    if let Some(mo) = mo {
        for (l, order) in mo.iter().enumerate() {
            if order.is_empty() {
                continue;
            }
            let ids: Vec<&str> = order.iter().map(|&w| x.id(w)).collect();
            let _ = writeln!(out, "mo {} {}", x.locations()[l], ids.join(" "));
        }
    }
    out
}

pub fn serialize_document(d: &Document) -> String {
    match d {
        Document::Abstract(x) => serialize_abstract(x),
        Document::Concrete { execution, rf, mo } => serialize_parts(execution, rf, mo.as_deref()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Human,
    Json,
}

pub fn verdict_json(v: &Verdict) -> serde_json::Value {
    let mut obj = json!({
        "schema": 1,
        "model": v.model.name(),
        "status": v.outcome,
        "consistent": v.is_consistent(),
        "stats": v.stats,
    });
    if let Some(d) = &v.diagnostic {
        obj["diagnostic"] = json!(d);
    }
    if let Some(w) = &v.witness {
        obj["witness"] = json!(serialize_concrete(w));
    }
    if let Some(t) = &v.trace {
        obj["trace"] = json!(t);
    }
    obj
}

pub fn serialize_verdict(v: &Verdict, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&verdict_json(v)).expect("verdict serializes");
            s.push('\n');
            s
        }
        Format::Human => {
            let status = match v.outcome {
                crate::decide::Outcome::Consistent => "consistent",
                crate::decide::Outcome::Inconsistent => "inconsistent",
                crate::decide::Outcome::Inconclusive => "inconclusive",
            };
            let mut out = format!(
                "{}: {} (nodes {}, memo hits {})\n",
                v.model, status, v.stats.nodes, v.stats.memo_hits
            );
            if let Some(d) = &v.diagnostic {
                let _ = writeln!(out, "note: {d}");
            }
            if let Some(w) = &v.witness {
                out.push_str("witness:\n");
                out.push_str(&serialize_concrete(w));
            }
            out
        }
    }
}
