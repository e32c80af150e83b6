use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use wmtest::decide::{self, Options, Outcome, Verdict};
use wmtest::hardness::{self, Assignment, Family, Formula};
use wmtest::io::{self, Format};
use wmtest::MemoryModel;

const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;
const EXIT_NO_INPUT: u8 = 66;
const EXIT_SOFTWARE: u8 = 70;

#[derive(Parser, Debug)]
#[command(name = "wmtest", version, about = "Weak-memory consistency testing")]
struct Cli {
    /// Maximum number of search nodes.
    #[arg(long, global = true)]
    budget: Option<u64>,
    /// Print machine-readable JSON.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide an abstract execution under a memory model.
    Check(ModelArgs),
    /// Verify a concrete execution (rf and mo given) under a memory model.
    Verify(ModelArgs),
    /// Decide with the exhaustive oracle (small executions only).
    Oracle(ModelArgs),
    /// Build the reduction instance of a Monotone 1-in-3 SAT formula.
    Generate {
        #[arg(long)]
        family: Family,
        /// Rewrite the instance to use a constant number of values.
        #[arg(long)]
        bounded_values: bool,
        file: PathBuf,
    },
    /// Build the concrete execution of a satisfying assignment.
    Witness {
        #[arg(long)]
        family: Family,
        /// One digit per variable, e.g. `100`.
        #[arg(long)]
        assignment: Assignment,
        file: PathBuf,
    },
    /// Solve a formula by exhaustive search.
    SolveFormula { file: PathBuf },
}

#[derive(Args, Debug)]
struct ModelArgs {
    #[arg(long)]
    model: MemoryModel,
    file: PathBuf,
}

/// An error with the exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn fail(code: u8) -> impl FnOnce(anyhow::Error) -> Failure {
    move |error| Failure { code, error }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(fail(EXIT_NO_INPUT))
}

fn read_formula(path: &Path) -> Result<Formula, Failure> {
    let text = read(path)?;
    hardness::parse_formula(&text)
        .with_context(|| format!("{}", path.display()))
        .map_err(fail(EXIT_DATA))
}

fn read_document(path: &Path) -> Result<io::Document, Failure> {
    let text = read(path)?;
    io::parse_execution(&text)
        .with_context(|| format!("{}", path.display()))
        .map_err(fail(EXIT_DATA))
}

fn exit_for(v: &Verdict) -> u8 {
    match v.outcome {
        Outcome::Consistent => 0,
        Outcome::Inconsistent => 1,
        Outcome::Inconclusive => 2,
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let format = if cli.json { Format::Json } else { Format::Human };
    let opts = Options {
        budget: cli.budget,
        memo: true,
    };
    match cli.command {
        Command::Check(a) => {
            let doc = read_document(&a.file)?;
            let v = decide::decide(doc.execution(), a.model, opts);
            print!("{}", io::serialize_verdict(&v, format));
            Ok(exit_for(&v))
        }
        Command::Verify(a) => {
            let doc = read_document(&a.file)?;
            let v = match doc.to_concrete() {
                Some(c) => {
                    let c = c.context("inconsistent rf or mo").map_err(fail(EXIT_DATA))?;
                    decide::verify(&c, a.model, opts)
                }
                None => match &doc {
                    io::Document::Concrete { execution, rf, .. } if rf.iter().enumerate().all(|(e, w)| {
                        w.is_some() || !execution.event(e).is_read()
                    }) =>
                    {
                        decide::decide_with_rf(execution, rf, a.model, opts)
                    }
                    _ => {
                        return Err(Failure {
                            code: EXIT_DATA,
                            error: anyhow::anyhow!("verify needs rf for every read"),
                        })
                    }
                },
            };
            print!("{}", io::serialize_verdict(&v, format));
            Ok(exit_for(&v))
        }
        Command::Oracle(a) => {
            let doc = read_document(&a.file)?;
            let v = decide::brute_force_decide(doc.execution(), a.model).map_err(|e| fail(EXIT_DATA)(e.into()))?;
            print!("{}", io::serialize_verdict(&v, format));
            Ok(exit_for(&v))
        }
        Command::Generate {
            family,
            bounded_values,
            file,
        } => {
            let f = read_formula(&file)?;
            let plan = hardness::plan(&f, family);
            let mut x = plan.execution();
            if bounded_values {
                x = hardness::bounded_value_transform(&x, &plan).map_err(|e| fail(EXIT_SOFTWARE)(e.into()))?;
            }
            let text = io::serialize_abstract(&x);
            if cli.json {
                let out = json!({
                    "schema": 1,
                    "family": family.name(),
                    "events": x.len(),
                    "threads": x.threads().len(),
                    "locations": x.locations().len(),
                    "execution": text,
                });
                println!("{}", serde_json::to_string_pretty(&out).expect("json"));
            } else {
                print!("{text}");
            }
            Ok(0)
        }
        Command::Witness {
            family,
            assignment,
            file,
        } => {
            let f = read_formula(&file)?;
            let c = hardness::witness_extension(&f, &assignment, family).map_err(|e| fail(EXIT_DATA)(e.into()))?;
            let text = io::serialize_concrete(&c);
            if cli.json {
                let out = json!({ "schema": 1, "family": family.name(), "witness": text });
                println!("{}", serde_json::to_string_pretty(&out).expect("json"));
            } else {
                print!("{text}");
            }
            Ok(0)
        }
        Command::SolveFormula { file } => {
            let f = read_formula(&file)?;
            let found = hardness::brute_force_1in3(&f).map_err(|e| fail(EXIT_DATA)(e.into()))?;
            if cli.json {
                let out = json!({
                    "schema": 1,
                    "satisfiable": found.is_some(),
                    "assignment": found.as_ref().map(ToString::to_string),
                });
                println!("{}", serde_json::to_string_pretty(&out).expect("json"));
            } else {
                match &found {
                    Some(a) => println!("satisfiable: {a}"),
                    None => println!("unsatisfiable"),
                }
            }
            Ok(if found.is_some() { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}
