use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use fraisse::age::{check_age_axioms, AxiomCheck};
use fraisse::catalog::{age_by_tag, builder_by_tag};
use fraisse::coding::Index;
use fraisse::diagonal::{self, EnumerationTrace};
use fraisse::engine::DEFAULT_SCHEDULE;
use fraisse::notation::{compare_o, lookup, Notation};
use fraisse::scott::{build_schema, check_expansion};
use fraisse::serial::{self, StructureJson};
use fraisse::structure::{FinStructure, PartialMap, Symbol, Vocabulary};
use fraisse::tower::TowerLevel;
use fraisse::{Error, Result};

#[derive(Parser)]
#[command(name = "fraisse", version, about = "Computable Fraisse limits, ordinal towers and finite Scott expansions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect and check computable ages.
    #[command(subcommand)]
    Age(AgeCmd),
    /// Grow Fraisse limits.
    #[command(subcommand)]
    Limit(LimitCmd),
    /// Build and check levels of the tower.
    #[command(subcommand)]
    Tower(TowerCmd),
    /// Decide expansions to the Scott theory of a finite structure.
    #[command(subcommand)]
    Scott(ScottCmd),
    /// Run the diagonal construction against a trace.
    #[command(subcommand)]
    Diagonal(DiagonalCmd),
    /// Ordinal notations.
    #[command(subcommand)]
    Notation(NotationCmd),
}

#[derive(Args)]
struct Output {
    /// Write the primary artifact here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit the structure as a DOT graph instead of JSON.
    #[arg(long)]
    dot: bool,
}

#[derive(Subcommand)]
enum AgeCmd {
    /// Check HP, JEP and AP on small members; one JSON line per finding.
    Check {
        #[arg(long)]
        age: String,
        #[arg(long, default_value_t = 3)]
        size_bound: usize,
        #[arg(long, default_value_t = 20)]
        index_bound: usize,
    },
    /// Print one member.
    Member {
        #[arg(long)]
        age: String,
        #[arg(long)]
        index: Index,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Subcommand)]
enum LimitCmd {
    /// Grow the limit and dump the final stage.
    Build {
        #[arg(long)]
        age: String,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long, default_value_t = DEFAULT_SCHEDULE)]
        schedule: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Decide whether a finite map is a partial isomorphism of the limit.
    Homog {
        #[arg(long)]
        age: String,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long, default_value_t = DEFAULT_SCHEDULE)]
        schedule: u64,
        /// Pairs `src:dst` separated by commas.
        #[arg(long)]
        map: String,
    },
}

#[derive(Subcommand)]
enum TowerCmd {
    /// Build the level for a notation and grow its limit.
    Build {
        #[arg(long)]
        notation: String,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value_t = DEFAULT_SCHEDULE)]
        schedule: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Validate a structure against a level written by `tower build`.
    Validate {
        #[arg(long)]
        level: PathBuf,
        #[arg(long)]
        structure: PathBuf,
    },
}

#[derive(Subcommand)]
enum ScottCmd {
    /// Decide whether the candidate expands to a model of the theory of the base.
    Check {
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        candidate: PathBuf,
        /// Longest tuple with its own predicate; defaults to one more than the base size.
        #[arg(long)]
        bound: Option<usize>,
        /// Also list the sentences of the theory.
        #[arg(long)]
        sentences: bool,
    },
}

#[derive(Subcommand)]
enum DiagonalCmd {
    Run {
        /// JSON list of {stage, e, i, j, map}; omitted means the empty trace.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        requirements: u64,
        #[arg(long, default_value_t = 20)]
        stages: u64,
    },
}

#[derive(Subcommand)]
enum NotationCmd {
    /// Parse a notation and describe it.
    Show {
        text: String,
        /// Fundamental sequence terms to list for limits.
        #[arg(long, default_value_t = 5)]
        terms: u64,
    },
    /// Compare two notations in the notation order.
    Compare { left: String, right: String },
}

/// What a command produced: an artifact and whether its verdict was positive.
struct Outcome {
    text: String,
    ok: bool,
}

impl Outcome {
    fn json(v: Value, ok: bool) -> Self {
        Outcome {
            text: serde_json::to_string_pretty(&v).expect("serializable"),
            ok,
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read(path)?).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn emit_structure(s: &FinStructure, name: &str, output: &Output, extra: Value) -> Outcome {
    if output.dot {
        return Outcome {
            text: serial::to_dot(s, name),
            ok: true,
        };
    }
    let mut v = json!({ "structure": StructureJson::from_structure(s) });
    if let (Value::Object(map), Value::Object(more)) = (&mut v, extra) {
        map.extend(more);
    }
    Outcome::json(v, true)
}

/// Both files over one vocabulary: the union of their symbol lists.
fn shared_pair(a: &Path, b: &Path) -> Result<(FinStructure, FinStructure)> {
    let (ja, jb): (StructureJson, StructureJson) = (parse_json(a)?, parse_json(b)?);
    let (sa, sb) = (ja.to_structure()?, jb.to_structure()?);
    let mut symbols = Vec::new();
    let listed = sa.vocabulary().enumerate(ja.vocabulary.len());
    for s in listed.into_iter().chain(sb.vocabulary().enumerate(jb.vocabulary.len())) {
        match symbols.iter().find(|t: &&Symbol| t.name() == s.name()) {
            Some(t) if t.arity() != s.arity() => {
                return Err(Error::VocabularyMismatch {
                    left: format!("{} with arity {}", t.name(), t.arity()),
                    right: format!("{} with arity {}", s.name(), s.arity()),
                })
            }
            Some(_) => {}
            None => symbols.push(s),
        }
    }
    let vocab = Vocabulary::finite("json", symbols);
    Ok((sa.reinterpret(vocab.clone())?, sb.reinterpret(vocab)?))
}

fn dispatch(cmd: Command) -> Result<(Outcome, Option<PathBuf>)> {
    Ok(match cmd {
        Command::Age(AgeCmd::Check {
            age,
            size_bound,
            index_bound,
        }) => {
            let (rep, _) = age_by_tag(&age)?;
            let report = check_age_axioms(rep.as_ref(), &AxiomCheck::new(size_bound, index_bound));
            let text = report.json_lines(&age).join("\n");
            (
                Outcome {
                    text,
                    ok: report.is_clean(),
                },
                None,
            )
        }
        Command::Age(AgeCmd::Member { age, index, output }) => {
            let (rep, _) = age_by_tag(&age)?;
            let m = rep.member(&index);
            let out = emit_structure(&m, &age, &output, json!({ "age": age, "index": index.to_string() }));
            (out, output.out)
        }
        Command::Limit(LimitCmd::Build {
            age,
            steps,
            schedule,
            output,
        }) => {
            let mut b = builder_by_tag(&age, schedule)?;
            b.grow(steps)?;
            let extra = json!({
                "age": age,
                "schedule": schedule,
                "steps": b.stats().steps,
                "stages": b.stages().len(),
                "obstructions": b.obstructions(),
            });
            (emit_structure(b.current(), &age, &output, extra), output.out)
        }
        Command::Limit(LimitCmd::Homog {
            age,
            steps,
            schedule,
            map,
        }) => {
            let f = PartialMap::parse(&map)?;
            let mut b = builder_by_tag(&age, schedule)?;
            b.grow(steps)?;
            let verdict = b.is_partial_iso(&f)?;
            let v = json!({ "age": age, "steps": steps, "map": f, "partial_isomorphism": verdict });
            (Outcome::json(v, verdict), None)
        }
        Command::Tower(TowerCmd::Build {
            notation,
            steps,
            schedule,
            output,
        }) => {
            let a = Notation::parse(&notation)?;
            let level = TowerLevel::build(&a)?;
            let mut b = level.builder(schedule)?;
            b.grow(steps)?;
            let valid = level.age.validate(b.current());
            let extra = json!({
                "notation": a.to_string(),
                "vocabulary": level.vocabulary().id(),
                "distinguished": level.distinguished().iter().map(|s| s.name().to_string()).collect::<Vec<_>>(),
                "schedule": schedule,
                "steps": b.stats().steps,
                "valid": valid.is_ok(),
                "obstructions": b.obstructions(),
            });
            let ok = valid.is_ok();
            let mut out = emit_structure(b.current(), &a.to_string(), &output, extra);
            out.ok = ok;
            (out, output.out)
        }
        Command::Tower(TowerCmd::Validate { level, structure }) => {
            let level: Value = parse_json(&level)?;
            let text = level
                .get("notation")
                .and_then(Value::as_str)
                .ok_or_else(|| Error::Parse("level file has no notation".into()))?;
            let lvl = TowerLevel::build(&Notation::parse(text)?)?;
            let s = serial::decode_into(&read(&structure)?, lvl.vocabulary().clone())?;
            let verdict = lvl.age.validate(&s);
            let v = json!({ "notation": text, "valid": verdict.is_ok(), "reason": verdict.as_ref().err() });
            (Outcome::json(v, verdict.is_ok()), None)
        }
        Command::Scott(ScottCmd::Check {
            base,
            candidate,
            bound,
            sentences,
        }) => {
            let (a, b) = shared_pair(&base, &candidate)?;
            let schema = build_schema(&a, bound)?;
            let verdict = check_expansion(&schema, &b)?;
            let witness: Option<Vec<Value>> = verdict.witness.as_ref().map(|w| {
                w.iter()
                    .map(|(t, cs)| json!({ "tuple": t, "interpretation": cs }))
                    .collect()
            });
            let mut v = json!({
                "bound": schema.bound,
                "sentence_count": schema.sentences.len(),
                "expandable": verdict.expandable,
                "failing": verdict.failing,
                "witness": witness,
            });
            if sentences {
                v["sentences"] = json!(schema.sentences.iter().map(|s| s.to_string()).collect::<Vec<_>>());
            }
            (Outcome::json(v, verdict.expandable), None)
        }
        Command::Diagonal(DiagonalCmd::Run {
            trace,
            requirements,
            stages,
        }) => {
            let trace: EnumerationTrace = match trace {
                Some(p) => parse_json(&p)?,
                None => EnumerationTrace::default(),
            };
            let report = diagonal::run(&trace, requirements, stages);
            let ok = diagonal::verify(&report);
            let mut v = serde_json::to_value(&report).expect("serializable");
            v["verified"] = json!(ok);
            (Outcome::json(v, ok), None)
        }
        Command::Notation(NotationCmd::Show { text, terms }) => {
            let a = Notation::parse(&text)?;
            let mut v = json!({
                "notation": a.to_string(),
                "limit": a.is_limit(),
                "ordinal": a.ordinal_value().map(|o| o.to_string()),
                "predecessor": a.predecessor().map(|p| p.to_string()),
            });
            if let Notation::Lim(name) = &a {
                let seq = lookup(name)?;
                v["fundamental_sequence"] = json!((0..terms).map(|n| seq.at(n).to_string()).collect::<Vec<_>>());
            }
            (Outcome::json(v, true), None)
        }
        Command::Notation(NotationCmd::Compare { left, right }) => {
            let (a, b) = (Notation::parse(&left)?, Notation::parse(&right)?);
            let order = compare_o(&a, &b)?;
            let v = json!({ "left": a.to_string(), "right": b.to_string(), "order": format!("{order:?}").to_lowercase() });
            (Outcome::json(v, true), None)
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok((outcome, path)) => {
            let written = match path {
                Some(p) => fs::write(&p, format!("{}\n", outcome.text)).map_err(|e| format!("{}: {e}", p.display())),
                None => match writeln!(std::io::stdout().lock(), "{}", outcome.text) {
                    Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.to_string()),
                    _ => Ok(()),
                },
            };
            match written {
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
                Ok(()) if outcome.ok => ExitCode::SUCCESS,
                Ok(()) => ExitCode::from(1),
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
