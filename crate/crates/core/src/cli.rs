//! Command-line front end. `run` holds all the logic so tests can drive it
//! in-process; the binary only forwards arguments and streams.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::applicability::applicable_patterns;
use crate::catalog::{list_patterns, pattern_relations, PatternId};
use crate::config::{count_configurations, derive_variant, enumerate_configurations, Configuration};
use crate::constraints::{check_evolution_constraints, check_vcc_consistency, variant_dependents};
use crate::dot::export_dot;
use crate::evolution::apply_pattern;
use crate::io::{canonical_hash, load_model, save_model};
use crate::model::ProcessModel;
use crate::trace::{record, replay, undo, Trace};
use crate::validate::validate_model;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PRECONDITION: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "cpmx", version, about = "Evolve, validate and configure configurable process models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ModelArg {
    /// Model file, `-` for standard input.
    #[arg(long)]
    model: String,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check well-formedness and print the violations.
    Validate(ModelArg),
    /// Apply an evolution pattern with a JSON parameter file.
    Apply {
        pattern: String,
        #[arg(long)]
        model: String,
        #[arg(long)]
        params: String,
        #[arg(long, default_value = "-")]
        out: String,
        /// Trace file to append the application to.
        #[arg(long)]
        trace: Option<String>,
    },
    /// Inspect the pattern catalog.
    Patterns {
        #[command(subcommand)]
        command: PatternsCommand,
    },
    /// List which patterns can be applied, optionally to one element.
    Applicable {
        #[arg(long)]
        model: String,
        #[arg(long)]
        target: Option<String>,
    },
    /// Report constraint conflicts and dependencies, and optionally check a
    /// proposed pattern application against the evolution constraints.
    Audit {
        #[arg(long)]
        model: String,
        #[arg(long)]
        transitive: bool,
        #[arg(long, requires = "params")]
        pattern: Option<String>,
        #[arg(long, requires = "pattern")]
        params: Option<String>,
    },
    /// Check a selection such as `B=B1,X=none` and write the derived model.
    Configure {
        #[arg(long)]
        model: String,
        #[arg(long)]
        select: String,
        #[arg(long, default_value = "-")]
        out: String,
    },
    /// Derive a plain model from a JSON configuration file.
    Derive {
        #[arg(long)]
        model: String,
        #[arg(long)]
        config: String,
        #[arg(long, default_value = "-")]
        out: String,
    },
    /// List every valid configuration.
    Enumerate {
        #[arg(long)]
        model: String,
        #[arg(long)]
        count_only: bool,
    },
    /// Show, replay or undo evolution traces.
    Trace {
        #[command(subcommand)]
        command: TraceCommand,
    },
    /// Write a DOT rendering of the model.
    Export {
        #[arg(long)]
        model: String,
        #[arg(long, default_value = "-")]
        out: String,
    },
}

#[derive(Debug, Subcommand)]
enum PatternsCommand {
    /// All pattern descriptors as JSON.
    List,
    /// The refines/uses graph.
    Graph {
        #[arg(long)]
        dot: bool,
    },
}

#[derive(Debug, Subcommand)]
enum TraceCommand {
    Show { file: String },
    Replay {
        #[arg(long)]
        model: String,
        #[arg(long)]
        trace: String,
        #[arg(long, default_value = "-")]
        out: String,
    },
    /// Revert the last entry; rewrites the trace and the model (or `--out`).
    Undo {
        #[arg(long)]
        model: String,
        #[arg(long)]
        trace: String,
        #[arg(long)]
        out: Option<String>,
    },
}

/// A failed command: exit code plus the single error object printed.
#[derive(Debug)]
struct Failure {
    code: i32,
    error: String,
    ids: Vec<String>,
    message: String,
}

impl Failure {
    fn new(code: i32, error: impl Into<String>, ids: Vec<String>, message: impl Into<String>) -> Self {
        Failure {
            code,
            error: error.into(),
            ids,
            message: message.into(),
        }
    }

    fn io(path: &str, e: impl std::fmt::Display) -> Self {
        Failure::new(EXIT_IO, "IoError", vec![], format!("{path}: {e}"))
    }
}

type Outcome = Result<(), Failure>;

struct Io<'a> {
    stdin: &'a mut dyn Read,
    stdout: &'a mut dyn Write,
}

impl Io<'_> {
    fn read(&mut self, path: &str) -> Result<Vec<u8>, Failure> {
        if path == "-" {
            let mut buf = Vec::new();
            self.stdin.read_to_end(&mut buf).map_err(|e| Failure::io(path, e))?;
            Ok(buf)
        } else {
            std::fs::read(path).map_err(|e| Failure::io(path, e))
        }
    }

    fn model(&mut self, path: &str) -> Result<ProcessModel, Failure> {
        let bytes = self.read(path)?;
        load_model(&bytes).map_err(|e| Failure::new(EXIT_IO, e.name(), vec![], format!("{path}: {e}")))
    }

    fn json(&mut self, path: &str) -> Result<Value, Failure> {
        let bytes = self.read(path)?;
        serde_json::from_slice(&bytes).map_err(|e| Failure::new(EXIT_IO, "ParseError", vec![], format!("{path}: {e}")))
    }

    fn trace(&mut self, path: &str) -> Result<Trace, Failure> {
        let bytes = self.read(path)?;
        let text = String::from_utf8(bytes).map_err(|e| Failure::io(path, e))?;
        Trace::from_jsonl(&text).map_err(|e| Failure::new(EXIT_IO, e.name(), vec![], format!("{path}: {e}")))
    }

    /// Writes to stdout for `-`, otherwise atomically through a temporary
    /// file in the destination directory.
    fn write(&mut self, path: &str, bytes: &[u8]) -> Outcome {
        if path == "-" {
            return self.stdout.write_all(bytes).map_err(|e| Failure::io(path, e));
        }
        let target = PathBuf::from(path);
        let dir = match target.parent() {
            Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
            _ => Path::new(".").to_path_buf(),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| Failure::io(path, e))?;
        tmp.write_all(bytes).map_err(|e| Failure::io(path, e))?;
        tmp.persist(&target).map_err(|e| Failure::io(path, e.error))?;
        Ok(())
    }

    fn print(&mut self, v: &impl serde::Serialize) -> Outcome {
        let mut s = serde_json::to_string_pretty(v).expect("outputs serialize");
        s.push('\n');
        self.stdout.write_all(s.as_bytes()).map_err(|e| Failure::io("-", e))
    }
}

fn pattern_arg(code: &str) -> Result<PatternId, Failure> {
    code.parse()
        .map_err(|e: crate::catalog::UnknownPattern| Failure::new(EXIT_USAGE, "UnknownPattern", vec![], e.to_string()))
}

fn execute(cmd: Command, io: &mut Io<'_>) -> Outcome {
    match cmd {
        Command::Validate(m) => {
            let model = io.model(&m.model)?;
            let report = validate_model(&model);
            io.print(&report)?;
            if report.is_well_formed() {
                Ok(())
            } else {
                let mut ids: Vec<String> = report.violations.iter().flat_map(|v| v.elements.clone()).collect();
                ids.sort();
                ids.dedup();
                let rules: Vec<String> = report.rules().iter().map(|r| r.to_string()).collect();
                Err(Failure::new(
                    EXIT_PRECONDITION,
                    "InvalidModel",
                    ids,
                    format!("violated rules: {}", rules.join(", ")),
                ))
            }
        }
        Command::Apply {
            pattern,
            model,
            params,
            out,
            trace,
        } => {
            let pid = pattern_arg(&pattern)?;
            let before = io.model(&model)?;
            let params = io.json(&params)?;
            let existing = match &trace {
                Some(t) if Path::new(t).exists() => Some(io.trace(t)?),
                Some(_) => Some(Trace::new()),
                None => None,
            };
            let result = apply_pattern(&before, pid, &params)
                .map_err(|e| Failure::new(EXIT_PRECONDITION, e.name(), e.ids(), e.to_string()))?;
            let new_trace = match existing {
                Some(t) => Some(
                    record(&t, result.trace_entry.clone())
                        .map_err(|e| Failure::new(EXIT_PRECONDITION, e.name(), vec![], e.to_string()))?,
                ),
                None => None,
            };
            io.write(&out, &save_model(&result.model))?;
            if let (Some(path), Some(t)) = (&trace, &new_trace) {
                io.write(path, t.to_jsonl().as_bytes())?;
            }
            if out != "-" {
                io.print(&json!({
                    "pattern": pid,
                    "pre_hash": result.trace_entry.pre_hash,
                    "post_hash": result.trace_entry.post_hash,
                    "edits": result.trace_entry.edits.len(),
                }))?;
            }
            Ok(())
        }
        Command::Patterns { command } => match command {
            PatternsCommand::List => io.print(&list_patterns()),
            PatternsCommand::Graph { dot: true } => {
                let text = pattern_relations().to_dot();
                io.write("-", text.as_bytes())
            }
            PatternsCommand::Graph { dot: false } => io.print(&pattern_relations()),
        },
        Command::Applicable { model, target } => {
            let m = io.model(&model)?;
            let verdicts = applicable_patterns(&m, target.as_deref())
                .map_err(|e| Failure::new(EXIT_PRECONDITION, e.name(), e.ids(), e.to_string()))?;
            io.print(&verdicts)
        }
        Command::Audit {
            model,
            transitive,
            pattern,
            params,
        } => {
            let m = io.model(&model)?;
            let mut dependents = serde_json::Map::new();
            let variants: Vec<String> = m
                .activities
                .keys()
                .chain(m.resources.keys())
                .chain(m.data_objects.keys())
                .filter(|id| m.is_variant(id))
                .cloned()
                .collect();
            for v in variants {
                let deps = variant_dependents(&m, &v, transitive).expect("listed variants");
                if !deps.is_empty() {
                    dependents.insert(v, json!(deps));
                }
            }
            let mut out = json!({
                "conflicts": check_vcc_consistency(&m),
                "dependents": dependents,
            });
            if let (Some(p), Some(params)) = (pattern, params) {
                let params = io.json(&params)?;
                let report = check_evolution_constraints(&m, &p, &params).map_err(|e| {
                    let code = if e.name() == "UnknownPattern" { EXIT_USAGE } else { EXIT_PRECONDITION };
                    Failure::new(code, e.name(), vec![], e.to_string())
                })?;
                out["constraints"] = json!(report);
            }
            io.print(&out)
        }
        Command::Configure { model, select, out } => {
            let m = io.model(&model)?;
            let config = Configuration::parse_selection(&select)
                .map_err(|msg| Failure::new(EXIT_USAGE, "InvalidSelectionSyntax", vec![], msg))?;
            derive_to(io, &m, &config, &out)
        }
        Command::Derive { model, config, out } => {
            let m = io.model(&model)?;
            let v = io.json(&config)?;
            let config: Configuration = serde_json::from_value(v)
                .map_err(|e| Failure::new(EXIT_IO, "ParseError", vec![], format!("{config}: {e}")))?;
            derive_to(io, &m, &config, &out)
        }
        Command::Enumerate { model, count_only } => {
            let m = io.model(&model)?;
            let fail = |e: crate::config::ConfigError| Failure::new(EXIT_PRECONDITION, e.name(), e.ids(), e.to_string());
            if count_only {
                let n = count_configurations(&m).map_err(fail)?;
                io.write("-", format!("{n}\n").as_bytes())
            } else {
                let all = enumerate_configurations(&m).map_err(fail)?;
                io.print(&all)
            }
        }
        Command::Trace { command } => match command {
            TraceCommand::Show { file } => {
                let t = io.trace(&file)?;
                io.print(&t.entries)
            }
            TraceCommand::Replay { model, trace, out } => {
                let m = io.model(&model)?;
                let t = io.trace(&trace)?;
                let end = replay(&m, &t).map_err(|e| Failure::new(EXIT_PRECONDITION, e.name(), vec![], e.to_string()))?;
                io.write(&out, &save_model(&end))
            }
            TraceCommand::Undo { model, trace, out } => {
                let m = io.model(&model)?;
                let t = io.trace(&trace)?;
                let (back, rest) =
                    undo(&m, &t).map_err(|e| Failure::new(EXIT_PRECONDITION, e.name(), vec![], e.to_string()))?;
                let dest = out.unwrap_or(model);
                io.write(&dest, &save_model(&back))?;
                io.write(&trace, rest.to_jsonl().as_bytes())?;
                if dest != "-" {
                    io.print(&json!({ "hash": canonical_hash(&back), "remaining": rest.len() }))?;
                }
                Ok(())
            }
        },
        Command::Export { model, out } => {
            let m = io.model(&model)?;
            io.write(&out, export_dot(&m).as_bytes())
        }
    }
}

fn derive_to(io: &mut Io<'_>, m: &ProcessModel, config: &Configuration, out: &str) -> Outcome {
    let derived =
        derive_variant(m, config).map_err(|e| Failure::new(EXIT_PRECONDITION, e.name(), e.ids(), e.to_string()))?;
    io.write(out, &save_model(&derived))
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let err = json!({ "error": "UsageError", "ids": [], "message": text.trim_end() });
                    let _ = writeln!(stderr, "{err}");
                    EXIT_USAGE
                }
            };
        }
    };
    let mut io = Io { stdin, stdout };
    match execute(cli.command, &mut io) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let err = json!({ "error": f.error, "ids": f.ids, "message": f.message });
            let _ = writeln!(stderr, "{err}");
            f.code
        }
    }
}
