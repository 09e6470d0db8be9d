//! Command-line front end. Machine output goes to stdout as JSON; diagnostics
//! go to stderr.
//!
//! Exit codes: 0 success, 1 parse error, 2 usage or configuration error,
//! 3 unsat (or mismatches for `audit`, no results for `cover`), 4 timeout,
//! 5 oracle failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::check::{verify_all, Checker, CoverStatus};
use crate::error::{CheckError, GapError, ModelError, OracleError};
use crate::gaps::{gap_report, Transcript};
use crate::model::{Assignment, CheckStatus, ParsedDocument, SolverConfig, Value, VarKind};
use crate::oracle::{
    Oracle, OracleScript, RemoteConfig, RemoteOracle, ScriptedOracle, DEFAULT_ENDPOINT, DEFAULT_MODEL,
};
use crate::parser::parse_document;
use crate::theory::NlCache;
use crate::trace::Trace;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_UNSAT: i32 = 3;
pub const EXIT_TIMEOUT: i32 = 4;
pub const EXIT_ORACLE: i32 = 5;

#[derive(Debug, Parser)]
#[command(
    name = "logitext",
    version,
    about = "Check and generate against hybrid text/logic documents"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the parsed document as JSON.
    Parse { path: PathBuf },
    /// Find one assignment satisfying the document.
    Check {
        path: PathBuf,
        #[command(flatten)]
        solve: SolveArgs,
        /// Print the full outcome as JSON instead of `name = value` lines.
        #[arg(long)]
        json: bool,
    },
    /// Enumerate assignments with distinct criterion combinations, one JSON line each.
    Cover {
        path: PathBuf,
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long)]
        limit: Option<usize>,
        /// Comma-separated variables that tell results apart.
        #[arg(long, value_delimiter = ',')]
        project: Option<Vec<String>>,
    },
    /// Verify every constraint against a complete assignment.
    Audit {
        path: PathBuf,
        /// JSON object of values, or a `check --json` outcome.
        #[arg(long)]
        input: Option<PathBuf>,
        #[command(flatten)]
        solve: SolveArgs,
    },
    /// Score subject transcripts against the document.
    Gaps {
        path: PathBuf,
        /// JSON object mapping classification ids to ground-truth verdicts.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        transcript: PathBuf,
        /// Variable the labels refer to.
        #[arg(long)]
        target: Option<String>,
        #[arg(long, value_enum, default_value_t = Metric::Both)]
        metric: Metric,
        #[arg(long, value_delimiter = ',')]
        project: Option<Vec<String>>,
        /// Also write per-instance rows to this CSV file.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Compositional,
    Combinatorial,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleKind {
    Scripted,
    Remote,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// `name=value`; `true`/`false` for booleans, `name=@file` reads a string from a file.
    #[arg(long = "assign", value_name = "NAME=VALUE")]
    pub assign: Vec<String>,
    #[arg(long, value_enum, default_value_t = OracleKind::Scripted)]
    pub oracle: OracleKind,
    /// Keyword rules for the scripted oracle.
    #[arg(long)]
    pub script: Option<PathBuf>,
    /// Probability that the scripted oracle flips a verdict.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Seconds.
    #[arg(long, default_value_t = 3000.0)]
    pub timeout: f64,
    /// Propose/verify rounds per string variable.
    #[arg(long = "max-iters", default_value_t = 5)]
    pub max_iters: usize,
    #[arg(long)]
    pub cache: Option<PathBuf>,
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long, default_value = DEFAULT_ENDPOINT)]
    pub endpoint: String,
    #[arg(long, default_value = DEFAULT_MODEL)]
    pub model: String,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<CheckError> for Failure {
    fn from(e: CheckError) -> Self {
        let code = match e {
            CheckError::Oracle(OracleError::Config(_)) => EXIT_USAGE,
            CheckError::Oracle(_) => EXIT_ORACLE,
            CheckError::Input(_) | CheckError::Cache(_) => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        Failure::usage(e.to_string())
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        CheckError::from(e).into()
    }
}

impl From<GapError> for Failure {
    fn from(e: GapError) -> Self {
        Failure::usage(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| {
        let reason = if e.kind() == std::io::ErrorKind::NotFound {
            "no such file".to_string()
        } else {
            e.to_string()
        };
        Failure::usage(format!("{}: {reason}", path.display()))
    })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    serde_json::from_str(&read(path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn load_document(path: &Path, err: &mut dyn Write) -> Result<ParsedDocument, Failure> {
    let source = read(path)?;
    let doc = parse_document(&source).map_err(|e| Failure {
        code: EXIT_PARSE,
        message: format!("{}: {e}", path.display()),
    })?;
    for w in &doc.warnings {
        let _ = writeln!(err, "{}:{w}", path.display());
    }
    Ok(doc)
}

/// Parses `--assign` values using the declared kind of each variable.
pub fn parse_assignments(doc: &ParsedDocument, items: &[String]) -> Result<Assignment, ModelError> {
    let mut out = Assignment::new();
    for item in items {
        let (name, raw) = item
            .split_once('=')
            .ok_or_else(|| ModelError::InvalidConfig(format!("expected NAME=VALUE, got `{item}`")))?;
        let name = name.trim();
        let value = match doc.kind_of(name) {
            None => return Err(ModelError::UnknownVar(name.to_string())),
            Some(VarKind::Bool) => match raw.trim() {
                "true" => Value::Bool(true),
                "false" => Value::Bool(false),
                _ => {
                    return Err(ModelError::TypeMismatch {
                        var: name.to_string(),
                        expected: VarKind::Bool,
                    })
                }
            },
            Some(VarKind::Str) => match raw.strip_prefix('@') {
                Some(file) => Value::Str(
                    std::fs::read_to_string(file)
                        .map_err(|e| ModelError::InvalidConfig(format!("{file}: {e}")))?
                        .trim_end_matches('\n')
                        .to_string(),
                ),
                None => Value::Str(raw.to_string()),
            },
        };
        out.bind(name, value)?;
    }
    Ok(out)
}

fn build_oracle(doc: &ParsedDocument, args: &SolveArgs, err: &mut dyn Write) -> Result<Box<dyn Oracle>, Failure> {
    match args.oracle {
        OracleKind::Scripted => {
            let script = match args.script.as_deref() {
                Some(path) => {
                    let script = OracleScript::from_json(&read(path)?)?;
                    let ids: Vec<&str> = doc.nltcs.iter().map(|n| n.id.as_str()).collect();
                    let unknown = script.unknown_ids(&ids);
                    if !unknown.is_empty() {
                        return Err(Failure::usage(format!(
                            "{}: rules name unknown constraints: {}",
                            path.display(),
                            unknown.join(", ")
                        )));
                    }
                    script
                }
                None => {
                    let _ = writeln!(
                        err,
                        "note: no --script given; constraints that read text will judge false"
                    );
                    OracleScript::default()
                }
            };
            if !(0.0..=1.0).contains(&args.noise) {
                return Err(Failure::usage("--noise must lie in [0, 1]"));
            }
            Ok(Box::new(ScriptedOracle::new(script).with_noise(args.noise, args.seed)))
        }
        OracleKind::Remote => Ok(Box::new(RemoteOracle::new(RemoteConfig {
            endpoint: args.endpoint.clone(),
            model: args.model.clone(),
            ..RemoteConfig::default()
        })?)),
    }
}

fn solver_config(args: &SolveArgs) -> Result<SolverConfig, Failure> {
    if !(args.timeout.is_finite() && args.timeout > 0.0) {
        return Err(Failure::usage("--timeout must be a positive number of seconds"));
    }
    let config = SolverConfig {
        max_refinements: args.max_iters,
        timeout: Duration::from_secs_f64(args.timeout),
        seed: args.seed,
        cache_path: args.cache.clone(),
        ..SolverConfig::default()
    };
    config.validate()?;
    Ok(config)
}

struct Session {
    doc: ParsedDocument,
    pi: Assignment,
    config: SolverConfig,
    oracle: Box<dyn Oracle>,
    cache: NlCache,
    trace: Option<Trace>,
}

impl Session {
    fn open(path: &Path, args: &SolveArgs, err: &mut dyn Write) -> Result<Self, Failure> {
        let doc = load_document(path, err)?;
        let pi = parse_assignments(&doc, &args.assign)?;
        let config = solver_config(args)?;
        let oracle = build_oracle(&doc, args, err)?;
        let cache = match &args.cache {
            Some(p) => NlCache::open(p).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?,
            None => NlCache::in_memory(),
        };
        let trace = match &args.trace {
            Some(p) => Some(Trace::to_file(p).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?),
            None => None,
        };
        Ok(Session {
            doc,
            pi,
            config,
            oracle,
            cache,
            trace,
        })
    }

    fn checker(&self) -> Checker<'_> {
        Checker::new(&self.doc, &self.config, self.oracle.as_ref(), &self.cache).with_trace(self.trace.as_ref())
    }
}

fn json_line(out: &mut dyn Write, value: &serde_json::Value) -> Result<(), Failure> {
    writeln!(out, "{value}").map_err(|e| Failure::usage(e.to_string()))
}

fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    match cli.command {
        Command::Parse { path } => {
            let doc = load_document(&path, err)?;
            let text = serde_json::to_string_pretty(&doc.to_json()).unwrap_or_default();
            writeln!(out, "{text}").map_err(|e| Failure::usage(e.to_string()))?;
            Ok(EXIT_OK)
        }
        Command::Check { path, solve, json } => {
            let s = Session::open(&path, &solve, err)?;
            let outcome = s.checker().check(&s.pi)?;
            let _ = writeln!(err, "wall clock: {:.3}s", outcome.diagnostics.wall_clock.as_secs_f64());
            if json {
                let text = serde_json::to_string_pretty(&outcome.to_json()).unwrap_or_default();
                writeln!(out, "{text}").map_err(|e| Failure::usage(e.to_string()))?;
            }
            Ok(match &outcome.status {
                CheckStatus::Sat(a) => {
                    if !json {
                        let _ = writeln!(out, "sat");
                        for (k, v) in a.iter() {
                            let _ = writeln!(out, "{k} = {v}");
                        }
                    }
                    EXIT_OK
                }
                CheckStatus::Unsat => {
                    if !json {
                        let _ = writeln!(out, "unsat");
                    }
                    EXIT_UNSAT
                }
                CheckStatus::Timeout => {
                    if !json {
                        let _ = writeln!(out, "timeout");
                    }
                    EXIT_TIMEOUT
                }
            })
        }
        Command::Cover {
            path,
            solve,
            limit,
            project,
        } => {
            let mut s = Session::open(&path, &solve, err)?;
            s.config.cover = true;
            s.config.cover_limit = limit;
            s.config.cover_vars = project;
            s.config.validate()?;
            let outcome = s.checker().cover(&s.pi)?;
            let _ = writeln!(err, "wall clock: {:.3}s", outcome.diagnostics.wall_clock.as_secs_f64());
            for a in &outcome.solutions {
                json_line(out, &a.to_json())?;
            }
            json_line(out, &outcome.status_json())?;
            Ok(match outcome.status {
                CoverStatus::Timeout => EXIT_TIMEOUT,
                _ if outcome.solutions.is_empty() => EXIT_UNSAT,
                _ => EXIT_OK,
            })
        }
        Command::Audit { path, input, solve } => {
            let s = Session::open(&path, &solve, err)?;
            let mut total = match input {
                Some(p) => {
                    let v: serde_json::Value = read_json(&p)?;
                    let v = v.get("assignment").cloned().unwrap_or(v);
                    serde_json::from_value::<Assignment>(v)
                        .map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?
                }
                None => Assignment::new(),
            };
            for (k, v) in s.pi.iter() {
                total.remove(k);
                total.bind(k.clone(), v.clone())?;
            }
            s.doc.type_check(&total)?;
            let judgments = verify_all(&s.doc, &total, s.oracle.as_ref())?;
            let mismatches: Vec<&str> = judgments
                .iter()
                .filter(|j| !j.matches())
                .map(|j| j.id.as_str())
                .collect();
            let report = serde_json::json!({"mismatches": mismatches, "judgments": judgments});
            let text = serde_json::to_string_pretty(&report).unwrap_or_default();
            writeln!(out, "{text}").map_err(|e| Failure::usage(e.to_string()))?;
            Ok(if mismatches.is_empty() { EXIT_OK } else { EXIT_UNSAT })
        }
        Command::Gaps {
            path,
            labels,
            transcript,
            target,
            metric,
            project,
            csv,
        } => {
            let doc = load_document(&path, err)?;
            let mut tr: Transcript = read_json(&transcript)?;
            if tr.is_empty() {
                return Err(Failure::usage(format!("{}: transcript is empty", transcript.display())));
            }
            match metric {
                Metric::Compositional => tr.generation.clear(),
                Metric::Combinatorial => tr.classification.clear(),
                Metric::Both => {}
            }
            let labels: BTreeMap<String, bool> = match labels {
                Some(p) => read_json(&p)?,
                None if tr.classification.is_empty() => BTreeMap::new(),
                None => return Err(Failure::usage("--labels is required to score classification records")),
            };
            let report = gap_report(&doc, target.as_deref(), &labels, &tr, project.as_deref())?;
            if let Some(p) = csv {
                std::fs::write(&p, report.to_csv()).map_err(|e| Failure::usage(format!("{}: {e}", p.display())))?;
            }
            let text = serde_json::to_string_pretty(&report.to_json()).unwrap_or_default();
            writeln!(out, "{text}").map_err(|e| Failure::usage(e.to_string()))?;
            Ok(EXIT_OK)
        }
    }
}

/// Runs one command and returns its exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli, out, err) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
