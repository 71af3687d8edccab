//! The `tether` command line.
//!
//! [`dispatch`] parses arguments, routes to a subcommand and returns an
//! [`Exit`] code. Codes depend only on the computed verdict, never on the
//! output format.

use std::collections::BTreeSet;
use std::fs::{self, OpenOptions};
use std::io::{Read, Write};
use std::num::NonZeroU32;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use tether_core::assertion::{diff_suites, gate_verdict, parse_test_script, GateVerdict, SuiteDiff};
use tether_core::contract::{check_code, check_exec_input, check_plan, extract_code, GateViolation, PlannerOutput};
use tether_core::discovery::{default_threshold, FeatureTracker};
use tether_core::env::{FailureOrigin, OriginClassifier, SkipEntry, SkipList, SkipUpdate};
use tether_core::report::ExecutionReport;
use tether_core::retry::{AttemptOutcome, EnvironmentHandling, RetryState, RetryStatus, DEFAULT_BUDGET, DEFAULT_STAGNATION_WINDOW};
use tether_core::selector::{parse_selector, verify_selector, DomSnapshot, VerificationStatus};
use tether_core::signature::{CooccurrenceDenominator, FailureSignature, SignatureSet};
use tether_core::sim::{check_topology, measure, run_simulation, RunMetrics, SimError, GENERATOR_ID};
use tether_core::{format_one_decimal, Ratio};

use crate::analyze::{analyze, render_text, write_csv_tables, Analysis, AnalysisOptions, Figure};
use crate::files::{self, InputError};
use crate::fixture;
use crate::jsonl::{self, CorpusHeader, Strictness};
use crate::montecarlo;

/// Process exit codes. Stable across releases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Exit {
    /// Success, or the gate allows.
    Success = 0,
    /// A selector matched more than one element.
    Multiple = 2,
    /// Human review required: weakening, scope reduction, escalation, or a
    /// selector matching nothing.
    Review = 3,
    /// A handoff contract was violated.
    Violation = 4,
    /// Bad arguments or unreadable/malformed input.
    Input = 5,
    /// An internal invariant failed.
    Internal = 6,
}

impl Exit {
    pub fn code(self) -> u8 {
        self as u8
    }
}

const EXIT_CODES: &str = "\
Exit codes:
  0  success / allow
  2  selector matched multiple elements
  3  review required (weakening, scope reduction, escalation, selector not found)
  4  handoff contract violation
  5  input or usage error
  6  internal invariant failure";

#[derive(Debug, Parser)]
#[command(name = "tether", version, about = "Analytics, guardrails and simulation for autonomous UI test repair", after_help = EXIT_CODES)]
pub struct Cli {
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    pub json: bool,
    /// Print nothing but errors; the exit code still carries the verdict.
    #[arg(long, global = true)]
    pub quiet: bool,
    /// Override the simulator seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Signature rule table (JSON array of {"signature", "patterns"}).
    #[arg(long, global = true, value_name = "FILE")]
    pub rules: Option<PathBuf>,
    /// Simulator config (JSON).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Corpus overview, convergence, signature and phase tables.
    Analyze(AnalyzeArgs),
    /// Run the pipeline simulator.
    Simulate(SimulateArgs),
    /// Selector grounding and handoff-contract gates.
    Gate(GateArgs),
    /// Compare two test scripts for weakened assertions or removed cases.
    DiffAssertions(DiffArgs),
    /// Failure signatures (or origin) of a report or log text read from stdin.
    Classify(ClassifyArgs),
    /// Near-duplicate feature detection.
    Dedup(DedupArgs),
    /// Replay attempt outcomes through the bounded retry policy.
    Retry(RetryArgs),
    /// Inspect or maintain a skip-list file.
    #[command(subcommand)]
    SkipList(SkipListCommand),
    /// Regenerate the shipped reference corpus.
    #[command(hide = true)]
    BuildFixture {
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Denominator {
    SignatureBearing,
    AllReports,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// JSON-lines corpus.
    pub corpus: PathBuf,
    /// Reject unknown keys (the default).
    #[arg(long, conflicts_with = "lenient")]
    pub strict: bool,
    /// Warn about unknown keys instead of rejecting them.
    #[arg(long)]
    pub lenient: bool,
    /// Convergence qualities per family (JSON object), overriding those
    /// derived from script pairs.
    #[arg(long, value_name = "FILE")]
    pub annotations: Option<PathBuf>,
    /// Matcher-strength table (JSON array).
    #[arg(long, value_name = "FILE")]
    pub matchers: Option<PathBuf>,
    /// Known page-object identifiers (JSON array of strings).
    #[arg(long, value_name = "FILE")]
    pub symbols: Option<PathBuf>,
    /// Relabel phases at these exclusive report positions, e.g. 18,132,186.
    #[arg(long, value_delimiter = ',', value_name = "POSITIONS")]
    pub phase_boundaries: Option<Vec<usize>>,
    /// Denominator of the mean signature co-occurrence.
    #[arg(long, value_enum, default_value = "signature-bearing")]
    pub denominator: Denominator,
    /// Also write one CSV per table into this directory.
    #[arg(long, value_name = "DIR")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Write the corpus of the run at the config seed here.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Number of runs over derived seeds; more than one prints a summary.
    #[arg(long, default_value_t = 1)]
    pub runs: u64,
    /// A second config of the same world; prints a side-by-side summary.
    #[arg(long, value_name = "FILE")]
    pub compare: Option<PathBuf>,
    /// Write per-family traces (JSON) of the run at the config seed.
    #[arg(long, value_name = "FILE")]
    pub trace: Option<PathBuf>,
    /// Append escalation records (JSON lines) of the run at the config seed.
    #[arg(long, value_name = "FILE")]
    pub review_queue: Option<PathBuf>,
    /// Write the skip list (JSON) of the run at the config seed.
    #[arg(long, value_name = "FILE")]
    pub skip_list: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(skip)]
#[command(group = clap::ArgGroup::new("gate_kind").required(true).multiple(false))]
pub struct GateArgs {
    /// Selector expression to verify against `--dom`.
    #[arg(long, group = "gate_kind", requires = "dom")]
    pub selector: Option<String>,
    /// DOM snapshot (JSON).
    #[arg(long, value_name = "FILE")]
    pub dom: Option<PathBuf>,
    /// Planner output (JSON).
    #[arg(long, group = "gate_kind", value_name = "FILE")]
    pub plan: Option<PathBuf>,
    /// Spec ids USE_EXISTING plans may reference (JSON array).
    #[arg(long, value_name = "FILE", requires = "plan")]
    pub specs: Option<PathBuf>,
    /// Raw coder response text.
    #[arg(long, group = "gate_kind", value_name = "FILE")]
    pub coder_response: Option<PathBuf>,
    /// Executor input as `test-path[,context.json]`.
    #[arg(long, group = "gate_kind", value_name = "PATH[,CONTEXT]")]
    pub exec: Option<String>,
}

#[derive(Debug, Args)]
pub struct DiffArgs {
    pub before: PathBuf,
    pub after: PathBuf,
    /// Matcher-strength table (JSON array).
    #[arg(long, value_name = "FILE")]
    pub matchers: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Print the failure origin instead of signatures.
    #[arg(long)]
    pub origin: bool,
    /// Known page-object identifiers (JSON array of strings).
    #[arg(long, value_name = "FILE")]
    pub symbols: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DedupArgs {
    /// Feature list (JSON array of {feature_id, name, screen_id, source}).
    pub features: PathBuf,
    /// Jaccard threshold, as a decimal or a fraction.
    #[arg(long, value_parser = parse_threshold)]
    pub threshold: Option<Ratio<u64>>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Outcome {
    #[value(name = "PASS")]
    Pass,
    #[value(name = "FAIL_TEST_LOGIC")]
    FailTestLogic,
    #[value(name = "FAIL_ENVIRONMENT")]
    FailEnvironment,
    #[value(name = "NO_ARTIFACT")]
    NoArtifact,
}

impl From<Outcome> for AttemptOutcome {
    fn from(o: Outcome) -> Self {
        match o {
            Outcome::Pass => Self::Pass,
            Outcome::FailTestLogic => Self::FailTestLogic,
            Outcome::FailEnvironment => Self::FailEnvironment,
            Outcome::NoArtifact => Self::NoArtifact,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EnvHandling {
    Escalate,
    ConsumeBudget,
}

#[derive(Debug, Args)]
pub struct RetryArgs {
    #[arg(long)]
    pub family: String,
    /// Attempt outcomes in order, comma separated.
    #[arg(long, value_enum, value_delimiter = ',', required = true)]
    pub outcomes: Vec<Outcome>,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub retry_budget: u32,
    #[arg(long, default_value_t = DEFAULT_STAGNATION_WINDOW)]
    pub stagnation_window: u32,
    #[arg(long, value_enum, default_value = "escalate")]
    pub environment: EnvHandling,
    /// Append the escalation record (JSON lines) here.
    #[arg(long, value_name = "FILE")]
    pub review_queue: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum SkipListCommand {
    /// Print the entries.
    Show { file: PathBuf },
    /// Classify log text from stdin and add the feature if the failure is environmental.
    Record {
        file: PathBuf,
        #[arg(long)]
        feature: String,
        /// First-seen timestamp for a new entry.
        #[arg(long)]
        timestamp: String,
    },
    /// Explicitly remove a feature.
    Expire {
        file: PathBuf,
        #[arg(long)]
        feature: String,
    },
}

/// The serialized name of a unit enum variant.
fn wire_name(value: &impl Serialize) -> String {
    match serde_json::to_value(value) {
        Ok(serde_json::Value::String(s)) => s,
        other => format!("{other:?}"),
    }
}

/// Parses `0.6`, `.6` or `3/5` into an exact ratio.
pub fn parse_threshold(text: &str) -> Result<Ratio<u64>, String> {
    let bad = || format!("`{text}` is not a decimal or a fraction");
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n: u64 = n.trim().parse().map_err(|_| bad())?;
        let d: u64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Ratio::new(n, d));
    }
    let (int, frac) = text.split_once('.').unwrap_or((text, ""));
    let digits = |s: &str| s.chars().all(|c| c.is_ascii_digit());
    if (int.is_empty() && frac.is_empty()) || !digits(int) || !digits(frac) || frac.len() > 9 {
        return Err(bad());
    }
    let scale = 10u64.pow(frac.len() as u32);
    let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
    let frac: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
    Ok(Ratio::new(int * scale + frac, scale))
}

/// A failed invocation.
#[derive(Debug)]
enum Failure {
    Input(String),
    Internal(String),
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        Self::Input(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::Internal(format!("output error: {e}"))
    }
}

fn input(e: impl ToString) -> Failure {
    Failure::Input(e.to_string())
}

type Outcome_ = Result<Exit, Failure>;

struct Io<'a> {
    stdin: &'a mut dyn Read,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    json: bool,
    quiet: bool,
}

impl Io<'_> {
    fn json(&mut self, value: &impl Serialize) -> std::io::Result<()> {
        if !self.quiet {
            serde_json::to_writer_pretty(&mut *self.out, value)?;
            writeln!(self.out)?;
        }
        Ok(())
    }

    fn text(&mut self, text: &str) -> std::io::Result<()> {
        if !self.quiet {
            self.out.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                writeln!(self.out)?;
            }
        }
        Ok(())
    }

    /// JSON with `--json`, otherwise the given text.
    fn emit(&mut self, value: &impl Serialize, text: impl FnOnce() -> String) -> std::io::Result<()> {
        if self.json {
            self.json(value)
        } else {
            let t = text();
            self.text(&t)
        }
    }

    fn warn(&mut self, message: &str) {
        if !self.quiet {
            let _ = writeln!(self.err, "warning: {message}");
        }
    }
}

/// Parses `argv` (program name first) and runs the subcommand.
pub fn dispatch<I, T>(argv: I, stdin: &mut dyn Read, out: &mut dyn Write, err: &mut dyn Write) -> Exit
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let wants_json = argv.iter().any(|a| a == "--json");
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind::*;
            if matches!(e.kind(), DisplayHelp | DisplayVersion) {
                let _ = write!(out, "{e}");
                return Exit::Success;
            }
            if matches!(e.kind(), DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = write!(err, "{e}");
                return Exit::Input;
            }
            if wants_json {
                let _ = writeln!(out, "{}", json!({"error": e.kind().to_string(), "message": e.to_string(), "exit_code": Exit::Input.code()}));
            } else {
                let _ = write!(err, "{}", e.render());
            }
            return Exit::Input;
        }
    };
    let mut io = Io { stdin, out, err, json: cli.json, quiet: cli.quiet };
    let result = run(&cli, &mut io);
    match result {
        Ok(code) => code,
        Err(failure) => {
            let (code, kind, message) = match failure {
                Failure::Input(m) => (Exit::Input, "input", m),
                Failure::Internal(m) => (Exit::Internal, "internal", m),
            };
            if io.json {
                let _ = writeln!(io.out, "{}", json!({"error": kind, "message": message, "exit_code": code.code()}));
            } else {
                let _ = writeln!(io.err, "error: {message}");
            }
            code
        }
    }
}

fn run(cli: &Cli, io: &mut Io<'_>) -> Outcome_ {
    match &cli.command {
        Command::Analyze(args) => cmd_analyze(cli, args, io),
        Command::Simulate(args) => cmd_simulate(cli, args, io),
        Command::Gate(args) => cmd_gate(args, io),
        Command::DiffAssertions(args) => cmd_diff(args, io),
        Command::Classify(args) => cmd_classify(cli, args, io),
        Command::Dedup(args) => cmd_dedup(args, io),
        Command::Retry(args) => cmd_retry(args, io),
        Command::SkipList(cmd) => cmd_skip_list(cmd, io),
        Command::BuildFixture { out } => {
            let text = fixture::reference_corpus_text();
            match out {
                Some(path) => write_file(path, &text)?,
                None => io.out.write_all(text.as_bytes())?,
            }
            Ok(Exit::Success)
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| input(format!("cannot write `{}`: {e}", path.display())))
}

fn append_lines(path: &Path, lines: impl IntoIterator<Item = String>) -> Result<(), Failure> {
    let fail = |e: std::io::Error| input(format!("cannot append to `{}`: {e}", path.display()));
    let mut file = OpenOptions::new().create(true).append(true).open(path).map_err(fail)?;
    for line in lines {
        writeln!(file, "{line}").map_err(fail)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct AnalyzeOutput<'a> {
    #[serde(flatten)]
    analysis: &'a Analysis,
    warnings: &'a [String],
}

fn cmd_analyze(cli: &Cli, args: &AnalyzeArgs, io: &mut Io<'_>) -> Outcome_ {
    let strictness = if args.lenient { Strictness::Lenient } else { Strictness::Strict };
    let text = files::read_text(&args.corpus)?;
    let mut file = jsonl::read_corpus(&text, strictness).map_err(|e| match e {
        jsonl::CorpusError::Records(errors) => input(format!(
            "`{}`: {} malformed record(s):\n  {}",
            args.corpus.display(),
            errors.len(),
            errors.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n  ")
        )),
        other => input(format!("`{}`: {other}", args.corpus.display())),
    })?;
    if let Some(boundaries) = &args.phase_boundaries {
        file.corpus.label_phases(boundaries);
    }
    let classifier = files::load_classifier(cli.rules.as_deref(), args.symbols.as_deref())?;
    let matchers = files::load_matchers(args.matchers.as_deref())?;
    let options = AnalysisOptions {
        classifier: &classifier,
        matchers: &matchers,
        annotations: files::load_annotations(args.annotations.as_deref())?,
        denominator: match args.denominator {
            Denominator::SignatureBearing => CooccurrenceDenominator::SignatureBearing,
            Denominator::AllReports => CooccurrenceDenominator::AllReports,
        },
    };
    let analysis = analyze(&file.corpus, &options).map_err(|e| input(format!("`{}`: {e}", args.corpus.display())))?;
    if let Some(dir) = &args.csv {
        fs::create_dir_all(dir).map_err(|e| input(format!("cannot create `{}`: {e}", dir.display())))?;
        write_csv_tables(&analysis, dir).map_err(|e| input(format!("cannot write CSV into `{}`: {e}", dir.display())))?;
    }
    if !io.json {
        for w in &file.warnings {
            io.warn(w);
        }
    }
    io.emit(&AnalyzeOutput { analysis: &analysis, warnings: &file.warnings }, || render_text(&analysis))?;
    Ok(Exit::Success)
}

fn sim_error(e: SimError) -> Failure {
    match e {
        SimError::Config(e) => input(e),
        SimError::Metrics(e) => Failure::Internal(format!("simulated corpus failed analysis: {e}")),
    }
}

/// [`RunMetrics`] with figures instead of bare ratios.
#[derive(Serialize)]
struct RunOutput<'a> {
    seed: u64,
    reports: usize,
    rc_naive: Figure,
    rc_strict: Figure,
    no_artifact_share: Figure,
    mean_iterations: Option<Figure>,
    escalations: usize,
    workarounds_applied: u32,
    max_family_reports: u32,
    longest_no_artifact_streak: u32,
    signature_counts: &'a tether_core::signature::SignatureCounts,
}

impl<'a> From<&'a RunMetrics> for RunOutput<'a> {
    fn from(m: &'a RunMetrics) -> Self {
        Self {
            seed: m.seed,
            reports: m.reports,
            rc_naive: m.rc_naive.into(),
            rc_strict: m.rc_strict.into(),
            no_artifact_share: m.no_artifact_share.into(),
            mean_iterations: m.mean_iterations.map(Into::into),
            escalations: m.escalations,
            workarounds_applied: m.workarounds_applied,
            max_family_reports: m.max_family_reports,
            longest_no_artifact_streak: m.longest_no_artifact_streak,
            signature_counts: &m.signature_counts,
        }
    }
}

fn run_metrics_text(m: &RunMetrics) -> String {
    let pct = |r: Ratio<u64>| format!("{}%", format_one_decimal(r));
    let mut lines = vec![
        format!("seed                        {}", m.seed),
        format!("reports                     {}", m.reports),
        format!("repair convergence (naive)  {}", pct(m.rc_naive)),
        format!("repair convergence (strict) {}", pct(m.rc_strict)),
        format!("no-artifact share           {}", pct(m.no_artifact_share)),
        format!("mean iterations             {}", m.mean_iterations.map_or("n/a".into(), format_one_decimal)),
        format!("escalations                 {}", m.escalations),
        format!("workarounds applied         {}", m.workarounds_applied),
        format!("most reports in one family  {}", m.max_family_reports),
        format!("longest no-artifact streak  {}", m.longest_no_artifact_streak),
    ];
    lines.extend(m.signature_counts.iter().map(|(sig, n)| format!("  {:<26}{n}", sig.as_str())));
    lines.join("\n")
}

fn summary_text(label: &str, s: &tether_core::sim::PolicySummary) -> String {
    let mut lines = vec![
        format!("{label} ({} runs)", s.runs),
        format!("  mean rc naive / strict      {:.1}% / {:.1}%", s.mean_rc_naive, s.mean_rc_strict),
        format!("  mean no-artifact share      {:.1}%", s.mean_no_artifact_share),
        format!("  mean iterations             {}", s.mean_iterations.map_or("n/a".into(), |v| format!("{v:.2}"))),
        format!("  mean escalations            {:.2}", s.mean_escalations),
        format!("  runs with a workaround      {}", s.runs_with_workaround),
        format!("  runs with strict < naive    {}", s.runs_strict_below_naive),
        format!("  most reports in one family  {}", s.max_family_reports),
        format!("  longest no-artifact streak  {}", s.longest_no_artifact_streak),
    ];
    lines.extend(s.mean_signature_share.iter().map(|(sig, v)| format!("  {:<28}{v:.1}%", sig.as_str())));
    lines.join("\n")
}

fn cmd_simulate(cli: &Cli, args: &SimulateArgs, io: &mut Io<'_>) -> Outcome_ {
    let path = cli.config.as_deref().ok_or_else(|| input("simulate needs --config <FILE>"))?;
    let mut config = files::load_sim_config(path)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if args.runs == 0 {
        return Err(input("--runs must be at least 1"));
    }
    let classifier = files::load_classifier(cli.rules.as_deref(), None)?;
    let matchers = files::load_matchers(None)?;

    let wants_single = args.out.is_some() || args.trace.is_some() || args.review_queue.is_some() || args.skip_list.is_some();
    let mut single = None;
    if wants_single || (args.runs == 1 && args.compare.is_none()) {
        let output = run_simulation(&config).map_err(input)?;
        for trace in &output.traces {
            check_topology(&trace.events)
                .map_err(|e| Failure::Internal(format!("family `{}` broke the pipeline topology: {e}", trace.summary.family_id)))?;
        }
        if let Some(out) = &args.out {
            let header = CorpusHeader::new(GENERATOR_ID, Some(config.seed), Some(files::config_hash(&config)), output.corpus.len());
            write_file(out, &jsonl::write_corpus(Some(&header), &output.corpus))?;
        }
        if let Some(trace) = &args.trace {
            write_file(trace, &serde_json::to_string_pretty(&output.traces).expect("traces serialize"))?;
        }
        if let Some(queue) = &args.review_queue {
            append_lines(queue, output.review_queue.iter().map(|r| serde_json::to_string(r).expect("records serialize")))?;
        }
        if let Some(skip) = &args.skip_list {
            write_file(skip, &serde_json::to_string_pretty(&output.skip_list).expect("entries serialize"))?;
        }
        let mut metrics = measure(&output, &classifier, &matchers).map_err(sim_error)?;
        metrics.seed = config.seed;
        single = Some(metrics);
    }

    if let Some(other) = &args.compare {
        let other = files::load_sim_config(other)?;
        let cmp = montecarlo::compare(&config, &other, args.runs, &classifier, &matchers).map_err(sim_error)?;
        io.emit(&cmp, || format!("{}\n\n{}", summary_text("baseline", &cmp.baseline), summary_text("constrained", &cmp.constrained)))?;
    } else if args.runs > 1 {
        let summary = montecarlo::summarize_many(&config, args.runs, &classifier, &matchers).map_err(sim_error)?;
        io.emit(&summary, || summary_text("summary", &summary))?;
    } else if let Some(m) = &single {
        io.emit(&RunOutput::from(m), || run_metrics_text(m))?;
    }
    Ok(Exit::Success)
}

#[derive(Serialize)]
struct GateOutput<'a> {
    ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    violation: Option<&'a GateViolation>,
}

fn gate_result(io: &mut Io<'_>, result: Result<(), GateViolation>) -> Outcome_ {
    match result {
        Ok(()) => {
            io.emit(&GateOutput { ok: true, violation: None }, || "ok".into())?;
            Ok(Exit::Success)
        }
        Err(v) => {
            // The violation is always printed as JSON.
            io.json(&GateOutput { ok: false, violation: Some(&v) })?;
            Ok(Exit::Violation)
        }
    }
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct ExecContext {
    #[serde(default)]
    repair_context: Option<String>,
    #[serde(default)]
    expecting_repair: bool,
}

fn cmd_gate(args: &GateArgs, io: &mut Io<'_>) -> Outcome_ {
    if let Some(text) = &args.selector {
        let expr = parse_selector(text).map_err(|e| input(format!("selector `{text}`: {e}")))?;
        let dom: DomSnapshot = files::read_json(args.dom.as_deref().expect("clap requires --dom"))?;
        let result = verify_selector(&expr, &dom);
        io.emit(&result, || match result.status {
            VerificationStatus::VerifiedUnique => "VERIFIED_UNIQUE".into(),
            VerificationStatus::VerifiedMultiple(n) => format!("VERIFIED_MULTIPLE ({n} elements)"),
            VerificationStatus::NotFound => "NOT_FOUND".into(),
        })?;
        return Ok(match result.status {
            VerificationStatus::VerifiedUnique => Exit::Success,
            VerificationStatus::VerifiedMultiple(_) => Exit::Multiple,
            VerificationStatus::NotFound => Exit::Review,
        });
    }
    if let Some(path) = &args.plan {
        let plan: PlannerOutput = files::read_json(path)?;
        let specs: BTreeSet<String> = match &args.specs {
            Some(p) => files::read_json(p)?,
            None => BTreeSet::new(),
        };
        return gate_result(io, check_plan(&plan, &specs));
    }
    if let Some(path) = &args.coder_response {
        let response = files::read_text(path)?;
        return gate_result(io, check_code(&extract_code(&response)));
    }
    let spec = args.exec.as_deref().expect("clap requires one gate");
    let (test_path, context) = match spec.split_once(',') {
        Some((p, c)) => {
            let c = Path::new(c);
            let ctx: ExecContext = files::read_json(c)?;
            (p, ctx)
        }
        None => (spec, ExecContext { repair_context: None, expecting_repair: false }),
    };
    gate_result(io, check_exec_input(test_path, context.repair_context.as_deref(), context.expecting_repair))
}

#[derive(Serialize)]
struct DiffOutput<'a> {
    verdict: GateVerdict,
    scope_reduction: bool,
    weakened: bool,
    diff: &'a SuiteDiff,
}

fn cmd_diff(args: &DiffArgs, io: &mut Io<'_>) -> Outcome_ {
    let table = files::load_matchers(args.matchers.as_deref())?;
    let parse = |path: &Path| -> Result<_, Failure> {
        let src = files::read_text(path)?;
        parse_test_script(&src, &table).map_err(|e| input(format!("`{}`: {e}", path.display())))
    };
    let diff = diff_suites(&table, &parse(&args.before)?, &parse(&args.after)?);
    let verdict = gate_verdict(&diff);
    if !io.json {
        for w in &diff.warnings {
            io.warn(w);
        }
    }
    let output = DiffOutput { verdict, scope_reduction: diff.scope_reduction(), weakened: diff.has_weakening(), diff: &diff };
    io.emit(&output, || {
        let mut lines: Vec<String> = diff.removed_cases.iter().map(|c| format!("removed case: {c}")).collect();
        lines.extend(diff.added_cases.iter().map(|c| format!("added case: {c}")));
        lines.extend(diff.changes.iter().map(|c| {
            let show = |a: &Option<tether_core::assertion::AssertionAst>| {
                a.as_ref().map_or("(none)".to_string(), |a| {
                    let args: Vec<String> = a.arguments.iter().map(ToString::to_string).collect();
                    format!("expect({}).{}{}({})", a.subject, if a.negated { "not." } else { "" }, a.matcher, args.join(", "))
                })
            };
            format!("{}: {} -> {} [{}]", c.case_name, show(&c.before), show(&c.after), wire_name(&c.verdict))
        }));
        if diff.scope_reduction() {
            lines.push("SCOPE_REDUCTION".into());
        }
        if diff.has_weakening() {
            lines.push("WEAKENED".into());
        }
        lines.push(match verdict {
            GateVerdict::Allow => "ALLOW".into(),
            GateVerdict::RequireReview => "REQUIRE_REVIEW".into(),
        });
        lines.join("\n")
    })?;
    Ok(match verdict {
        GateVerdict::Allow => Exit::Success,
        GateVerdict::RequireReview => Exit::Review,
    })
}

fn cmd_classify(cli: &Cli, args: &ClassifyArgs, io: &mut Io<'_>) -> Outcome_ {
    let mut text = String::new();
    io.stdin.read_to_string(&mut text).map_err(|e| input(format!("cannot read stdin: {e}")))?;
    let report: Option<ExecutionReport> = text
        .trim_start()
        .starts_with('{')
        .then(|| jsonl::parse_report(text.trim(), 1, Strictness::Lenient).ok().map(|(r, _)| r))
        .flatten();
    if args.origin {
        let classifier = OriginClassifier::default();
        let origin: FailureOrigin = match &report {
            Some(r) => classifier.classify_entries(&r.error_entries),
            None => classifier.classify_text(&text),
        };
        io.emit(&json!({ "origin": origin }), || origin.as_str().into())?;
        return Ok(Exit::Success);
    }
    let classifier = files::load_classifier(cli.rules.as_deref(), args.symbols.as_deref())?;
    let set: SignatureSet = match &report {
        Some(r) => classifier.classify_report(r),
        None => classifier.classify_text(&text),
    };
    let signatures: Vec<FailureSignature> = set.iter().collect();
    io.emit(&json!({ "signatures": signatures }), || {
        signatures.iter().map(|s| s.as_str()).collect::<Vec<_>>().join("\n")
    })?;
    Ok(Exit::Success)
}

#[derive(Serialize)]
struct RejectedOutput {
    feature_id: String,
    matched_feature_id: String,
    similarity: Figure,
}

fn cmd_dedup(args: &DedupArgs, io: &mut Io<'_>) -> Outcome_ {
    let features = files::load_features(&args.features)?;
    let threshold = args.threshold.unwrap_or_else(default_threshold);
    let mut tracker = FeatureTracker::new(threshold).map_err(input)?;
    for f in features {
        tracker.try_add(f);
    }
    let accepted: Vec<&str> = tracker.accepted().iter().map(|f| f.feature_id.as_str()).collect();
    let rejected: Vec<RejectedOutput> = tracker
        .rejected()
        .iter()
        .map(|r| RejectedOutput {
            feature_id: r.candidate.feature_id.clone(),
            matched_feature_id: r.matched_feature_id.clone(),
            similarity: r.similarity.into(),
        })
        .collect();
    let output = json!({ "threshold": Figure::from(threshold), "accepted": accepted, "rejected": rejected });
    io.emit(&output, || {
        let mut lines: Vec<String> = accepted.iter().map(|id| format!("accepted {id}")).collect();
        lines.extend(rejected.iter().map(|r| {
            format!("rejected {} (duplicate of {}, similarity {})", r.feature_id, r.matched_feature_id, r.similarity.exact)
        }));
        lines.push(format!("{} accepted, {} rejected", accepted.len(), rejected.len()));
        lines.join("\n")
    })?;
    Ok(Exit::Success)
}

fn cmd_retry(args: &RetryArgs, io: &mut Io<'_>) -> Outcome_ {
    let handling = match args.environment {
        EnvHandling::Escalate => EnvironmentHandling::Escalate,
        EnvHandling::ConsumeBudget => EnvironmentHandling::ConsumeBudget,
    };
    let mut state = RetryState::new(args.family.clone(), args.retry_budget, args.stagnation_window)
        .map_err(input)?
        .with_environment_handling(handling);
    for (i, outcome) in args.outcomes.iter().enumerate() {
        state
            .record_attempt((*outcome).into())
            .map_err(|e| input(format!("outcome {}: {e}", i + 1)))?;
    }
    let record = (state.status() == RetryStatus::Escalated)
        .then(|| state.escalation_record().expect("escalated state has one record"));
    if let (Some(queue), Some(record)) = (&args.review_queue, &record) {
        append_lines(queue, [serde_json::to_string(record).expect("records serialize")])?;
    }
    let output = json!({
        "family_id": state.family_id(),
        "status": state.status(),
        "attempts": state.attempts(),
        "iterations_to_convergence": state.iterations_to_convergence(),
        "escalation": record,
    });
    io.emit(&output, || {
        let mut line = format!("{} after {} attempt(s)", wire_name(&state.status()), state.attempts());
        if let Some(r) = &record {
            line.push_str(&format!(" ({})", wire_name(&r.trigger)));
        }
        line
    })?;
    Ok(if record.is_some() { Exit::Review } else { Exit::Success })
}

fn load_skip_list(path: &Path) -> Result<SkipList, Failure> {
    let entries: Vec<SkipEntry> = if path.exists() { files::read_json(path)? } else { Vec::new() };
    SkipList::from_entries(entries, NonZeroU32::MIN).map_err(|e| input(format!("`{}`: {e}", path.display())))
}

fn save_skip_list(path: &Path, list: &SkipList) -> Result<(), Failure> {
    write_file(path, &(serde_json::to_string_pretty(list.entries()).expect("entries serialize") + "\n"))
}

fn cmd_skip_list(cmd: &SkipListCommand, io: &mut Io<'_>) -> Outcome_ {
    let entries_text = |list: &SkipList| {
        if list.entries().is_empty() {
            return "(empty)".to_string();
        }
        list.entries()
            .iter()
            .map(|e| format!("{}  hits={}  since={}  {}", e.feature_id, e.hit_count, e.first_seen, e.reason))
            .collect::<Vec<_>>()
            .join("\n")
    };
    match cmd {
        SkipListCommand::Show { file } => {
            let list = load_skip_list(file)?;
            io.emit(&list.entries(), || entries_text(&list))?;
        }
        SkipListCommand::Record { file, feature, timestamp } => {
            let mut list = load_skip_list(file)?;
            let mut text = String::new();
            io.stdin.read_to_string(&mut text).map_err(|e| input(format!("cannot read stdin: {e}")))?;
            let origin = OriginClassifier::default().classify_text(&text);
            let reason = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("").trim();
            let update = list.update(feature, origin, reason, timestamp);
            if update != SkipUpdate::Ignored {
                save_skip_list(file, &list)?;
            }
            let action = match update {
                SkipUpdate::Ignored => "ignored".to_string(),
                SkipUpdate::Pending(n) => format!("pending ({n})"),
                SkipUpdate::Skipped => "skipped".into(),
                SkipUpdate::Hit(n) => format!("hit ({n})"),
            };
            io.emit(&json!({ "feature_id": feature, "origin": origin, "action": action }), || {
                format!("{feature}: {} failure, {action}", origin.as_str())
            })?;
        }
        SkipListCommand::Expire { file, feature } => {
            let mut list = load_skip_list(file)?;
            let removed = list.expire(feature).map_err(input)?;
            save_skip_list(file, &list)?;
            io.emit(&removed, || format!("expired {}", removed.feature_id))?;
        }
    }
    Ok(Exit::Success)
}

/// Help text, for documentation tests.
pub fn help() -> String {
    Cli::command().render_long_help().to_string()
}
