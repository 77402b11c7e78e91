//! Command-line front end for the `secknow` analyses.
//!
//! [`run_command`] parses the arguments, runs one analysis and renders its
//! [`Report`] as text or JSON. The binary is a thin wrapper around it.

mod commands;
mod report;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use report::{ClaimResult, Report, Status, SCHEMA};

#[derive(Parser, Debug)]
#[command(name = "secknow", version, about = "Symbolic security protocol, knowledge and information-flow checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Include wall-clock time in the report.
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the secrecy and agreement claims of a protocol.
    Analyze(AnalyzeArgs),
    /// Check an epistemic formula over a built-in scenario or protocol runs.
    Epistemic(EpistemicArgs),
    /// Derive a BAN goal from assumptions and idealized steps.
    Ban(BanArgs),
    /// Decide noninterference of a program by enumeration.
    Ni(NiArgs),
    /// Check trace-closure policies of an event system.
    Events(EventsArgs),
}

#[derive(Args, Debug, Clone)]
struct ExploreArgs {
    /// Attacker class: none, eavesdrop, active or insider.
    #[arg(long, default_value = "active")]
    attacker: String,
    /// Number of protocol sessions.
    #[arg(long, default_value_t = secknow::protocol::DEFAULT_SESSIONS)]
    sessions: usize,
    /// Nesting bound for messages the attacker builds.
    #[arg(long, default_value_t = secknow::protocol::DEFAULT_DEPTH)]
    depth: usize,
    /// Run an earlier session to completion and leak its keys first.
    #[arg(long)]
    compromise: bool,
    /// Cap on explored states.
    #[arg(long, default_value_t = secknow::protocol::DEFAULT_MAX_STATES)]
    max_states: usize,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// Protocol file (`.prot`).
    file: PathBuf,
    #[command(flatten)]
    explore: ExploreArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Raw,
    Pattern,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum AtArg {
    Initial,
    All,
    Final,
}

#[derive(Args, Debug)]
struct EpistemicArgs {
    /// `russian-cards`, `dining-crypto`, `protocol:<file.prot>` or
    /// `traces:<log>[,<log>...]` (the latter needs `--protocol`).
    model: String,
    /// Formula text, or `@path` to read it from a file.
    #[arg(long)]
    formula: String,
    /// Which points the formula must hold at.
    #[arg(long, value_enum, default_value_t = AtArg::Initial)]
    at: AtArg,
    /// What an agent observes in protocol-derived models.
    #[arg(long, value_enum, default_value_t = Mode::Pattern)]
    mode: Mode,
    /// Protocol giving the context for `traces:` models.
    #[arg(long)]
    protocol: Option<PathBuf>,
    /// Cap on maximal runs taken from an exploration.
    #[arg(long, default_value_t = 10_000)]
    max_traces: usize,
    #[command(flatten)]
    explore: ExploreArgs,
}

#[derive(Args, Debug)]
struct BanArgs {
    /// BAN file with `assume`, `step` and `goal` lines.
    file: PathBuf,
    /// Maximum nesting of beliefs.
    #[arg(long, default_value_t = secknow::ban::DEFAULT_DEPTH)]
    depth: usize,
}

#[derive(Args, Debug)]
struct NiArgs {
    /// Program file (`.imp`).
    file: PathBuf,
    /// Values range over 0..modulus.
    #[arg(long, default_value_t = 16)]
    modulus: u64,
    /// Refuse to enumerate more input pairs than this.
    #[arg(long, default_value_t = secknow::infoflow::DEFAULT_PAIR_CAP)]
    max_pairs: u128,
}

#[derive(Args, Debug)]
struct EventsArgs {
    /// Event system file (`.es`).
    file: PathBuf,
    /// A single policy to check; all of them by default.
    #[arg(long)]
    policy: Option<String>,
}

/// Result of one invocation: the exit code and what goes to stdout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Invocation {
    pub code: i32,
    pub output: String,
    /// Absent when argument parsing failed or help was requested.
    pub report: Option<Report>,
}

/// Runs the tool on `args`, which exclude the program name.
pub fn run_command<I, S>(args: I) -> Invocation
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(std::iter::once("secknow".to_string()).chain(args.iter().cloned())) {
        Ok(cli) => cli,
        Err(e) => return Invocation { code: e.exit_code(), output: e.render().to_string(), report: None },
    };
    let start = Instant::now();
    let mut report = Report::new(args);
    let outcome = match &cli.command {
        Command::Analyze(a) => commands::analyze(a, &mut report),
        Command::Epistemic(a) => commands::epistemic(a, &mut report),
        Command::Ban(a) => commands::ban(a, &mut report),
        Command::Ni(a) => commands::ni(a, &mut report),
        Command::Events(a) => commands::events(a, &mut report),
    };
    if let Err(e) = outcome {
        report.error = Some(e);
    }
    if cli.timing {
        report.timing_ms = Some(start.elapsed().as_millis());
    }
    let output = match cli.format {
        Format::Text => report.to_text(),
        Format::Json => report.to_json(),
    };
    Invocation { code: report.exit_code(), output, report: Some(report) }
}
