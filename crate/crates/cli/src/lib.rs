//! Operator entry points for Snake Story.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 corrupt or
//! diverging log.

pub mod config;
pub mod policy;
pub mod simulate;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use snake_story_core::analytics::{render_report, Format, Report};
use snake_story_core::llm::{ProviderConfig, ProviderKind};
use snake_story_core::session::{log_file_name, replay, SessionLog};
use snake_story_core::story::TITLE;

use config::FileConfig;
use policy::{BotSettings, PolicyKind};
use simulate::{simulate, SimulationPlan};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CORRUPT: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Corrupt(String),
    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Corrupt(_) => EXIT_CORRUPT,
            Self::Other(_) => EXIT_FAILURE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProviderArg {
    Stub,
    Http,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Text,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Text => Format::Text,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "snake-story",
    version,
    about = "Snake Story: serve, simulate, replay, analyze, export-story"
)]
pub struct Cli {
    /// Base seed. Simulations derive one seed per session from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON config: GameConfig fields plus optional "story" and "provider" objects.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Text provider. `http` reads SNAKE_STORY_API_URL and the key variable.
    #[arg(long, global = true, value_enum)]
    pub provider: Option<ProviderArg>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP and WebSocket session service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Directory for session logs.
        #[arg(long)]
        log_dir: Option<PathBuf>,
    },
    /// Play bot sessions on a simulated clock and write their logs.
    Simulate {
        #[arg(long, default_value_t = 10)]
        sessions: usize,
        /// survival-greedy, text-greedy, mixed:<p> or random.
        #[arg(long, default_value = "survival-greedy")]
        policy: PolicyKind,
        #[arg(long, default_value = "sim-logs")]
        out: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        max_rounds: u32,
        /// Probability per decision that a bot steers randomly.
        #[arg(long, default_value_t = 0.02)]
        slip_rate: f64,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
    },
    /// Re-execute a log and check it reproduces the recorded final state.
    Replay { log: PathBuf },
    /// Selection rates and cohort summary over logs matching the patterns.
    Analyze {
        #[arg(required = true)]
        patterns: Vec<String>,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
    },
    /// Print the story of an ended session, its word count and the candies eaten.
    ExportStory { log: PathBuf },
}

/// Parses `args` and runs the command, writing results to `out` and
/// diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn std::io::Write, err: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
                return EXIT_USAGE;
            }
            let _ = write!(out, "{text}");
            return EXIT_OK;
        }
    };
    match execute(cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = match &e {
                CliError::Other(inner) => writeln!(err, "error: {inner:#}"),
                CliError::Corrupt(msg) => writeln!(err, "error: {msg}"),
            };
            e.exit_code()
        }
    }
}

fn execute(cli: Cli, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    let mut config = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    match cli.provider {
        Some(ProviderArg::Stub) => config.provider.kind = ProviderKind::DeterministicStub,
        Some(ProviderArg::Http) => {
            if config.provider.endpoint.is_none() {
                config.provider.endpoint = ProviderConfig::http_from_env().endpoint;
            }
            config.provider.kind = ProviderKind::HttpCompletion;
        }
        None => {}
    }
    config.provider.validate().map_err(anyhow::Error::from)?;

    match cli.command {
        Command::Serve { addr, log_dir } => serve(addr, log_dir, config, cli.seed),
        Command::Simulate {
            sessions,
            policy,
            out: dir,
            max_rounds,
            slip_rate,
            format,
        } => {
            if sessions == 0 {
                return Err(anyhow!("--sessions must be at least 1").into());
            }
            if !(0.0..=1.0).contains(&slip_rate) {
                return Err(anyhow!("--slip-rate must be in [0, 1]").into());
            }
            let plan = SimulationPlan {
                game: config.game,
                story: config.story,
                provider: config.provider,
                policy,
                bot: BotSettings {
                    slip_rate,
                    ..BotSettings::default()
                },
                sessions,
                seed: cli.seed.unwrap_or(1),
                max_rounds,
            };
            run_simulation(&plan, &dir, format.into(), out)
        }
        Command::Replay { log } => replay_command(&log, out),
        Command::Analyze { patterns, format } => analyze(&patterns, format.into(), out),
        Command::ExportStory { log } => export_story(&log, out),
    }
}

fn serve(addr: SocketAddr, log_dir: Option<PathBuf>, config: FileConfig, seed: Option<u64>) -> Result<(), CliError> {
    let server_config = snake_story_server::ServerConfig {
        game: config.game,
        story: config.story,
        provider: config.provider,
        log_dir,
        default_seed: seed,
    };
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .context("starting the runtime")?;
    runtime
        .block_on(snake_story_server::serve(addr, server_config))
        .with_context(|| format!("serving on {addr}"))?;
    Ok(())
}

fn run_simulation(
    plan: &SimulationPlan,
    dir: &Path,
    format: Format,
    out: &mut dyn std::io::Write,
) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let sessions = simulate(plan)?;
    for s in &sessions {
        let path = dir.join(log_file_name(&s.id));
        std::fs::write(&path, &s.jsonl).with_context(|| format!("writing {}", path.display()))?;
    }
    let logs: Vec<SessionLog> = sessions.into_iter().map(|s| s.log).collect();
    let report = Report::from_logs(&logs).map_err(anyhow::Error::from)?;
    write_out(out, &render_report(&report, format))?;
    Ok(())
}

fn read_log(path: &Path) -> Result<SessionLog, CliError> {
    SessionLog::read(path)
        .with_context(|| format!("reading {}", path.display()))?
        .map_err(|e| CliError::Corrupt(format!("{}: {e}", path.display())))
}

fn replay_command(path: &Path, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    let log = read_log(path)?;
    let replayed = replay(&log).map_err(|e| CliError::Corrupt(format!("{}: {e}", path.display())))?;
    write_out(out, &format!("{}\nREPLAY OK\n", replayed.final_state))?;
    Ok(())
}

fn analyze(patterns: &[String], format: Format, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    let mut paths = Vec::new();
    for pattern in patterns {
        let matches = glob::glob(pattern).with_context(|| format!("bad pattern {pattern:?}"))?;
        for entry in matches {
            paths.push(entry.context("listing log files")?);
        }
    }
    paths.sort();
    paths.dedup();
    if paths.is_empty() {
        return Err(anyhow!("no log files match {}", patterns.join(" ")).into());
    }
    let logs = paths.iter().map(|p| read_log(p)).collect::<Result<Vec<_>, _>>()?;
    let report = Report::from_logs(&logs).map_err(anyhow::Error::from)?;
    write_out(out, &render_report(&report, format))?;
    Ok(())
}

fn export_story(path: &Path, out: &mut dyn std::io::Write) -> Result<(), CliError> {
    let log = read_log(path)?;
    let end = log
        .ended()
        .ok_or_else(|| anyhow!("{}: session has not ended", path.display()))?;
    let mut text = format!(
        "{TITLE}\n\n{}\n\nwords: {}\ncandies eaten: {}\n",
        log.story_text(),
        end.word_count,
        end.candies_eaten.len()
    );
    for c in &end.candies_eaten {
        let _ = writeln!(text, "  round {}: {} {}", c.round, c.color.name(), c.number.value());
    }
    write_out(out, &text)?;
    Ok(())
}

fn write_out(out: &mut dyn std::io::Write, text: &str) -> anyhow::Result<()> {
    out.write_all(text.as_bytes()).context("writing output")
}
