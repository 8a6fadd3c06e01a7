//! `sobolev-lab`: command-line front end for `sobolev-core`.
//!
//! Exit codes: 0 success, 2 usage or inadmissible exponents, 3 solver
//! failure, 4 verification failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod table;

pub use config::{Format, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

/// Environment variable naming the sweep cache directory.
pub const CACHE_ENV: &str = "SOBOLEV_LAB_CACHE";

#[derive(Debug, Parser)]
#[command(name = "sobolev-lab", version, about = "Sobolev extremals, rearrangements and reverse Hölder checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    /// What to print on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,

    /// Solver tolerance (ODE tolerance for `ball`, fixed-point tolerance otherwise).
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    /// Fixed-point iteration cap.
    #[arg(long = "max-iter", global = true)]
    pub max_iter: Option<usize>,

    /// Worker threads for `table`.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,

    /// Allow p > 2, outside the range where the inequality is known to hold.
    #[arg(long = "experimental-supercritical", global = true)]
    pub experimental_supercritical: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extremal of the unit ball: C_p(B), the profile and K̂(n,p,q).
    Ball {
        #[arg(short = 'n', default_value_t = 2)]
        n: usize,
        #[arg(short = 'p')]
        p: f64,
        #[arg(short = 'q')]
        q: Vec<f64>,
    },
    /// Extremal of a planar domain on a grid.
    Domain {
        /// Domain as inline JSON or a path to a JSON file.
        #[arg(long)]
        domain: String,
        #[arg(short = 'p')]
        p: f64,
        #[arg(long = "h", default_value = "1/128", value_parser = config::parse_h)]
        h: f64,
    },
    /// Full reverse Hölder verification on a domain.
    Verify {
        #[arg(long)]
        domain: String,
        #[arg(short = 'p')]
        p: f64,
        #[arg(short = 'q', required = true)]
        q: Vec<f64>,
        #[arg(long = "h", default_value = "1/128", value_parser = config::parse_h)]
        h: f64,
    },
    /// Sweep over domains × p × q, one CSV row each.
    Table {
        #[arg(long, required = true)]
        domain: Vec<String>,
        #[arg(short = 'p', required = true)]
        p: Vec<f64>,
        #[arg(short = 'q', required = true)]
        q: Vec<f64>,
        #[arg(long = "h", default_value = "1/128", value_parser = config::parse_h)]
        h: f64,
        /// Refuse sweeps with more rows than this.
        #[arg(long = "max-rows", default_value_t = 1000)]
        max_rows: usize,
    },
    /// Decreasing rearrangement of a saved field.
    Rearrange {
        #[arg(long)]
        field: PathBuf,
    },
    /// Re-run the command recorded in an output file's header.
    Replay { file: PathBuf },
}

/// Settings that do not affect results and are not recorded in outputs.
#[derive(Debug, Clone)]
pub struct Context {
    pub out: PathBuf,
    pub jobs: usize,
    pub cache: Option<PathBuf>,
}

#[derive(Debug, Default, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Error carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn usage(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: EXIT_USAGE,
            error: error.into(),
        }
    }
}

/// Exit code for a library error outside the verification pipeline.
pub fn classify(e: &sobolev_core::Error) -> i32 {
    use sobolev_core::Error::*;
    match e.root() {
        NoZeroFound { .. } | StepUnderflow { .. } | CgNotConverged { .. } | NotConverged { .. } | TrivialFunction => {
            EXIT_SOLVER
        }
        FaberKrahnViolated { .. }
        | NotDecreasing { .. }
        | Crossing { .. }
        | NormalizationMismatch { .. }
        | HlpPrecondition { .. } => EXIT_VERIFY,
        _ => EXIT_USAGE,
    }
}

// Library errors already print their source chain, so they are flattened
// to one message instead of becoming a nested anyhow chain.
impl From<sobolev_core::Error> for Failure {
    fn from(e: sobolev_core::Error) -> Self {
        Failure {
            code: classify(&e),
            error: anyhow::anyhow!("{e}"),
        }
    }
}

pub type CmdResult = Result<Outcome, Failure>;

/// Parses `args` and runs the command; `cache` overrides the cache
/// environment variable.
pub fn run<I, T>(args: I, cache: Option<PathBuf>) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            let code = e.exit_code();
            return if code == 0 {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code: EXIT_USAGE, stdout: String::new(), stderr: text }
            };
        }
    };
    let ctx = Context {
        out: cli.out.clone(),
        jobs: cli.jobs.max(1),
        cache: cache.or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from)),
    };
    let result = config_from_cli(&cli).and_then(|config| match &cli.command {
        Command::Replay { file } => replay(file, &ctx),
        _ => execute(&config, &ctx),
    });
    match result {
        Ok(outcome) => outcome,
        Err(f) => Outcome {
            code: f.code,
            stdout: String::new(),
            stderr: format!("error: {:#}\n", f.error),
        },
    }
}

fn config_from_cli(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut c = RunConfig::new(match &cli.command {
        Command::Ball { .. } => "ball",
        Command::Domain { .. } => "domain",
        Command::Verify { .. } => "verify",
        Command::Table { .. } => "table",
        Command::Rearrange { .. } => "rearrange",
        Command::Replay { .. } => "replay",
    });
    c.tol = cli.tol;
    c.max_iter = cli.max_iter;
    c.supercritical = cli.experimental_supercritical;
    c.format = cli.format;
    match &cli.command {
        Command::Ball { n, p, q } => {
            c.n = *n;
            c.p = vec![*p];
            c.q = q.clone();
        }
        Command::Domain { domain, p, h } => {
            c.domains = vec![config::load_domain(domain).map_err(Failure::usage)?];
            c.p = vec![*p];
            c.h = Some(*h);
        }
        Command::Verify { domain, p, q, h } => {
            c.domains = vec![config::load_domain(domain).map_err(Failure::usage)?];
            c.p = vec![*p];
            c.q = q.clone();
            c.h = Some(*h);
        }
        Command::Table { domain, p, q, h, max_rows } => {
            c.domains = domain
                .iter()
                .map(|d| config::load_domain(d))
                .collect::<anyhow::Result<_>>()
                .map_err(Failure::usage)?;
            c.p = p.clone();
            c.q = q.clone();
            c.h = Some(*h);
            c.max_rows = Some(*max_rows);
        }
        Command::Rearrange { field } => c.field = Some(field.clone()),
        Command::Replay { .. } => {}
    }
    c.normalized().map_err(Failure::usage)
}

/// Runs a fully specified configuration.
pub fn execute(config: &RunConfig, ctx: &Context) -> CmdResult {
    match config.command.as_str() {
        "ball" => commands::ball(config, ctx),
        "domain" => commands::domain(config, ctx),
        "verify" => commands::verify(config, ctx),
        "table" => table::table(config, ctx),
        "rearrange" => commands::rearrange(config, ctx),
        other => Err(Failure::usage(anyhow::anyhow!("unknown command {other:?}"))),
    }
}

/// Reads the `config` object embedded in an output file. JSON files carry
/// it at the top level; CSV-style files in their first-line header.
pub fn read_embedded_config(path: &Path) -> anyhow::Result<RunConfig> {
    use anyhow::Context as _;
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(_) => serde_json::from_str(text.lines().next().unwrap_or_default())
            .with_context(|| format!("{} has no JSON header", path.display()))?,
    };
    let config = value
        .get("config")
        .cloned()
        .ok_or_else(|| anyhow::anyhow!("{} embeds no run configuration", path.display()))?;
    Ok(serde_json::from_value(config)?)
}

fn replay(file: &Path, ctx: &Context) -> CmdResult {
    let config = read_embedded_config(file).map_err(Failure::usage)?;
    execute(&config, ctx)
}
