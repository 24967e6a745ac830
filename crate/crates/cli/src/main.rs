//! `histcad <verb> [flags] <inputs...>`: batch processing of modeling sequences.

mod commands;
mod config;
mod inputs;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use histcad::nlt::Task;

use config::{FileConfig, FlagValues, RunConfig};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, missing inputs or configuration; exit code 2.
    Usage(String),
}

#[derive(Parser, Debug)]
#[command(name = "histcad", version, about = "Constraint-aware sketch-and-extrude sequence toolkit")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct GlobalArgs {
    /// Worker threads (request cap for `annotate`).
    #[arg(long, short = 'j', global = true, value_name = "N")]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Reject unknown keys when parsing documents.
    #[arg(long, global = true)]
    strict: bool,
    /// TOML config file; flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct Inputs {
    /// Files, directories or glob patterns.
    #[arg(value_name = "INPUTS")]
    inputs: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check documents against the type invariants.
    Validate {
        #[command(flatten)]
        inputs: Inputs,
        /// Also require every constraint residual to be at most X.
        #[arg(long, value_name = "X")]
        tol: Option<f64>,
    },
    /// Flatten `.hier` models into `.hcad` documents.
    Flatten {
        #[command(flatten)]
        inputs: Inputs,
        /// Round coordinates to this many steps per extent on output.
        #[arg(long, value_name = "STEPS")]
        quantize: Option<u32>,
    },
    /// Dump loops, bounding boxes and part relations as JSON.
    Analyze {
        #[command(flatten)]
        inputs: Inputs,
    },
    /// Execute documents to STL and sampled XYZ files.
    Exec {
        #[command(flatten)]
        inputs: Inputs,
        /// Field resolution per axis.
        #[arg(long, value_name = "N")]
        grid: Option<usize>,
        /// Surface samples written per document.
        #[arg(long, value_name = "N")]
        samples: Option<usize>,
    },
    /// Re-solve constraints with pinned parameters.
    Edit {
        #[command(flatten)]
        inputs: Inputs,
        /// `[PART:]ID.PARAM=VALUE`, part 1-based and defaulting to 1.
        #[arg(long = "pin", value_name = "PIN")]
        pins: Vec<String>,
        /// Residual bound checked after solving.
        #[arg(long, value_name = "X")]
        tol: Option<f64>,
    },
    /// Write natural-language transcriptions, and prompts when a task is given.
    Nlt {
        #[command(flatten)]
        inputs: Inputs,
        /// Also write the prompt for this task: process, structure or function.
        #[arg(long, value_name = "TASK")]
        task: Option<Task>,
    },
    /// Request annotations from a chat endpoint into an append-only log.
    Annotate {
        #[command(flatten)]
        inputs: Inputs,
        /// Annotation task: process, structure or function.
        #[arg(long, value_name = "TASK")]
        task: Option<Task>,
        /// Chat completions URL.
        #[arg(long, value_name = "URL")]
        endpoint: Option<String>,
        /// Model id sent with each request.
        #[arg(long, value_name = "NAME")]
        model: Option<String>,
    },
    /// Invalidity ratio and Chamfer Distance against references.
    Eval {
        #[command(flatten)]
        inputs: Inputs,
        /// Directory of references matched by file stem (`.xyz`, `.hcad` or `.hier`).
        #[arg(long, value_name = "DIR")]
        references: Option<PathBuf>,
        /// Field resolution per axis.
        #[arg(long, value_name = "N")]
        grid: Option<usize>,
    },
}

fn init_logging() {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("HISTCAD_LOG", "warn"))
        .format(|buf, record| writeln!(buf, "level={} target={} msg={:?}", record.level(), record.target(), record.args().to_string()))
        .init();
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let file = FileConfig::discover(cli.global.config.as_deref())?;
    let mut flags = FlagValues {
        jobs: cli.global.jobs,
        out: cli.global.out.clone(),
        strict: cli.global.strict,
        ..FlagValues::default()
    };
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let (inputs, default_jobs) = match &cli.command {
        Command::Validate { inputs, tol } => {
            flags.tol = *tol;
            (inputs, threads)
        }
        Command::Edit { inputs, tol, .. } => {
            flags.tol = *tol;
            (inputs, threads)
        }
        Command::Exec { inputs, grid, samples } => {
            flags.grid = *grid;
            flags.samples = *samples;
            (inputs, threads)
        }
        Command::Eval { inputs, grid, .. } => {
            flags.grid = *grid;
            (inputs, threads)
        }
        Command::Nlt { inputs, task } => {
            flags.task = *task;
            (inputs, threads)
        }
        Command::Annotate { inputs, task, endpoint, model } => {
            flags.task = *task;
            flags.endpoint = endpoint.clone();
            flags.model = model.clone();
            (inputs, histcad::nlt::DEFAULT_PARALLEL)
        }
        Command::Flatten { inputs, .. } | Command::Analyze { inputs } => (inputs, threads),
    };
    let cfg = RunConfig::merge(flags, file, default_jobs)?;
    let extensions: &[&str] = match cli.command {
        Command::Flatten { .. } => &["hier"],
        _ => &inputs::DOCUMENT_EXTENSIONS,
    };
    let files = inputs::resolve_inputs(&inputs.inputs, extensions);
    if files.is_empty() {
        return Err(CliError::Usage("NO_INPUTS: no input files matched".into()));
    }
    log::info!("{} input files, {} jobs", files.len(), cfg.jobs);
    match &cli.command {
        Command::Validate { .. } => commands::validate(&cfg, &files),
        Command::Flatten { quantize, .. } => commands::flatten(&cfg, &files, *quantize),
        Command::Analyze { .. } => commands::analyze(&cfg, &files),
        Command::Exec { .. } => commands::exec(&cfg, &files),
        Command::Edit { pins, .. } => commands::edit(&cfg, &files, pins),
        Command::Nlt { .. } => commands::nlt(&cfg, &files),
        Command::Annotate { .. } => commands::annotate(&cfg, &files),
        Command::Eval { references, .. } => commands::eval(&cfg, &files, references.as_deref()),
    }
}

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
