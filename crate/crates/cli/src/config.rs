//! Run configuration: optional TOML file, overridden by flags.

use std::path::{Path, PathBuf};

use histcad::geomexec::{DEFAULT_RESOLUTION, DEFAULT_SAMPLES};
use histcad::nlt::Task;
use serde::Deserialize;

use crate::CliError;

pub const DEFAULT_OUT: &str = "histcad-out";
pub const DEFAULT_MODEL: &str = "Qwen3-32B";
pub const CONFIG_ENV: &str = "HISTCAD_CONFIG";

/// Keys accepted in the config file. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub strict: Option<bool>,
    pub tol: Option<f64>,
    pub grid: Option<usize>,
    pub samples: Option<usize>,
    pub task: Option<String>,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub retry_delay_ms: Option<u64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    /// The file named by `--config`, else by `HISTCAD_CONFIG`, else nothing.
    pub fn discover(explicit: Option<&Path>) -> Result<FileConfig, CliError> {
        match explicit.map(Path::to_path_buf).or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from)) {
            Some(p) => FileConfig::load(&p),
            None => Ok(FileConfig::default()),
        }
    }
}

/// Settings after merging flags over the config file over defaults.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub out: PathBuf,
    pub jobs: usize,
    pub strict: bool,
    pub tol: Option<f64>,
    pub grid: usize,
    pub samples: usize,
    pub task: Option<Task>,
    pub endpoint: Option<String>,
    pub model: String,
    pub retry_delay_ms: u64,
}

/// Values given on the command line.
#[derive(Debug, Clone, Default)]
pub struct FlagValues {
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub strict: bool,
    pub tol: Option<f64>,
    pub grid: Option<usize>,
    pub samples: Option<usize>,
    pub task: Option<Task>,
    pub endpoint: Option<String>,
    pub model: Option<String>,
}

impl RunConfig {
    /// `default_jobs` applies when neither flag nor file sets parallelism.
    pub fn merge(flags: FlagValues, file: FileConfig, default_jobs: usize) -> Result<RunConfig, CliError> {
        let task = match (flags.task, file.task) {
            (Some(t), _) => Some(t),
            (None, Some(s)) => Some(s.parse::<Task>().map_err(|e| CliError::Usage(e.to_string()))?),
            (None, None) => None,
        };
        let jobs = flags.jobs.or(file.jobs).unwrap_or(default_jobs);
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        let grid = flags.grid.or(file.grid).unwrap_or(DEFAULT_RESOLUTION);
        if grid < 2 {
            return Err(CliError::Usage("--grid must be at least 2".into()));
        }
        let tol = flags.tol.or(file.tol);
        if tol.is_some_and(|t| !(t.is_finite() && t >= 0.0)) {
            return Err(CliError::Usage("--tol must be a finite non-negative number".into()));
        }
        Ok(RunConfig {
            out: flags.out.or(file.out).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
            jobs,
            strict: flags.strict || file.strict.unwrap_or(false),
            tol,
            grid,
            samples: flags.samples.or(file.samples).unwrap_or(DEFAULT_SAMPLES),
            task,
            endpoint: flags.endpoint.or(file.endpoint),
            model: flags.model.or(file.model).unwrap_or_else(|| DEFAULT_MODEL.to_string()),
            retry_delay_ms: file.retry_delay_ms.unwrap_or(500),
        })
    }

    /// Creates the output directory on first use.
    pub fn out_dir(&self) -> Result<&Path, CliError> {
        std::fs::create_dir_all(&self.out)
            .map_err(|e| CliError::Usage(format!("cannot create output directory {}: {e}", self.out.display())))?;
        Ok(&self.out)
    }
}
