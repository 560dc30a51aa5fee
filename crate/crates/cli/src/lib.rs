//! Experiment harness: configuration, ensemble orchestration, checkpoints,
//! NDJSON records and CSV summaries. The `fracns` binary is a thin shell
//! over this library.

pub mod checks;
pub mod config;
pub mod experiments;
pub mod member;
pub mod record;
pub mod summary;

use rayon::prelude::*;
use std::path::PathBuf;

pub use config::{ExperimentConfig, ExperimentKind, LoadedConfig};
pub use experiments::{run_experiment, Outcome};
pub use record::{Check, Observable, RunRecord, Status};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "FRACNS_WORKERS";

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical abort: {reason}")]
    Abort { reason: String, checkpoint: Option<PathBuf> },
    #[error(transparent)]
    Core(fracns::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<fracns::Error> for HarnessError {
    fn from(e: fracns::Error) -> Self {
        use fracns::Error as E;
        match e {
            E::InvalidParameter(_) | E::AliasingRule { .. } | E::ShapeMismatch(_) => Self::Config(e.to_string()),
            E::NumericalAbort { .. } => Self::Abort { reason: e.to_string(), checkpoint: None },
            other => Self::Core(other),
        }
    }
}

impl HarnessError {
    /// 2 for configuration errors, 3 for numerical aborts, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Abort { .. } => 3,
            _ => 1,
        }
    }
}

/// Worker count from the environment, else the available parallelism.
pub fn workers_from_env() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Everything an experiment needs besides its own section.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub loaded: LoadedConfig,
    pub workers: usize,
}

impl RunContext {
    pub fn new(loaded: LoadedConfig, workers: usize) -> Self {
        Self { loaded, workers: workers.max(1) }
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.loaded.config
    }

    pub fn seed(&self) -> u64 {
        self.loaded.config.seed
    }

    pub fn record(&self) -> RunRecord {
        RunRecord::new(self.config().kind.name(), &self.loaded.hash, self.seed())
    }

    /// Maps `f` over `0..n` on the worker pool. Results come back in index
    /// order, so any reduction over them is independent of the worker count.
    pub fn map_members<T, F>(&self, n: usize, f: F) -> Result<Vec<T>, HarnessError>
    where
        T: Send,
        F: Fn(usize) -> Result<T, HarnessError> + Sync + Send,
    {
        let results: Vec<Result<T, HarnessError>> = if self.workers == 1 {
            (0..n).map(&f).collect()
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(self.workers)
                .build()
                .map_err(|e| HarnessError::Config(format!("worker pool: {e}")))?;
            pool.install(|| (0..n).into_par_iter().map(&f).collect())
        };
        results.into_iter().collect()
    }
}
