//! NDJSON run records.
//!
//! Field order is the struct order, parameter maps are sorted, and absent
//! optional values are written as `null`.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    /// Ran to completion and every check passed.
    Ok,
    /// Ran to completion, at least one check failed.
    CheckFailed,
    /// Not run, e.g. over the wall-clock budget.
    Skipped,
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    pub name: String,
    pub mean: f64,
    pub variance: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub samples: Option<u64>,
}

impl Observable {
    /// An exactly computed value.
    pub fn exact(name: &str, value: f64) -> Self {
        Self { name: name.into(), mean: value, variance: None, ci_low: None, ci_high: None, samples: None }
    }

    /// Sample mean with variance of the samples and a normal 95% interval.
    pub fn sampled(name: &str, xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = fracns::stats::mean(xs);
        if n < 2 {
            return Self {
                name: name.into(),
                mean,
                variance: None,
                ci_low: None,
                ci_high: None,
                samples: Some(n as u64),
            };
        }
        let var = fracns::stats::variance(xs);
        let half = 1.96 * (var / n as f64).sqrt();
        Self {
            name: name.into(),
            mean,
            variance: Some(var),
            ci_low: Some(mean - half),
            ci_high: Some(mean + half),
            samples: Some(n as u64),
        }
    }

    pub fn with_interval(name: &str, value: f64, lo: f64, hi: f64, samples: u64) -> Self {
        Self {
            name: name.into(),
            mean: value,
            variance: None,
            ci_low: Some(lo),
            ci_high: Some(hi),
            samples: Some(samples),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: Option<f64>,
    pub threshold: Option<f64>,
    pub detail: Option<String>,
}

impl Check {
    pub fn new(name: &str, passed: bool, value: Option<f64>, threshold: Option<f64>) -> Self {
        Self { name: name.into(), passed, value, threshold, detail: None }
    }

    /// Passes when `value <= threshold` (NaN fails).
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self::new(name, value <= threshold, Some(value), Some(threshold))
    }

    pub fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub experiment: String,
    pub config_hash: String,
    pub build: String,
    pub master_seed: u64,
    /// Parameter point, e.g. cutoff and coupling.
    pub point: BTreeMap<String, Value>,
    pub observables: Vec<Observable>,
    pub checks: Vec<Check>,
    pub status: Status,
    pub message: Option<String>,
    pub wall_clock_s: f64,
}

pub fn build_id() -> String {
    let rev = option_env!("FRACNS_GIT_REV").unwrap_or("unknown");
    format!("{}-{} ({rev})", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))
}

impl RunRecord {
    pub fn new(experiment: &str, config_hash: &str, seed: u64) -> Self {
        Self {
            experiment: experiment.into(),
            config_hash: config_hash.into(),
            build: build_id(),
            master_seed: seed,
            point: BTreeMap::new(),
            observables: Vec::new(),
            checks: Vec::new(),
            status: Status::Ok,
            message: None,
            wall_clock_s: 0.0,
        }
    }

    pub fn param(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.point.insert(key.into(), v.into());
        self
    }

    pub fn observable(&self, name: &str) -> Option<&Observable> {
        self.observables.iter().find(|o| o.name == name)
    }

    /// Sets the status from the checks unless already skipped or aborted.
    pub fn settle(&mut self) {
        if self.status == Status::Ok && self.checks.iter().any(|c| !c.passed) {
            self.status = Status::CheckFailed;
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Ok && self.checks.iter().all(|c| c.passed)
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("records serialize")
    }
}

/// Appends records to an NDJSON file, or prints them when `path` is `None`.
pub fn write_records(path: Option<&Path>, records: &[RunRecord]) -> Result<(), HarnessError> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            let mut f = std::fs::OpenOptions::new().create(true).append(true).open(p)?;
            for r in records {
                writeln!(f, "{}", r.to_line())?;
            }
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            for r in records {
                writeln!(lock, "{}", r.to_line())?;
            }
        }
    }
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<RunRecord>, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| HarnessError::Config(format!("{} line {}: {e}", path.display(), i + 1)))
        })
        .collect()
}
