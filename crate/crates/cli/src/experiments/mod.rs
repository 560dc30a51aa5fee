//! One module per experiment kind. Each returns its records; the last record
//! of an experiment carries the experiment-level checks.

mod diffusivity;
mod identities;
mod invariance;
mod noise;
mod triviality;
mod vartheta;

use crate::config::ExperimentKind;
use crate::{HarnessError, RunContext, RunRecord};

#[derive(Debug, Clone)]
pub struct Outcome {
    pub records: Vec<RunRecord>,
    /// One-line human summary.
    pub summary: String,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        !self.records.is_empty() && self.records.iter().all(RunRecord::passed)
    }

    pub fn failed_checks(&self) -> Vec<String> {
        self.records.iter().flat_map(|r| r.checks.iter().filter(|c| !c.passed).map(|c| c.name.clone())).collect()
    }
}

pub fn run_experiment(ctx: &RunContext) -> Result<Outcome, HarnessError> {
    let started = std::time::Instant::now();
    let mut out = match ctx.config().kind {
        ExperimentKind::EnergyIdentity => identities::energy_identity(ctx)?,
        ExperimentKind::OperatorChecks => identities::operator_checks(ctx)?,
        ExperimentKind::Invariance => invariance::run(ctx)?,
        ExperimentKind::TrivialityScan => triviality::run(ctx)?,
        ExperimentKind::DiffusivityScan => diffusivity::scan(ctx)?,
        ExperimentKind::WeakCoupling2d => diffusivity::weak_coupling(ctx)?,
        ExperimentKind::NoiseEquivalence => noise::run(ctx)?,
        ExperimentKind::VarthetaLimit => vartheta::run(ctx)?,
    };
    for r in &mut out.records {
        r.settle();
    }
    if let Some(last) = out.records.last_mut() {
        if last.wall_clock_s == 0.0 {
            last.wall_clock_s = started.elapsed().as_secs_f64();
        }
    }
    Ok(out)
}

pub(crate) fn fmt_checks(rec: &RunRecord) -> String {
    rec.checks
        .iter()
        .map(|c| match c.value {
            Some(v) => format!("{}={v:.3e}{}", c.name, if c.passed { "" } else { "!" }),
            None => format!("{}={}", c.name, c.passed),
        })
        .collect::<Vec<_>>()
        .join(" ")
}
