//! Single-trajectory driver with periodic and on-abort checkpoints.

use fracns::dynamics::DuhamelValue;
use fracns::{Checkpoint, DynamicsConfig, InitialState, Nonlinearity, SpectralField, Trajectory, WaveGrid};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use crate::config::{LoadedConfig, TimeStep};
use crate::{HarnessError, Observable, RunContext, RunRecord};

/// What a checkpoint needs beyond the state to continue the member.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResumeInfo {
    pub experiment_config: String,
    pub label: String,
    pub dynamics: DynamicsConfig,
    pub final_step: u64,
}

/// `min(0.1 / (2 pi N)^{2 theta}, 0.5 / (|coupling| max|v|))`, with `max|v|`
/// taken from the first member's initial state, or the fixed value.
pub fn resolve_dt(dt: TimeStep, grid: WaveGrid, cfg: &DynamicsConfig, seed: u64) -> Result<f64, HarnessError> {
    match dt {
        TimeStep::Fixed(v) => Ok(v),
        TimeStep::Auto(_) => {
            let base = DynamicsConfig::default_dt(cfg.theta, cfg.cutoff.radius);
            let c = cfg.coupling(grid.dim()).abs();
            if c == 0.0 {
                return Ok(base);
            }
            let probe = Trajectory::new(grid, cfg.clone(), seed, 0, InitialState::WhiteNoise)?;
            let mut nl = Nonlinearity::new(grid, &cfg.cutoff)?;
            nl.apply(probe.state())?;
            Ok(base.min(0.5 / (c * nl.max_speed())))
        }
    }
}

pub fn state_digest(u: &SpectralField) -> String {
    let mut h = Sha256::new();
    for z in u.coeffs() {
        h.update(z.re.to_le_bytes());
        h.update(z.im.to_le_bytes());
    }
    hex::encode(h.finalize())
}

pub fn checkpoint_path(dir: &Path, label: &str, stream: u64) -> PathBuf {
    dir.join(format!("{label}-{stream}.ckpt"))
}

fn save(
    ctx: &RunContext,
    traj: &Trajectory,
    state: &SpectralField,
    step: u64,
    label: &str,
    final_step: u64,
) -> Result<Option<PathBuf>, HarnessError> {
    let Some(dir) = ctx.config().output.checkpoints.as_ref() else { return Ok(None) };
    std::fs::create_dir_all(dir)?;
    let info = ResumeInfo {
        experiment_config: ctx.loaded.text.clone(),
        label: label.into(),
        dynamics: traj.config().clone(),
        final_step,
    };
    let ck = Checkpoint {
        config_hash: hex::decode(&ctx.loaded.hash).expect("hash is hex"),
        config_text: serde_json::to_string(&info).expect("resume info serializes"),
        step,
        seed: traj.seed(),
        stream_id: traj.stream_id(),
        state: state.clone(),
    };
    let path = checkpoint_path(dir, label, traj.stream_id());
    ck.save(&path)?;
    Ok(Some(path))
}

/// Steps `traj` until `final_step`, calling `observe` before every step and
/// once at the end. On a numerical abort the last finite state is saved.
pub fn drive(
    ctx: &RunContext,
    traj: &mut Trajectory,
    final_step: u64,
    label: &str,
    mut observe: impl FnMut(&mut Trajectory),
) -> Result<(), HarnessError> {
    let every = ctx.config().output.checkpoint_every;
    let keep = ctx.config().output.checkpoints.is_some();
    let mut last_good = if keep { Some((traj.step_index(), traj.state().clone())) } else { None };
    while traj.step_index() < final_step {
        observe(traj);
        if let Err(e) = traj.step() {
            let reason = e.to_string();
            let checkpoint = match &last_good {
                Some((step, state)) => save(ctx, traj, state, *step, label, final_step)?,
                None => None,
            };
            return Err(HarnessError::Abort { reason, checkpoint });
        }
        let step = traj.step_index();
        if keep {
            if every > 0 && step % every == 0 {
                save(ctx, traj, traj.state(), step, label, final_step)?;
            }
            if let Some((s, state)) = last_good.as_mut() {
                *s = step;
                state.clone_from(traj.state());
            }
        }
    }
    observe(traj);
    Ok(())
}

/// A fresh member from the invariant measure, run to the configured horizon.
pub fn run_member(
    ctx: &RunContext,
    grid: WaveGrid,
    cfg: &DynamicsConfig,
    stream: u64,
    label: &str,
    observe: impl FnMut(&mut Trajectory),
) -> Result<Trajectory, HarnessError> {
    let steps = cfg.steps();
    let mut traj = Trajectory::new(grid, cfg.clone(), ctx.seed(), stream, InitialState::WhiteNoise)?;
    drive(ctx, &mut traj, steps, label, observe)?;
    Ok(traj)
}

/// Duhamel integrals and diagnostics of one member.
pub struct DuhamelRun {
    pub values: Vec<DuhamelValue>,
    pub cfl_violations: u64,
    pub max_pairing: f64,
}

pub fn run_duhamel_member(
    ctx: &RunContext,
    grid: WaveGrid,
    cfg: &DynamicsConfig,
    tests: &[SpectralField],
    stream: u64,
    label: &str,
) -> Result<DuhamelRun, HarnessError> {
    let mut traj = Trajectory::new(grid, cfg.clone(), ctx.seed(), stream, InitialState::WhiteNoise)?;
    let mut acc = fracns::DuhamelAccumulator::new(tests, traj.coupling(), cfg.dt);
    drive(ctx, &mut traj, cfg.steps(), label, |t| acc.record(t.current_bn()))?;
    let diag = traj.diagnostics();
    Ok(DuhamelRun { values: acc.finish(), cfl_violations: diag.cfl_violations, max_pairing: diag.max_energy_pairing })
}

/// Continues the member stored in a checkpoint to its final step.
pub fn resume(path: &Path, workers: usize) -> Result<RunRecord, HarnessError> {
    let started = std::time::Instant::now();
    let ck = Checkpoint::load(path)?;
    let info: ResumeInfo =
        serde_json::from_str(&ck.config_text).map_err(|e| HarnessError::Config(format!("checkpoint metadata: {e}")))?;
    let loaded = LoadedConfig::from_text(&info.experiment_config)?;
    if hex::encode(&ck.config_hash) != loaded.hash {
        return Err(HarnessError::Config("checkpoint config hash does not match its embedded config".into()));
    }
    let ctx = RunContext::new(loaded, workers);
    let from = ck.step;
    let mut traj = Trajectory::restore(info.dynamics, ck.seed, ck.stream_id, ck.step, ck.state)?;
    drive(&ctx, &mut traj, info.final_step, &info.label, |_| {})?;
    let diag = traj.diagnostics();
    let mut rec = RunRecord::new("resume", &ctx.loaded.hash, ctx.seed())
        .param("label", info.label.as_str())
        .param("stream", traj.stream_id())
        .param("from_step", from)
        .param("to_step", traj.step_index())
        .param("state_sha256", state_digest(traj.state()));
    rec.observables.push(Observable::exact("energy", traj.state().norm_sq()));
    rec.observables.push(Observable::exact("max_energy_pairing", diag.max_energy_pairing));
    rec.observables.push(Observable::exact("cfl_violations", diag.cfl_violations as f64));
    rec.wall_clock_s = started.elapsed().as_secs_f64();
    Ok(rec)
}
