use std::time::Instant;

use super::{fmt_checks, Outcome};
use crate::checks::{energy_on_random_fields, generator_checks, leray_checks, oracle_gap};
use crate::member::{resolve_dt, run_member, state_digest};
use crate::{Check, HarnessError, Observable, RunContext};

pub fn energy_identity(ctx: &RunContext) -> Result<Outcome, HarnessError> {
    let started = Instant::now();
    let cfg = ctx.config();
    let (dy, en) = (&cfg.dynamics, &cfg.energy);
    let grid = dy.grid(dy.cutoff)?;
    let mut core = dy.core(dy.cutoff, dy.theta);
    core.dt = resolve_dt(dy.dt, grid, &core, ctx.seed())?;
    core.horizon = core.dt * en.steps as f64;
    core.validate(&grid)?;

    let mut rec = ctx.record().param("cutoff", dy.cutoff).param("d", dy.d).param("dt", core.dt);
    rec.checks.extend(leray_checks(ctx.seed(), en.leray_samples));
    let random = energy_on_random_fields(grid, &core.cutoff, en.random_fields, ctx.seed());
    rec.checks.push(Check::at_most("energy_random_fields", random, en.tolerance));
    let gap = oracle_gap(en.oracle_points, en.oracle_cutoff, ctx.seed());
    rec.checks.push(Check::at_most("convolution_oracle", gap, en.tolerance));

    let traj = run_member(ctx, grid, &core, 0, "energy-identity", |_| {})?;
    let diag = traj.diagnostics();
    rec.checks.push(Check::at_most("energy_every_step", diag.max_energy_pairing, en.tolerance));
    rec.observables.push(Observable::exact("final_energy", traj.state().norm_sq()));
    rec.observables.push(Observable::exact("cfl_violations", diag.cfl_violations as f64));
    rec = rec.param("steps", en.steps).param("state_sha256", state_digest(traj.state()));
    rec.wall_clock_s = started.elapsed().as_secs_f64();
    let summary = fmt_checks(&rec);
    Ok(Outcome { records: vec![rec], summary })
}

pub fn operator_checks(ctx: &RunContext) -> Result<Outcome, HarnessError> {
    let op = &ctx.config().operators;
    let mut records = Vec::new();
    let mut summary = Vec::new();
    for d in [3usize, 2] {
        let started = Instant::now();
        // the 2D ball needs a larger radius to contain triads
        let radius = if d == 2 { op.radius.max(2.3) } else { op.radius };
        let mut rec = ctx.record().param("d", d).param("radius", radius).param("side", op.side);
        rec.checks = generator_checks(d, op.side, radius, op.max_level, op.trials, op.tolerance, ctx.seed() ^ d as u64);
        rec.wall_clock_s = started.elapsed().as_secs_f64();
        summary.push(format!("d={d}: {}", fmt_checks(&rec)));
        records.push(rec);
    }
    Ok(Outcome { records, summary: summary.join("; ") })
}
