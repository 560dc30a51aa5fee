//! Stationarity of the white-noise measure under the truncated dynamics.

use fracns::stats::{ks_test, normal_cdf, sem};
use fracns::{leray_multiplier, Complex64};
use std::time::Instant;

use super::Outcome;
use crate::member::{resolve_dt, run_member};
use crate::{Check, HarnessError, Observable, RunContext};

pub fn run(ctx: &RunContext) -> Result<Outcome, HarnessError> {
    let started = Instant::now();
    let cfg = ctx.config();
    let (dy, inv) = (&cfg.dynamics, &cfg.invariance);
    let d = dy.d;
    let grid = dy.grid(dy.cutoff)?;
    let mut core = dy.core(dy.cutoff, dy.theta);
    core.dt = resolve_dt(dy.dt, grid, &core, ctx.seed())?;
    core.validate(&grid)?;

    // (component, mode, exact variance M^d P_cc(k))
    let mut probes = Vec::new();
    for j in &inv.modes {
        let m = grid
            .index_of(&j[..d])
            .ok_or_else(|| HarnessError::Config(format!("probe mode {:?} is outside the mode box", &j[..d])))?;
        let k = grid.wavevector(m);
        let p = leray_multiplier(&k[..d]);
        for (c, row) in p.iter().enumerate() {
            if row[c] > 1e-12 {
                probes.push((c, m, grid.volume() * row[c]));
            }
        }
    }
    if probes.is_empty() {
        return Err(HarnessError::Config("no probes with nonzero variance".into()));
    }

    let members = ctx.map_members(cfg.ensemble, |i| {
        let mut first: Option<Vec<Complex64>> = None;
        let traj = run_member(ctx, grid, &core, i as u64, "invariance", |t| {
            if first.is_none() {
                first = Some(probes.iter().map(|&(c, m, _)| t.state().get(c, m)).collect());
            }
        })?;
        let last: Vec<Complex64> = probes.iter().map(|&(c, m, _)| traj.state().get(c, m)).collect();
        Ok((first.unwrap_or_default(), last, traj.diagnostics()))
    })?;

    let alpha = inv.ks_alpha / probes.len() as f64;
    let mut records = Vec::new();
    let (mut worst_z, mut worst_p) = (0.0f64, 1.0f64);
    for (i, &(c, m, var)) in probes.iter().enumerate() {
        let j = grid.int_index(m);
        let p0: Vec<f64> = members.iter().map(|(a, _, _)| a[i].norm_sqr()).collect();
        let pt: Vec<f64> = members.iter().map(|(_, b, _)| b[i].norm_sqr()).collect();
        let z = (fracns::stats::mean(&pt) - var) / sem(&pt);
        let s = (var / 2.0).sqrt();
        let parts: Vec<f64> = members.iter().flat_map(|(_, b, _)| [b[i].re / s, b[i].im / s]).collect();
        let (ks, pval) = ks_test(&parts, normal_cdf);
        worst_z = worst_z.max(z.abs());
        worst_p = worst_p.min(pval);
        let mut rec = ctx.record().param("mode", j[..d].to_vec()).param("component", c).param("exact_power", var);
        rec.observables.push(Observable::sampled("power_initial", &p0));
        rec.observables.push(Observable::sampled("power_final", &pt));
        rec.observables.push(Observable::exact("ks_statistic", ks));
        rec.observables.push(Observable::exact("ks_pvalue", pval));
        rec.checks.push(Check::at_most("variance_drift_z", z.abs(), inv.z_max));
        rec.checks.push(Check::new("ks_not_rejected", pval >= alpha, Some(pval), Some(alpha)));
        records.push(rec);
    }
    let cfl: u64 = members.iter().map(|(_, _, g)| g.cfl_violations).sum();
    let pairing = members.iter().map(|(_, _, g)| g.max_energy_pairing).fold(0.0, f64::max);
    let mut total = ctx
        .record()
        .param("cutoff", dy.cutoff)
        .param("dt", core.dt)
        .param("horizon", core.horizon)
        .param("ensemble", cfg.ensemble)
        .param("probes", probes.len());
    total.observables.push(Observable::exact("cfl_violations", cfl as f64));
    total.observables.push(Observable::exact("max_energy_pairing", pairing));
    total.checks.push(Check::at_most("max_variance_drift_z", worst_z, inv.z_max));
    total.checks.push(Check::new("min_ks_pvalue", worst_p >= alpha, Some(worst_p), Some(alpha)));
    total.wall_clock_s = started.elapsed().as_secs_f64();
    let summary = format!(
        "{} probes, ensemble {}, T = {}: max |z| = {worst_z:.2} (limit {}), min KS p = {worst_p:.3e} (Bonferroni limit {alpha:.2e})",
        probes.len(),
        cfg.ensemble,
        core.horizon,
        inv.z_max
    );
    records.push(total);
    Ok(Outcome { records, summary })
}
