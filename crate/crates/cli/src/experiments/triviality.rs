//! Second moment of the time-integrated nonlinearity against fixed test
//! functions, scanned over the cutoff.

use fracns::stats::{linear_fit, mean};
use fracns::{divfree_basis, Complex64, SpectralField, WaveGrid};
use std::time::Instant;

use super::Outcome;
use crate::config::TrivialityCase;
use crate::member::{resolve_dt, run_duhamel_member};
use crate::{Check, HarnessError, Observable, RunContext, RunRecord};

/// Real and imaginary parts of `e exp(2 pi i k.x)` for every `|k| = shell` in
/// the canonical half box and every divergence-free direction `e`.
pub fn shell_functionals(grid: WaveGrid, shell: f64) -> Vec<SpectralField> {
    let d = grid.dim();
    let mut out = Vec::new();
    for m in grid.half_modes() {
        if (grid.norm2(m).sqrt() - shell).abs() > 1e-9 * shell {
            continue;
        }
        let k = grid.wavevector(m);
        for e in divfree_basis(&k[..d]).expect("nonzero mode") {
            for s in [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)] {
                let mut phi = SpectralField::zeros(grid);
                for (c, &ec) in e.iter().enumerate() {
                    phi.set(c, m, s * ec);
                }
                out.push(phi);
            }
        }
    }
    out
}

struct Point {
    n: f64,
    moment: f64,
    record: RunRecord,
}

fn run_point(ctx: &RunContext, case: &TrivialityCase, n: f64) -> Result<Point, HarnessError> {
    let started = Instant::now();
    let cfg = ctx.config();
    let dy = &cfg.dynamics;
    let shell = cfg.triviality.shell;
    let grid = dy.grid(n)?;
    let mut core = dy.core(n, case.theta);
    core.horizon = case.horizon;
    core.dt = resolve_dt(case.dt, grid, &core, ctx.seed())?;
    core.validate(&grid)?;
    let tests = shell_functionals(grid, shell);
    if tests.is_empty() {
        return Err(HarnessError::Config(format!("no modes with |k| = {shell} below the cutoff {n}")));
    }
    let label = format!("triviality-theta{}-n{}", case.theta, n);
    let runs = ctx.map_members(case.ensemble, |i| run_duhamel_member(ctx, grid, &core, &tests, i as u64, &label))?;
    // per member: mean of X_j^2 over the (equally distributed) functionals
    let per_member: Vec<f64> =
        runs.iter().map(|r| r.values.iter().map(|v| v.value * v.value).sum::<f64>() / r.values.len() as f64).collect();
    // largest quadrature error estimate relative to the rms integral
    let rms = mean(&per_member).sqrt();
    let richardson =
        runs.iter().flat_map(|r| r.values.iter()).map(|v| v.refinement_error.map_or(0.0, f64::abs)).fold(0.0, f64::max)
            / rms;
    let cfl: u64 = runs.iter().map(|r| r.cfl_violations).sum();
    let pairing = runs.iter().map(|r| r.max_pairing).fold(0.0, f64::max);
    let mut rec = ctx
        .record()
        .param("theta", case.theta)
        .param("cutoff", n)
        .param("dt", core.dt)
        .param("steps", core.steps())
        .param("horizon", core.horizon)
        .param("coupling", core.coupling(dy.d))
        .param("functionals", tests.len())
        .param("ensemble", case.ensemble);
    let obs = Observable::sampled("second_moment", &per_member);
    let moment = obs.mean;
    rec.observables.push(obs);
    rec.observables.push(Observable::exact("richardson_rel_error_max", richardson));
    rec.observables.push(Observable::exact("cfl_violations", cfl as f64));
    rec.observables.push(Observable::exact("max_energy_pairing", pairing));
    rec.wall_clock_s = started.elapsed().as_secs_f64();
    Ok(Point { n, moment, record: rec })
}

pub fn run(ctx: &RunContext) -> Result<Outcome, HarnessError> {
    let tr = &ctx.config().triviality;
    let mut records = Vec::new();
    let mut summary = Vec::new();
    for case in &tr.cases {
        let points: Vec<Point> = tr.n_values.iter().map(|&n| run_point(ctx, case, n)).collect::<Result<_, _>>()?;
        let ln_n: Vec<f64> = points.iter().map(|p| p.n.ln()).collect();
        let ln_s: Vec<f64> = points.iter().map(|p| p.moment.ln()).collect();
        let (_, slope, se) = linear_fit(&ln_n, &ln_s);
        let hi = points.iter().map(|p| p.moment).fold(f64::MIN, f64::max);
        let lo = points.iter().map(|p| p.moment).fold(f64::MAX, f64::min);
        let band = hi / lo;
        let expected = 2.0 * (case.theta - 1.0);
        let mut total = ctx.record().param("theta", case.theta).param("expected_slope", expected);
        total.observables.push(Observable {
            name: "slope".into(),
            mean: slope,
            variance: Some(se * se),
            ci_low: Some(slope - 1.96 * se),
            ci_high: Some(slope + 1.96 * se),
            samples: Some(points.len() as u64),
        });
        total.observables.push(Observable::exact("band_ratio", band));
        total.observables.push(Observable::exact("mean_log_moment", mean(&ln_s)));
        let line = if (case.theta - 1.0).abs() < 1e-12 {
            total.checks.push(Check::at_most("band_ratio", band, tr.band));
            format!("theta={}: max/min = {band:.3} (limit {}), slope {slope:.3}", case.theta, tr.band)
        } else {
            total.checks.push(Check::at_most("slope_deviation", (slope - expected).abs(), tr.slope_tolerance));
            format!("theta={}: slope {slope:.3} +- {se:.3} (target {expected} +- {})", case.theta, tr.slope_tolerance)
        };
        summary.push(line);
        total.wall_clock_s = points.iter().map(|p| p.record.wall_clock_s).sum();
        records.extend(points.into_iter().map(|p| p.record));
        records.push(total);
    }
    Ok(Outcome { records, summary: summary.join("; ") })
}
