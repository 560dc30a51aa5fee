//! Landau-Lifshitz stress divergence versus fractional white noise.

use fracns::forcing::{covariance_of_rows, leray_div_stress, sample_ll_stress};
use fracns::{leray_multiplier, Complex64, NoiseParams, WaveGrid};
use std::f64::consts::PI;
use std::time::Instant;

use super::Outcome;
use crate::{Check, HarnessError, Observable, RunContext};

pub fn run(ctx: &RunContext) -> Result<Outcome, HarnessError> {
    let started = Instant::now();
    let ns = &ctx.config().noise;
    let half = (ns.points - 1) / 2;
    let grid = WaveGrid::new(3, 1.0, 2 * half + 1, ns.points)?;
    let mut params = NoiseParams::new(1.0, ctx.seed(), 0);
    params.nu = ns.nu;
    params.kbt = ns.kbt;
    params.density = ns.density;
    params.validate()?;
    let modes: Vec<usize> = ns
        .modes
        .iter()
        .map(|j| grid.index_of(j).ok_or_else(|| HarnessError::Config(format!("noise mode {j:?} outside the box"))))
        .collect::<Result<_, _>>()?;
    let rows: Vec<Vec<Complex64>> = ctx.map_members(ns.draws as usize, |i| {
        let f = leray_div_stress(&sample_ll_stress(grid, &params, i as u64)?);
        Ok(modes.iter().flat_map(|&m| (0..3).map(move |c| (c, m))).map(|(c, m)| f.get(c, m)).collect())
    })?;
    let est = covariance_of_rows(&rows)?;
    let s = params.stress_strength();
    let mut records = Vec::new();
    let mut worst = 0.0f64;
    for (i, &m) in modes.iter().enumerate() {
        let k = grid.wavevector(m);
        let p = leray_multiplier(&k[..3]);
        // covariance of sqrt(s) (-Delta)^{1/2} P xi at k: s (2 pi |k|)^2 M^d P(k)
        let scale = s * (2.0 * PI).powi(2) * grid.norm2(m) * grid.volume();
        let mut zmax = 0.0f64;
        for a in 0..3 {
            for b in a..3 {
                let (ia, ib) = (3 * i + a, 3 * i + b);
                // entries the projection zeroes exactly have roundoff-sized error bars
                let err = est.err(ia, ib).max(1e-12 * scale);
                let z = (est.at(ia, ib).re - scale * p[a][b]).abs() / err;
                zmax = zmax.max(z);
            }
        }
        worst = worst.max(zmax);
        let j = grid.int_index(m);
        let mut rec = ctx.record().param("mode", j.to_vec()).param("draws", ns.draws);
        let trace: f64 = (0..3).map(|a| est.at(3 * i + a, 3 * i + a).re).sum();
        rec.observables.push(Observable::exact("trace_empirical", trace));
        rec.observables.push(Observable::exact("trace_exact", 2.0 * scale));
        rec.checks.push(Check::at_most("max_entry_z", zmax, ns.z_max));
        records.push(rec);
    }
    let mut total = ctx.record().param("draws", ns.draws).param("modes", modes.len());
    total.checks.push(Check::at_most("max_entry_z", worst, ns.z_max));
    total.wall_clock_s = started.elapsed().as_secs_f64();
    let summary = format!(
        "{} modes x 6 covariance entries, {} draws: max |z| = {worst:.2} (limit {})",
        modes.len(),
        ns.draws,
        ns.z_max
    );
    records.push(total);
    Ok(Outcome { records, summary })
}
