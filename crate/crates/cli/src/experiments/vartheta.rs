//! The lattice sum `vartheta^N(k)`, its integral bounds and its limit.

use fracns::fock::{theta_integral, vartheta_n};
use fracns::{omega_d, CutoffProfile};
use std::time::Instant;

use super::Outcome;
use crate::{Check, HarnessError, Observable, RunContext, RunRecord};

fn row(ctx: &RunContext, n: f64, k: [f64; 3], lambda: f64) -> (RunRecord, bool, f64) {
    let v = vartheta_n(&k, lambda, &CutoffProfile::sharp(n), 1.0);
    let kn: Vec<f64> = k.iter().map(|x| x / n).collect();
    let eps = lambda / (n * n);
    let lo = theta_integral(&kn, 1.0, eps);
    let hi = theta_integral(&kn, 1.0 + 1.0 / n, eps);
    let limit = omega_d(3) / 2.0;
    let ok = lo <= v && v <= hi;
    let mut rec = ctx.record().param("cutoff", n).param("k", k.to_vec()).param("lambda", lambda);
    rec.observables.push(Observable::exact("vartheta", v));
    rec.observables.push(Observable::exact("theta_1", lo));
    rec.observables.push(Observable::exact("theta_1_plus_1_over_n", hi));
    rec.observables.push(Observable::exact("limit", limit));
    (rec, ok, v)
}

pub fn run(ctx: &RunContext) -> Result<Outcome, HarnessError> {
    let started = Instant::now();
    let vt = &ctx.config().vartheta;
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for &n in &vt.n_values {
        for &k in &vt.ks {
            let (mut rec, ok, _) = row(ctx, n, k, vt.lambda);
            let lo = rec.observable("theta_1").map_or(f64::NAN, |o| o.mean);
            let v = rec.observable("vartheta").map_or(f64::NAN, |o| o.mean);
            rec.checks.push(Check::new("sandwich", ok, Some(v), Some(lo)));
            if !ok {
                failures.push(format!("N={n} k={k:?}: Theta_1 {lo:.4} vs vartheta {v:.4}"));
            }
            records.push(rec);
        }
    }
    let (mut lim, _, v) = row(ctx, vt.limit_n, vt.limit_k, vt.limit_lambda);
    let limit = omega_d(3) / 2.0;
    let rel = (v - limit).abs() / limit;
    lim.checks.push(Check::at_most("limit_relative_error", rel, vt.limit_tolerance));
    records.push(lim);
    let mut total = ctx.record().param("rows", records.len());
    total.checks.push(
        Check::new("sandwich_all", failures.is_empty(), Some(failures.len() as f64), Some(0.0))
            .detail(failures.join("; ")),
    );
    total.checks.push(Check::at_most("limit_relative_error", rel, vt.limit_tolerance));
    total.wall_clock_s = started.elapsed().as_secs_f64();
    let summary = format!(
        "sandwich holds for {}/{} (k, N); vartheta^{}({:?}) = {v:.4} vs 2 pi = {limit:.4} ({:.2}% off, limit {}%)",
        vt.n_values.len() * vt.ks.len() - failures.len(),
        vt.n_values.len() * vt.ks.len(),
        vt.limit_n,
        vt.limit_k,
        rel * 100.0,
        vt.limit_tolerance * 100.0
    );
    records.push(total);
    Ok(Outcome { records, summary })
}
