//! Effective-viscosity formulas and the autocorrelation estimator.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::rng::{counter_rng, Purpose};
use crate::stats::{fit_through_origin, mean, quantile, sem};

/// `omega_d = d pi^{d/2} / Gamma(1 + d/2)`, the area of the unit sphere in `R^d`.
pub fn omega_d(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    d as f64 * PI.powf(h) / gamma(1.0 + h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormulaStatus {
    Theorem,
    Conjecture,
}

/// Proven in two dimensions, conjectured for `d >= 3`.
pub fn nu_eff_status(d: usize) -> FormulaStatus {
    if d == 2 {
        FormulaStatus::Theorem
    } else {
        FormulaStatus::Conjecture
    }
}

/// `sqrt(1 + lambda_hat^2 / (2 pi))` for `d = 2`,
/// `sqrt(1 + lambda_hat^2 omega_d / (4 pi^2 (d - 2)))` for `d >= 3`.
pub fn nu_eff(d: usize, lambda_hat: f64) -> f64 {
    let l2 = lambda_hat * lambda_hat;
    if d == 2 {
        (1.0 + l2 / (2.0 * PI)).sqrt()
    } else {
        (1.0 + l2 * omega_d(d) / (4.0 * PI * PI * (d as f64 - 2.0))).sqrt()
    }
}

/// `G(lambda_hat) = sqrt(1 + lambda_hat^2 k_B T omega_d / (4 nu^2 rho pi^2 (d - 2)))`.
pub fn g_hat(lambda_hat: f64, nu: f64, kbt: f64, rho: f64, d: usize) -> Result<f64> {
    check_physical(nu, kbt, rho)?;
    if d < 3 {
        return Err(Error::InvalidParameter(format!("G is defined for d >= 3, got {d}")));
    }
    let num = lambda_hat * lambda_hat * kbt * omega_d(d);
    let den = 4.0 * nu * nu * rho * PI * PI * (d as f64 - 2.0);
    Ok((1.0 + num / den).sqrt())
}

/// `(A, r) = (sqrt(rho / k_B T), 1 / nu)`.
pub fn ll_normalization(nu: f64, kbt: f64, rho: f64) -> Result<(f64, f64)> {
    check_physical(nu, kbt, rho)?;
    Ok(((rho / kbt).sqrt(), 1.0 / nu))
}

/// Coupling that makes `nu_eff` reproduce `G`: `lambda_hat sqrt(k_B T / (rho nu^2))`.
pub fn ll_effective_coupling(lambda_hat: f64, nu: f64, kbt: f64, rho: f64) -> f64 {
    lambda_hat * (kbt / (rho * nu * nu)).sqrt()
}

fn check_physical(nu: f64, kbt: f64, rho: f64) -> Result<()> {
    for (name, v) in [("nu", nu), ("kbt", kbt), ("rho", rho)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(())
}

/// One recorded Fourier coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeProbe {
    pub component: usize,
    pub mode: usize,
    pub knorm: f64,
}

/// Time series of probed coefficients: `series[member][sample][probe]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryArchive {
    pub sample_dt: f64,
    pub probes: Vec<ModeProbe>,
    pub series: Vec<Vec<Vec<Complex64>>>,
}

impl TrajectoryArchive {
    pub fn members(&self) -> usize {
        self.series.len()
    }

    pub fn samples(&self) -> usize {
        self.series.first().map_or(0, |s| s.len())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorOptions {
    /// Probes with `|k|` above this are ignored.
    pub k_max: f64,
    /// Lags (in samples) used in the fit.
    pub lags: Vec<usize>,
    /// Points with `C(t)/C(0)` below this are dropped.
    pub min_ratio: f64,
    pub bootstrap: usize,
    pub seed: u64,
    pub check_stationarity: bool,
}

impl EstimatorOptions {
    pub fn new(k_max: f64, lags: Vec<usize>) -> Self {
        Self { k_max, lags, min_ratio: 0.05, bootstrap: 400, seed: 0, check_stationarity: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusivityEstimate {
    pub nu_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Distinct `|k|` shells that entered the fit.
    pub modes_used: Vec<f64>,
    pub fit_window: (f64, f64),
    /// Weighted residual sum of squares per fitted point.
    pub residual: f64,
    pub points: usize,
}

/// Per-member averages of `Re u(t + lag) conj u(t)` over time origins, per
/// probe group (same `|k|`) and lag, lag 0 first.
fn member_correlations(archive: &TrajectoryArchive, groups: &[Vec<usize>], lags: &[usize]) -> Vec<Vec<Vec<f64>>> {
    let t = archive.samples();
    archive
        .series
        .iter()
        .map(|member| {
            groups
                .iter()
                .map(|probes| {
                    std::iter::once(0)
                        .chain(lags.iter().copied())
                        .map(|lag| {
                            let mut s = 0.0;
                            let mut c = 0usize;
                            for t0 in 0..t - lag {
                                for &p in probes {
                                    s += (member[t0 + lag][p] * member[t0][p].conj()).re;
                                    c += 1;
                                }
                            }
                            s / c as f64
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// Compares the mean equal-time power of the first and last thirds of the record.
fn stationarity_z(archive: &TrajectoryArchive, probes: &[usize]) -> f64 {
    let t = archive.samples();
    let third = (t / 3).max(1);
    let power = |member: &Vec<Vec<Complex64>>, range: std::ops::Range<usize>| -> Vec<f64> {
        probes
            .iter()
            .map(|&p| range.clone().map(|i| member[i][p].norm_sqr()).sum::<f64>() / range.len() as f64)
            .collect()
    };
    let scale: Vec<f64> = {
        let all: Vec<Vec<f64>> = archive.series.iter().map(|m| power(m, 0..t)).collect();
        (0..probes.len()).map(|p| all.iter().map(|v| v[p]).sum::<f64>() / all.len() as f64).collect()
    };
    let diffs: Vec<f64> = archive
        .series
        .iter()
        .map(|m| {
            let early = power(m, 0..third);
            let late = power(m, t - third..t);
            (0..probes.len()).map(|p| (late[p] - early[p]) / scale[p]).sum::<f64>() / probes.len() as f64
        })
        .collect();
    let se = sem(&diffs);
    if se == 0.0 {
        0.0
    } else {
        mean(&diffs) / se
    }
}

/// Fits `C_k(t) = C_k(0) exp(-nu (2 pi |k|)^2 t)` pooled over low modes.
pub fn estimate_diffusivity(archive: &TrajectoryArchive, opts: &EstimatorOptions) -> Result<DiffusivityEstimate> {
    let members = archive.members();
    if members < 4 {
        return Err(Error::InsufficientSamples { need: 4, got: members });
    }
    let max_lag = opts.lags.iter().copied().max().unwrap_or(0);
    if opts.lags.is_empty() || max_lag == 0 || max_lag >= archive.samples() {
        return Err(Error::InvalidParameter("fit window must lie inside the recorded horizon".into()));
    }
    // group probes by |k| shell
    let mut shells: Vec<f64> = Vec::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, p) in archive.probes.iter().enumerate() {
        if p.knorm <= 0.0 || p.knorm > opts.k_max * (1.0 + 1e-12) {
            continue;
        }
        match shells.iter().position(|&s| (s - p.knorm).abs() <= 1e-12 * s) {
            Some(g) => groups[g].push(i),
            None => {
                shells.push(p.knorm);
                groups.push(vec![i]);
            }
        }
    }
    if groups.is_empty() {
        return Err(Error::InvalidParameter("no probes below k_max".into()));
    }
    if opts.check_stationarity {
        let used: Vec<usize> = groups.iter().flatten().copied().collect();
        let z = stationarity_z(archive, &used);
        if z.abs() > 3.0 {
            return Err(Error::NonStationary(format!("equal-time power drifts by {z:.2} standard errors")));
        }
    }
    let per_member = member_correlations(archive, &groups, &opts.lags);
    let n_lags = opts.lags.len();

    // points (group, lag index) with weights from the member scatter
    struct Point {
        g: usize,
        l: usize,
        x: f64,
        w: f64,
    }
    let avg = |sel: &[usize], g: usize, l: usize| -> f64 {
        sel.iter().map(|&m| per_member[m][g][l]).sum::<f64>() / sel.len() as f64
    };
    let all: Vec<usize> = (0..members).collect();
    let mut points = Vec::new();
    for (g, &kn) in shells.iter().enumerate() {
        let c0 = avg(&all, g, 0);
        for l in 0..n_lags {
            let c = avg(&all, g, l + 1);
            if !(c0 > 0.0 && c / c0 >= opts.min_ratio) {
                continue;
            }
            let vals: Vec<f64> = all.iter().map(|&m| per_member[m][g][l + 1] / c0).collect();
            let var_ratio = crate::stats::variance(&vals) / members as f64;
            let ratio = c / c0;
            let var_y = var_ratio / (ratio * ratio);
            let x = (2.0 * PI * kn).powi(2) * opts.lags[l] as f64 * archive.sample_dt;
            points.push(Point { g, l, x, w: 1.0 / var_y.max(1e-300) });
        }
    }
    if points.is_empty() {
        return Err(Error::InsufficientSamples { need: 1, got: 0 });
    }
    let fit = |sel: &[usize]| -> (f64, f64) {
        let mut xs = Vec::with_capacity(points.len());
        let mut ys = Vec::with_capacity(points.len());
        let mut ws = Vec::with_capacity(points.len());
        for p in &points {
            let c0 = avg(sel, p.g, 0);
            let c = avg(sel, p.g, p.l + 1);
            if c0 > 0.0 && c > 0.0 {
                xs.push(p.x);
                ys.push(-(c / c0).ln());
                ws.push(p.w);
            }
        }
        fit_through_origin(&xs, &ys, &ws)
    };
    let (nu_hat, rss) = fit(&all);
    if !(nu_hat.is_finite() && nu_hat > 0.0) {
        return Err(Error::NumericalAbort { step: 0, reason: format!("fitted viscosity {nu_hat} is not positive") });
    }
    let mut rng = counter_rng(opts.seed, Purpose::Resample, 0, 0);
    let mut boots = Vec::with_capacity(opts.bootstrap);
    let mut sel = vec![0usize; members];
    for _ in 0..opts.bootstrap {
        for s in &mut sel {
            *s = rng.random_range(0..members);
        }
        let (b, _) = fit(&sel);
        if b.is_finite() {
            boots.push(b);
        }
    }
    let (mut lo, mut hi) =
        if boots.len() >= 10 { (quantile(&boots, 0.025), quantile(&boots, 0.975)) } else { (nu_hat, nu_hat) };
    lo = lo.min(nu_hat);
    hi = hi.max(nu_hat);
    let used_groups: Vec<f64> = {
        let mut v: Vec<f64> = points.iter().map(|p| shells[p.g]).collect();
        v.sort_by(|a, b| a.total_cmp(b));
        v.dedup();
        v
    };
    let min_lag = opts.lags.iter().copied().min().unwrap_or(0) as f64 * archive.sample_dt;
    Ok(DiffusivityEstimate {
        nu_hat,
        ci_low: lo,
        ci_high: hi,
        modes_used: used_groups,
        fit_window: (min_lag, max_lag as f64 * archive.sample_dt),
        residual: rss / points.len() as f64,
        points: points.len(),
    })
}
