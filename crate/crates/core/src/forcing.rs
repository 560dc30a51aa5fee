//! Divergence-free white noise, forcing increments and Landau-Lifshitz stress.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::WaveGrid;
use crate::operators::{divfree_basis, frac_symbol, FracPower};
use crate::rng::{counter_rng, Purpose};
use crate::stats::jackknife;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub theta: f64,
    pub nu: f64,
    pub kbt: f64,
    pub density: f64,
    pub seed: u64,
    pub stream_id: u64,
}

impl NoiseParams {
    pub fn new(theta: f64, seed: u64, stream_id: u64) -> Self {
        Self { theta, nu: 1.0, kbt: 1.0, density: 1.0, seed, stream_id }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("nu", self.nu), ("kbt", self.kbt), ("density", self.density)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// `2 nu k_B T / rho`.
    pub fn stress_strength(&self) -> f64 {
        2.0 * self.nu * self.kbt / self.density
    }
}

/// Cached divergence-free bases for the canonical half of the mode box.
#[derive(Debug, Clone)]
pub struct NoiseSampler {
    grid: WaveGrid,
    /// `(d-1) * 3` basis entries per half-box mode.
    basis: Vec<[[f64; 3]; 2]>,
}

impl NoiseSampler {
    pub fn new(grid: WaveGrid) -> Self {
        let d = grid.dim();
        let basis = grid
            .half_modes()
            .map(|m| {
                let k = grid.wavevector(m);
                let vs = divfree_basis(&k[..d]).expect("half-box modes are nonzero");
                let mut out = [[0.0; 3]; 2];
                for (a, v) in vs.iter().enumerate() {
                    out[a][..d].copy_from_slice(v);
                }
                out
            })
            .collect();
        Self { grid, basis }
    }

    pub fn grid(&self) -> &WaveGrid {
        &self.grid
    }

    /// Fills `out` (component-major coefficients) with a sample whose mode-`k`
    /// covariance is `amp(m)^2 M^d P(k)`. The zero mode is set to 0.
    pub fn fill<R: Rng>(&self, rng: &mut R, amp: impl Fn(usize) -> f64, out: &mut [Complex64]) {
        let g = &self.grid;
        let d = g.dim();
        let n = g.n_modes();
        let s0 = (g.volume() / 2.0).sqrt();
        for (m, basis) in self.basis.iter().enumerate() {
            let s = s0 * amp(m);
            let mut v = [Complex64::new(0.0, 0.0); 3];
            for e in basis.iter().take(d - 1) {
                let x: f64 = rng.sample(StandardNormal);
                let y: f64 = rng.sample(StandardNormal);
                let z = Complex64::new(s * x, s * y);
                for c in 0..d {
                    v[c] += z * e[c];
                }
            }
            let mn = n - 1 - m;
            for c in 0..d {
                out[c * n + m] = v[c];
                out[c * n + mn] = v[c].conj();
            }
        }
        let z = g.zero_index();
        for c in 0..d {
            out[c * n + z] = Complex64::new(0.0, 0.0);
        }
    }
}

/// One draw of the mean-free divergence-free white noise on the torus.
pub fn sample_divfree_white_noise(grid: WaveGrid, params: &NoiseParams) -> SpectralField {
    sample_white_noise_at(grid, params, 0)
}

/// White-noise draw addressed by an explicit counter (e.g. ensemble index).
pub fn sample_white_noise_at(grid: WaveGrid, params: &NoiseParams, counter: u64) -> SpectralField {
    let sampler = NoiseSampler::new(grid);
    let mut rng = counter_rng(params.seed, Purpose::InitialState, params.stream_id, counter);
    let mut out = SpectralField::zeros(grid);
    sampler.fill(&mut rng, |_| 1.0, out.coeffs_mut());
    out
}

/// Increment of `sqrt(2) A^{theta/2} P xi` over `[step dt, (step+1) dt]`:
/// mode covariance `2 dt (2 pi |k|)^{2 theta} M^d P(k)`.
pub fn sample_forcing_increment(
    grid: WaveGrid,
    theta: f64,
    dt: f64,
    params: &NoiseParams,
    step: u64,
) -> Result<SpectralField> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    let sampler = NoiseSampler::new(grid);
    let mut rng = counter_rng(params.seed, Purpose::Forcing, params.stream_id, step);
    let mut out = SpectralField::zeros(grid);
    sampler.fill(
        &mut rng,
        |m| (2.0 * dt * frac_symbol(grid.norm2(m).sqrt(), theta, FracPower::Forward)).sqrt(),
        out.coeffs_mut(),
    );
    Ok(out)
}

/// Spectral `3 x 3` stress field `tau_ij(k)`, stored `coeffs[(3 i + j) * n_modes + m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StressField {
    grid: WaveGrid,
    coeffs: Vec<Complex64>,
}

impl StressField {
    pub fn grid(&self) -> &WaveGrid {
        &self.grid
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, m: usize) -> Complex64 {
        self.coeffs[(3 * i + j) * self.grid.n_modes() + m]
    }
}

/// Landau-Lifshitz stress `tau = sqrt(2 nu k_B T / rho) dev((W + W^T)/sqrt 2)`
/// with `W` a matrix of independent spatial white noises. Only `d = 3`.
pub fn sample_ll_stress(grid: WaveGrid, params: &NoiseParams, counter: u64) -> Result<StressField> {
    params.validate()?;
    if grid.dim() != 3 {
        return Err(Error::InvalidParameter(format!(
            "Landau-Lifshitz stress is defined for d = 3 only, got d = {}",
            grid.dim()
        )));
    }
    let n = grid.n_modes();
    let mut rng = counter_rng(params.seed, Purpose::Stress, params.stream_id, counter);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); 9 * n];
    let s_w = (grid.volume() / 2.0).sqrt();
    let amp = params.stress_strength().sqrt() / std::f64::consts::SQRT_2;
    for m in grid.half_modes() {
        let mut w = [[Complex64::new(0.0, 0.0); 3]; 3];
        for row in &mut w {
            for z in row.iter_mut() {
                let x: f64 = rng.sample(StandardNormal);
                let y: f64 = rng.sample(StandardNormal);
                *z = Complex64::new(s_w * x, s_w * y);
            }
        }
        let mut s = [[Complex64::new(0.0, 0.0); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                s[i][j] = (w[i][j] + w[j][i]) * amp;
            }
        }
        let tr = (s[0][0] + s[1][1] + s[2][2]) / 3.0;
        for i in 0..3 {
            s[i][i] -= tr;
        }
        let mn = n - 1 - m;
        for i in 0..3 {
            for j in 0..3 {
                coeffs[(3 * i + j) * n + m] = s[i][j];
                coeffs[(3 * i + j) * n + mn] = s[i][j].conj();
            }
        }
    }
    Ok(StressField { grid, coeffs })
}

/// `P (div tau)` in Fourier: `P(k) (2 pi i k_j tau_ij(k))`.
pub fn leray_div_stress(tau: &StressField) -> SpectralField {
    let grid = tau.grid;
    let n = grid.n_modes();
    let mut out = SpectralField::zeros(grid);
    let coeffs = out.coeffs_mut();
    for m in 0..n {
        let k = grid.wavevector(m);
        let mut v = [Complex64::new(0.0, 0.0); 3];
        for (i, vi) in v.iter_mut().enumerate() {
            for (j, kj) in k.iter().enumerate() {
                *vi += tau.get(i, j, m) * Complex64::new(0.0, 2.0 * PI * kj);
            }
        }
        crate::operators::project_vec(&k, 3, &mut v);
        for c in 0..3 {
            coeffs[c * n + m] = v[c];
        }
    }
    out
}

/// Unbiased complex covariance `C_ab = E[(x_a - mean)(x_b - mean)^*]` with
/// jackknife standard errors, row-major `p x p`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    pub dim: usize,
    pub cov: Vec<Complex64>,
    pub stderr: Vec<f64>,
    pub samples: usize,
}

impl CovarianceEstimate {
    pub fn at(&self, a: usize, b: usize) -> Complex64 {
        self.cov[a * self.dim + b]
    }

    pub fn err(&self, a: usize, b: usize) -> f64 {
        self.stderr[a * self.dim + b]
    }
}

/// Probes are `(component, mode index)` pairs.
pub fn empirical_covariance(samples: &[SpectralField], probes: &[(usize, usize)]) -> Result<CovarianceEstimate> {
    let rows: Vec<Vec<Complex64>> =
        samples.iter().map(|s| probes.iter().map(|&(c, m)| s.get(c, m)).collect()).collect();
    covariance_of_rows(&rows)
}

/// Same as [`empirical_covariance`] over raw observation vectors.
pub fn covariance_of_rows(rows: &[Vec<Complex64>]) -> Result<CovarianceEstimate> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::InsufficientSamples { need: 2, got: n });
    }
    let p = rows[0].len();
    if rows.iter().any(|r| r.len() != p) {
        return Err(Error::ShapeMismatch("observation vectors differ in length".into()));
    }
    let mut mean = vec![Complex64::new(0.0, 0.0); p];
    for r in rows {
        for (a, x) in r.iter().enumerate() {
            mean[a] += x;
        }
    }
    for x in &mut mean {
        *x /= n as f64;
    }
    let centered: Vec<Vec<Complex64>> =
        rows.iter().map(|r| r.iter().zip(&mean).map(|(x, mu)| x - mu).collect()).collect();
    let mut sum = vec![Complex64::new(0.0, 0.0); p * p];
    for y in &centered {
        for a in 0..p {
            for b in 0..p {
                sum[a * p + b] += y[a] * y[b].conj();
            }
        }
    }
    let cov: Vec<Complex64> = sum.iter().map(|s| s / (n - 1) as f64).collect();
    // leave-one-out: S_(i) = S - n/(n-1) y_i y_i^*, C_(i) = S_(i)/(n-2)
    let mut stderr = vec![f64::INFINITY; p * p];
    if n == 2 {
        return Ok(CovarianceEstimate { dim: p, cov, stderr, samples: n });
    }
    let w = n as f64 / (n - 1) as f64;
    for a in 0..p {
        for b in 0..p {
            let loo: Vec<Complex64> =
                centered.iter().map(|y| (sum[a * p + b] - y[a] * y[b].conj() * w) / (n - 2) as f64).collect();
            stderr[a * p + b] = jackknife(&loo);
        }
    }
    Ok(CovarianceEstimate { dim: p, cov, stderr, samples: n })
}
