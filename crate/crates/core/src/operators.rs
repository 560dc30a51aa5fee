//! Fourier multipliers: Leray projection, fractional Laplacian, derivatives,
//! the divergence-free basis and the cutoff profile.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::Wavevector;

/// `P(k) = I - k k^T / |k|^2`, identity at `k = 0`.
pub fn leray_multiplier(k: &[f64]) -> Vec<Vec<f64>> {
    let d = k.len();
    let k2: f64 = k.iter().map(|x| x * x).sum();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    if k2 == 0.0 {
                        delta
                    } else {
                        delta - k[i] * k[j] / k2
                    }
                })
                .collect()
        })
        .collect()
}

/// Projects the `d`-vector `v` onto the orthogonal complement of `k` in place.
#[inline]
pub fn project_vec(k: &Wavevector, d: usize, v: &mut [Complex64]) {
    let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    if k2 == 0.0 {
        return;
    }
    let mut dot = Complex64::new(0.0, 0.0);
    for a in 0..d {
        dot += v[a] * k[a];
    }
    let s = dot / k2;
    for a in 0..d {
        v[a] -= s * k[a];
    }
}

pub fn apply_leray(u: &SpectralField) -> SpectralField {
    let mut out = u.clone();
    apply_leray_in_place(&mut out);
    out
}

pub fn apply_leray_in_place(u: &mut SpectralField) {
    let grid = *u.grid();
    let d = grid.dim();
    let n = grid.n_modes();
    let coeffs = u.coeffs_mut();
    let mut v = [Complex64::new(0.0, 0.0); 3];
    for m in 0..n {
        let k = grid.wavevector(m);
        for c in 0..d {
            v[c] = coeffs[c * n + m];
        }
        project_vec(&k, d, &mut v[..d]);
        for c in 0..d {
            coeffs[c * n + m] = v[c];
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FracPower {
    /// `(2 pi |k|)^{2 theta}`
    Forward,
    /// `(2 pi |k|)^{theta}`
    HalfForcing,
}

/// Symbol of `A^theta = (-Delta)^theta` (or its square root) at `|k|`.
#[inline]
pub fn frac_symbol(knorm: f64, theta: f64, power: FracPower) -> f64 {
    if knorm == 0.0 {
        return 0.0;
    }
    let base = 2.0 * PI * knorm;
    match power {
        FracPower::Forward => base.powf(2.0 * theta),
        FracPower::HalfForcing => base.powf(theta),
    }
}

pub fn frac_laplacian_apply(u: &SpectralField, theta: f64, power: FracPower) -> Result<SpectralField> {
    if !(theta > 0.0) {
        return Err(Error::InvalidParameter(format!("theta must be positive, got {theta}")));
    }
    let grid = *u.grid();
    let n = grid.n_modes();
    let mut out = u.clone();
    let coeffs = out.coeffs_mut();
    for m in 0..n {
        let s = frac_symbol(grid.norm2(m).sqrt(), theta, power);
        for c in 0..grid.dim() {
            coeffs[c * n + m] *= s;
        }
    }
    Ok(out)
}

/// `partial_axis u`, i.e. multiplication by `2 pi i k_axis`.
pub fn derivative(u: &SpectralField, axis: usize) -> Result<SpectralField> {
    let grid = *u.grid();
    if axis >= grid.dim() {
        return Err(Error::InvalidParameter(format!("axis {axis} out of range")));
    }
    let n = grid.n_modes();
    let mut out = u.clone();
    let coeffs = out.coeffs_mut();
    for m in 0..n {
        let s = Complex64::new(0.0, 2.0 * PI * grid.wavevector(m)[axis]);
        for c in 0..grid.dim() {
            coeffs[c * n + m] *= s;
        }
    }
    Ok(out)
}

/// `d - 1` real orthonormal vectors spanning `k^perp`.
pub fn divfree_basis(k: &[f64]) -> Result<Vec<Vec<f64>>> {
    let d = k.len();
    let norm = k.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroWavevector);
    }
    let kh: Vec<f64> = k.iter().map(|x| x / norm).collect();
    match d {
        2 => Ok(vec![vec![-kh[1], kh[0]]]),
        3 => {
            // start from the axis least aligned with k
            let mut a = 0;
            for i in 1..3 {
                if kh[i].abs() < kh[a].abs() {
                    a = i;
                }
            }
            let mut e = [0.0; 3];
            e[a] = 1.0;
            let dot = kh[a];
            let mut v1 = [e[0] - dot * kh[0], e[1] - dot * kh[1], e[2] - dot * kh[2]];
            let n1 = (v1[0] * v1[0] + v1[1] * v1[1] + v1[2] * v1[2]).sqrt();
            for x in &mut v1 {
                *x /= n1;
            }
            let v2 = [kh[1] * v1[2] - kh[2] * v1[1], kh[2] * v1[0] - kh[0] * v1[2], kh[0] * v1[1] - kh[1] * v1[0]];
            Ok(vec![v1.to_vec(), v2.to_vec()])
        }
        _ => Err(Error::InvalidParameter(format!("dimension must be 2 or 3, got {d}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutoffKind {
    Sharp,
    Smooth,
}

/// Fourier mollifier `rho^N(k)`: the indicator of `|k| <= N`, or `chi(|k|/N)`
/// with the bump `chi(r) = exp(1 - 1/(1 - r^2))` on `r < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffProfile {
    pub kind: CutoffKind,
    pub radius: f64,
}

impl CutoffProfile {
    pub fn sharp(radius: f64) -> Self {
        Self { kind: CutoffKind::Sharp, radius }
    }

    pub fn smooth(radius: f64) -> Self {
        Self { kind: CutoffKind::Smooth, radius }
    }

    #[inline]
    pub fn value_at_norm(&self, knorm: f64) -> f64 {
        match self.kind {
            CutoffKind::Sharp => {
                if knorm <= self.radius * (1.0 + 1e-12) {
                    1.0
                } else {
                    0.0
                }
            }
            CutoffKind::Smooth => chi(knorm / self.radius),
        }
    }

    pub fn value(&self, k: &[f64]) -> f64 {
        self.value_at_norm(k.iter().map(|x| x * x).sum::<f64>().sqrt())
    }
}

/// Smooth radial bump with `chi(0) = 1`, support `[0, 1)`.
pub fn chi(r: f64) -> f64 {
    let r = r.abs();
    if r >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r * r)).exp()
    }
}

pub fn apply_cutoff(u: &SpectralField, rho: &CutoffProfile) -> SpectralField {
    let grid = *u.grid();
    let n = grid.n_modes();
    let mut out = u.clone();
    let coeffs = out.coeffs_mut();
    for m in 0..n {
        let s = rho.value_at_norm(grid.norm2(m).sqrt());
        for c in 0..grid.dim() {
            coeffs[c * n + m] *= s;
        }
    }
    out
}
