use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::WaveGrid;

/// `d`-component Fourier coefficients on the full symmetric mode box.
///
/// Storage is component-major: `coeffs[c * n_modes + m]`. Writers that go
/// through [`SpectralField::set`] keep `u(-k) = conj u(k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralField {
    grid: WaveGrid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: WaveGrid) -> Self {
        let len = grid.dim() * grid.n_modes();
        Self { grid, coeffs: vec![Complex64::new(0.0, 0.0); len] }
    }

    pub fn from_coeffs(grid: WaveGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        let want = grid.dim() * grid.n_modes();
        if coeffs.len() != want {
            return Err(Error::ShapeMismatch(format!("expected {want} coefficients, got {}", coeffs.len())));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn grid(&self) -> &WaveGrid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.grid.dim()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        let n = self.grid.n_modes();
        &self.coeffs[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn get(&self, c: usize, m: usize) -> Complex64 {
        self.coeffs[c * self.grid.n_modes() + m]
    }

    /// Writes `z` at `(c, k)` and `conj z` at `(c, -k)`. At `k = 0` only the real part is kept.
    pub fn set(&mut self, c: usize, m: usize, z: Complex64) {
        let n = self.grid.n_modes();
        let mneg = self.grid.neg(m);
        if m == mneg {
            self.coeffs[c * n + m] = Complex64::new(z.re, 0.0);
        } else {
            self.coeffs[c * n + m] = z;
            self.coeffs[c * n + mneg] = z.conj();
        }
    }

    /// Coefficient vector `u(k)` padded to three entries.
    pub fn mode(&self, m: usize) -> [Complex64; 3] {
        let mut v = [Complex64::new(0.0, 0.0); 3];
        for (c, vc) in v.iter_mut().enumerate().take(self.components()) {
            *vc = self.get(c, m);
        }
        v
    }

    pub fn set_mode(&mut self, m: usize, v: &[Complex64]) {
        for (c, &z) in v.iter().enumerate().take(self.components()) {
            self.set(c, m, z);
        }
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::ShapeMismatch("fields live on different grids".into()));
        }
        Ok(())
    }

    /// `<u, v>_{L^2} = M^{-d} sum_k sum_i u_i(k) conj v_i(k)`, real part.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_same_grid(other)?;
        let s: f64 = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a * b.conj()).re).sum();
        Ok(s / self.grid.volume())
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.grid.volume()
    }

    pub fn scale(&mut self, s: f64) {
        for z in &mut self.coeffs {
            *z *= s;
        }
    }

    /// `self += a * x`.
    pub fn axpy(&mut self, a: f64, x: &Self) -> Result<()> {
        self.check_same_grid(x)?;
        for (y, xv) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *y += xv * a;
        }
        Ok(())
    }

    /// `sum_i k_i u_i(k)` at mode `m`.
    pub fn divergence_at(&self, m: usize) -> Complex64 {
        let k = self.grid.wavevector(m);
        (0..self.components()).map(|c| self.get(c, m) * k[c]).sum()
    }

    /// `max_k |k . u(k)| / (|k| max_k |u(k)|)`; zero for the zero field.
    pub fn max_relative_divergence(&self) -> f64 {
        let scale = self.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for m in 0..self.grid.n_modes() {
            let k2 = self.grid.norm2(m);
            if k2 > 0.0 {
                worst = worst.max(self.divergence_at(m).norm() / (k2.sqrt() * scale));
            }
        }
        worst
    }

    /// Largest `|u(-k) - conj u(k)|` relative to the largest coefficient.
    pub fn max_asymmetry(&self) -> f64 {
        let scale = self.coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let n = self.grid.n_modes();
        let mut worst: f64 = 0.0;
        for c in 0..self.components() {
            for m in 0..n {
                let a = self.coeffs[c * n + m];
                let b = self.coeffs[c * n + self.grid.neg(m)];
                worst = worst.max((a - b.conj()).norm());
            }
        }
        worst / scale
    }

    pub fn is_mean_free(&self) -> bool {
        let z = self.grid.zero_index();
        (0..self.components()).all(|c| self.get(c, z) == Complex64::new(0.0, 0.0))
    }

    /// Copies the overlapping modes of `self` into a field on `target`
    /// (same dimension and side), zero elsewhere.
    pub fn resample(&self, target: WaveGrid) -> Result<Self> {
        if target.dim() != self.grid.dim() || target.side() != self.grid.side() {
            return Err(Error::ShapeMismatch("resample needs equal dimension and side".into()));
        }
        let mut out = Self::zeros(target);
        let d = target.dim();
        for m in 0..target.n_modes() {
            let j = target.int_index(m);
            if let Some(src) = self.grid.index_of(&j[..d]) {
                for c in 0..d {
                    out.coeffs[c * target.n_modes() + m] = self.get(c, src);
                }
            }
        }
        Ok(out)
    }
}

/// Real `d`-component field sampled on the `points^d` collocation grid,
/// component-major, last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    grid: WaveGrid,
    data: Vec<f64>,
}

impl PhysicalField {
    pub fn zeros(grid: WaveGrid) -> Self {
        Self { grid, data: vec![0.0; grid.dim() * grid.n_points()] }
    }

    pub fn from_data(grid: WaveGrid, data: Vec<f64>) -> Result<Self> {
        let want = grid.dim() * grid.n_points();
        if data.len() != want {
            return Err(Error::ShapeMismatch(format!("expected {want} samples, got {}", data.len())));
        }
        Ok(Self { grid, data })
    }

    /// Samples `f(c, x)` at the collocation points `x = M * n / P`.
    pub fn from_fn(grid: WaveGrid, f: impl Fn(usize, [f64; 3]) -> f64) -> Self {
        let mut out = Self::zeros(grid);
        let p = grid.points_per_axis();
        let h = grid.side() / p as f64;
        let np = grid.n_points();
        for c in 0..grid.dim() {
            for idx in 0..np {
                let mut x = [0.0; 3];
                let mut rest = idx;
                for a in (0..grid.dim()).rev() {
                    x[a] = (rest % p) as f64 * h;
                    rest /= p;
                }
                out.data[c * np + idx] = f(c, x);
            }
        }
        out
    }

    pub fn grid(&self) -> &WaveGrid {
        &self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let n = self.grid.n_points();
        &self.data[c * n..(c + 1) * n]
    }

    /// Riemann-sum `L^2` inner product, exact for band-limited fields.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::ShapeMismatch("fields live on different grids".into()));
        }
        let cell = self.grid.volume() / self.grid.n_points() as f64;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum::<f64>() * cell)
    }
}
