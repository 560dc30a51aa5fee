//! Multi-dimensional FFTs between the mode box and the collocation grid.
//!
//! Conventions: `u(k) = int u(x) e^{-2 pi i k x} dx`, so the forward map is
//! `(M/P)^d * DFT` and the inverse is `M^{-d} * IDFT` (unnormalized sums).

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::{PhysicalField, SpectralField};
use crate::grid::WaveGrid;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Direction {
    Forward,
    Inverse,
}

/// FFT plans plus scratch for one grid. Not shared between threads; clone per worker.
#[derive(Clone)]
pub struct Transform {
    grid: WaveGrid,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    lines: Vec<Complex64>,
    buf: Vec<Complex64>,
}

impl std::fmt::Debug for Transform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transform").field("grid", &self.grid).finish()
    }
}

impl Transform {
    pub fn new(grid: WaveGrid) -> Self {
        let p = grid.points_per_axis();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(p);
        let inv = planner.plan_fft_inverse(p);
        let scratch_len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        Self {
            grid,
            fwd,
            inv,
            scratch: vec![ZERO; scratch_len],
            lines: vec![ZERO; TILE * p],
            buf: vec![ZERO; grid.n_points()],
        }
    }

    pub fn grid(&self) -> &WaveGrid {
        &self.grid
    }

    /// Physical samples to Fourier coefficients on the mode box.
    pub fn forward(&mut self, phys: &PhysicalField) -> Result<SpectralField> {
        if *phys.grid() != self.grid {
            return Err(Error::ShapeMismatch("physical field grid differs from transform grid".into()));
        }
        let grid = self.grid;
        let mut out = SpectralField::zeros(grid);
        let band = grid.half_width();
        let norm = (grid.side() / grid.points_per_axis() as f64).powi(grid.dim() as i32);
        let fft_idx: Vec<usize> = (0..grid.n_modes()).map(|m| grid.fft_index(m)).collect();
        let n = grid.n_modes();
        let mut buf = std::mem::take(&mut self.buf);
        let d = grid.dim();
        let mut c = 0;
        while c < d {
            // two real components share one complex transform
            let a = phys.component(c);
            let b = if c + 1 < d { Some(phys.component(c + 1)) } else { None };
            for (i, z) in buf.iter_mut().enumerate() {
                *z = Complex64::new(a[i], b.map_or(0.0, |b| b[i]));
            }
            self.forward_raw(&mut buf, band);
            let coeffs = out.coeffs_mut();
            for m in 0..n {
                let zp = buf[fft_idx[m]];
                let zm = buf[fft_idx[n - 1 - m]].conj();
                coeffs[c * n + m] = (zp + zm) * (0.5 * norm);
                if b.is_some() {
                    coeffs[(c + 1) * n + m] = (zp - zm) * Complex64::new(0.0, -0.5 * norm);
                }
            }
            c += 2;
        }
        self.buf = buf;
        Ok(out)
    }

    /// Fourier coefficients to physical samples. Assumes conjugate symmetry.
    pub fn inverse(&mut self, u: &SpectralField) -> Result<PhysicalField> {
        if *u.grid() != self.grid {
            return Err(Error::ShapeMismatch("spectral field grid differs from transform grid".into()));
        }
        let grid = self.grid;
        let mut out = PhysicalField::zeros(grid);
        let band = grid.half_width();
        let norm = 1.0 / grid.volume();
        let n = grid.n_modes();
        let np = grid.n_points();
        let d = grid.dim();
        let fft_idx: Vec<usize> = (0..n).map(|m| grid.fft_index(m)).collect();
        let mut buf = std::mem::take(&mut self.buf);
        let mut c = 0;
        while c < d {
            buf.fill(ZERO);
            let two = c + 1 < d;
            for m in 0..n {
                let mut z = u.get(c, m);
                if two {
                    z += u.get(c + 1, m) * Complex64::new(0.0, 1.0);
                }
                buf[fft_idx[m]] = z * norm;
            }
            self.inverse_raw(&mut buf, band);
            let data = out.data_mut();
            for i in 0..np {
                data[c * np + i] = buf[i].re;
                if two {
                    data[(c + 1) * np + i] = buf[i].im;
                }
            }
            c += 2;
        }
        self.buf = buf;
        Ok(out)
    }

    /// Unnormalized forward DFT of a `P^d` array in place. Only outputs with
    /// every index in the band `|j| <= band` are guaranteed correct.
    pub fn forward_raw(&mut self, data: &mut [Complex64], band: usize) {
        for axis in 0..self.grid.dim() {
            self.axis_pass(data, axis, band, Direction::Forward);
        }
    }

    /// Unnormalized inverse DFT of a `P^d` array in place, assuming the input
    /// vanishes outside the band `|j| <= band` on every axis.
    pub fn inverse_raw(&mut self, data: &mut [Complex64], band: usize) {
        for axis in (0..self.grid.dim()).rev() {
            self.axis_pass(data, axis, band, Direction::Inverse);
        }
    }

    /// 1D transforms along `axis` on the lines whose indices on axes before
    /// `axis` lie in the band.
    fn axis_pass(&mut self, data: &mut [Complex64], axis: usize, band: usize, dir: Direction) {
        let p = self.grid.points_per_axis();
        let d = self.grid.dim();
        let fft = match dir {
            Direction::Forward => Arc::clone(&self.fwd),
            Direction::Inverse => Arc::clone(&self.inv),
        };
        let band_idx = band_indices(p, band);
        let inner = p.pow((d - 1 - axis) as u32);
        let block = p * inner;
        // outer tuples over axes < axis restricted to the band
        let outer_count = band_idx.len().pow(axis as u32);
        for o in 0..outer_count {
            let mut off = 0usize;
            let mut rest = o;
            let mut stride = block;
            let mut digits = [0usize; 3];
            for digit in digits.iter_mut().take(axis).rev() {
                *digit = band_idx[rest % band_idx.len()];
                rest /= band_idx.len();
            }
            for a in (0..axis).rev() {
                off += digits[a] * stride;
                stride *= p;
            }
            let chunk = &mut data[off..off + block];
            if inner == 1 {
                fft.process_with_scratch(chunk, &mut self.scratch);
            } else {
                // gather a few columns at a time so reads stay contiguous
                let mut r0 = 0;
                while r0 < inner {
                    let w = TILE.min(inner - r0);
                    let lines = &mut self.lines[..w * p];
                    for t in 0..p {
                        let src = &chunk[t * inner + r0..t * inner + r0 + w];
                        for (c, z) in src.iter().enumerate() {
                            lines[c * p + t] = *z;
                        }
                    }
                    fft.process_with_scratch(lines, &mut self.scratch);
                    for t in 0..p {
                        let dst = &mut chunk[t * inner + r0..t * inner + r0 + w];
                        for (c, z) in dst.iter_mut().enumerate() {
                            *z = lines[c * p + t];
                        }
                    }
                    r0 += w;
                }
            }
        }
    }
}

/// FFT-array indices `0..=band` and `P-band..P`, or all of `0..P`.
fn band_indices(p: usize, band: usize) -> Vec<usize> {
    if 2 * band + 1 >= p {
        return (0..p).collect();
    }
    (0..=band).chain(p - band..p).collect()
}

/// Columns gathered per batch in strided axis passes.
const TILE: usize = 16;

pub fn transform_forward(phys: &PhysicalField) -> Result<SpectralField> {
    Transform::new(*phys.grid()).forward(phys)
}

pub fn transform_inverse(u: &SpectralField) -> Result<PhysicalField> {
    Transform::new(*u.grid()).inverse(u)
}
