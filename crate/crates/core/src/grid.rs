//! Wavevector bookkeeping on the torus `[0, M)^d`.
//!
//! Modes are stored in a symmetric box of integer indices `-K..=K` per axis,
//! row-major with the last axis fastest. Integer index `j` is the physical
//! wavevector `j / M`. Because the box is symmetric, the linear index of `-k`
//! is `n_modes - 1 - index(k)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical wavevector padded to three entries; unused trailing entries are zero.
pub type Wavevector = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveGrid {
    d: usize,
    side: f64,
    modes_per_axis: usize,
    points_per_axis: usize,
}

impl WaveGrid {
    pub fn new(d: usize, side: f64, modes_per_axis: usize, points_per_axis: usize) -> Result<Self> {
        if !(2..=3).contains(&d) {
            return Err(Error::InvalidParameter(format!("dimension must be 2 or 3, got {d}")));
        }
        if !(side.is_finite() && side > 0.0) {
            return Err(Error::InvalidParameter(format!("torus side must be positive, got {side}")));
        }
        if modes_per_axis % 2 == 0 {
            return Err(Error::InvalidParameter(format!("modes_per_axis must be odd, got {modes_per_axis}")));
        }
        if points_per_axis < modes_per_axis {
            return Err(Error::InvalidParameter(format!(
                "points_per_axis {points_per_axis} < modes_per_axis {modes_per_axis}"
            )));
        }
        Ok(Self { d, side, modes_per_axis, points_per_axis })
    }

    /// Smallest box holding the ball `|k| <= cutoff`, with an alias-free
    /// collocation grid for quadratic products of fields supported in that ball.
    pub fn for_cutoff(d: usize, side: f64, cutoff: f64) -> Result<Self> {
        let k = cutoff_half_width(cutoff, side);
        let points = fft_friendly(dealias_points(k));
        Self::new(d, side, 2 * k + 1, points)
    }

    pub fn with_points(self, points_per_axis: usize) -> Result<Self> {
        Self::new(self.d, self.side, self.modes_per_axis, points_per_axis)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn modes_per_axis(&self) -> usize {
        self.modes_per_axis
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    /// Largest integer index `K` stored per axis.
    pub fn half_width(&self) -> usize {
        self.modes_per_axis / 2
    }

    pub fn n_modes(&self) -> usize {
        self.modes_per_axis.pow(self.d as u32)
    }

    pub fn n_points(&self) -> usize {
        self.points_per_axis.pow(self.d as u32)
    }

    /// `M^d`.
    pub fn volume(&self) -> f64 {
        self.side.powi(self.d as i32)
    }

    pub fn zero_index(&self) -> usize {
        self.n_modes() / 2
    }

    pub fn neg(&self, m: usize) -> usize {
        self.n_modes() - 1 - m
    }

    pub fn index_of(&self, j: &[i64]) -> Option<usize> {
        if j.len() != self.d {
            return None;
        }
        let k = self.half_width() as i64;
        let mut m = 0usize;
        for &ji in j {
            if ji.abs() > k {
                return None;
            }
            m = m * self.modes_per_axis + (ji + k) as usize;
        }
        Some(m)
    }

    /// Integer index of mode `m`, padded with zeros.
    pub fn int_index(&self, m: usize) -> [i64; 3] {
        let n = self.modes_per_axis;
        let k = self.half_width() as i64;
        let mut out = [0i64; 3];
        let mut rest = m;
        for a in (0..self.d).rev() {
            out[a] = (rest % n) as i64 - k;
            rest /= n;
        }
        out
    }

    pub fn wavevector(&self, m: usize) -> Wavevector {
        let j = self.int_index(m);
        let mut k = [0.0; 3];
        for a in 0..self.d {
            k[a] = j[a] as f64 / self.side;
        }
        k
    }

    pub fn norm2(&self, m: usize) -> f64 {
        let k = self.wavevector(m);
        k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
    }

    /// Linear index into a `points^d` FFT array (negative indices wrap).
    pub fn fft_index(&self, m: usize) -> usize {
        let j = self.int_index(m);
        let p = self.points_per_axis as i64;
        let mut idx = 0usize;
        for &ja in j.iter().take(self.d) {
            idx = idx * self.points_per_axis + ja.rem_euclid(p) as usize;
        }
        idx
    }

    /// Indices of modes with `|k| <= radius`, excluding the zero mode.
    pub fn ball(&self, radius: f64) -> Vec<usize> {
        (0..self.n_modes())
            .filter(|&m| m != self.zero_index() && self.norm2(m) <= radius * radius * (1.0 + 1e-12))
            .collect()
    }

    /// Canonical representatives of `{k, -k}` pairs: all `m` with `m < neg(m)`.
    pub fn half_modes(&self) -> std::ops::Range<usize> {
        0..self.zero_index()
    }
}

/// Largest integer index `j` with `|j| / M <= cutoff`.
pub fn cutoff_half_width(cutoff: f64, side: f64) -> usize {
    (cutoff * side * (1.0 + 1e-12)).floor().max(0.0) as usize
}

/// Points per axis needed so products of fields supported in `|j| <= k`
/// alias only onto indices beyond `k`.
pub fn dealias_points(k: usize) -> usize {
    3 * k + 1
}

/// Smallest integer `>= n` whose only prime factors are 2 and 3 (radix-5
/// passes are markedly slower in the FFT backend).
pub fn fft_friendly(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}
