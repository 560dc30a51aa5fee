#![allow(dead_code)]

use fracns::{Complex64, SpectralField, WaveGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Conjugate-symmetric, mean-free field with i.i.d. entries inside `|k| <= radius`.
pub fn random_field(grid: WaveGrid, radius: f64, rng: &mut impl Rng) -> SpectralField {
    let mut u = SpectralField::zeros(grid);
    for m in grid.half_modes() {
        if grid.norm2(m) > radius * radius * (1.0 + 1e-12) {
            continue;
        }
        for c in 0..grid.dim() {
            let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            u.set(c, m, z);
        }
    }
    u
}

/// Leray projection by explicit dense matrix-vector products per mode.
pub fn dense_leray(u: &SpectralField) -> SpectralField {
    let grid = *u.grid();
    let d = grid.dim();
    let mut out = u.clone();
    for m in 0..grid.n_modes() {
        let k = grid.wavevector(m);
        let p = fracns::leray_multiplier(&k[..d]);
        let v: Vec<Complex64> = (0..d).map(|c| u.get(c, m)).collect();
        for i in 0..d {
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..d {
                s += v[j] * p[i][j];
            }
            out.coeffs_mut()[i * grid.n_modes() + m] = s;
        }
    }
    out
}

pub fn random_divfree(grid: WaveGrid, radius: f64, rng: &mut impl Rng) -> SpectralField {
    dense_leray(&random_field(grid, radius, rng))
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn max_abs(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}
