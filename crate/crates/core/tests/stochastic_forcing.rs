mod common;

use common::*;
use fracns::forcing::{
    covariance_of_rows, empirical_covariance, leray_div_stress, sample_forcing_increment, sample_ll_stress,
    sample_white_noise_at,
};
use fracns::{leray_multiplier, sample_divfree_white_noise, Complex64, NoiseParams, WaveGrid};
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

const DRAWS: u64 = 10_000;

fn within(got: f64, want: f64, err: f64, what: &str) {
    assert!((got - want).abs() <= 3.0 * err, "{what}: {got} vs {want} (3 sigma = {})", 3.0 * err);
}

#[test]
fn white_noise_mode_covariance() {
    for side in [1.0, 1.5] {
        let grid = WaveGrid::new(3, side, 5, 5).unwrap();
        let params = NoiseParams::new(1.0, 100, 0);
        let m = grid.index_of(&[1, 0, 0]).unwrap();
        let m2 = grid.index_of(&[1, 1, 0]).unwrap();
        let samples: Vec<_> = (0..DRAWS).map(|c| sample_white_noise_at(grid, &params, c)).collect();
        let probes = [(0, m), (1, m), (0, m2), (1, m2)];
        let est = empirical_covariance(&samples, &probes).unwrap();
        let vol = grid.volume();
        within(est.at(0, 0).re, 0.0, est.err(0, 0).max(1e-300), "E|u1|^2 at (1,0,0)");
        assert!(est.at(0, 0).re < 1e-20);
        within(est.at(1, 1).re, vol, est.err(1, 1), "E|u2|^2 at (1,0,0)");
        let k = grid.wavevector(m2);
        let p = leray_multiplier(&k[..3]);
        within(est.at(2, 3).re, vol * p[0][1], est.err(2, 3), "cross at (1,1,0)");
        within(est.at(2, 2).re, vol * p[0][0], est.err(2, 2), "E|u1|^2 at (1,1,0)");
    }
}

#[test]
fn white_noise_structure() {
    let grid = WaveGrid::new(3, 2.0, 7, 7).unwrap();
    let params = NoiseParams::new(0.5, 3, 9);
    let a = sample_divfree_white_noise(grid, &params);
    let b = sample_divfree_white_noise(grid, &params);
    assert_eq!(a, b);
    assert!(a.is_mean_free());
    assert_eq!(a.max_asymmetry(), 0.0);
    assert!(a.max_relative_divergence() < 1e-14);
    let other = sample_divfree_white_noise(grid, &NoiseParams::new(0.5, 3, 10));
    assert_ne!(a, other);
    let g2 = WaveGrid::new(2, 1.0, 9, 9).unwrap();
    let u = sample_divfree_white_noise(g2, &params);
    assert!(u.is_mean_free() && u.max_relative_divergence() < 1e-14);
}

#[test]
fn projection_path_agrees_in_law() {
    // cross-check: project a d-component complex white sample and compare variances
    let grid = WaveGrid::new(3, 1.0, 5, 5).unwrap();
    let m = grid.index_of(&[1, 2, 0]).unwrap();
    let mut r = rng(7);
    let params = NoiseParams::new(1.0, 5, 0);
    let mut direct = vec![0.0; 3];
    let mut projected = vec![0.0; 3];
    let p = leray_multiplier(&grid.wavevector(m)[..3]);
    for c in 0..DRAWS {
        let u = sample_white_noise_at(grid, &params, c);
        let z: Vec<Complex64> = (0..3)
            .map(|_| {
                let x: f64 = StandardNormal.sample(&mut r);
                let y: f64 = StandardNormal.sample(&mut r);
                Complex64::new(x, y) * (0.5f64).sqrt()
            })
            .collect();
        for a in 0..3 {
            let pz: Complex64 = (0..3).map(|b| z[b] * p[a][b]).sum();
            projected[a] += pz.norm_sqr();
            direct[a] += u.get(a, m).norm_sqr();
        }
    }
    for a in 0..3 {
        let (x, y) = (direct[a] / DRAWS as f64, projected[a] / DRAWS as f64);
        let err = p[a][a] * (2.0 / DRAWS as f64).sqrt();
        within(x, y, err, "direct vs projected");
        within(x, p[a][a], err / 2f64.sqrt(), "direct vs analytic");
    }
}

#[test]
fn forcing_increment_variance_and_independence() {
    let grid = WaveGrid::new(3, 1.0, 5, 5).unwrap();
    let params = NoiseParams::new(1.0, 42, 0);
    let m = grid.index_of(&[1, 0, 0]).unwrap();
    let dt = 0.01;
    let mut rows = Vec::new();
    for step in 0..DRAWS {
        let a = sample_forcing_increment(grid, 1.0, dt, &params, 2 * step).unwrap();
        let b = sample_forcing_increment(grid, 1.0, dt, &params, 2 * step + 1).unwrap();
        assert_eq!(a.get(0, grid.zero_index()), Complex64::new(0.0, 0.0));
        rows.push(vec![a.get(1, m), b.get(1, m)]);
    }
    let est = covariance_of_rows(&rows).unwrap();
    let want = 2.0 * dt * 4.0 * PI * PI;
    within(est.at(0, 0).re, want, est.err(0, 0), "increment variance");
    within(est.at(0, 1).re, 0.0, est.err(0, 1), "disjoint-step correlation");
    within(est.at(0, 1).im, 0.0, est.err(0, 1), "disjoint-step correlation (im)");
    assert!(sample_forcing_increment(grid, 1.0, 0.0, &params, 0).is_err());
    let again = sample_forcing_increment(grid, 1.0, dt, &params, 6).unwrap();
    assert_eq!(again.get(1, m), rows[3][0]);
}

#[test]
fn ll_stress_componentwise_covariance() {
    let grid = WaveGrid::new(3, 1.0, 3, 3).unwrap();
    let mut params = NoiseParams::new(1.0, 77, 1);
    params.nu = 0.7;
    params.kbt = 1.3;
    params.density = 2.0;
    let s = 2.0 * 0.7 * 1.3 / 2.0;
    let m = grid.index_of(&[1, 0, -1]).unwrap();
    let rows: Vec<Vec<Complex64>> = (0..DRAWS)
        .map(|c| {
            let t = sample_ll_stress(grid, &params, c).unwrap();
            vec![t.get(0, 0, m), t.get(1, 1, m), t.get(0, 1, m), t.get(1, 0, m)]
        })
        .collect();
    let est = covariance_of_rows(&rows).unwrap();
    within(est.at(0, 0).re, s * 4.0 / 3.0, est.err(0, 0), "Var tau_11");
    within(est.at(2, 2).re, s, est.err(2, 2), "Var tau_12");
    within(est.at(0, 1).re, -s * 2.0 / 3.0, est.err(0, 1), "Cov(tau_11, tau_22)");
    // symmetric tensor
    for r in &rows {
        assert_eq!(r[2], r[3]);
    }
    let g2 = WaveGrid::new(2, 1.0, 3, 3).unwrap();
    assert!(sample_ll_stress(g2, &params, 0).is_err());
    params.nu = 0.0;
    assert!(sample_ll_stress(grid, &params, 0).is_err());
}

#[test]
fn noise_equivalence_on_8_cube() {
    let grid = WaveGrid::new(3, 1.0, 7, 8).unwrap();
    let mut params = NoiseParams::new(1.0, 2024, 0);
    params.nu = 1.0;
    params.kbt = 1.0;
    params.density = 1.0;
    let s = params.stress_strength();
    let modes: Vec<usize> =
        [[1i64, 0, 0], [1, 1, 0], [2, -1, 1], [0, 3, 1]].iter().map(|j| grid.index_of(j).unwrap()).collect();
    let probes: Vec<(usize, usize)> = modes.iter().flat_map(|&m| (0..3).map(move |c| (c, m))).collect();
    let samples: Vec<_> = (0..DRAWS)
        .map(|c| {
            let f = leray_div_stress(&sample_ll_stress(grid, &params, c).unwrap());
            assert!(f.max_relative_divergence() < 1e-12);
            assert_eq!(f.get(0, grid.zero_index()), Complex64::new(0.0, 0.0));
            f
        })
        .collect();
    let est = empirical_covariance(&samples, &probes).unwrap();
    for (i, &m) in modes.iter().enumerate() {
        let k = grid.wavevector(m);
        let p = leray_multiplier(&k[..3]);
        let scale = s * (2.0 * PI).powi(2) * grid.norm2(m) * grid.volume();
        for a in 0..3 {
            for b in 0..3 {
                let (ia, ib) = (3 * i + a, 3 * i + b);
                let err = est.err(ia, ib);
                if p[a][b].abs() < 1e-14 {
                    assert!(est.at(ia, ib).norm() <= 3.0 * err + 1e-9 * scale, "mode {i} ({a},{b})");
                } else {
                    within(est.at(ia, ib).re, scale * p[a][b], err, "div stress covariance");
                }
            }
        }
    }
}

#[test]
fn covariance_of_standard_gaussians_is_identity() {
    let mut r = rng(3);
    let rows: Vec<Vec<Complex64>> = (0..DRAWS)
        .map(|_| {
            (0..3)
                .map(|_| {
                    let x: f64 = StandardNormal.sample(&mut r);
                    let y: f64 = StandardNormal.sample(&mut r);
                    Complex64::new(x, y) / 2f64.sqrt()
                })
                .collect()
        })
        .collect();
    let est = covariance_of_rows(&rows).unwrap();
    for a in 0..3 {
        for b in 0..3 {
            let want = if a == b { 1.0 } else { 0.0 };
            within(est.at(a, b).re, want, est.err(a, b), "identity");
        }
    }
}

#[test]
fn correlated_pair_error_shrinks() {
    let mut r = rng(4);
    let mut last = f64::INFINITY;
    for n in [100usize, 1000, 10_000] {
        let rows: Vec<Vec<Complex64>> = (0..n)
            .map(|_| {
                let x: f64 = StandardNormal.sample(&mut r);
                let y: f64 = StandardNormal.sample(&mut r);
                let z = Complex64::new(x, y) / 2f64.sqrt();
                vec![z, z]
            })
            .collect();
        let est = covariance_of_rows(&rows).unwrap();
        within(est.at(0, 1).re, 1.0, est.err(0, 1), "correlated pair");
        assert!(est.err(0, 1) < last);
        last = est.err(0, 1);
    }
}

#[test]
fn jackknife_error_matches_analytic_spread() {
    // Var of the sample variance of CN(0,1) is 1/n; jackknife should see the same
    let mut r = rng(5);
    let n = 4000;
    let rows: Vec<Vec<Complex64>> = (0..n)
        .map(|_| {
            let x: f64 = StandardNormal.sample(&mut r);
            let y: f64 = StandardNormal.sample(&mut r);
            vec![Complex64::new(x, y) / 2f64.sqrt()]
        })
        .collect();
    let est = covariance_of_rows(&rows).unwrap();
    let analytic = (1.0 / n as f64).sqrt();
    assert!((est.err(0, 0) / analytic - 1.0).abs() < 0.15, "{}", est.err(0, 0) / analytic);
    within(est.at(0, 0).re, 1.0, analytic, "variance");
}

#[test]
fn covariance_needs_two_samples() {
    let grid = WaveGrid::new(2, 1.0, 3, 3).unwrap();
    let one = vec![sample_white_noise_at(grid, &NoiseParams::new(1.0, 0, 0), 0)];
    assert!(matches!(
        empirical_covariance(&one, &[(0, 0)]),
        Err(fracns::Error::InsufficientSamples { need: 2, got: 1 })
    ));
    let two = vec![one[0].clone(), sample_white_noise_at(grid, &NoiseParams::new(1.0, 0, 0), 1)];
    let est = empirical_covariance(&two, &[(0, 1)]).unwrap();
    assert!(est.err(0, 0).is_infinite());
}

#[test]
fn samplers_are_deterministic_and_independent_of_other_draws() {
    let grid = WaveGrid::new(3, 1.0, 5, 5).unwrap();
    let p = NoiseParams::new(1.0, 11, 4);
    let a = sample_ll_stress(grid, &p, 17).unwrap();
    let _ = sample_ll_stress(grid, &p, 3).unwrap();
    let b = sample_ll_stress(grid, &p, 17).unwrap();
    assert_eq!(a, b);
    let u = sample_white_noise_at(grid, &p, 17);
    let f = sample_forcing_increment(grid, 1.0, 0.1, &p, 17).unwrap();
    assert!(max_abs_diff(u.coeffs(), f.coeffs()) > 0.0);
}
