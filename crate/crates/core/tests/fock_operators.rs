mod common;

use common::*;
use fracns::fock::{
    admissible_beta, apply_g_minus, apply_g_plus, apply_l_theta, chaos2_eval, estimate_ratio_bounds, fock_inner,
    fock_norm, fock_norm_weighted, lambda_theta_zeta, number_exponent, ratio_sides, theta_integral, vartheta_n,
    ChaosBasis, ChaosVector, GeneratorPart, GeneratorSpec, RatioBoundParams,
};
use fracns::forcing::sample_white_noise_at;
use fracns::{nonlinearity_bn, Complex64, CutoffProfile, NoiseParams, WaveGrid};
use proptest::prelude::*;
use rand::Rng;
use std::f64::consts::PI;
use std::sync::Arc;

fn small_basis() -> Arc<ChaosBasis> {
    Arc::new(ChaosBasis::new(3, 1.0, 1.5).unwrap())
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
}

fn random_level1(basis: &ChaosBasis, rng: &mut impl Rng) -> Vec<Complex64> {
    let v = ChaosVector::random(Arc::new(basis.clone()), 1, &[1], rng, |_| 1.0);
    v.level(1).to_vec()
}

#[test]
fn l_theta_examples() {
    let basis = small_basis();
    let mut v = ChaosVector::zeros(basis.clone(), 2);
    v.level_mut(0)[0] = Complex64::new(2.0, 1.0);
    let pos = basis.find(&[1, 0, 0]).unwrap();
    v.level_mut(1)[pos * 3 + 1] = Complex64::new(1.0, 0.0);
    let out = apply_l_theta(&v, 1.0);
    assert_eq!(out.level(0)[0], Complex64::new(0.0, 0.0));
    let got = out.level(1)[pos * 3 + 1];
    assert!((got.re + 4.0 * PI * PI).abs() < 1e-12);
    let half = apply_l_theta(&v, 0.5).level(1)[pos * 3 + 1];
    assert!((half.re + 2.0 * PI).abs() < 1e-12);
}

#[test]
fn l_theta_symmetric_negative() {
    let basis = small_basis();
    let mut r = rng(61);
    for theta in [0.5, 1.0, 1.7] {
        for _ in 0..10 {
            let a = ChaosVector::random(basis.clone(), 3, &[0, 1, 2, 3], &mut r, |_| 1.0);
            let b = ChaosVector::random(basis.clone(), 3, &[0, 1, 2, 3], &mut r, |_| 1.0);
            let lhs = fock_inner(&apply_l_theta(&a, theta), &b).unwrap();
            let rhs = fock_inner(&a, &apply_l_theta(&b, theta)).unwrap();
            assert!(rel(lhs, rhs) < 1e-12);
            let q = fock_inner(&apply_l_theta(&a, theta), &a).unwrap();
            assert!(q.re <= 0.0 && q.im.abs() < 1e-10 * q.re.abs());
        }
    }
}

#[test]
fn generators_annihilate_level_zero() {
    let basis = small_basis();
    let mut v = ChaosVector::zeros(basis, 2);
    v.level_mut(0)[0] = Complex64::new(1.0, 0.0);
    let spec = GeneratorSpec::new(CutoffProfile::sharp(1.5));
    assert!(apply_g_plus(&v, &spec).unwrap().0.support().is_empty());
    assert!(apply_g_minus(&v, &spec).unwrap().0.support().is_empty());
}

#[test]
fn chaos_grading_is_exact() {
    let basis = small_basis();
    let spec = GeneratorSpec::new(CutoffProfile::sharp(1.5));
    let mut r = rng(62);
    for n in 1..=2 {
        let v = ChaosVector::random(basis.clone(), 3, &[n], &mut r, |_| 1.0);
        let (up, rep) = apply_g_plus(&v, &spec).unwrap();
        assert_eq!(up.support(), vec![n + 1]);
        assert_eq!(rep.lost_terms, 0);
        assert!(up.max_asymmetry() < 1e-14);
    }
    for n in 2..=3 {
        let v = ChaosVector::random(basis.clone(), 3, &[n], &mut r, |_| 1.0);
        assert_eq!(apply_g_minus(&v, &spec).unwrap().0.support(), vec![n - 1]);
    }
    let v1 = ChaosVector::random(basis.clone(), 3, &[1], &mut r, |_| 1.0);
    assert!(apply_g_minus(&v1, &spec).unwrap().0.support().is_empty());
    // raising the top level is reported, not silently wrapped
    let top = ChaosVector::random(basis.clone(), 2, &[2], &mut r, |_| 1.0);
    let (out, rep) = apply_g_plus(&top, &spec).unwrap();
    assert!(rep.level_overflow && out.support().is_empty());
}

#[test]
fn box_overflow_is_an_error_unless_flagged() {
    let basis = small_basis();
    let mut spec = GeneratorSpec::new(CutoffProfile::sharp(3.0));
    let v = ChaosVector::random(basis.clone(), 2, &[1], &mut rng(63), |_| 1.0);
    assert!(matches!(apply_g_plus(&v, &spec), Err(fracns::Error::BoxOverflow { .. })));
    spec.allow_truncation = true;
    let (_, rep) = apply_g_plus(&v, &spec).unwrap();
    assert!(rep.lost_terms > 0);
}

#[test]
fn anti_symmetry_on_tensor_powers() {
    let mut r = rng(64);
    for (d, side, radius) in [(3usize, 1.0, 1.5), (2, 1.0, 2.3), (3, 1.5, 1.0)] {
        let basis = Arc::new(ChaosBasis::new(d, side, radius).unwrap());
        let spec = GeneratorSpec::new(CutoffProfile::sharp(radius));
        for n in 1..=2 {
            let h = random_level1(&basis, &mut r);
            let g = random_level1(&basis, &mut r);
            let hn = ChaosVector::tensor_power(basis.clone(), &h, n, n + 1).unwrap();
            let gn = ChaosVector::tensor_power(basis.clone(), &g, n + 1, n + 1).unwrap();
            let lhs = fock_inner(&apply_g_plus(&hn, &spec).unwrap().0, &gn).unwrap();
            let rhs = -fock_inner(&hn, &apply_g_minus(&gn, &spec).unwrap().0).unwrap();
            assert!(rel(lhs, rhs) < 1e-10, "d={d} n={n}: {lhs} vs {rhs}");
            assert!(lhs.norm() > 0.0);
        }
    }
}

#[test]
fn full_generator_is_anti_symmetric() {
    let basis = small_basis();
    let mut spec = GeneratorSpec::new(CutoffProfile::smooth(1.5));
    spec.coupling = 0.8;
    let mut r = rng(65);
    let gen = |v: &ChaosVector| {
        let mut a = apply_g_plus(v, &spec).unwrap().0;
        a.add_scaled(&apply_g_minus(v, &spec).unwrap().0, Complex64::new(1.0, 0.0)).unwrap();
        a
    };
    for _ in 0..100 {
        let a = ChaosVector::random(basis.clone(), 3, &[1, 2, 3], &mut r, |s| (-s).exp());
        let b = ChaosVector::random(basis.clone(), 3, &[1, 2, 3], &mut r, |s| (-s).exp());
        let lhs = fock_inner(&gen(&a), &b).unwrap();
        let rhs = -fock_inner(&a, &gen(&b)).unwrap();
        assert!(rel(lhs, rhs) < 1e-10, "{lhs} vs {rhs}");
    }
}

#[test]
fn literal_minus_sign_breaks_duality() {
    // the opposite sign on the k_i term gives <G+ phi, psi> = +<phi, G- psi>
    let basis = small_basis();
    let mut spec = GeneratorSpec::new(CutoffProfile::sharp(1.5));
    spec.minus_sign = -1.0;
    let mut r = rng(66);
    let a = ChaosVector::random(basis.clone(), 2, &[1], &mut r, |_| 1.0);
    let b = ChaosVector::random(basis.clone(), 2, &[2], &mut r, |_| 1.0);
    let lhs = fock_inner(&apply_g_plus(&a, &spec).unwrap().0, &b).unwrap();
    let rhs = fock_inner(&a, &apply_g_minus(&b, &spec).unwrap().0).unwrap();
    assert!(rel(lhs, rhs) < 1e-10);
}

#[test]
fn tensor_inner_product_expansion() {
    let basis = small_basis();
    let mut r = rng(67);
    let h = random_level1(&basis, &mut r);
    let g = random_level1(&basis, &mut r);
    let iv = basis.inv_volume();
    let dim = basis.slot_dim();
    let hg: Complex64 = h.iter().zip(&g).map(|(a, b)| a * b.conj()).sum::<Complex64>() * iv;
    // direct double sum for n = 2: 2! M^{-2d} sum_{a,b} h_a h_b conj(g_a g_b)
    let mut direct = Complex64::new(0.0, 0.0);
    for a in 0..dim {
        for b in 0..dim {
            direct += h[a] * h[b] * (g[a] * g[b]).conj();
        }
    }
    direct *= 2.0 * iv * iv;
    let h2 = ChaosVector::tensor_power(basis.clone(), &h, 2, 2).unwrap();
    let g2 = ChaosVector::tensor_power(basis.clone(), &g, 2, 2).unwrap();
    let got = fock_inner(&h2, &g2).unwrap();
    assert!(rel(got, direct) < 1e-12);
    assert!(rel(got, 2.0 * hg * hg) < 1e-12);
    let h3 = ChaosVector::tensor_power(basis.clone(), &h, 3, 3).unwrap();
    let g3 = ChaosVector::tensor_power(basis.clone(), &g, 3, 3).unwrap();
    assert!(rel(fock_inner(&h3, &g3).unwrap(), 6.0 * hg * hg * hg) < 1e-12);
}

#[test]
fn incompatible_boxes_rejected() {
    let a = ChaosVector::zeros(small_basis(), 1);
    let b = ChaosVector::zeros(Arc::new(ChaosBasis::new(3, 1.0, 2.0).unwrap()), 1);
    assert!(fock_inner(&a, &b).is_err());
}

#[test]
fn weighted_norm_examples() {
    let basis = small_basis();
    let mut r = rng(68);
    let v = ChaosVector::random(basis.clone(), 3, &[0, 1, 2, 3], &mut r, |_| 1.0);
    let plain = fock_norm(&v);
    assert!((fock_norm_weighted(&v, |_| 1.0, 0.0, 1.0, 1.0) - plain).abs() < 1e-12 * plain);
    let mut point = ChaosVector::zeros(basis.clone(), 1);
    let pos = basis.find(&[0, 0, 1]).unwrap();
    point.level_mut(1)[pos * 3] = Complex64::new(1.0, 0.0);
    let base = fock_norm(&point);
    let w = fock_norm_weighted(&point, |_| 1.0, 0.5, 1.0, 1.0);
    assert!((w / base - (1.0 + 4.0 * PI * PI).sqrt()).abs() < 1e-12);
    let w3 = fock_norm_weighted(&point, |n| (n as f64 + 2.0).powi(2), 0.0, 1.0, 1.0);
    assert!((w3 / base - 9.0).abs() < 1e-12);
}

#[test]
fn nonlinearity_matches_raised_test_field_per_sample() {
    let basis = small_basis();
    let grid = WaveGrid::new(3, 1.0, 5, 7).unwrap();
    let cut = CutoffProfile::sharp(1.5);
    let mut r = rng(69);
    let spec = GeneratorSpec::new(cut);
    for s in 0..20 {
        let phi_f = random_divfree(grid, 2.25, &mut r);
        let phi = ChaosVector::from_field(basis.clone(), &phi_f, 2).unwrap();
        let g = apply_g_plus(&phi, &spec).unwrap().0;
        let u = sample_white_noise_at(grid, &NoiseParams::new(1.0, 3, 0), s);
        let b = nonlinearity_bn(&u, &cut).unwrap().inner(&phi_f).unwrap();
        let i2 = chaos2_eval(&g, &u).unwrap();
        assert!((b + i2).abs() < 1e-10 * b.abs().max(1.0), "{b} vs {i2}");
    }
}

#[test]
fn nonlinearity_second_moment_matches_fock_norm() {
    let basis = Arc::new(ChaosBasis::new(3, 1.0, 2.0).unwrap());
    let grid = WaveGrid::new(3, 1.0, 5, 7).unwrap();
    let cut = CutoffProfile::smooth(2.0);
    let phi_f = random_divfree(grid, 4.0, &mut rng(70));
    let phi = ChaosVector::from_field(basis.clone(), &phi_f, 2).unwrap();
    let g = apply_g_plus(&phi, &GeneratorSpec::new(cut)).unwrap().0;
    let want = fock_norm(&g).powi(2);
    let draws = 4000;
    let vals: Vec<f64> = (0..draws)
        .map(|s| {
            let u = sample_white_noise_at(grid, &NoiseParams::new(1.0, 9, 0), s);
            nonlinearity_bn(&u, &cut).unwrap().inner(&phi_f).unwrap()
        })
        .collect();
    let sq: Vec<f64> = vals.iter().map(|v| v * v).collect();
    let m = fracns::stats::mean(&sq);
    let se = fracns::stats::sem(&sq);
    assert!((m - want).abs() < 3.0 * se, "{m} vs {want} +- {se}");
    let mean = fracns::stats::mean(&vals);
    assert!(mean.abs() < 3.0 * fracns::stats::sem(&vals));
}

#[test]
fn exponent_helpers() {
    assert!((lambda_theta_zeta(3, 1.0, 1.0) - 1.25).abs() < 1e-15);
    assert!((lambda_theta_zeta(2, 1.0, 0.3) - 1.0).abs() < 1e-15);
    assert!((lambda_theta_zeta(3, 2.0, 1.0) - (5.0 / 8.0 + 0.25)).abs() < 1e-15);
    assert_eq!(number_exponent(1.0, 0.0), 1.0);
    assert!((number_exponent(2.0, 0.0) - 1.25).abs() < 1e-15);
    let (lo, hi) = admissible_beta(GeneratorPart::Plus, 3, 1.0, 1.0);
    assert!(lo.is_infinite() && (hi - 0.5).abs() < 1e-15);
    let (lo, _) = admissible_beta(GeneratorPart::Minus, 3, 1.0, 1.0);
    assert!((lo - 0.75).abs() < 1e-15);
}

fn ratio_params(part: GeneratorPart, beta: f64, level: usize) -> RatioBoundParams {
    RatioBoundParams { part, theta: 1.0, beta, zeta: 1.0, lambda: 1.0, level, trials: 1, iterations: 8 }
}

#[test]
fn ratio_bounds_uniform_in_cutoff() {
    // side 3/8 keeps the smallest cutoff's ball large enough for triads
    for (part, beta, level) in [(GeneratorPart::Plus, 0.25, 1usize), (GeneratorPart::Minus, 1.0, 2)] {
        let mut seen = Vec::new();
        for n in [4.0, 8.0, 16.0] {
            let basis = Arc::new(ChaosBasis::new(3, 0.375, n).unwrap());
            let spec = GeneratorSpec::new(CutoffProfile::sharp(n));
            let v =
                estimate_ratio_bounds(basis, &spec, &ratio_params(part, beta, level), &|_| 1.0, &mut rng(71)).unwrap();
            assert!(v.is_finite() && v > 0.0);
            seen.push(v);
        }
        let hi = seen.iter().cloned().fold(0.0, f64::max);
        let lo = seen.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(hi / lo < 2.0, "{part:?}: {seen:?}");
    }
}

#[test]
fn ratio_estimate_dominates_random_vectors() {
    let basis = Arc::new(ChaosBasis::new(3, 0.5, 4.0).unwrap());
    let spec = GeneratorSpec::new(CutoffProfile::sharp(4.0));
    let mut p = ratio_params(GeneratorPart::Plus, 0.25, 1);
    p.iterations = 30;
    let sup = estimate_ratio_bounds(basis.clone(), &spec, &p, &|_| 1.0, &mut rng(72)).unwrap();
    let mut r = rng(73);
    for _ in 0..20 {
        let v = ChaosVector::random(basis.clone(), 2, &[1], &mut r, |_| 1.0);
        let (lhs, rhs) = ratio_sides(&v, &spec, &p, &|_| 1.0).unwrap();
        assert!(lhs <= sup * rhs * (1.0 + 1e-6), "{} > {sup}", lhs / rhs);
    }
}

#[test]
fn number_weight_scaling_of_product_vectors() {
    let basis = Arc::new(ChaosBasis::new(3, 1.0, 1.5).unwrap());
    let spec = GeneratorSpec::new(CutoffProfile::sharp(1.5));
    let theta = 2.0;
    let zeta = 0.0;
    let e = number_exponent(theta, zeta);
    let h = random_level1(&basis, &mut rng(74));
    let mut ratios = Vec::new();
    for n in [1usize, 2] {
        let v = ChaosVector::tensor_power(basis.clone(), &h, n, n + 1).unwrap();
        let p = RatioBoundParams {
            part: GeneratorPart::Plus,
            theta,
            beta: 0.1,
            zeta,
            lambda: 1.0,
            level: n,
            trials: 1,
            iterations: 0,
        };
        let (lhs, rhs) = ratio_sides(&v, &spec, &p, &|_| 1.0).unwrap();
        let bare = fock_norm_weighted(&v, |_| 1.0, 0.1, 1.0, theta);
        assert!((rhs / bare - (n as f64).powf(e)).abs() < 1e-12);
        ratios.push(lhs / rhs);
    }
    assert!(ratios.iter().all(|r| r.is_finite() && *r > 0.0));
    assert!(ratios[1] < 4.0 * ratios[0], "{ratios:?}");
}

/// `N^{2-d} sum_{l+m=k} 1[|l|,|m|,|k| <= N] / (lambda + |l|^2 + |m|^2)` on the unit torus.
fn vartheta_oracle(k: [i64; 3], lambda: f64, n: i64) -> f64 {
    let mut s = 0.0;
    for a in -n..=n {
        for b in -n..=n {
            for c in -n..=n {
                let l2 = (a * a + b * b + c * c) as f64;
                let m = [k[0] - a, k[1] - b, k[2] - c];
                let m2 = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) as f64;
                let nn = (n * n) as f64;
                if l2 <= nn && m2 <= nn {
                    s += 1.0 / (lambda + l2 + m2);
                }
            }
        }
    }
    s / n as f64
}

#[test]
fn vartheta_matches_lattice_oracle() {
    for (k, lambda, n) in [([1i64, 0, 0], 1.0, 4i64), ([1, 1, 1], 0.5, 6), ([2, -1, 0], 3.0, 5)] {
        let kf = [k[0] as f64, k[1] as f64, k[2] as f64];
        let got = vartheta_n(&kf, lambda, &CutoffProfile::sharp(n as f64), 1.0);
        let want = vartheta_oracle(k, lambda, n);
        assert!((got - want).abs() < 1e-12 * want, "{got} vs {want}");
    }
}

/// Cylindrical-coordinate oracle: exact inner integral, composite Simpson outside.
fn theta_oracle(kn: f64, r: f64, eps: f64, d: usize) -> f64 {
    let (z0, z1) = ((kn - r).max(-r), r.min(kn + r));
    let f = |z: f64| {
        let rho2 = (r * r - z * z).min(r * r - (kn - z) * (kn - z));
        if rho2 <= 0.0 {
            return 0.0;
        }
        let a = eps + z * z + (kn - z) * (kn - z);
        if d == 3 {
            PI / 2.0 * ((a + 2.0 * rho2) / a).ln()
        } else {
            2.0 / (2.0 * a).sqrt() * (rho2.sqrt() * (2.0 / a).sqrt()).atan()
        }
    };
    // kinks at the lens edge: split there
    let mid = kn / 2.0;
    let simpson = |a: f64, b: f64| {
        let m = 200_000;
        let h = (b - a) / m as f64;
        let mut s = f(a) + f(b);
        for i in 1..m {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    };
    if mid > z0 && mid < z1 {
        simpson(z0, mid) + simpson(mid, z1)
    } else {
        simpson(z0, z1)
    }
}

#[test]
fn theta_integral_matches_oracles() {
    for eps in [1.0f64, 0.1, 1.0 / 64.0] {
        let r: f64 = 1.0;
        let ball = 4.0 * PI * (r / 2.0 - eps / 2.0 / (2.0 * eps).sqrt() * (r * (2.0 / eps).sqrt()).atan());
        let got = theta_integral(&[0.0, 0.0, 0.0], r, eps);
        assert!((got - ball).abs() < 1e-9 * ball, "{got} vs {ball}");
    }
    for (kn, r, eps) in [(0.125, 1.0, 1.0 / 64.0), (0.3, 1.1, 0.01), (1.2, 1.0, 0.5), (0.05, 1.0, 1e-4)] {
        for d in [2usize, 3] {
            let mut k = vec![0.0; d];
            k[0] = kn;
            let got = theta_integral(&k, r, eps);
            let want = theta_oracle(kn, r, eps, d);
            assert!((got - want).abs() < 1e-7 * want, "d={d} kn={kn}: {got} vs {want}");
        }
    }
}

#[test]
fn vartheta_limit_three_dimensions() {
    let k = [1.0, 0.0, 0.0];
    let v = vartheta_n(&k, 0.1, &CutoffProfile::sharp(64.0), 1.0);
    let limit = 2.0 * PI;
    assert!((v / limit - 1.0).abs() < 0.02, "{v} vs {limit}");
}

#[test]
fn vartheta_decreases_in_lambda() {
    let k = [1.0, 1.0, 0.0];
    let cut = CutoffProfile::sharp(8.0);
    let mut last = f64::INFINITY;
    for lambda in [0.0, 0.5, 1.0, 4.0, 16.0, 100.0, 1e4, 1e8] {
        let v = vartheta_n(&k, lambda, &cut, 1.0);
        assert!(v < last);
        last = v;
    }
    assert!(last < 1e-5);
}

#[test]
fn vartheta_grows_in_two_dimensions() {
    let k = [1.0, 0.0];
    let vals: Vec<f64> =
        [8.0, 32.0, 128.0].iter().map(|&n| vartheta_n(&k, 1.0, &CutoffProfile::sharp(n), 1.0)).collect();
    // logarithmic growth: roughly constant increments per factor 4
    assert!(vals[1] > vals[0] && vals[2] > vals[1]);
    let (a, b) = (vals[1] - vals[0], vals[2] - vals[1]);
    assert!((a / b - 1.0).abs() < 0.2, "{vals:?}");
}

#[test]
fn sandwich_inequality() {
    let mut failures = Vec::new();
    for n in [4.0, 8.0, 16.0] {
        for k in [[1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [1.0, 1.0, 1.0], [2.0, 1.0, 0.0]] {
            let lambda = 1.0;
            let v = vartheta_n(&k, lambda, &CutoffProfile::sharp(n), 1.0);
            let kn: Vec<f64> = k.iter().map(|x| x / n).collect();
            let eps = lambda / (n * n);
            let lo = theta_integral(&kn, 1.0, eps);
            let hi = theta_integral(&kn, 1.0 + 1.0 / n, eps);
            if !(lo <= v && v <= hi) {
                failures.push(format!("N={n} k={k:?}: {lo} <= {v} <= {hi}"));
            }
        }
    }
    assert!(failures.is_empty(), "{failures:#?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn symmetrized_kernels_are_invariant(seed in 0u64..1000, n in 2usize..4) {
        let basis = Arc::new(ChaosBasis::new(2, 1.0, 1.5).unwrap());
        let mut r = rng(seed);
        let mut v = ChaosVector::zeros(basis.clone(), n);
        let raw: Vec<Complex64> = (0..basis.level_len(n)).map(|_| Complex64::new(r.random(), r.random())).collect();
        v.set_level(n, raw).unwrap();
        prop_assert!(v.max_asymmetry() < 1e-14);
    }
}
