//! Exact-identity checks shared by `check all` and the identity experiments.

use fracns::fock::{apply_g_minus, apply_g_plus, apply_l_theta, fock_inner, ChaosBasis, ChaosVector, GeneratorSpec};
use fracns::rng::{counter_rng, Purpose};
use fracns::{
    apply_leray, g_hat, leray_multiplier, ll_effective_coupling, ll_normalization, nonlinearity_bn, nu_eff, omega_d,
    Complex64, CutoffProfile, SpectralField, WaveGrid,
};
use rand::Rng;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::Check;

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
}

/// Leray-projected field with uniform random coefficients inside `|k| <= radius`.
pub fn random_divfree(grid: WaveGrid, radius: f64, rng: &mut impl Rng) -> SpectralField {
    let mut u = SpectralField::zeros(grid);
    for m in grid.half_modes() {
        if grid.norm2(m) > radius * radius * (1.0 + 1e-12) {
            continue;
        }
        for c in 0..grid.dim() {
            u.set(c, m, Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        }
    }
    apply_leray(&u)
}

/// Idempotence, rank `d - 1` and `P k = 0` of the Leray multiplier on random
/// integer wavevectors, plus idempotence of the field projection.
pub fn leray_checks(seed: u64, samples: usize) -> Vec<Check> {
    let mut rng = counter_rng(seed, Purpose::Probe, 1, 0);
    let (mut idem, mut trace, mut kill) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..samples {
        let d = 2 + i % 2;
        let mut k = vec![0.0; d];
        while k.iter().all(|&x| x == 0.0) {
            for x in &mut k {
                *x = rng.random_range(-12i64..=12) as f64;
            }
        }
        let p = leray_multiplier(&k);
        for a in 0..d {
            for b in 0..d {
                let pp: f64 = (0..d).map(|c| p[a][c] * p[c][b]).sum();
                idem = idem.max((pp - p[a][b]).abs());
            }
            kill = kill.max((0..d).map(|b| p[a][b] * k[b]).sum::<f64>().abs() / k.iter().map(|x| x.abs()).sum::<f64>());
        }
        let tr: f64 = (0..d).map(|a| p[a][a]).sum();
        trace = trace.max((tr - (d - 1) as f64).abs());
    }
    let grid = WaveGrid::for_cutoff(3, 1.0, 4.0).expect("fixed grid");
    let u = random_divfree(grid, 4.0, &mut rng);
    let twice = apply_leray(&u);
    let field_err = u.coeffs().iter().zip(twice.coeffs()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    vec![
        Check::at_most("leray_idempotence", idem, 1e-14),
        Check::at_most("leray_rank", trace, 1e-14),
        Check::at_most("leray_annihilates_k", kill, 1e-14),
        Check::at_most("leray_field_idempotence", field_err, 1e-14),
    ]
}

/// Largest `|<u, B^N(u)>| / (|u| |B^N(u)|)` over random divergence-free fields.
pub fn energy_on_random_fields(grid: WaveGrid, cutoff: &CutoffProfile, count: usize, seed: u64) -> f64 {
    let mut rng = counter_rng(seed, Purpose::Probe, 2, 0);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let u = random_divfree(grid, cutoff.radius * 1.2, &mut rng);
        let b = nonlinearity_bn(&u, cutoff).expect("grid validated");
        let r = fracns::dynamics::relative_pairing(u.coeffs(), b.coeffs(), grid.volume());
        worst = worst.max(r.abs());
    }
    worst
}

/// Brute-force `P div (rho u (x) rho u)` by explicit convolution over the mode box,
/// times the outer cutoff, with the same sign and scaling as the pseudo-spectral path.
pub fn convolution_oracle(u: &SpectralField, cutoff: &CutoffProfile) -> SpectralField {
    let grid = *u.grid();
    let d = grid.dim();
    let n = grid.n_modes();
    let rho = |m: usize| cutoff.value(&grid.wavevector(m)[..d]);
    let support: Vec<usize> = (0..n).filter(|&m| rho(m) > 0.0).collect();
    let mut out = SpectralField::zeros(grid);
    for m in 0..n {
        let rk = rho(m);
        if rk == 0.0 || m == grid.zero_index() {
            continue;
        }
        let jk = grid.int_index(m);
        let k = grid.wavevector(m);
        let mut w = [[Complex64::new(0.0, 0.0); 3]; 3];
        for &p in &support {
            let jp = grid.int_index(p);
            let jq: Vec<i64> = (0..d).map(|a| jk[a] - jp[a]).collect();
            let Some(q) = grid.index_of(&jq) else { continue };
            let rq = rho(q);
            if rq == 0.0 {
                continue;
            }
            let rp = rho(p);
            for a in 0..d {
                for b in 0..d {
                    w[a][b] += u.get(a, p) * rp * u.get(b, q) * rq;
                }
            }
        }
        let pm = leray_multiplier(&k[..d]);
        for i in 0..d {
            let mut s = Complex64::new(0.0, 0.0);
            for mm in 0..d {
                let div: Complex64 = (0..d).map(|j| w[mm][j] * k[j]).sum();
                s += div * Complex64::new(0.0, 2.0 * PI) * pm[i][mm];
            }
            out.set(i, m, s * rk / grid.volume());
        }
    }
    out
}

/// Relative max-norm gap between `B^N` and the convolution oracle on a
/// `points^3` grid with cutoff `radius`, over a few random fields.
pub fn oracle_gap(points: usize, radius: f64, seed: u64) -> f64 {
    let cutoff = CutoffProfile::sharp(radius);
    let half = (radius * (1.0 + 1e-12)).floor() as usize;
    let grid = WaveGrid::new(3, 1.0, 2 * half + 1, points).expect("oracle grid");
    let mut rng = counter_rng(seed, Purpose::Probe, 3, 0);
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let u = random_divfree(grid, radius, &mut rng);
        let fast = nonlinearity_bn(&u, &cutoff).expect("oracle grid is alias free");
        let slow = convolution_oracle(&u, &cutoff);
        let scale = slow.coeffs().iter().map(|z| z.norm()).fold(0.0, f64::max);
        let gap = fast.coeffs().iter().zip(slow.coeffs()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        worst = worst.max(gap / scale);
    }
    worst
}

/// Symmetry of `L_theta`, anti-symmetry of `G = G_+ + G_-` and exact chaos
/// grading on random vectors with levels up to `max_level`.
pub fn generator_checks(
    d: usize,
    side: f64,
    radius: f64,
    max_level: usize,
    trials: usize,
    tol: f64,
    seed: u64,
) -> Vec<Check> {
    let basis = Arc::new(ChaosBasis::new(d, side, radius).expect("small basis"));
    let spec = GeneratorSpec::new(CutoffProfile::sharp(radius));
    let mut rng = counter_rng(seed, Purpose::Probe, 4, 0);
    let levels: Vec<usize> = (0..=max_level).collect();
    let g = |v: &ChaosVector| {
        let mut a = apply_g_plus(v, &spec).expect("basis closed under the cutoff").0;
        a.add_scaled(&apply_g_minus(v, &spec).expect("basis closed").0, Complex64::new(1.0, 0.0)).expect("same basis");
        a
    };
    let (mut sym, mut anti, mut neg) = (0.0f64, 0.0f64, true);
    for _ in 0..trials {
        let a = ChaosVector::random(basis.clone(), max_level, &levels, &mut rng, |s| (-s / radius).exp());
        let b = ChaosVector::random(basis.clone(), max_level, &levels, &mut rng, |s| (-s / radius).exp());
        for theta in [0.5, 1.0] {
            let la = apply_l_theta(&a, theta);
            sym = sym.max(rel(fock_inner(&la, &b).unwrap(), fock_inner(&a, &apply_l_theta(&b, theta)).unwrap()));
            neg &= fock_inner(&la, &a).unwrap().re <= 0.0;
        }
        anti = anti.max(rel(fock_inner(&g(&a), &b).unwrap(), -fock_inner(&a, &g(&b)).unwrap()));
    }
    // grading: a pure level-n input lands exactly on n + 1 and n - 1
    let mut grading = true;
    for n in 1..max_level {
        let v = ChaosVector::random(basis.clone(), max_level, &[n], &mut rng, |_| 1.0);
        let up = apply_g_plus(&v, &spec).unwrap().0.support();
        let down = apply_g_minus(&v, &spec).unwrap().0.support();
        grading &= up == vec![n + 1] && down == if n >= 2 { vec![n - 1] } else { vec![] };
    }
    vec![
        Check::at_most("l_theta_symmetry", sym, tol),
        Check::new("l_theta_nonpositive", neg, None, None),
        Check::at_most("generator_anti_symmetry", anti, tol),
        Check::new("chaos_grading", grading, None, None),
    ]
}

fn close(name: &str, got: f64, want: f64) -> Check {
    let err = (got - want).abs() / want.abs().max(1.0);
    Check::at_most(name, err, 1e-12).detail(format!("{got} vs {want}"))
}

/// Formula layer against hand-derived values.
pub fn formula_checks() -> Vec<Check> {
    let mut out = vec![
        close("omega_2", omega_d(2), 2.0 * PI),
        close("omega_3", omega_d(3), 4.0 * PI),
        close("omega_4", omega_d(4), 2.0 * PI * PI),
        close("nu_eff_2d_zero", nu_eff(2, 0.0), 1.0),
        close("nu_eff_2d_sqrt_2pi", nu_eff(2, (2.0 * PI).sqrt()), 2f64.sqrt()),
        close("nu_eff_3d_sqrt_pi", nu_eff(3, PI.sqrt()), 2f64.sqrt()),
        close("nu_eff_3d_two", nu_eff(3, 2.0), (1.0 + 4.0 / PI).sqrt()),
        close("g_hat_zero_coupling", g_hat(0.0, 1.0, 1.0, 1.0, 3).unwrap_or(f64::NAN), 1.0),
    ];
    match ll_normalization(2.0, 1.0, 4.0) {
        Ok((a, r)) => {
            out.push(close("ll_normalization_a", a, 2.0));
            out.push(close("ll_normalization_r", r, 0.5));
        }
        Err(e) => out.push(Check::new("ll_normalization", false, None, None).detail(e.to_string())),
    }
    let mut worst = 0.0f64;
    for d in [3usize, 4, 5] {
        for &(l, nu, kbt, rho) in
            &[(0.5, 1.0, 1.0, 1.0), (2.0, 0.3, 2.5, 0.7), (7.0, 4.0, 0.1, 11.0), (1.0, 2.0, 1.0, 4.0)]
        {
            let g = g_hat(l, nu, kbt, rho, d).unwrap_or(f64::NAN);
            let e = nu_eff(d, ll_effective_coupling(l, nu, kbt, rho));
            worst = worst.max((g - e).abs() / e);
        }
    }
    out.push(Check::at_most("g_hat_equals_substituted_nu_eff", worst, 1e-12));
    out.push(Check::new(
        "g_hat_rejects_nonpositive_nu",
        matches!(g_hat(1.0, 0.0, 1.0, 1.0, 3), Err(fracns::Error::InvalidParameter(_))),
        None,
        None,
    ));
    out
}
