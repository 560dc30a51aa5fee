//! Truncated Wiener-chaos (Fock space) representation of the generator.
//!
//! A level-`n` kernel is a dense array over `n` slots; a slot is a pair
//! `(l, k)` with component `l` and `k` a nonzero wavevector in a ball. Slot
//! index is `mode_position * d + l`, level arrays are row-major with the
//! first slot slowest.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::Wavevector;
use crate::operators::{project_vec, CutoffProfile};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Nonzero wavevectors `|k| <= radius` on the torus of side `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosBasis {
    d: usize,
    side: f64,
    radius: f64,
    ints: Vec<[i64; 3]>,
    kvec: Vec<Wavevector>,
    half: i64,
    lookup: Vec<Option<usize>>,
    negs: Vec<usize>,
}

impl ChaosBasis {
    pub fn new(d: usize, side: f64, radius: f64) -> Result<Self> {
        if !(2..=3).contains(&d) {
            return Err(Error::InvalidParameter(format!("dimension must be 2 or 3, got {d}")));
        }
        if !(side > 0.0 && radius > 0.0) {
            return Err(Error::InvalidParameter("side and radius must be positive".into()));
        }
        let half = (radius * side * (1.0 + 1e-12)).floor() as i64;
        let w = (2 * half + 1) as usize;
        let mut lookup = vec![None; w.pow(d as u32)];
        let mut ints = Vec::new();
        let r2 = radius * radius * (1.0 + 1e-12);
        for lin in 0..lookup.len() {
            let mut j = [0i64; 3];
            let mut rest = lin;
            for a in (0..d).rev() {
                j[a] = (rest % w) as i64 - half;
                rest /= w;
            }
            let k2: f64 = j.iter().map(|&x| (x as f64 / side).powi(2)).sum();
            if k2 > 0.0 && k2 <= r2 {
                lookup[lin] = Some(ints.len());
                ints.push(j);
            }
        }
        let kvec: Vec<Wavevector> =
            ints.iter().map(|j| [j[0] as f64 / side, j[1] as f64 / side, j[2] as f64 / side]).collect();
        let mut basis = Self { d, side, radius, ints, kvec, half, lookup, negs: Vec::new() };
        basis.negs =
            basis.ints.iter().map(|j| basis.find(&[-j[0], -j[1], -j[2]]).expect("ball is symmetric")).collect();
        Ok(basis)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn n_modes(&self) -> usize {
        self.ints.len()
    }

    pub fn slot_dim(&self) -> usize {
        self.ints.len() * self.d
    }

    pub fn level_len(&self, n: usize) -> usize {
        self.slot_dim().pow(n as u32)
    }

    pub fn int_index(&self, pos: usize) -> [i64; 3] {
        self.ints[pos]
    }

    pub fn wavevector(&self, pos: usize) -> Wavevector {
        self.kvec[pos]
    }

    pub fn norm(&self, pos: usize) -> f64 {
        let k = self.kvec[pos];
        (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt()
    }

    pub fn neg(&self, pos: usize) -> usize {
        self.negs[pos]
    }

    /// Position of integer mode `j` (trailing entries beyond `d` ignored).
    pub fn find(&self, j: &[i64; 3]) -> Option<usize> {
        let w = 2 * self.half + 1;
        let mut lin = 0i64;
        for &ja in j.iter().take(self.d) {
            if ja.abs() > self.half {
                return None;
            }
            lin = lin * w + ja + self.half;
        }
        self.lookup[lin as usize]
    }

    /// `M^{-d}`.
    pub fn inv_volume(&self) -> f64 {
        self.side.powi(-(self.d as i32))
    }
}

/// Kernels `phi_0, ..., phi_{n_max}` on a shared basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosVector {
    basis: Arc<ChaosBasis>,
    levels: Vec<Vec<Complex64>>,
}

impl ChaosVector {
    pub fn zeros(basis: Arc<ChaosBasis>, n_max: usize) -> Self {
        let levels = (0..=n_max).map(|n| vec![ZERO; basis.level_len(n)]).collect();
        Self { basis, levels }
    }

    pub fn basis(&self) -> &Arc<ChaosBasis> {
        &self.basis
    }

    pub fn n_max(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, n: usize) -> &[Complex64] {
        &self.levels[n]
    }

    pub fn level_mut(&mut self, n: usize) -> &mut [Complex64] {
        &mut self.levels[n]
    }

    /// Stores `data` at level `n`, symmetrized.
    pub fn set_level(&mut self, n: usize, data: Vec<Complex64>) -> Result<()> {
        if data.len() != self.basis.level_len(n) {
            return Err(Error::ShapeMismatch(format!(
                "level {n} needs {} entries, got {}",
                self.basis.level_len(n),
                data.len()
            )));
        }
        self.levels[n] = symmetrize(&data, n, self.basis.slot_dim());
        Ok(())
    }

    /// Levels carrying any nonzero entry.
    pub fn support(&self) -> Vec<usize> {
        (0..self.levels.len()).filter(|&n| self.levels[n].iter().any(|z| z.norm_sqr() > 0.0)).collect()
    }

    /// Level-1 kernel `phi(l, k) = u_l(k)` of a test field on the same torus.
    pub fn from_field(basis: Arc<ChaosBasis>, u: &SpectralField, n_max: usize) -> Result<Self> {
        let g = u.grid();
        if g.dim() != basis.dim() || g.side() != basis.side() {
            return Err(Error::ShapeMismatch("field and chaos basis disagree on torus".into()));
        }
        let d = basis.dim();
        let mut out = Self::zeros(basis.clone(), n_max.max(1));
        for pos in 0..basis.n_modes() {
            let j = basis.int_index(pos);
            if let Some(m) = g.index_of(&j[..d]) {
                for l in 0..d {
                    out.levels[1][pos * d + l] = u.get(l, m);
                }
            }
        }
        Ok(out)
    }

    /// `h^{(x) n}` placed at level `n` from a level-1 kernel `h`.
    pub fn tensor_power(basis: Arc<ChaosBasis>, h: &[Complex64], n: usize, n_max: usize) -> Result<Self> {
        let dim = basis.slot_dim();
        if h.len() != dim {
            return Err(Error::ShapeMismatch("level-1 kernel has wrong length".into()));
        }
        let mut data = vec![Complex64::new(1.0, 0.0)];
        for _ in 0..n {
            let mut next = Vec::with_capacity(data.len() * dim);
            for a in &data {
                for b in h {
                    next.push(a * b);
                }
            }
            data = next;
        }
        let mut out = Self::zeros(basis, n_max.max(n));
        out.levels[n] = data;
        Ok(out)
    }

    /// Random divergence-free symmetric kernels on `levels`, with entries
    /// damped by `envelope(sum |k_i|)`.
    pub fn random<R: Rng>(
        basis: Arc<ChaosBasis>,
        n_max: usize,
        levels: &[usize],
        rng: &mut R,
        envelope: impl Fn(f64) -> f64,
    ) -> Self {
        let mut out = Self::zeros(basis.clone(), n_max);
        let d = basis.dim();
        for &n in levels {
            if n > n_max {
                continue;
            }
            let sums = slot_sums(n, basis.slot_dim(), |s| basis.norm(s / d));
            let mut data = Vec::with_capacity(sums.len());
            for ksum in sums {
                let e = envelope(ksum);
                let x: f64 = rng.sample(StandardNormal);
                let y: f64 = rng.sample(StandardNormal);
                data.push(Complex64::new(x, y) * e);
            }
            out.levels[n] = data;
        }
        out.project_all();
        out.symmetrize_all();
        out
    }

    /// Leray-projects every slot of every level.
    pub fn project_all(&mut self) {
        let basis = self.basis.clone();
        for n in 1..self.levels.len() {
            for a in 0..n {
                project_slot(&mut self.levels[n], n, a, &basis);
            }
        }
    }

    pub fn symmetrize_all(&mut self) {
        let dim = self.basis.slot_dim();
        for n in 2..self.levels.len() {
            self.levels[n] = symmetrize(&self.levels[n], n, dim);
        }
    }

    /// Imposes `phi(-k_1, ..) = conj phi(k_1, ..)`, the kernel condition for real functionals.
    pub fn realify(&mut self) {
        let basis = self.basis.clone();
        let d = basis.dim();
        let dim = basis.slot_dim();
        for n in 1..self.levels.len() {
            let src = self.levels[n].clone();
            for (idx, z) in self.levels[n].iter_mut().enumerate() {
                let mut s = slots(idx, n, dim);
                for v in &mut s {
                    *v = basis.neg(*v / d) * d + *v % d;
                }
                *z = (*z + src[join(&s, dim)].conj()) * 0.5;
            }
        }
    }

    /// Largest deviation from permutation symmetry, relative to the largest entry.
    pub fn max_asymmetry(&self) -> f64 {
        let dim = self.basis.slot_dim();
        let mut worst: f64 = 0.0;
        for n in 2..self.levels.len() {
            let scale = self.levels[n].iter().map(|z| z.norm()).fold(0.0, f64::max);
            if scale == 0.0 {
                continue;
            }
            let sym = symmetrize(&self.levels[n], n, dim);
            let dev = sym.iter().zip(&self.levels[n]).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            worst = worst.max(dev / scale);
        }
        worst
    }

    pub fn add_scaled(&mut self, other: &Self, s: Complex64) -> Result<()> {
        check_compatible(self, other)?;
        for (a, b) in self.levels.iter_mut().zip(&other.levels) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y * s;
            }
        }
        Ok(())
    }

    fn map_levels(&self, f: impl Fn(usize, &[Complex64]) -> Vec<Complex64>) -> Self {
        let levels = self.levels.iter().enumerate().map(|(n, lv)| f(n, lv)).collect();
        Self { basis: self.basis.clone(), levels }
    }
}

/// Slot digits of a level-`n` linear index.
fn slots(mut idx: usize, n: usize, dim: usize) -> Vec<usize> {
    let mut s = vec![0; n];
    for a in (0..n).rev() {
        s[a] = idx % dim;
        idx /= dim;
    }
    s
}

fn split_into(mut idx: usize, dim: usize, s: &mut [usize]) {
    for v in s.iter_mut().rev() {
        *v = idx % dim;
        idx /= dim;
    }
}

fn join(s: &[usize], dim: usize) -> usize {
    s.iter().fold(0, |acc, &v| acc * dim + v)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Average over all slot permutations.
pub fn symmetrize(data: &[Complex64], n: usize, dim: usize) -> Vec<Complex64> {
    if n < 2 {
        return data.to_vec();
    }
    if n == 2 {
        let mut out = vec![ZERO; data.len()];
        for i in 0..dim {
            for j in 0..dim {
                out[i * dim + j] = (data[i * dim + j] + data[j * dim + i]) * 0.5;
            }
        }
        return out;
    }
    let perms = permutations(n);
    let w = 1.0 / perms.len() as f64;
    let mut out = vec![ZERO; data.len()];
    let mut s = vec![0usize; n];
    let mut permuted = vec![0usize; n];
    for (idx, o) in out.iter_mut().enumerate() {
        split_into(idx, dim, &mut s);
        let mut acc = ZERO;
        for p in &perms {
            for a in 0..n {
                permuted[a] = s[p[a]];
            }
            acc += data[join(&permuted, dim)];
        }
        *o = acc * w;
    }
    out
}

/// Per-entry sums `sum_i f(slot_i)` for a level-`n` array.
fn slot_sums(n: usize, dim: usize, f: impl Fn(usize) -> f64) -> Vec<f64> {
    let per_slot: Vec<f64> = (0..dim).map(f).collect();
    let mut acc = vec![0.0];
    for _ in 0..n {
        let mut next = Vec::with_capacity(acc.len() * dim);
        for a in &acc {
            next.extend(per_slot.iter().map(|v| a + v));
        }
        acc = next;
    }
    acc
}

fn project_slot(data: &mut [Complex64], n: usize, a: usize, basis: &ChaosBasis) {
    let dim = basis.slot_dim();
    let d = basis.dim();
    let stride = dim.pow((n - 1 - a) as u32);
    let prefix = dim.pow(a as u32);
    let mut v = [ZERO; 3];
    for pre in 0..prefix {
        for pos in 0..basis.n_modes() {
            let k = basis.wavevector(pos);
            let base = (pre * dim + pos * d) * stride;
            for r in 0..stride {
                for l in 0..d {
                    v[l] = data[base + l * stride + r];
                }
                project_vec(&k, d, &mut v[..d]);
                for l in 0..d {
                    data[base + l * stride + r] = v[l];
                }
            }
        }
    }
}

fn check_compatible(a: &ChaosVector, b: &ChaosVector) -> Result<()> {
    if a.basis != b.basis {
        return Err(Error::ShapeMismatch("chaos vectors use different truncation boxes".into()));
    }
    Ok(())
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// `sum_n n! M^{-dn} sum phi_n conj psi_n` over common levels.
pub fn fock_inner(phi: &ChaosVector, psi: &ChaosVector) -> Result<Complex64> {
    check_compatible(phi, psi)?;
    let iv = phi.basis.inv_volume();
    let mut total = ZERO;
    for (n, (a, b)) in phi.levels.iter().zip(&psi.levels).enumerate() {
        let s: Complex64 = a.iter().zip(b).map(|(x, y)| x * y.conj()).sum();
        total += s * factorial(n) * iv.powi(n as i32);
    }
    Ok(total)
}

pub fn fock_norm(phi: &ChaosVector) -> f64 {
    fock_inner(phi, phi).expect("same basis").re.sqrt()
}

/// `sum_i (2 pi |k_i|)^{2 theta}` for every entry of a level-`n` array.
fn l_symbols(basis: &ChaosBasis, n: usize, theta: f64) -> Vec<f64> {
    let d = basis.dim();
    slot_sums(n, basis.slot_dim(), |s| (2.0 * PI * basis.norm(s / d)).powf(2.0 * theta))
}

/// `|| omega(N) (lambda - L_theta)^beta phi ||`.
pub fn fock_norm_weighted(phi: &ChaosVector, omega: impl Fn(usize) -> f64, beta: f64, lambda: f64, theta: f64) -> f64 {
    let basis = &phi.basis;
    let iv = basis.inv_volume();
    let mut total = 0.0;
    for (n, lv) in phi.levels.iter().enumerate() {
        let w = omega(n);
        if w == 0.0 || lv.iter().all(|z| z.norm_sqr() == 0.0) {
            continue;
        }
        let sym = l_symbols(basis, n, theta);
        let s: f64 = lv
            .iter()
            .zip(&sym)
            .filter(|(z, _)| z.norm_sqr() > 0.0)
            .map(|(z, a)| (lambda + a).powf(2.0 * beta) * z.norm_sqr())
            .sum();
        total += factorial(n) * w * w * iv.powi(n as i32) * s;
    }
    total.sqrt()
}

pub fn apply_l_theta(phi: &ChaosVector, theta: f64) -> ChaosVector {
    let basis = &phi.basis;
    phi.map_levels(|n, lv| {
        let sym = l_symbols(basis, n, theta);
        lv.iter().zip(&sym).map(|(z, a)| z * -a).collect()
    })
}

/// `(lambda - L_theta)^power` applied level-wise, scaled by `omega(n)`.
pub fn apply_resolvent_power(
    phi: &ChaosVector,
    omega: impl Fn(usize) -> f64,
    power: f64,
    lambda: f64,
    theta: f64,
) -> ChaosVector {
    let basis = &phi.basis;
    phi.map_levels(|n, lv| {
        let w = omega(n);
        if w == 0.0 || lv.iter().all(|z| *z == ZERO) {
            return vec![ZERO; lv.len()];
        }
        let sym = l_symbols(basis, n, theta);
        lv.iter().zip(&sym).map(|(&z, a)| if z == ZERO { ZERO } else { z * w * (lambda + a).powf(power) }).collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorSpec {
    pub cutoff: CutoffProfile,
    /// Multiplies the output; 1 gives the coupling-free operators.
    pub coupling: f64,
    /// Silently drop `p + q` terms that leave the basis instead of failing.
    pub allow_truncation: bool,
    /// Sign of the `k_i phi((l, p), (i, q), ..)` term in `G_-`.
    pub minus_sign: f64,
}

impl GeneratorSpec {
    pub fn new(cutoff: CutoffProfile) -> Self {
        Self { cutoff, coupling: 1.0, allow_truncation: false, minus_sign: 1.0 }
    }
}

/// Terms dropped because `p + q` left the basis, and mass pushed above `n_max`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TruncationReport {
    pub lost_terms: usize,
    pub level_overflow: bool,
}

fn r_coefficient(cut: &CutoffProfile, kp: &Wavevector, kq: &Wavevector) -> f64 {
    let s = [kp[0] + kq[0], kp[1] + kq[1], kp[2] + kq[2]];
    let n = |k: &Wavevector| (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
    cut.value_at_norm(n(kp)) * cut.value_at_norm(n(kq)) * cut.value_at_norm(n(&s))
}

/// Chaos-raising part: level `n` to level `n + 1`, projected and symmetrized.
pub fn apply_g_plus(phi: &ChaosVector, spec: &GeneratorSpec) -> Result<(ChaosVector, TruncationReport)> {
    let basis = phi.basis.clone();
    let d = basis.dim();
    let dim = basis.slot_dim();
    let nm = basis.n_modes();
    let mut out = ChaosVector::zeros(basis.clone(), phi.n_max());
    let mut report = TruncationReport::default();
    for n in 1..phi.levels.len() {
        let src = &phi.levels[n];
        if src.iter().all(|z| z.norm_sqr() == 0.0) {
            continue;
        }
        if n + 1 > phi.n_max() {
            report.level_overflow = true;
            continue;
        }
        let rest = dim.pow((n - 1) as u32);
        let mut raw = vec![ZERO; basis.level_len(n + 1)];
        for p1 in 0..nm {
            let k1 = basis.wavevector(p1);
            let j1 = basis.int_index(p1);
            for p2 in 0..nm {
                let k2 = basis.wavevector(p2);
                let r = r_coefficient(&spec.cutoff, &k1, &k2);
                if r == 0.0 {
                    continue;
                }
                let j2 = basis.int_index(p2);
                let js = [j1[0] + j2[0], j1[1] + j2[1], j1[2] + j2[2]];
                if js == [0, 0, 0] {
                    continue;
                }
                let Some(q) = basis.find(&js) else {
                    report.lost_terms += 1;
                    continue;
                };
                let ks = basis.wavevector(q);
                for m in 0..d {
                    let src_off = (q * d + m) * rest;
                    for j in 0..d {
                        let c = Complex64::new(0.0, 2.0 * PI * n as f64 * r * ks[j]) * spec.coupling;
                        if c == ZERO {
                            continue;
                        }
                        let dst_off = ((p1 * d + m) * dim + p2 * d + j) * rest;
                        for b in 0..rest {
                            raw[dst_off + b] += c * src[src_off + b];
                        }
                    }
                }
            }
        }
        for a in 0..n + 1 {
            project_slot(&mut raw, n + 1, a, &basis);
        }
        out.levels[n + 1] = symmetrize(&raw, n + 1, dim);
    }
    if report.lost_terms > 0 && !spec.allow_truncation {
        return Err(Error::BoxOverflow { lost: report.lost_terms });
    }
    Ok((out, report))
}

/// Chaos-lowering part: level `n + 1` to level `n`, projected and symmetrized.
pub fn apply_g_minus(psi: &ChaosVector, spec: &GeneratorSpec) -> Result<(ChaosVector, TruncationReport)> {
    let basis = psi.basis.clone();
    let d = basis.dim();
    let dim = basis.slot_dim();
    let nm = basis.n_modes();
    let iv = basis.inv_volume();
    let mut out = ChaosVector::zeros(basis.clone(), psi.n_max());
    let mut report = TruncationReport::default();
    // level 1 maps to level 0 with prefactor n (n+1) = 0
    for n in 1..psi.levels.len().saturating_sub(1) {
        let src = &psi.levels[n + 1];
        if src.iter().all(|z| z.norm_sqr() == 0.0) {
            continue;
        }
        let rest = dim.pow((n - 1) as u32);
        let pref = Complex64::new(0.0, 2.0 * PI * (n * (n + 1)) as f64 * iv) * spec.coupling;
        let mut raw = vec![ZERO; basis.level_len(n)];
        let mut acc = vec![ZERO; rest];
        for kpos in 0..nm {
            let k = basis.wavevector(kpos);
            let jk = basis.int_index(kpos);
            for l in 0..d {
                acc.fill(ZERO);
                for ppos in 0..nm {
                    let jp = basis.int_index(ppos);
                    let jq = [jk[0] - jp[0], jk[1] - jp[1], jk[2] - jp[2]];
                    if jq == [0, 0, 0] {
                        continue;
                    }
                    let p = basis.wavevector(ppos);
                    let qv = [k[0] - p[0], k[1] - p[1], k[2] - p[2]];
                    let r = r_coefficient(&spec.cutoff, &p, &qv);
                    if r == 0.0 {
                        continue;
                    }
                    let Some(qpos) = basis.find(&jq) else {
                        report.lost_terms += 1;
                        continue;
                    };
                    for i in 0..d {
                        // trace term p_l phi((i,p),(i,q), ..)
                        let tr_off = ((ppos * d + i) * dim + qpos * d + i) * rest;
                        // divergence term k_i phi((l,p),(i,q), ..)
                        let dv_off = ((ppos * d + l) * dim + qpos * d + i) * rest;
                        let ct = r * p[l];
                        let cd = r * spec.minus_sign * k[i];
                        for b in 0..rest {
                            acc[b] += src[tr_off + b] * ct + src[dv_off + b] * cd;
                        }
                    }
                }
                let dst = (kpos * d + l) * rest;
                for b in 0..rest {
                    raw[dst + b] = acc[b] * pref;
                }
            }
        }
        for a in 0..n {
            project_slot(&mut raw, n, a, &basis);
        }
        out.levels[n] = symmetrize(&raw, n, dim);
    }
    if report.lost_terms > 0 && !spec.allow_truncation {
        return Err(Error::BoxOverflow { lost: report.lost_terms });
    }
    Ok((out, report))
}

/// Evaluates the second-chaos functional `I_2(f)` on a field sample:
/// `M^{-2d} sum u_m(k1) u_j(k2) conj f((m,k1),(j,k2))` minus its mean.
pub fn chaos2_eval(f: &ChaosVector, u: &SpectralField) -> Result<f64> {
    let basis = &f.basis;
    let d = basis.dim();
    let dim = basis.slot_dim();
    let g = u.grid();
    if g.dim() != d || g.side() != basis.side() {
        return Err(Error::ShapeMismatch("field and chaos basis disagree on torus".into()));
    }
    let coeff: Vec<Complex64> = (0..dim)
        .map(|s| {
            let j = basis.int_index(s / d);
            g.index_of(&j[..d]).map_or(ZERO, |m| u.get(s % d, m))
        })
        .collect();
    let lv = &f.levels[2];
    let mut total = ZERO;
    for a in 0..dim {
        if coeff[a] == ZERO {
            continue;
        }
        let row = &lv[a * dim..(a + 1) * dim];
        let mut s = ZERO;
        for b in 0..dim {
            s += coeff[b] * row[b].conj();
        }
        total += coeff[a] * s;
    }
    // E[u_m(k) u_j(-k)] = M^d P_mj(k)
    let mut trace = ZERO;
    for pos in 0..basis.n_modes() {
        let k = basis.wavevector(pos);
        let nk = basis.neg(pos);
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        for m in 0..d {
            for j in 0..d {
                let pmj = if m == j { 1.0 } else { 0.0 } - k[m] * k[j] / k2;
                trace += lv[(pos * d + m) * dim + nk * d + j].conj() * pmj;
            }
        }
    }
    let iv = basis.inv_volume();
    Ok(((total * iv * iv) - trace * iv).re)
}

/// Which half of the generator a ratio bound refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorPart {
    Plus,
    Minus,
}

/// `lambda_theta^zeta = (d+2)/(4 theta) + zeta (max(1, theta) - 1)/(2 theta)`.
pub fn lambda_theta_zeta(d: usize, theta: f64, zeta: f64) -> f64 {
    (d as f64 + 2.0) / (4.0 * theta) + zeta * (theta.max(1.0) - 1.0) / (2.0 * theta)
}

/// Power of the number operator on the right-hand side of the bounds.
pub fn number_exponent(theta: f64, zeta: f64) -> f64 {
    1.0 + (1.0 - zeta) / 2.0 * (1.0 - 1.0 / theta.max(1.0))
}

/// Open interval of `beta` for which the bound is asserted.
pub fn admissible_beta(part: GeneratorPart, d: usize, theta: f64, zeta: f64) -> (f64, f64) {
    let lo = d as f64 / (4.0 * theta);
    match part {
        GeneratorPart::Minus => (lo, f64::INFINITY),
        GeneratorPart::Plus => (f64::NEG_INFINITY, lambda_theta_zeta(d, theta, zeta) - lo),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RatioBoundParams {
    pub part: GeneratorPart,
    pub theta: f64,
    pub beta: f64,
    pub zeta: f64,
    pub lambda: f64,
    /// Input chaos level (output is one above or below).
    pub level: usize,
    pub trials: usize,
    /// Power-iteration sweeps per trial.
    pub iterations: usize,
}

/// Left- and right-hand sides of the weighted generator bound for one vector.
pub fn ratio_sides(
    phi: &ChaosVector,
    spec: &GeneratorSpec,
    params: &RatioBoundParams,
    omega: &dyn Fn(usize) -> f64,
) -> Result<(f64, f64)> {
    let d = phi.basis.dim();
    let lz = lambda_theta_zeta(d, params.theta, params.zeta);
    let e = number_exponent(params.theta, params.zeta);
    let (g, shift) = match params.part {
        GeneratorPart::Plus => (apply_g_plus(phi, spec)?.0, 1.0),
        GeneratorPart::Minus => (apply_g_minus(phi, spec)?.0, -1.0),
    };
    let lhs = fock_norm_weighted(&g, omega, params.beta - lz, params.lambda, params.theta);
    let rhs = fock_norm_weighted(
        phi,
        |n| (n as f64).powf(e) * omega((n as f64 + shift).max(0.0) as usize),
        params.beta,
        params.lambda,
        params.theta,
    );
    Ok((lhs, rhs))
}

/// Largest observed `LHS / RHS` of the weighted generator bound over random
/// starts refined by power iteration on the weighted operator.
pub fn estimate_ratio_bounds<R: Rng>(
    basis: Arc<ChaosBasis>,
    spec: &GeneratorSpec,
    params: &RatioBoundParams,
    omega: &dyn Fn(usize) -> f64,
    rng: &mut R,
) -> Result<f64> {
    let n_in = params.level;
    let n_out = match params.part {
        GeneratorPart::Plus => n_in + 1,
        GeneratorPart::Minus => n_in
            .checked_sub(1)
            .ok_or_else(|| Error::InvalidParameter("lowering part needs input level at least 1".into()))?,
    };
    let n_max = n_in.max(n_out);
    let d = basis.dim();
    let lz = lambda_theta_zeta(d, params.theta, params.zeta);
    let e = number_exponent(params.theta, params.zeta);
    let shift: i64 = if params.part == GeneratorPart::Plus { 1 } else { -1 };
    let w_in = |n: usize| (n as f64).powf(e) * omega((n as i64 + shift).max(0) as usize);
    // the resolvent weights are fixed, so tabulate them once per level
    let weights = |n: usize, w: f64, power: f64| -> Vec<f64> {
        l_symbols(&basis, n, params.theta).iter().map(|a| w * (params.lambda + a).powf(power)).collect()
    };
    let win = weights(n_in, 1.0 / w_in(n_in), -params.beta);
    let wout = weights(n_out, omega(n_out), params.beta - lz);
    let scaled = |x: &ChaosVector, n: usize, w: &[f64]| -> ChaosVector {
        let mut y = ChaosVector::zeros(x.basis.clone(), x.n_max());
        for ((o, z), f) in y.levels[n].iter_mut().zip(&x.levels[n]).zip(w) {
            *o = z * f;
        }
        y
    };
    let forward = |x: &ChaosVector| -> Result<ChaosVector> {
        let y = scaled(x, n_in, &win);
        let g = match params.part {
            GeneratorPart::Plus => apply_g_plus(&y, spec)?.0,
            GeneratorPart::Minus => apply_g_minus(&y, spec)?.0,
        };
        Ok(scaled(&g, n_out, &wout))
    };
    // adjoint of G_+ is -G_-, and vice versa; the sign is irrelevant here
    let adjoint = |y: &ChaosVector| -> Result<ChaosVector> {
        let z = scaled(y, n_out, &wout);
        let g = match params.part {
            GeneratorPart::Plus => apply_g_minus(&z, spec)?.0,
            GeneratorPart::Minus => apply_g_plus(&z, spec)?.0,
        };
        Ok(scaled(&g, n_in, &win))
    };
    let mut best: f64 = 0.0;
    for _ in 0..params.trials.max(1) {
        let mut x = ChaosVector::random(basis.clone(), n_max, &[n_in], rng, |_| 1.0);
        for it in 0..=params.iterations {
            let nx = fock_norm(&x);
            if nx == 0.0 {
                break;
            }
            let y = forward(&x)?;
            best = best.max(fock_norm(&y) / nx);
            if it == params.iterations {
                break;
            }
            let z = adjoint(&y)?;
            let nz = fock_norm(&z);
            if nz == 0.0 {
                break;
            }
            x = z;
        }
    }
    Ok(best)
}

/// Direct lattice sum
/// `M^{-d} N^{2-d} sum_{l + m = k} |R_{l,m}|^2 / (lambda + |l|^2 + |m|^2)`.
pub fn vartheta_n(k: &[f64], lambda: f64, cutoff: &CutoffProfile, side: f64) -> f64 {
    let d = k.len();
    let n = cutoff.radius;
    let half = (n * side * (1.0 + 1e-12)).floor() as i64;
    let kn = (k.iter().map(|x| x * x).sum::<f64>()).sqrt();
    let rk = cutoff.value_at_norm(kn);
    if rk == 0.0 {
        return 0.0;
    }
    let mut total = 0.0;
    let mut j = [0i64; 3];
    let w = 2 * half + 1;
    let count = (w as usize).pow(d as u32);
    for lin in 0..count {
        let mut rest = lin as i64;
        for a in (0..d).rev() {
            j[a] = rest % w - half;
            rest /= w;
        }
        let mut l2 = 0.0;
        let mut m2 = 0.0;
        for a in 0..d {
            let l = j[a] as f64 / side;
            l2 += l * l;
            m2 += (k[a] - l) * (k[a] - l);
        }
        let r = cutoff.value_at_norm(l2.sqrt()) * cutoff.value_at_norm(m2.sqrt()) * rk;
        if r == 0.0 {
            continue;
        }
        total += r * r / (lambda + l2 + m2);
    }
    total * side.powi(-(d as i32)) * n.powf(2.0 - d as f64)
}

/// `Theta_r(k_N) = int_{B(0,r) cap B(k_N,r)} dx / (eps + |x|^2 + |k_N - x|^2)`
/// in polar coordinates about the origin; the angular integral is exact.
pub fn theta_integral(k_n: &[f64], r: f64, eps: f64) -> f64 {
    let d = k_n.len();
    let kn = k_n.iter().map(|x| x * x).sum::<f64>().sqrt();
    let radial = |s: f64| -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let a = eps + 2.0 * s * s + kn * kn;
        if kn == 0.0 {
            return if d == 3 { 4.0 * PI * s * s / a } else { 2.0 * PI * s / a };
        }
        let b = 2.0 * s * kn;
        let cmin = ((s * s + kn * kn - r * r) / b).max(-1.0);
        if cmin >= 1.0 {
            return 0.0;
        }
        if d == 3 {
            // 2 pi int_{cmin}^1 dc / (a - b c)
            2.0 * PI * s * s * (b * (1.0 - cmin) / (a - b)).ln_1p() / b
        } else {
            // int_{-phi0}^{phi0} dphi / (a - b cos phi)
            let phi0 = cmin.acos();
            let root = ((a - b) * (a + b)).sqrt();
            let t = ((a + b) / (a - b)).sqrt() * (phi0 / 2.0).tan();
            let val = if phi0 >= PI - 1e-15 { PI / 2.0 } else { t.atan() };
            s * 4.0 * val / root
        }
    };
    let mut breaks = vec![0.0, r];
    for b in [r - kn, kn - r] {
        if b > 0.0 && b < r {
            breaks.push(b);
        }
    }
    breaks.sort_by(|a, b| a.total_cmp(b));
    breaks.windows(2).map(|w| adaptive_gk(&radial, w[0], w[1], 1e-11, 40)).sum()
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GK_WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Gauss-Kronrod 7/15 on `[a, b]`: `(kronrod, |kronrod - gauss|)`.
fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = GK_WK[7] * fc;
    let mut g = GK_WG[3] * fc;
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let s = f(c - x) + f(c + x);
        k += GK_WK[i] * s;
        if i % 2 == 1 {
            g += GK_WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Recursive bisection until the Kronrod-Gauss gap meets `tol` (relative to the estimate).
pub fn adaptive_gk(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (v, err) = gk15(f, a, b);
    if depth == 0 || err <= tol * v.abs().max(1e-300) {
        return v;
    }
    let m = 0.5 * (a + b);
    adaptive_gk(f, a, m, tol, depth - 1) + adaptive_gk(f, m, b, tol, depth - 1)
}
