//! Galerkin-truncated dynamics: the nonlinearity `B^N`, the coupling
//! constants, the exponential-Euler integrator and the rescaling map.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::forcing::{NoiseParams, NoiseSampler};
use crate::grid::{cutoff_half_width, dealias_points, WaveGrid, Wavevector};
use crate::operators::{frac_symbol, project_vec, CutoffProfile, FracPower};
use crate::rng::{counter_rng, Purpose};
use crate::transform::Transform;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// `lambda_{N,theta} = lambda N^{2 theta - (d+2)/2}`.
pub fn lambda_scaled(lambda: f64, n: f64, theta: f64, d: usize) -> f64 {
    lambda * n.powf(2.0 * theta - (d as f64 + 2.0) / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingMode {
    /// `lambda_{N,theta}` from the bare `lambda`.
    Bare,
    /// `lambda_hat` used as is.
    Fixed,
    /// `lambda_hat / ln N`.
    #[serde(rename = "weak-coupling-2d")]
    WeakCoupling2d,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsConfig {
    pub theta: f64,
    pub lambda: f64,
    pub lambda_hat: f64,
    pub cutoff: CutoffProfile,
    pub dt: f64,
    pub horizon: f64,
    pub mode: CouplingMode,
    /// Multiply the forcing by the cutoff profile as well.
    #[serde(default)]
    pub mollify_noise: bool,
}

impl DynamicsConfig {
    /// Bare coupling `lambda = 1`, sharp cutoff, default time step, horizon one step.
    pub fn new(theta: f64, cutoff_radius: f64) -> Self {
        let dt = Self::default_dt(theta, cutoff_radius);
        Self {
            theta,
            lambda: 1.0,
            lambda_hat: 0.0,
            cutoff: CutoffProfile::sharp(cutoff_radius),
            dt,
            horizon: dt,
            mode: CouplingMode::Bare,
            mollify_noise: false,
        }
    }

    /// `0.1 / (2 pi N)^{2 theta}`: a tenth of the fastest retained relaxation time.
    pub fn default_dt(theta: f64, n: f64) -> f64 {
        0.1 / (2.0 * PI * n).powf(2.0 * theta)
    }

    pub fn cutoff_radius(&self) -> f64 {
        self.cutoff.radius
    }

    /// Prefactor multiplying `B^N` in the drift.
    pub fn coupling(&self, d: usize) -> f64 {
        let n = self.cutoff.radius;
        match self.mode {
            CouplingMode::Bare => lambda_scaled(self.lambda, n, self.theta, d),
            CouplingMode::Fixed => self.lambda_hat,
            CouplingMode::WeakCoupling2d => self.lambda_hat / n.ln(),
        }
    }

    pub fn steps(&self) -> u64 {
        (self.horizon / self.dt).round() as u64
    }

    pub fn validate(&self, grid: &WaveGrid) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.theta > 0.0) {
            return bad(format!("theta must be positive, got {}", self.theta));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.horizon >= self.dt) {
            return bad(format!("horizon {} shorter than dt {}", self.horizon, self.dt));
        }
        if !(self.cutoff.radius >= 1.0) {
            return bad(format!("cutoff radius must be at least 1, got {}", self.cutoff.radius));
        }
        if self.mode == CouplingMode::WeakCoupling2d && grid.dim() != 2 {
            return bad("weak-coupling mode is two-dimensional".into());
        }
        check_dealiasing(grid, &self.cutoff)
    }
}

/// Largest integer index reachable by the cutoff inside the stored box.
fn cutoff_band(grid: &WaveGrid, cutoff: &CutoffProfile) -> usize {
    cutoff_half_width(cutoff.radius, grid.side()).min(grid.half_width())
}

/// Collocation points needed for an alias-free `B^N` on this grid.
pub fn required_points(grid: &WaveGrid, cutoff: &CutoffProfile) -> usize {
    dealias_points(cutoff_band(grid, cutoff))
}

pub fn check_dealiasing(grid: &WaveGrid, cutoff: &CutoffProfile) -> Result<()> {
    let required = required_points(grid, cutoff);
    if grid.points_per_axis() < required {
        return Err(Error::AliasingRule { points: grid.points_per_axis(), required });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
struct BallMode {
    m: usize,
    f: usize,
    fneg: usize,
    k: Wavevector,
    rho: f64,
}

/// Reusable workspace evaluating `B^N(u) = rho * P div((rho * u) (x) (rho * u))`
/// pseudo-spectrally. Owns FFT scratch; one per thread.
#[derive(Debug, Clone)]
pub struct Nonlinearity {
    grid: WaveGrid,
    transform: Transform,
    band: usize,
    /// Canonical half of the modes with `rho > 0`.
    modes: Vec<BallMode>,
    bufs: Vec<Vec<Complex64>>,
    max_speed: f64,
}

impl Nonlinearity {
    pub fn new(grid: WaveGrid, cutoff: &CutoffProfile) -> Result<Self> {
        check_dealiasing(&grid, cutoff)?;
        let modes = grid
            .half_modes()
            .filter_map(|m| {
                let k = grid.wavevector(m);
                let rho = cutoff.value(&k[..grid.dim()]);
                (rho > 0.0).then(|| BallMode { m, f: grid.fft_index(m), fneg: grid.fft_index(grid.neg(m)), k, rho })
            })
            .collect();
        let nbuf = if grid.dim() == 3 { 3 } else { 2 };
        Ok(Self {
            grid,
            transform: Transform::new(grid),
            band: cutoff_band(&grid, cutoff),
            modes,
            bufs: vec![vec![ZERO; grid.n_points()]; nbuf],
            max_speed: 0.0,
        })
    }

    pub fn grid(&self) -> &WaveGrid {
        &self.grid
    }

    /// `max_x |rho * u|` from the last evaluation.
    pub fn max_speed(&self) -> f64 {
        self.max_speed
    }

    /// Number of `(k, -k)` pairs inside the cutoff.
    pub fn active_pairs(&self) -> usize {
        self.modes.len()
    }

    pub fn apply(&mut self, u: &SpectralField) -> Result<SpectralField> {
        if *u.grid() != self.grid {
            return Err(Error::ShapeMismatch("field grid differs from nonlinearity grid".into()));
        }
        let mut out = SpectralField::zeros(self.grid);
        self.apply_coeffs(u.coeffs(), out.coeffs_mut());
        Ok(out)
    }

    /// Raw form of [`Nonlinearity::apply`] on component-major coefficient slices.
    pub fn apply_coeffs(&mut self, u: &[Complex64], out: &mut [Complex64]) {
        let g = self.grid;
        let n = g.n_modes();
        let d = g.dim();
        let inv_vol = 1.0 / g.volume();
        let fwd_norm = (g.side() / g.points_per_axis() as f64).powi(d as i32);
        let i1 = Complex64::new(0.0, 1.0);

        for b in &mut self.bufs {
            b.fill(ZERO);
        }
        for bm in &self.modes {
            let s = bm.rho * inv_vol;
            let v0 = u[bm.m] * s;
            let v1 = u[n + bm.m] * s;
            let vn0 = u[n - 1 - bm.m] * s;
            let vn1 = u[n + n - 1 - bm.m] * s;
            self.bufs[0][bm.f] = v0 + v1 * i1;
            self.bufs[0][bm.fneg] = vn0 + vn1 * i1;
            if d == 3 {
                self.bufs[1][bm.f] = u[2 * n + bm.m] * s;
                self.bufs[1][bm.fneg] = u[3 * n - 1 - bm.m] * s;
            }
        }
        let band = self.band;
        let (b0, rest) = self.bufs.split_first_mut().expect("buffers");
        self.transform.inverse_raw(b0, band);
        let mut vmax2: f64 = 0.0;
        if d == 3 {
            let (b1, rest) = rest.split_first_mut().expect("buffers");
            let b2 = &mut rest[0];
            self.transform.inverse_raw(b1, band);
            for idx in 0..b0.len() {
                let a = b0[idx].re;
                let b = b0[idx].im;
                let c = b1[idx].re;
                vmax2 = vmax2.max(a * a + b * b + c * c);
                b0[idx] = Complex64::new(a * a, a * b);
                b1[idx] = Complex64::new(a * c, b * b);
                b2[idx] = Complex64::new(b * c, c * c);
            }
            self.transform.forward_raw(b0, band);
            self.transform.forward_raw(b1, band);
            self.transform.forward_raw(b2, band);
        } else {
            let b1 = &mut rest[0];
            for idx in 0..b0.len() {
                let a = b0[idx].re;
                let b = b0[idx].im;
                vmax2 = vmax2.max(a * a + b * b);
                b0[idx] = Complex64::new(a * a, a * b);
                b1[idx] = Complex64::new(b * b, 0.0);
            }
            self.transform.forward_raw(b0, band);
            self.transform.forward_raw(b1, band);
        }
        self.max_speed = vmax2.sqrt();

        out.fill(ZERO);
        let unpack = |buf: &[Complex64], bm: &BallMode| -> (Complex64, Complex64) {
            let zp = buf[bm.f];
            let zm = buf[bm.fneg].conj();
            ((zp + zm) * (0.5 * fwd_norm), (zp - zm) * Complex64::new(0.0, -0.5 * fwd_norm))
        };
        let two_pi_i = Complex64::new(0.0, 2.0 * PI);
        for bm in &self.modes {
            let k = bm.k;
            let mut w = [[ZERO; 3]; 3];
            if d == 3 {
                let (w00, w01) = unpack(&self.bufs[0], bm);
                let (w02, w11) = unpack(&self.bufs[1], bm);
                let (w12, w22) = unpack(&self.bufs[2], bm);
                w = [[w00, w01, w02], [w01, w11, w12], [w02, w12, w22]];
            } else {
                let (w00, w01) = unpack(&self.bufs[0], bm);
                let (w11, _) = unpack(&self.bufs[1], bm);
                w[0][0] = w00;
                w[0][1] = w01;
                w[1][0] = w01;
                w[1][1] = w11;
            }
            let mut v = [ZERO; 3];
            for i in 0..d {
                let mut s = ZERO;
                for j in 0..d {
                    s += w[i][j] * k[j];
                }
                v[i] = s * two_pi_i;
            }
            project_vec(&k, d, &mut v[..d]);
            for c in 0..d {
                let z = v[c] * bm.rho;
                out[c * n + bm.m] = z;
                out[c * n + n - 1 - bm.m] = z.conj();
            }
        }
    }
}

/// One-shot `B^N(u)`.
pub fn nonlinearity_bn(u: &SpectralField, cutoff: &CutoffProfile) -> Result<SpectralField> {
    Nonlinearity::new(*u.grid(), cutoff)?.apply(u)
}

/// `<u, v>_{L^2} / (|u| |v|)`, zero if either vanishes.
pub fn relative_pairing(u: &[Complex64], v: &[Complex64], volume: f64) -> f64 {
    let uv: f64 = u.iter().zip(v).map(|(a, b)| (a * b.conj()).re).sum::<f64>() / volume;
    let nu = (u.iter().map(|z| z.norm_sqr()).sum::<f64>() / volume).sqrt();
    let nv = (v.iter().map(|z| z.norm_sqr()).sum::<f64>() / volume).sqrt();
    if nu == 0.0 || nv == 0.0 {
        0.0
    } else {
        uv / (nu * nv)
    }
}

#[derive(Debug, Clone)]
pub enum InitialState {
    /// Exact draw from the invariant white-noise measure.
    WhiteNoise,
    Zero,
    Field(SpectralField),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    /// Largest `|<u, B^N(u)>| / (|u| |B^N(u)|)` seen so far.
    pub max_energy_pairing: f64,
    pub last_energy_pairing: f64,
    /// Steps where `dt * coupling * max|v| * 2 pi N > 0.5`.
    pub cfl_violations: u64,
}

/// A single trajectory of the truncated equation, integrated with
/// exponential Euler and exact Ornstein-Uhlenbeck noise.
#[derive(Debug, Clone)]
pub struct Trajectory {
    grid: WaveGrid,
    config: DynamicsConfig,
    seed: u64,
    stream_id: u64,
    step: u64,
    u: SpectralField,
    coupling: f64,
    nl: Option<Nonlinearity>,
    sampler: NoiseSampler,
    decay: Vec<f64>,
    drift: Vec<f64>,
    noise_amp: Vec<f64>,
    bn: Vec<Complex64>,
    bn_valid: bool,
    noise: Vec<Complex64>,
    diag: StepDiagnostics,
}

impl Trajectory {
    pub fn new(
        grid: WaveGrid,
        config: DynamicsConfig,
        seed: u64,
        stream_id: u64,
        initial: InitialState,
    ) -> Result<Self> {
        config.validate(&grid)?;
        let u = match initial {
            InitialState::WhiteNoise => {
                crate::forcing::sample_divfree_white_noise(grid, &NoiseParams::new(config.theta, seed, stream_id))
            }
            InitialState::Zero => SpectralField::zeros(grid),
            InitialState::Field(f) => {
                if *f.grid() != grid {
                    return Err(Error::ShapeMismatch("initial field grid differs".into()));
                }
                f
            }
        };
        Self::assemble(grid, config, seed, stream_id, 0, u)
    }

    /// Rebuilds a trajectory at a given step, e.g. from a checkpoint.
    pub fn restore(config: DynamicsConfig, seed: u64, stream_id: u64, step: u64, state: SpectralField) -> Result<Self> {
        let grid = *state.grid();
        config.validate(&grid)?;
        Self::assemble(grid, config, seed, stream_id, step, state)
    }

    fn assemble(
        grid: WaveGrid,
        config: DynamicsConfig,
        seed: u64,
        stream_id: u64,
        step: u64,
        u: SpectralField,
    ) -> Result<Self> {
        let coupling = config.coupling(grid.dim());
        let nl = if coupling != 0.0 { Some(Nonlinearity::new(grid, &config.cutoff)?) } else { None };
        let half = grid.zero_index();
        let mut decay = Vec::with_capacity(half);
        let mut drift = Vec::with_capacity(half);
        let mut noise_amp = Vec::with_capacity(half);
        for m in grid.half_modes() {
            let knorm = grid.norm2(m).sqrt();
            let a = frac_symbol(knorm, config.theta, FracPower::Forward);
            let e = (-a * config.dt).exp();
            decay.push(e);
            // coupling * phi_1(a dt) * dt, with the expm1 form for accuracy
            drift.push(coupling * (-(-a * config.dt).exp_m1()) / a);
            let mut amp = (-(-2.0 * a * config.dt).exp_m1()).sqrt();
            if config.mollify_noise {
                amp *= config.cutoff.value_at_norm(knorm);
            }
            noise_amp.push(amp);
        }
        let len = grid.dim() * grid.n_modes();
        Ok(Self {
            grid,
            sampler: NoiseSampler::new(grid),
            config,
            seed,
            stream_id,
            step,
            u,
            coupling,
            nl,
            decay,
            drift,
            noise_amp,
            bn: vec![ZERO; len],
            bn_valid: false,
            noise: vec![ZERO; len],
            diag: StepDiagnostics::default(),
        })
    }

    pub fn grid(&self) -> &WaveGrid {
        &self.grid
    }

    pub fn config(&self) -> &DynamicsConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn step_index(&self) -> u64 {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.config.dt
    }

    pub fn state(&self) -> &SpectralField {
        &self.u
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn diagnostics(&self) -> StepDiagnostics {
        self.diag
    }

    /// `B^N(u)` at the current state (without the coupling factor).
    pub fn current_bn(&mut self) -> &[Complex64] {
        self.ensure_bn();
        &self.bn
    }

    fn ensure_bn(&mut self) {
        if self.bn_valid {
            return;
        }
        match &mut self.nl {
            Some(nl) => {
                nl.apply_coeffs(self.u.coeffs(), &mut self.bn);
                let pairing = relative_pairing(self.u.coeffs(), &self.bn, self.grid.volume());
                self.diag.last_energy_pairing = pairing;
                self.diag.max_energy_pairing = self.diag.max_energy_pairing.max(pairing.abs());
                let cfl = self.config.dt * self.coupling.abs() * nl.max_speed() * 2.0 * PI * self.config.cutoff.radius;
                if cfl > 0.5 {
                    self.diag.cfl_violations += 1;
                }
            }
            None => self.bn.fill(ZERO),
        }
        self.bn_valid = true;
    }

    pub fn step(&mut self) -> Result<()> {
        let mut rng = counter_rng(self.seed, Purpose::Forcing, self.stream_id, self.step);
        let amp = &self.noise_amp;
        self.sampler.fill(&mut rng, |m| amp[m], &mut self.noise);
        self.advance()
    }

    /// Steps with a caller-supplied noise increment in place of the internal draw.
    /// `noise` must be conjugate symmetric with the covariance of [`Self::noise_amplitudes`].
    pub fn step_with_noise(&mut self, noise: &[Complex64]) -> Result<()> {
        if noise.len() != self.noise.len() {
            return Err(Error::ShapeMismatch("noise increment has wrong length".into()));
        }
        self.noise.copy_from_slice(noise);
        self.advance()
    }

    /// `sqrt(1 - e^{-2 a_k dt})` per canonical half-box mode.
    pub fn noise_amplitudes(&self) -> &[f64] {
        &self.noise_amp
    }

    fn advance(&mut self) -> Result<()> {
        let nonlinear = self.nl.is_some();
        if nonlinear {
            self.ensure_bn();
        }
        let n = self.grid.n_modes();
        let d = self.grid.dim();
        let coeffs = self.u.coeffs_mut();
        let mut finite = true;
        for m in 0..n / 2 {
            let e = self.decay[m];
            let dr = self.drift[m];
            for c in 0..d {
                let i = c * n + m;
                let mut z = coeffs[i] * e + self.noise[i];
                if nonlinear {
                    z -= self.bn[i] * dr;
                }
                finite &= z.re.is_finite() && z.im.is_finite();
                coeffs[i] = z;
                coeffs[c * n + n - 1 - m] = z.conj();
            }
        }
        self.bn_valid = false;
        self.step += 1;
        if !finite {
            return Err(Error::NumericalAbort { step: self.step, reason: "non-finite coefficient".into() });
        }
        Ok(())
    }

    /// Advances `steps` steps, calling `observe` before each step and once at the end.
    pub fn run(&mut self, steps: u64, mut observe: impl FnMut(&mut Self)) -> Result<()> {
        for _ in 0..steps {
            observe(self);
            self.step()?;
        }
        observe(self);
        Ok(())
    }
}

/// Test functional `phi -> <B, phi>_{L^2}` stored sparsely.
#[derive(Debug, Clone)]
pub struct TestFunctional {
    entries: Vec<(usize, Complex64)>,
    inv_volume: f64,
}

impl TestFunctional {
    pub fn new(phi: &SpectralField) -> Self {
        let entries =
            phi.coeffs().iter().enumerate().filter(|(_, z)| z.norm_sqr() > 0.0).map(|(i, z)| (i, z.conj())).collect();
        Self { entries, inv_volume: 1.0 / phi.grid().volume() }
    }

    /// `<v, phi>_{L^2}` for coefficient slice `v`.
    pub fn eval(&self, v: &[Complex64]) -> f64 {
        self.entries.iter().map(|&(i, pc)| (v[i] * pc).re).sum::<f64>() * self.inv_volume
    }
}

/// Trapezoid quadrature of `t -> coupling <B^N(u_t), phi>` on the step grid,
/// with the same rule on the doubled step for a Richardson error estimate.
#[derive(Debug, Clone)]
pub struct DuhamelAccumulator {
    tests: Vec<TestFunctional>,
    scale: f64,
    dt: f64,
    count: u64,
    first: Vec<f64>,
    last: Vec<f64>,
    sum_all: Vec<f64>,
    sum_even: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DuhamelValue {
    pub value: f64,
    /// Richardson estimate of `value - exact`, `(I_2dt - I_dt) / 3`; absent for an odd number of intervals.
    pub refinement_error: Option<f64>,
}

impl DuhamelAccumulator {
    /// `scale` is the coupling multiplying `B^N`.
    pub fn new(tests: &[SpectralField], scale: f64, dt: f64) -> Self {
        let p = tests.len();
        Self {
            tests: tests.iter().map(TestFunctional::new).collect(),
            scale,
            dt,
            count: 0,
            first: vec![0.0; p],
            last: vec![0.0; p],
            sum_all: vec![0.0; p],
            sum_even: vec![0.0; p],
        }
    }

    /// Records the integrand at the next grid time from `B^N(u_t)`.
    pub fn record(&mut self, bn: &[Complex64]) {
        let even = self.count % 2 == 0;
        for (a, t) in self.tests.iter().enumerate() {
            let f = self.scale * t.eval(bn);
            if self.count == 0 {
                self.first[a] = f;
            }
            self.last[a] = f;
            self.sum_all[a] += f;
            if even {
                self.sum_even[a] += f;
            }
        }
        self.count += 1;
    }

    pub fn intervals(&self) -> u64 {
        self.count.saturating_sub(1)
    }

    pub fn finish(&self) -> Vec<DuhamelValue> {
        let intervals = self.intervals();
        (0..self.tests.len())
            .map(|a| {
                if intervals == 0 {
                    return DuhamelValue { value: 0.0, refinement_error: Some(0.0) };
                }
                let ends = 0.5 * (self.first[a] + self.last[a]);
                let fine = self.dt * (self.sum_all[a] - ends);
                let refinement_error = (intervals % 2 == 0).then(|| {
                    let coarse = 2.0 * self.dt * (self.sum_even[a] - ends);
                    (coarse - fine) / 3.0
                });
                DuhamelValue { value: fine, refinement_error }
            })
            .collect()
    }
}

/// `int_0^T coupling B^N(u_s)(phi) ds` along a trajectory for each test field.
pub fn duhamel_nonlinear_functional(
    traj: &mut Trajectory,
    tests: &[SpectralField],
    steps: u64,
) -> Result<Vec<DuhamelValue>> {
    let mut acc = DuhamelAccumulator::new(tests, traj.coupling(), traj.config().dt);
    traj.run(steps, |t| {
        let bn = t.current_bn();
        acc.record(bn);
    })?;
    Ok(acc.finish())
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub final_state: SpectralField,
    pub snapshots: Vec<(u64, SpectralField)>,
    pub diagnostics: StepDiagnostics,
    pub duhamel: Vec<DuhamelValue>,
}

/// Runs one trajectory to the configured horizon, keeping every
/// `snapshot_stride`-th state (0 keeps none) and the Duhamel integrals of `tests`.
pub fn simulate(
    grid: WaveGrid,
    config: DynamicsConfig,
    seed: u64,
    stream_id: u64,
    initial: InitialState,
    snapshot_stride: u64,
    tests: &[SpectralField],
) -> Result<SimulationOutput> {
    let steps = config.steps();
    let mut traj = Trajectory::new(grid, config, seed, stream_id, initial)?;
    let mut acc = DuhamelAccumulator::new(tests, traj.coupling(), traj.config().dt);
    let mut snapshots = Vec::new();
    let want_b = !tests.is_empty();
    traj.run(steps, |t| {
        if snapshot_stride > 0 && t.step_index() % snapshot_stride == 0 {
            snapshots.push((t.step_index(), t.state().clone()));
        }
        if want_b {
            let bn = t.current_bn();
            acc.record(bn);
        }
    })?;
    Ok(SimulationOutput {
        final_state: traj.state().clone(),
        snapshots,
        diagnostics: traj.diagnostics(),
        duhamel: acc.finish(),
    })
}

/// `u^N(x) = N^{d/2} u(N x)`: field on a torus of side `M N` to one of side `M`.
///
/// Integer mode indices are preserved (source wavevector `j/(M N)` becomes
/// target wavevector `j/M`) and coefficients pick up `N^{-d/2}`.
pub fn rescale_field(u: &SpectralField, n: f64) -> Result<SpectralField> {
    if !(n >= 1.0) || n.fract() != 0.0 {
        return Err(Error::InvalidParameter(format!("rescaling factor must be a positive integer, got {n}")));
    }
    let src = u.grid();
    let target = WaveGrid::new(src.dim(), src.side() / n, src.modes_per_axis(), src.points_per_axis())?;
    let mut coeffs = u.coeffs().to_vec();
    let s = n.powf(-(src.dim() as f64) / 2.0);
    for z in &mut coeffs {
        *z *= s;
    }
    SpectralField::from_coeffs(target, coeffs)
}

/// Source time corresponding to rescaled time `t`: `N^{2 theta} t`.
pub fn rescale_time(t: f64, n: f64, theta: f64) -> f64 {
    n.powf(2.0 * theta) * t
}
