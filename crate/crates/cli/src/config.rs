//! TOML experiment configuration. One file describes one experiment.

use fracns::{CouplingMode, CutoffProfile, DynamicsConfig, WaveGrid};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Invariance,
    EnergyIdentity,
    TrivialityScan,
    DiffusivityScan,
    #[serde(rename = "weak-coupling-2d")]
    WeakCoupling2d,
    NoiseEquivalence,
    OperatorChecks,
    VarthetaLimit,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Invariance => "invariance",
            Self::EnergyIdentity => "energy-identity",
            Self::TrivialityScan => "triviality-scan",
            Self::DiffusivityScan => "diffusivity-scan",
            Self::WeakCoupling2d => "weak-coupling-2d",
            Self::NoiseEquivalence => "noise-equivalence",
            Self::OperatorChecks => "operator-checks",
            Self::VarthetaLimit => "vartheta-limit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_ensemble")]
    pub ensemble: usize,
    #[serde(default = "one")]
    pub snapshot_stride: u64,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub dynamics: DynamicsSection,
    #[serde(default)]
    pub invariance: InvarianceSection,
    #[serde(default)]
    pub energy: EnergySection,
    #[serde(default)]
    pub triviality: TrivialitySection,
    #[serde(default)]
    pub diffusivity: DiffusivitySection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub operators: OperatorSection,
    #[serde(default)]
    pub vartheta: VarthetaSection,
}

fn default_ensemble() -> usize {
    16
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// NDJSON record file; records go to stdout when absent.
    pub records: Option<PathBuf>,
    /// CSV summary table.
    pub summary: Option<PathBuf>,
    /// Directory for trajectory checkpoints.
    pub checkpoints: Option<PathBuf>,
    /// Write a checkpoint every this many steps (0: only on abort).
    pub checkpoint_every: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutoffShape {
    Sharp,
    Smooth,
}

/// Either a number or `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TimeStep {
    Fixed(f64),
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AutoTag {
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsSection {
    pub d: usize,
    pub side: f64,
    pub cutoff: f64,
    pub cutoff_shape: CutoffShape,
    pub theta: f64,
    pub coupling: CouplingMode,
    pub lambda: f64,
    pub lambda_hat: f64,
    pub dt: TimeStep,
    pub horizon: f64,
    pub mollify_noise: bool,
    /// Physical grid points per axis; the smallest alias-free FFT size when absent.
    pub points: Option<usize>,
}

impl Default for DynamicsSection {
    fn default() -> Self {
        Self {
            d: 3,
            side: 1.0,
            cutoff: 4.0,
            cutoff_shape: CutoffShape::Sharp,
            theta: 1.0,
            coupling: CouplingMode::Bare,
            lambda: 1.0,
            lambda_hat: 0.0,
            dt: TimeStep::Auto(AutoTag::Auto),
            horizon: 0.01,
            mollify_noise: false,
            points: None,
        }
    }
}

impl DynamicsSection {
    pub fn profile(&self, radius: f64) -> CutoffProfile {
        match self.cutoff_shape {
            CutoffShape::Sharp => CutoffProfile::sharp(radius),
            CutoffShape::Smooth => CutoffProfile::smooth(radius),
        }
    }

    /// Grid for cutoff `radius` (the configured cutoff unless scanning).
    pub fn grid(&self, radius: f64) -> Result<WaveGrid, HarnessError> {
        let g = WaveGrid::for_cutoff(self.d, self.side, radius)?;
        match self.points {
            Some(p) if radius == self.cutoff => Ok(g.with_points(p)?),
            _ => Ok(g),
        }
    }

    /// Core dynamics config at cutoff `radius`; an automatic `dt` is resolved later.
    pub fn core(&self, radius: f64, theta: f64) -> DynamicsConfig {
        let mut c = DynamicsConfig::new(theta, radius);
        c.cutoff = self.profile(radius);
        c.mode = self.coupling;
        c.lambda = self.lambda;
        c.lambda_hat = self.lambda_hat;
        c.mollify_noise = self.mollify_noise;
        if let TimeStep::Fixed(dt) = self.dt {
            c.dt = dt;
        }
        c.horizon = self.horizon;
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InvarianceSection {
    /// Integer wavevectors to probe; every component with nonzero variance is tested.
    pub modes: Vec<[i64; 3]>,
    pub ks_alpha: f64,
    pub z_max: f64,
}

impl Default for InvarianceSection {
    fn default() -> Self {
        Self {
            modes: vec![[1, 0, 0], [0, 1, 0], [1, 1, 0], [1, -1, 1], [2, 0, 0], [2, 1, 0], [1, 2, 2], [3, 1, 0]],
            ks_alpha: 0.01,
            z_max: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergySection {
    pub random_fields: usize,
    /// Steps of the short integrator run.
    pub steps: u64,
    pub tolerance: f64,
    /// Geometry of the convolution-oracle comparison: points per axis and cutoff.
    pub oracle_points: usize,
    pub oracle_cutoff: f64,
    pub leray_samples: usize,
}

impl Default for EnergySection {
    fn default() -> Self {
        Self {
            random_fields: 100,
            steps: 50,
            tolerance: 1e-10,
            oracle_points: 8,
            oracle_cutoff: 2.0,
            leray_samples: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrivialityCase {
    pub theta: f64,
    pub horizon: f64,
    pub ensemble: usize,
    #[serde(default = "auto_dt")]
    pub dt: TimeStep,
}

fn auto_dt() -> TimeStep {
    TimeStep::Auto(AutoTag::Auto)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrivialitySection {
    pub n_values: Vec<f64>,
    /// Test functions are the real and imaginary parts of `e exp(2 pi i k.x)`
    /// over all `|k|` equal to this shell and divergence-free directions `e`.
    pub shell: f64,
    pub slope_tolerance: f64,
    pub band: f64,
    pub cases: Vec<TrivialityCase>,
}

impl Default for TrivialitySection {
    fn default() -> Self {
        Self { n_values: vec![4.0, 8.0, 16.0, 32.0], shell: 1.0, slope_tolerance: 0.3, band: 3.0, cases: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiffusivitySection {
    pub lambda_hats: Vec<f64>,
    /// Cutoffs for the 2D weak-coupling scan.
    pub n_values: Vec<f64>,
    /// Probe shell limit; `cutoff / 4` when absent.
    pub k_max: Option<f64>,
    /// Fit lags in recorded samples.
    pub lags: Vec<usize>,
    pub bootstrap: usize,
    /// Unrecorded steps before the record starts.
    pub burn_in: u64,
    /// Time steps per point of the weak-coupling scan (`dynamics.dt` otherwise).
    pub dts: Vec<f64>,
    /// Projected wall-clock seconds above which a parameter point is not run.
    pub budget_seconds: Option<f64>,
    pub significance: f64,
}

impl Default for DiffusivitySection {
    fn default() -> Self {
        Self {
            lambda_hats: vec![0.0, 0.5, 1.0, 2.0],
            n_values: vec![16.0, 64.0, 256.0],
            k_max: None,
            lags: vec![1, 2, 3, 4, 6, 8, 12, 16],
            bootstrap: 400,
            burn_in: 0,
            dts: Vec::new(),
            budget_seconds: None,
            significance: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub draws: u64,
    pub points: usize,
    pub modes: Vec<[i64; 3]>,
    pub nu: f64,
    pub kbt: f64,
    pub density: f64,
    pub z_max: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            draws: 10_000,
            points: 8,
            modes: vec![[1, 0, 0], [0, 1, 1], [1, 1, 1], [2, -1, 1], [0, 3, 1], [3, 0, 0]],
            nu: 1.0,
            kbt: 1.0,
            density: 1.0,
            z_max: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OperatorSection {
    /// Radius of the small chaos basis.
    pub radius: f64,
    pub side: f64,
    pub max_level: usize,
    pub trials: usize,
    pub tolerance: f64,
}

impl Default for OperatorSection {
    fn default() -> Self {
        Self { radius: 1.5, side: 1.0, max_level: 3, trials: 20, tolerance: 1e-10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VarthetaSection {
    pub n_values: Vec<f64>,
    pub ks: Vec<[f64; 3]>,
    /// The `lambda` inside `1 / (lambda + |l|^2 + |m|^2)`.
    pub lambda: f64,
    pub limit_n: f64,
    pub limit_k: [f64; 3],
    /// `lambda` for the limit row; the limit itself does not depend on it.
    pub limit_lambda: f64,
    pub limit_tolerance: f64,
}

impl Default for VarthetaSection {
    fn default() -> Self {
        Self {
            n_values: vec![4.0, 8.0, 16.0],
            ks: vec![[1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [1.0, 1.0, 1.0], [2.0, 1.0, 0.0]],
            lambda: 1.0,
            limit_n: 64.0,
            limit_k: [1.0, 0.0, 0.0],
            limit_lambda: 0.1,
            limit_tolerance: 0.02,
        }
    }
}

/// A parsed config together with its source text and hash.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub text: String,
    pub hash: String,
}

impl LoadedConfig {
    pub fn from_text(text: &str) -> Result<Self, HarnessError> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        let hash = config_hash(&config);
        Ok(Self { config, text: text.to_string(), hash })
    }

    pub fn from_path(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_text(&text)
    }
}

/// SHA-256 of the canonical JSON form, so formatting edits keep the hash.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let json = serde_json::to_vec(config).expect("config serializes");
    hex::encode(Sha256::digest(json))
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        let dy = &self.dynamics;
        if !(2..=3).contains(&dy.d) {
            return bad(format!("dynamics.d must be 2 or 3, got {}", dy.d));
        }
        for (name, v) in [("side", dy.side), ("cutoff", dy.cutoff), ("theta", dy.theta), ("horizon", dy.horizon)] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("dynamics.{name} must be positive, got {v}"));
            }
        }
        if let TimeStep::Fixed(dt) = dy.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return bad(format!("dynamics.dt must be positive, got {dt}"));
            }
        }
        let needs_ensemble = matches!(
            self.kind,
            ExperimentKind::Invariance | ExperimentKind::DiffusivityScan | ExperimentKind::WeakCoupling2d
        );
        if needs_ensemble && self.ensemble < 2 {
            return bad(format!("ensemble must be at least 2, got {}", self.ensemble));
        }
        if self.snapshot_stride == 0 {
            return bad("snapshot_stride must be at least 1".into());
        }
        match self.kind {
            ExperimentKind::TrivialityScan => {
                let t = &self.triviality;
                if t.cases.is_empty() || t.n_values.len() < 2 {
                    return bad("triviality-scan needs at least one case and two cutoffs".into());
                }
                if t.cases.iter().any(|c| c.ensemble < 2 || !(c.horizon > 0.0)) {
                    return bad("triviality cases need ensemble >= 2 and a positive horizon".into());
                }
            }
            ExperimentKind::DiffusivityScan => {
                if self.diffusivity.lambda_hats.is_empty() {
                    return bad("diffusivity.lambda_hats is empty".into());
                }
            }
            ExperimentKind::WeakCoupling2d => {
                if dy.d != 2 {
                    return bad("weak-coupling-2d requires dynamics.d = 2".into());
                }
                let df = &self.diffusivity;
                if df.n_values.is_empty() || (!df.dts.is_empty() && df.dts.len() != df.n_values.len()) {
                    return bad("diffusivity.dts must be empty or match diffusivity.n_values".into());
                }
            }
            ExperimentKind::NoiseEquivalence => {
                if self.noise.draws < 3 {
                    return bad("noise.draws must be at least 3".into());
                }
            }
            _ => {}
        }
        Ok(())
    }
}
