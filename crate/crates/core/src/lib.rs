//! Pseudo-spectral simulation and Wiener-chaos operator toolkit for the
//! Galerkin-truncated fractional stochastic Navier-Stokes equation on the
//! torus `[0, M)^d`, `d` in {2, 3}.

pub mod checkpoint;
pub mod diffusivity;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod fock;
pub mod forcing;
pub mod grid;
pub mod operators;
pub mod rng;
pub mod stats;
pub mod transform;

pub use checkpoint::Checkpoint;
pub use diffusivity::{
    estimate_diffusivity, g_hat, ll_effective_coupling, ll_normalization, nu_eff, nu_eff_status, omega_d,
    DiffusivityEstimate, EstimatorOptions, FormulaStatus, ModeProbe, TrajectoryArchive,
};
pub use dynamics::{
    lambda_scaled, nonlinearity_bn, rescale_field, simulate, CouplingMode, DuhamelAccumulator, DynamicsConfig,
    InitialState, Nonlinearity, Trajectory,
};
pub use error::{Error, Result};
pub use field::{PhysicalField, SpectralField};
pub use fock::{apply_g_minus, apply_g_plus, apply_l_theta, fock_inner, ChaosBasis, ChaosVector, GeneratorSpec};
pub use forcing::{sample_divfree_white_noise, NoiseParams};
pub use grid::WaveGrid;
pub use num_complex::Complex64;
pub use operators::{apply_cutoff, apply_leray, divfree_basis, leray_multiplier, CutoffKind, CutoffProfile};
pub use transform::Transform;
