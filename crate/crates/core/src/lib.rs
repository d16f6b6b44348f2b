//! Positive radial solutions of −Δu + ωu − u^p − u^5 = 0 in ℝ³.
//!
//! Shooting in the amplitude-normalised form, branch continuation in ω,
//! identity and barrier checks, asymptotic-law verification, and the radial
//! Morse index of the linearised operator.

pub mod branch_asymptotics;
pub mod error;
pub mod functionals;
pub mod quadrature;
pub mod radial_ode;
pub mod reference_profiles;
pub mod report;
pub mod rk;
pub mod scalar;
pub mod shooting;
pub mod special;
pub mod spectral;

pub use error::{Error, Result};
pub use radial_ode::{IntegrateOptions, OdeSpec, Profile, ShootingOutcome, TailModel};
pub use scalar::Real;

/// Dormand–Prince dense step in double precision.
pub type Dense64<const N: usize> = rk::Dense<f64, N>;
/// Dormand–Prince dense step in single precision.
pub type Dense32<const N: usize> = rk::Dense<f32, N>;
pub type RkOptions64 = rk::RkOptions<f64>;
pub type RkOptions32 = rk::RkOptions<f32>;
