//! Simulation of a two-spin Heisenberg XYZ quantum battery.
//!
//! The battery Hamiltonian `H = H_S + H_I` couples two spin-1/2 particles
//! through XYZ exchange (`J`, anisotropy `γ`, `Jz`) and a longitudinal field
//! `B`. The battery starts in its Gibbs state and is charged by the
//! transverse field `H_c = ω S_x`. The crate provides:
//!
//! * [`model`]: Hamiltonian, closed-form spectrum and thermal state, each
//!   paired with a numerical route through [`linalg`].
//! * [`charging`]: propagators, stored work, passive states and ergotropy.
//! * [`analytics`]: the two-harmonic closed form for the stored work, its
//!   maximum-work branches, harmonic fits and a reconciliation report.
//! * [`sweep`]: parameter sweeps, figure data and CSV export used by the
//!   `xyz-battery` binary.
//!
//! Numerical modules are generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`.

pub mod analytics;
pub mod charging;
pub mod error;
pub mod linalg;
pub mod model;
pub mod scalar;
pub mod sweep;

pub use analytics::{Branch, ConsistencyReport, Extremum};
pub use charging::PropagationMode;
pub use error::{Error, Result};
pub use model::GibbsMethod;
pub use scalar::Real;

pub type Matrix2 = linalg::Matrix2<f64>;
pub type Matrix4 = linalg::Matrix4<f64>;
pub type Matrix4f32 = linalg::Matrix4<f32>;
pub type EigenSystem4 = linalg::EigenSystem<f64, 4>;
pub type SpinParams = model::SpinParams<f64>;
pub type SpinParamsF32 = model::SpinParams<f32>;
pub type SpectralDecomposition = model::SpectralDecomposition<f64>;
pub type ThermalElements = model::ThermalElements<f64>;
pub type DensityMatrix = model::DensityMatrix<f64>;
pub type ChargingSpec = charging::ChargingSpec<f64>;
pub type Battery = charging::Battery<f64>;
pub type WorkSeries = charging::WorkSeries<f64>;
pub type WorkCoefficients = analytics::WorkCoefficients<f64>;
pub type WorkExtrema = analytics::WorkExtrema<f64>;
pub type HarmonicFit = analytics::HarmonicFit<f64>;

/// Decimal scientific notation with 17 significant digits, which round-trips
/// every `f64` exactly.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}
