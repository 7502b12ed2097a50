//! Numerics for periodic dispersive flows on the rescaled torus `λ𝕋`: spectral transforms,
//! free and nonlinear evolution, shorttime Fourier-restriction norms, an empirical estimate
//! harness and modified-energy diagnostics.
//!
//! Transforms, evolution and the space-time norms are generic over [`Scalar`] (`f32` or `f64`);
//! the harness and energy layers are `f64` only. The `*64` aliases below are what the
//! experiment runner uses.

// `!(x > 0.0)` is how parameter checks reject NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod energy;
pub mod error;
pub mod evolution;
pub mod harness;
pub mod sampling;
pub mod scalar;
pub mod spacetime;
pub mod spectral;

pub use error::{Error, Result};
pub use evolution::{DispersionLaw, FlowProblem, Integrator, Trajectory};
pub use harness::{DataLaw, Ensemble, EstimateReport, InteractionClass, RatioPoint};
pub use scalar::Scalar;
pub use spacetime::{NormKind, SpaceTimeField};
pub use spectral::{DyadicBlock, FourierPlan, SpectralField, TorusGeometry};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type TorusGeometry64 = TorusGeometry<f64>;
pub type SpectralField64 = SpectralField<f64>;
pub type SpectralField32 = SpectralField<f32>;
pub type SpaceTimeField64 = SpaceTimeField<f64>;
