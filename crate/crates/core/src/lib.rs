//! Many-body quantum Otto cycles with a free-fermion working medium.
//!
//! The chain decouples into independent momentum modes, each a 4×4 density
//! matrix. [`dynamics`] evolves one mode through the dissipative and unitary
//! strokes, [`cycle`] runs the four-stroke cycle over the momentum grid, and
//! [`analysis`] holds the closed-form limits and Kibble-Zurek fits.
//!
//! Everything numeric is generic over [`Real`] (`f64` or `f32`); the `*64`
//! aliases below fix the scalar to `f64`.

pub mod analysis;
pub mod cycle;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod model;
mod scalar;

pub use error::{Error, Result};
pub use scalar::{Real, C};

pub type ModeHamiltonian64 = model::ModeHamiltonian<f64>;
pub type CriticalExponents64 = model::CriticalExponents<f64>;
pub type DensityMatrix64 = dynamics::DensityMatrix4<f64>;
pub type BathSpec64 = dynamics::BathSpec<f64>;
pub type IntegratorControls64 = dynamics::IntegratorControls<f64>;
pub type CycleConfig64 = cycle::CycleConfig<f64>;
pub type CycleRecord64 = cycle::CycleRecord<f64>;
pub type ScalingFit64 = analysis::ScalingFit<f64>;
pub type BoundResult64 = analysis::BoundResult<f64>;
