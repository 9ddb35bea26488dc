//! Pseudo-spectral machinery for multi-species fractional cross-diffusion
//! on rectangular Neumann domains.

pub mod error;
pub mod grid;
mod transform;
pub mod field;
pub mod fracops;
pub mod dynamics;
pub mod diagnostics;

pub use error::{Error, Result};
pub use field::{divergence, Mode0, PhysicalField, SpectralField};
pub use grid::Grid;
