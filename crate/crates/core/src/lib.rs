//! Multistatic scattering simulation, scattering-coefficient reconstruction
//! and dictionary-based shape identification for penetrable 2-D inclusions.

pub mod descriptor;
pub mod dictionary;
pub mod error;
pub mod forward;
pub mod geometry;
pub mod matrix;
pub mod recon;
pub mod sct;
pub mod specfun;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
