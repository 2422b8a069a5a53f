//! Body-induced RF attenuation on dense IoT link graphs.
//!
//! The crate covers the whole pipeline from physics to counting:
//!
//! - [`diffraction`]: scalar-diffraction field ratio of one absorbing sheet.
//! - [`geometry`]: perimeter networks, Fresnel floor ellipses, footprint membership.
//! - [`multibody`]: additive (MAM) and composite (C-MAM) per-link composition,
//!   network snapshots and simulated RSS.
//! - [`bounds`]: link sets, Jaccard resolvability and Monte Carlo accuracy bounds.
//! - [`net`]: a from-scratch deep graph convolutional counting network.
//! - [`io`]: RSS ingestion, datasets, configuration and checkpoints.
//! - [`cli`]: the `rfsl` command-line front end.

pub mod bounds;
pub mod cli;
pub mod diffraction;
pub mod error;
pub mod geometry;
pub mod io;
pub mod multibody;
pub mod net;
pub mod rng;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Wavelength in meters for a carrier frequency in Hz.
pub fn wavelength(frequency_hz: f64) -> f64 {
    SPEED_OF_LIGHT / frequency_hz
}
