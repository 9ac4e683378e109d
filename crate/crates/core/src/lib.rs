//! Numerical engine for universal broadband composite pulses.
//!
//! The crate is organised bottom-up:
//!
//! * [`su2`] holds the 2×2 propagator algebra every other module acts on.
//! * [`dynamics`] integrates the Schrödinger equation for one physical pulse.
//! * [`sequences`] turns phase laws into per-pulse phases and composes them.
//! * [`series`] expands the composite diagonal element in powers of the
//!   single-pulse error and checks or searches for universal phase sets.
//! * [`scanner`] and [`echo`] produce excitation-profile and rephasing maps.

pub mod angle;
pub mod dynamics;
pub mod echo;
pub mod error;
pub mod scanner;
pub mod sequences;
pub mod series;
pub mod su2;

pub use angle::{Angle, PiRational};
pub use error::{Error, Result};

/// Engine version stamped into every output provenance block.
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");
