//! Auralis core: first-person five-degrees-of-freedom vocal auralization.
//!
//! The crate covers the whole offline and real-time signal chain:
//!
//! * [`sir_model`]: capture grid, directions, impulse responses and the
//!   manifest-backed SIR dataset.
//! * [`capture`]: sweep session synthesis, sync-pop segmentation,
//!   exponential-sweep deconvolution, ITDG cropping and monitor compensation.
//! * [`ambisonics`]: third-order ACN/SN3D encoding and matrix decoding.
//! * [`interpolation`]: yaw panning, inverse-distance weighting and
//!   hysteresis-guarded node activation.
//! * [`engine`]: the partitioned-convolution audio graph and offline renderer.
//!
//! Coordinates: `x` points stage-right, `z` points to the stage front and a
//! yaw of 0 degrees faces `+z`. Yaw grows clockwise seen from above, so 90
//! degrees faces stage-right.

pub mod ambisonics;
pub mod capture;
pub mod dsp;
pub mod engine;
mod error;
pub mod interpolation;
pub mod par;
pub mod sir_model;
pub mod wav;

pub use error::{Error, Result};
pub use sir_model::{Direction, GainMatrix, GridSpec, ImpulseResponse, Pose, SirSet};
