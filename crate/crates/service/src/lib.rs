//! Control plane and command-line front end for `auralis-core`.
//!
//! Poses arrive over OSC/UDP or WebSocket, are turned into gain matrices on
//! the control thread and handed to the audio thread through the engine's
//! wait-free handoff. State snapshots go back to WebSocket clients at 20 Hz.

pub mod backend;
pub mod cli;
pub mod control;
mod error;
pub mod osc;
pub mod protocol;
pub mod serve;
pub mod ws;

pub use error::{Result, ServiceError};
