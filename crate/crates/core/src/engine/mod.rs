//! Real-time auralization graph.
//!
//! The mono input feeds a dry monitor path and, after Ambisonic encoding,
//! one convolver unit per (position, direction). Each unit holds its
//! 16-channel SIR as uniformly partitioned spectra (overlap-save at the
//! block size) and a gain that ramps linearly across one block. Unit
//! outputs sum on a 16-channel bus which is decoded to stereo.
//!
//! All convolvers read from one shared frequency-domain delay line of the
//! mono input: encoding is a per-channel scalar, so the encoded channel
//! spectra never need to be stored separately.

mod config;
mod convolver;
mod graph;
mod handoff;
mod render;

pub use config::{ChannelMap, EngineConfig};
pub use convolver::{PartitionedIr, UniformConvolver};
pub use graph::{ConvolverUnit, Engine};
pub use handoff::{gain_channel, stats_channel, BlockStats, GainReceiver, GainSender, StatsReceiver, StatsSender};
pub use render::{load_trajectory, parse_trajectory, render_offline, render_offline_files, TrajectoryPoint};
