//! Offline SIR production.
//!
//! The measurement session is a mono track of sync pops and exponential
//! sine sweeps, one per (position, direction). A 16-channel recording of
//! that session is cut at the detected pops, each segment is deconvolved
//! with the amplitude-compensated reversed sweep, and the resulting SIRs
//! are cropped past the initial time delay gap before packing.

mod deconv;
mod itdg;
mod session;
mod sweep;

pub use deconv::{deconvolve, produce_sirs, Deconvolver, DIRECT_GUARD_SAMPLES};
pub use itdg::{
    crop_direct_and_itdg, direct_monitor_compensation, estimate_itdg, latency_compensation_delay,
    ReflectionGeometry, SPEED_OF_SOUND_MPS,
};
pub use session::{
    detect_sync_pops, generate_session, load_layout, measurement_excitation, session_layout, save_layout, segment_bounds, segment_session,
    MemoryRecording, Measurement, PopDetector, Recording, SegmentBounds, SessionLayout,
    WavRecording, GAP_AFTER_SWEEP_S, POP_DURATION_S, PRE_SWEEP_SILENCE_S, SEGMENT_TAIL_S,
};
pub use sweep::{generate_ess, inverse_filter, sweep_samples, SweepSpec, SWEEP_FADE_S};
