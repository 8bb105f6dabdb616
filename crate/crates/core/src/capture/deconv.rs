use super::session::{Recording, SegmentBounds};
use crate::dsp::{argmax_abs, FftKernel};
use crate::par::{self, Exec};
use crate::sir_model::{ImpulseResponse, AMBI_CHANNELS};
use crate::{Error, Result};

/// Samples kept ahead of the direct-sound peak when trimming.
pub const DIRECT_GUARD_SAMPLES: usize = 32;

/// Inverse-filter convolution prepared for segments up to a fixed length.
pub struct Deconvolver {
    kernel: FftKernel,
    sample_rate: u32,
    exec: Exec,
}

impl Deconvolver {
    pub fn new(inverse: &[f64], sample_rate: u32, max_segment_len: usize) -> Self {
        Self {
            kernel: FftKernel::new(inverse, max_segment_len),
            sample_rate,
            exec: Exec::default(),
        }
    }

    /// Execution strategy across channels.
    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    /// Convolves each channel with the inverse filter and keeps `trim_len`
    /// samples from the omni channel's direct-sound peak minus
    /// [`DIRECT_GUARD_SAMPLES`].
    pub fn deconvolve(&self, segment: &[Vec<f64>], trim_len: usize) -> Result<ImpulseResponse> {
        if segment.len() != 1 && segment.len() != AMBI_CHANNELS {
            return Err(Error::ChannelCount {
                context: "deconvolution segment",
                expected: AMBI_CHANNELS,
                found: segment.len(),
            });
        }
        if trim_len == 0 {
            return Err(Error::InvalidImpulseResponse("trim length is zero".into()));
        }
        let seg_len = segment[0].len();
        if seg_len > self.kernel.max_signal_len() {
            return Err(Error::TooShort {
                requested: seg_len,
                available: self.kernel.max_signal_len(),
            });
        }
        let omni = self.kernel.convolve(&segment[0]);
        let peak = argmax_abs(&omni).unwrap_or(0);
        let start = peak.saturating_sub(DIRECT_GUARD_SAMPLES);
        if start + trim_len > omni.len() {
            return Err(Error::TooShort {
                requested: trim_len,
                available: omni.len() - start,
            });
        }
        let mut channels = vec![omni[start..start + trim_len].to_vec()];
        channels.extend(par::map(self.exec, &segment[1..], |ch| {
            self.kernel.convolve(ch)[start..start + trim_len].to_vec()
        }));
        ImpulseResponse::new(self.sample_rate, channels)
    }
}

/// One-shot deconvolution of a single segment.
pub fn deconvolve(
    segment: &[Vec<f64>],
    inverse: &[f64],
    sample_rate: u32,
    trim_len: usize,
) -> Result<ImpulseResponse> {
    let len = segment.first().map_or(0, Vec::len);
    Deconvolver::new(inverse, sample_rate, len.max(1)).deconvolve(segment, trim_len)
}

/// Reads, deconvolves and trims every segment of a recording, in segment
/// order. Only the segments in flight are held in memory.
pub fn produce_sirs(
    recording: &dyn Recording,
    segments: &[SegmentBounds],
    deconvolver: &Deconvolver,
    trim_len: usize,
    exec: Exec,
) -> Result<Vec<ImpulseResponse>> {
    if recording.sample_rate() != deconvolver.sample_rate() {
        return Err(Error::SampleRateMismatch {
            expected: deconvolver.sample_rate(),
            found: recording.sample_rate(),
        });
    }
    par::try_map_range(exec, segments.len(), |k| {
        let b = segments[k];
        let seg = recording.read(b.start, b.len)?;
        deconvolver.deconvolve(&seg, trim_len)
    })
}
