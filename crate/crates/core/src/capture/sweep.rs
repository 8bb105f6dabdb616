use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dsp::{self, db_to_linear};
use crate::sir_model::ImpulseResponse;
use crate::{Error, Result};

/// Raised-cosine fade applied to both ends of the sweep.
pub const SWEEP_FADE_S: f64 = 0.010;

/// Exponential sine sweep parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub f_start_hz: f64,
    pub f_end_hz: f64,
    pub duration_s: f64,
    pub amplitude_dbfs: f64,
    pub sample_rate_hz: u32,
}

impl Default for SweepSpec {
    /// 20 Hz to 20 kHz over 20 s at -20 dBFS, 48 kHz.
    fn default() -> Self {
        Self {
            f_start_hz: 20.0,
            f_end_hz: 20_000.0,
            duration_s: 20.0,
            amplitude_dbfs: -20.0,
            sample_rate_hz: 48_000,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let nyquist = self.sample_rate_hz as f64 / 2.0;
        if !(self.f_start_hz > 0.0 && self.f_start_hz < self.f_end_hz && self.f_end_hz < nyquist) {
            return Err(Error::InvalidSweep(format!(
                "need 0 < f_start < f_end < {nyquist} Hz (got {} .. {})",
                self.f_start_hz, self.f_end_hz
            )));
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(Error::InvalidSweep(format!(
                "duration must be positive (got {})",
                self.duration_s
            )));
        }
        if self.amplitude_dbfs.is_nan() || self.amplitude_dbfs > 0.0 {
            return Err(Error::InvalidSweep(format!(
                "amplitude must be at most 0 dBFS (got {})",
                self.amplitude_dbfs
            )));
        }
        if self.len() < 4 {
            return Err(Error::InvalidSweep("sweep shorter than 4 samples".into()));
        }
        Ok(())
    }

    /// Sweep length in samples.
    pub fn len(&self) -> usize {
        (self.duration_s * self.sample_rate_hz as f64).round() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Time constant of the exponential frequency trajectory.
    fn rate_s(&self) -> f64 {
        self.duration_s / (self.f_end_hz / self.f_start_hz).ln()
    }

    /// Instantaneous frequency at time `t`.
    pub fn frequency_at(&self, t: f64) -> f64 {
        self.f_start_hz * (t / self.rate_s()).exp()
    }
}

/// Unfaded, unscaled sweep phase at time `t`.
fn phase(spec: &SweepSpec, t: f64) -> f64 {
    let rate = spec.rate_s();
    2.0 * PI * spec.f_start_hz * rate * ((t / rate).exp() - 1.0)
}

/// Sweep samples as a plain vector.
pub fn sweep_samples(spec: &SweepSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let n = spec.len();
    let sr = spec.sample_rate_hz as f64;
    let amp = db_to_linear(spec.amplitude_dbfs);
    let fade = ((SWEEP_FADE_S * sr).round() as usize).min(n / 4).max(1);
    Ok((0..n)
        .map(|i| {
            let edge = i.min(n - 1 - i);
            let w = if edge < fade {
                0.5 * (1.0 - (PI * edge as f64 / fade as f64).cos())
            } else {
                1.0
            };
            amp * w * phase(spec, i as f64 / sr).sin()
        })
        .collect())
}

/// Exponential sine sweep with raised-cosine fades.
pub fn generate_ess(spec: &SweepSpec) -> Result<ImpulseResponse> {
    ImpulseResponse::mono(spec.sample_rate_hz, sweep_samples(spec)?)
}

/// Time-reversed sweep with a decaying exponential envelope (-6 dB per
/// octave of the reversed sweep), scaled so that convolving it with the
/// forward sweep peaks at exactly 1.
pub fn inverse_filter(spec: &SweepSpec) -> Result<Vec<f64>> {
    let sweep = sweep_samples(spec)?;
    let n = sweep.len();
    let decay = 1.0 / (spec.rate_s() * spec.sample_rate_hz as f64);
    let mut inv: Vec<f64> = (0..n)
        .map(|i| sweep[n - 1 - i] * (-(i as f64) * decay).exp())
        .collect();
    let response = dsp::fft_convolve(&sweep, &inv);
    let peak = dsp::peak(&response);
    for v in &mut inv {
        *v /= peak;
    }
    Ok(inv)
}
