use crate::dsp::{argmax_abs, linear_to_db, rms};
use crate::sir_model::ImpulseResponse;
use crate::{Error, Result};

pub const SPEED_OF_SOUND_MPS: f64 = 344.0;

/// Direct path length `direct_m` and the two legs of the reflected path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionGeometry {
    pub direct_m: f64,
    pub leg1_m: f64,
    pub leg2_m: f64,
    pub speed_of_sound_mps: f64,
}

impl ReflectionGeometry {
    pub fn new(direct_m: f64, leg1_m: f64, leg2_m: f64) -> Result<Self> {
        let g = Self {
            direct_m,
            leg1_m,
            leg2_m,
            speed_of_sound_mps: SPEED_OF_SOUND_MPS,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn with_speed_of_sound(mut self, c: f64) -> Result<Self> {
        self.speed_of_sound_mps = c;
        self.validate()?;
        Ok(self)
    }

    /// Ceiling bounce for a source at `source_h` and a receiver `offset_m`
    /// straight above it, under a ceiling at `ceiling_h`.
    pub fn ceiling(source_h: f64, offset_m: f64, ceiling_h: f64) -> Result<Self> {
        Self::new(offset_m, ceiling_h - source_h, ceiling_h - source_h - offset_m)
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [self.direct_m, self.leg1_m, self.leg2_m, self.speed_of_sound_mps];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGeometry("non-finite value".into()));
        }
        if self.direct_m < 0.0 || self.leg1_m < 0.0 || self.leg2_m < 0.0 {
            return Err(Error::InvalidGeometry("negative path length".into()));
        }
        if self.leg1_m + self.leg2_m < self.direct_m {
            return Err(Error::InvalidGeometry(format!(
                "reflected path {} m is shorter than the direct path {} m",
                self.leg1_m + self.leg2_m,
                self.direct_m
            )));
        }
        if self.speed_of_sound_mps <= 0.0 {
            return Err(Error::InvalidGeometry("speed of sound must be positive".into()));
        }
        Ok(())
    }
}

/// Initial time delay gap in seconds: extra path length over speed of sound.
pub fn estimate_itdg(g: &ReflectionGeometry) -> f64 {
    ((g.leg1_m + g.leg2_m) - g.direct_m) / g.speed_of_sound_mps
}

/// Removes everything up to `itdg_s` after the omni direct-sound peak from
/// all channels alike.
pub fn crop_direct_and_itdg(ir: &ImpulseResponse, itdg_s: f64) -> Result<ImpulseResponse> {
    if !(itdg_s >= 0.0 && itdg_s.is_finite()) {
        return Err(Error::InvalidGeometry(format!("ITDG must be non-negative (got {itdg_s})")));
    }
    let peak = argmax_abs(ir.channel(0)).unwrap_or(0);
    let offset = peak + (itdg_s * ir.sample_rate() as f64).round() as usize;
    if offset >= ir.len() {
        return Err(Error::TooShort {
            requested: offset + 1,
            available: ir.len(),
        });
    }
    let channels = ir.channels().iter().map(|c| c[offset..].to_vec()).collect();
    ImpulseResponse::new(ir.sample_rate(), channels)
}

/// Delay that realigns a cropped SIR after the system's round trip.
pub fn latency_compensation_delay(itdg_s: f64, round_trip_s: f64) -> Result<f64> {
    if !(itdg_s >= 0.0 && round_trip_s >= 0.0) {
        return Err(Error::InvalidGeometry(format!(
            "ITDG and round trip must be non-negative (got {itdg_s}, {round_trip_s})"
        )));
    }
    let delay = itdg_s - round_trip_s;
    if delay < 0.0 {
        return Err(Error::UncompensatableLatency { deficit_s: -delay });
    }
    Ok(delay)
}

/// Gain in dB for the direct monitor path: level of the open-ear recording
/// over the occluded (headphones on) one.
pub fn direct_monitor_compensation(
    open_ear: &ImpulseResponse,
    occluded: &ImpulseResponse,
) -> Result<f64> {
    if open_ear.sample_rate() != occluded.sample_rate() {
        return Err(Error::SampleRateMismatch {
            expected: open_ear.sample_rate(),
            found: occluded.sample_rate(),
        });
    }
    let open = rms(open_ear.channel(0));
    let occ = rms(occluded.channel(0));
    if occ == 0.0 {
        return Err(Error::SilentRecording("occluded recording"));
    }
    if open == 0.0 {
        return Err(Error::SilentRecording("open-ear recording"));
    }
    Ok(linear_to_db(open / occ))
}
