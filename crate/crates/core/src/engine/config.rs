use crate::ambisonics::DecodeMatrix;
use crate::interpolation::ActivationConfig;
use crate::{Error, Result};

/// How encoded input channels meet SIR channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChannelMap {
    /// Encoded channel `i` convolves with SIR channel `i`.
    #[default]
    Matched,
    /// The raw mono input convolves with every SIR channel; no encoder.
    MonoDirect,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub sample_rate: u32,
    /// Power of two, at least 16.
    pub block_size: usize,
    pub activation: ActivationConfig,
    /// Dry monitor gain; `None` mutes the monitor path.
    pub monitor_gain_db: Option<f64>,
    pub encode_azimuth_deg: f64,
    pub encode_elevation_deg: f64,
    pub decode: DecodeMatrix,
    pub channel_map: ChannelMap,
    /// Latency-compensation delay added in front of every SIR, rounded to
    /// whole samples.
    pub unit_delay_s: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            sample_rate: 48_000,
            block_size: 256,
            activation: ActivationConfig::default(),
            monitor_gain_db: None,
            encode_azimuth_deg: 0.0,
            encode_elevation_deg: 0.0,
            decode: DecodeMatrix::default(),
            channel_map: ChannelMap::Matched,
            unit_delay_s: 0.0,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(Error::InvalidConfig("sample rate is zero".into()));
        }
        if self.block_size < 16 || !self.block_size.is_power_of_two() {
            return Err(Error::InvalidConfig(format!(
                "block size must be a power of two >= 16 (got {})",
                self.block_size
            )));
        }
        self.activation.validate()?;
        if let Some(db) = self.monitor_gain_db {
            if !db.is_finite() {
                return Err(Error::InvalidConfig("monitor gain must be finite".into()));
            }
        }
        if !(self.encode_azimuth_deg.is_finite() && self.encode_elevation_deg.is_finite()) {
            return Err(Error::InvalidConfig("encode direction must be finite".into()));
        }
        if !(self.unit_delay_s >= 0.0 && self.unit_delay_s.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "unit delay must be non-negative (got {})",
                self.unit_delay_s
            )));
        }
        Ok(())
    }

    pub fn delay_samples(&self) -> usize {
        (self.unit_delay_s * self.sample_rate as f64).round() as usize
    }

    pub fn block_duration_s(&self) -> f64 {
        self.block_size as f64 / self.sample_rate as f64
    }
}
