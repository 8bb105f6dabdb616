use super::AMBI_CHANNELS;
use crate::{Error, Result};

/// Multichannel impulse response, linear amplitude with full scale at 1.0.
/// Multichannel responses are third-order Ambisonics in ACN order with SN3D
/// normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponse {
    sample_rate: u32,
    channels: Vec<Vec<f64>>,
}

impl ImpulseResponse {
    pub fn new(sample_rate: u32, channels: Vec<Vec<f64>>) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidImpulseResponse("sample rate is zero".into()));
        }
        if channels.len() != 1 && channels.len() != AMBI_CHANNELS {
            return Err(Error::ChannelCount {
                context: "impulse response",
                expected: AMBI_CHANNELS,
                found: channels.len(),
            });
        }
        let len = channels[0].len();
        if len == 0 {
            return Err(Error::InvalidImpulseResponse("zero-length channel".into()));
        }
        if let Some(bad) = channels.iter().position(|c| c.len() != len) {
            return Err(Error::InvalidImpulseResponse(format!(
                "channel {bad} has {} samples, channel 0 has {len}",
                channels[bad].len()
            )));
        }
        Ok(Self {
            sample_rate,
            channels,
        })
    }

    pub fn mono(sample_rate: u32, samples: Vec<f64>) -> Result<Self> {
        Self::new(sample_rate, vec![samples])
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn channel(&self, i: usize) -> &[f64] {
        &self.channels[i]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<Vec<f64>> {
        self.channels
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.sample_rate as f64
    }
}
