//! RIFF WAV input and output.
//!
//! Reads 32-bit float and 16/24/32-bit integer PCM; writes 32-bit float
//! (default) or 24-bit integer PCM. Samples are de-interleaved into one
//! `Vec<f64>` per channel.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use hound::{SampleFormat as HoundFormat, WavReader, WavSpec, WavWriter};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleFormat {
    #[default]
    Float32,
    Int24,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WavData {
    pub sample_rate: u32,
    pub channels: Vec<Vec<f64>>,
}

impl WavData {
    pub fn frames(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }
}

fn wav_err(path: &Path) -> impl FnOnce(hound::Error) -> Error + '_ {
    move |source| Error::Wav {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<WavData> {
    let mut reader = WavStream::open(path)?;
    let frames = reader.frames();
    let channels = reader.read_frames(0, frames)?;
    Ok(WavData {
        sample_rate: reader.sample_rate(),
        channels,
    })
}

pub fn write_wav(
    path: impl AsRef<Path>,
    sample_rate: u32,
    channels: &[Vec<f64>],
    format: SampleFormat,
) -> Result<()> {
    let path = path.as_ref();
    if channels.is_empty() {
        return Err(Error::UnsupportedWav {
            path: path.to_path_buf(),
            message: "no channels to write".into(),
        });
    }
    let frames = channels[0].len();
    if channels.iter().any(|c| c.len() != frames) {
        return Err(Error::UnsupportedWav {
            path: path.to_path_buf(),
            message: "channels differ in length".into(),
        });
    }
    let spec = WavSpec {
        channels: channels.len() as u16,
        sample_rate,
        bits_per_sample: match format {
            SampleFormat::Float32 => 32,
            SampleFormat::Int24 => 24,
        },
        sample_format: match format {
            SampleFormat::Float32 => HoundFormat::Float,
            SampleFormat::Int24 => HoundFormat::Int,
        },
    };
    let mut writer = WavWriter::create(path, spec).map_err(wav_err(path))?;
    const INT24_MAX: f64 = 8_388_607.0;
    for i in 0..frames {
        for ch in channels {
            match format {
                SampleFormat::Float32 => writer.write_sample(ch[i] as f32),
                SampleFormat::Int24 => {
                    let v = (ch[i] * 8_388_608.0).round().clamp(-8_388_608.0, INT24_MAX);
                    writer.write_sample(v as i32)
                }
            }
            .map_err(wav_err(path))?;
        }
    }
    writer.finalize().map_err(wav_err(path))
}

/// Seekable reader for recordings too large to hold in memory.
pub struct WavStream {
    path: PathBuf,
    reader: WavReader<BufReader<File>>,
}

impl WavStream {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let reader = WavReader::open(&path).map_err(wav_err(&path))?;
        let spec = reader.spec();
        let supported = match spec.sample_format {
            HoundFormat::Float => spec.bits_per_sample == 32,
            HoundFormat::Int => matches!(spec.bits_per_sample, 16 | 24 | 32),
        };
        if !supported {
            return Err(Error::UnsupportedWav {
                message: format!("{:?} {}-bit", spec.sample_format, spec.bits_per_sample),
                path,
            });
        }
        Ok(Self { path, reader })
    }

    pub fn sample_rate(&self) -> u32 {
        self.reader.spec().sample_rate
    }

    pub fn channels(&self) -> usize {
        self.reader.spec().channels as usize
    }

    pub fn frames(&self) -> usize {
        self.reader.duration() as usize
    }

    /// Reads `len` frames starting at `start`, clipped to the end of the file.
    pub fn read_frames(&mut self, start: usize, len: usize) -> Result<Vec<Vec<f64>>> {
        let nch = self.channels();
        let start = start.min(self.frames());
        let len = len.min(self.frames() - start);
        let mut out = vec![Vec::with_capacity(len); nch];
        self.reader
            .seek(start as u32)
            .map_err(Error::Io)?;
        let spec = self.reader.spec();
        let path = &self.path;
        let total = len * nch;
        match spec.sample_format {
            HoundFormat::Float => {
                for (i, s) in self.reader.samples::<f32>().take(total).enumerate() {
                    out[i % nch].push(s.map_err(wav_err(path))? as f64);
                }
            }
            HoundFormat::Int => {
                let scale = 1.0 / (1u64 << (spec.bits_per_sample - 1)) as f64;
                for (i, s) in self.reader.samples::<i32>().take(total).enumerate() {
                    out[i % nch].push(s.map_err(wav_err(path))? as f64 * scale);
                }
            }
        }
        if out.iter().any(|c| c.len() != len) {
            return Err(Error::UnsupportedWav {
                path: path.clone(),
                message: "truncated sample data".into(),
            });
        }
        Ok(out)
    }
}
