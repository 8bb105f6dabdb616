use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::sweep::{sweep_samples, SweepSpec};
use crate::dsp::db_to_linear;
use crate::sir_model::{Direction, GridSpec};
use crate::wav::WavStream;
use crate::{Error, Result};

pub const POP_DURATION_S: f64 = 0.001;
pub const PRE_SWEEP_SILENCE_S: f64 = 0.100;
pub const GAP_AFTER_SWEEP_S: f64 = 5.0;
/// Reverberation tail kept after each sweep when segmenting.
pub const SEGMENT_TAIL_S: f64 = 3.0;

/// One measurement inside a session track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub position: usize,
    pub direction: Direction,
    pub sync_pop_sample: usize,
    pub sweep_start_sample: usize,
    pub sweep_len: usize,
    pub gap_after_s: f64,
}

/// Sample-exact map of a generated session, position-major and
/// direction-minor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionLayout {
    pub sample_rate: u32,
    pub total_len: usize,
    pub sweep: SweepSpec,
    pub grid: GridSpec,
    #[serde(rename = "measurement")]
    pub measurements: Vec<Measurement>,
}

impl SessionLayout {
    pub fn len(&self) -> usize {
        self.measurements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measurements.is_empty()
    }
}

pub fn save_layout(layout: &SessionLayout, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = toml::to_string(layout).map_err(|e| Error::Manifest {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    fs::write(path, text)?;
    Ok(())
}

pub fn load_layout(path: impl AsRef<Path>) -> Result<SessionLayout> {
    let path = path.as_ref();
    toml::from_str(&fs::read_to_string(path)?).map_err(|e| Error::Manifest {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn pop_shape(len: usize) -> impl Iterator<Item = f64> {
    (0..len).map(move |i| 0.5 * (1.0 + (PI * i as f64 / len as f64).cos()))
}

/// One measurement's excitation: a 1 ms full-scale pop, 100 ms of silence
/// and the sweep.
pub fn measurement_excitation(spec: &SweepSpec) -> Result<Vec<f64>> {
    let sweep = sweep_samples(spec)?;
    let sr = spec.sample_rate_hz as f64;
    let pop_len = ((POP_DURATION_S * sr).round() as usize).max(1);
    let pre = (PRE_SWEEP_SILENCE_S * sr).round() as usize;
    let mut out: Vec<f64> = pop_shape(pop_len).collect();
    out.resize(pop_len + pre, 0.0);
    out.extend_from_slice(&sweep);
    Ok(out)
}

/// Timing of a session without rendering it: every (position, direction)
/// gets an excitation followed by 5 s of silence.
pub fn session_layout(spec: &SweepSpec, grid: &GridSpec) -> Result<SessionLayout> {
    grid.validate()?;
    spec.validate()?;
    let sr = spec.sample_rate_hz as f64;
    let pop_len = ((POP_DURATION_S * sr).round() as usize).max(1);
    let pre = (PRE_SWEEP_SILENCE_S * sr).round() as usize;
    let gap = (GAP_AFTER_SWEEP_S * sr).round() as usize;
    let sweep_len = spec.len();
    let per = pop_len + pre + sweep_len + gap;
    let count = grid.position_count() * 4;
    let measurements = (0..count)
        .map(|k| Measurement {
            position: k / 4,
            direction: Direction::ALL[k % 4],
            sync_pop_sample: k * per,
            sweep_start_sample: k * per + pop_len + pre,
            sweep_len,
            gap_after_s: GAP_AFTER_SWEEP_S,
        })
        .collect();
    Ok(SessionLayout {
        sample_rate: spec.sample_rate_hz,
        total_len: per * count,
        sweep: *spec,
        grid: *grid,
        measurements,
    })
}

/// Synthesizes the mono session track described by [`session_layout`].
pub fn generate_session(spec: &SweepSpec, grid: &GridSpec) -> Result<(Vec<f64>, SessionLayout)> {
    let layout = session_layout(spec, grid)?;
    let excitation = measurement_excitation(spec)?;
    let mut track = vec![0.0; layout.total_len];
    for m in &layout.measurements {
        let at = m.sync_pop_sample;
        track[at..at + excitation.len()].copy_from_slice(&excitation);
    }
    Ok((track, layout))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopDetector {
    pub threshold_dbfs: f64,
    pub refractory_s: f64,
    /// Window after the threshold crossing searched for the local peak.
    pub peak_search_s: f64,
}

impl Default for PopDetector {
    fn default() -> Self {
        Self {
            threshold_dbfs: -12.0,
            refractory_s: 1.0,
            peak_search_s: 0.005,
        }
    }
}

impl PopDetector {
    pub fn with_threshold(threshold_dbfs: f64) -> Self {
        Self {
            threshold_dbfs,
            ..Default::default()
        }
    }

    fn params(&self, sample_rate: u32) -> (f64, usize, usize) {
        let sr = sample_rate as f64;
        (
            db_to_linear(self.threshold_dbfs),
            ((self.refractory_s * sr).round() as usize).max(1),
            ((self.peak_search_s * sr).round() as usize).max(1),
        )
    }

    /// Scans crossings starting before `limit`; `signal` may extend past
    /// `limit` to serve the peak search. Returns where scanning resumes.
    fn scan(&self, signal: &[f64], limit: usize, sample_rate: u32, offset: usize, pops: &mut Vec<usize>) -> usize {
        let (threshold, refractory, search) = self.params(sample_rate);
        let mut i = 0;
        while i < limit {
            if signal[i].abs() >= threshold {
                let end = (i + search).min(signal.len());
                let mut best = i;
                for j in i..end {
                    if signal[j].abs() > signal[best].abs() {
                        best = j;
                    }
                }
                pops.push(offset + best);
                i = best + refractory;
            } else {
                i += 1;
            }
        }
        i
    }

    pub fn detect(&self, signal: &[f64], sample_rate: u32) -> Vec<usize> {
        let mut pops = Vec::new();
        self.scan(signal, signal.len(), sample_rate, 0, &mut pops);
        pops
    }

    /// Same result as [`PopDetector::detect`] on one channel of a recording,
    /// read in chunks.
    pub fn detect_recording(&self, recording: &dyn Recording, channel: usize) -> Result<Vec<usize>> {
        let sr = recording.sample_rate();
        let (_, _, search) = self.params(sr);
        let frames = recording.frames();
        let mut pops = Vec::new();
        let mut start = 0;
        while start < frames {
            let len = READ_CHUNK.min(frames - start);
            let extra = search.min(frames - start - len);
            let chunk = recording.read_channel_range(channel, start, len + extra)?;
            start += self.scan(&chunk, len, sr, start, &mut pops);
        }
        Ok(pops)
    }
}

/// Sync-pop indices with the default refractory window.
pub fn detect_sync_pops(signal: &[f64], sample_rate: u32, threshold_dbfs: f64) -> Vec<usize> {
    PopDetector::with_threshold(threshold_dbfs).detect(signal, sample_rate)
}

const READ_CHUNK: usize = 1 << 20;

/// A multichannel recording that can be read in windows, from memory or disk.
pub trait Recording: Sync {
    fn sample_rate(&self) -> u32;
    fn channels(&self) -> usize;
    fn frames(&self) -> usize;
    /// Reads `len` frames from `start`; frames past the end read as zero.
    fn read(&self, start: usize, len: usize) -> Result<Vec<Vec<f64>>>;

    /// Reads `len` frames of one channel.
    fn read_channel_range(&self, channel: usize, start: usize, len: usize) -> Result<Vec<f64>> {
        let mut block = self.read(start, len)?;
        if channel >= block.len() {
            return Err(Error::ChannelCount {
                context: "recording channel",
                expected: channel + 1,
                found: block.len(),
            });
        }
        Ok(block.swap_remove(channel))
    }

    /// Reads one whole channel in chunks.
    fn read_channel(&self, channel: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.frames());
        let mut start = 0;
        while start < self.frames() {
            let n = READ_CHUNK.min(self.frames() - start);
            out.extend(self.read_channel_range(channel, start, n)?);
            start += n;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryRecording {
    pub sample_rate: u32,
    pub channels: Vec<Vec<f64>>,
}

impl Recording for MemoryRecording {
    fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    fn channels(&self) -> usize {
        self.channels.len()
    }

    fn frames(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    fn read(&self, start: usize, len: usize) -> Result<Vec<Vec<f64>>> {
        Ok(self
            .channels
            .iter()
            .map(|c| {
                let mut out = vec![0.0; len];
                if start < c.len() {
                    let n = len.min(c.len() - start);
                    out[..n].copy_from_slice(&c[start..start + n]);
                }
                out
            })
            .collect())
    }
}

/// Disk-backed recording; reads are serialized through a mutex.
pub struct WavRecording {
    stream: Mutex<WavStream>,
    sample_rate: u32,
    channels: usize,
    frames: usize,
}

impl WavRecording {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let stream = WavStream::open(path)?;
        Ok(Self {
            sample_rate: stream.sample_rate(),
            channels: stream.channels(),
            frames: stream.frames(),
            stream: Mutex::new(stream),
        })
    }
}

impl Recording for WavRecording {
    fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    fn channels(&self) -> usize {
        self.channels
    }

    fn frames(&self) -> usize {
        self.frames
    }

    fn read(&self, start: usize, len: usize) -> Result<Vec<Vec<f64>>> {
        let mut chans = self
            .stream
            .lock()
            .expect("wav stream lock poisoned")
            .read_frames(start, len)?;
        for c in &mut chans {
            c.resize(len, 0.0);
        }
        Ok(chans)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentBounds {
    pub start: usize,
    pub len: usize,
}

/// Segment windows starting at each pop, `sweep_len + tail` samples long.
pub fn segment_bounds(
    pops: &[usize],
    expected: usize,
    sweep_len: usize,
    tail: usize,
) -> Result<Vec<SegmentBounds>> {
    if pops.is_empty() && expected > 0 {
        return Err(Error::NoSyncPops);
    }
    if pops.len() != expected {
        return Err(Error::CountMismatch {
            found: pops.len(),
            expected,
        });
    }
    Ok(pops
        .iter()
        .map(|&start| SegmentBounds {
            start,
            len: sweep_len + tail,
        })
        .collect())
}

/// Cuts the recording into one multichannel segment per pop, in pop order
/// (position-major, direction-minor). Holds every segment in memory; large
/// sessions should go through [`segment_bounds`] and stream instead.
pub fn segment_session(
    recording: &dyn Recording,
    pops: &[usize],
    expected: usize,
    sweep_len: usize,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let tail = (SEGMENT_TAIL_S * recording.sample_rate() as f64).round() as usize;
    segment_bounds(pops, expected, sweep_len, tail)?
        .iter()
        .map(|b| recording.read(b.start, b.len))
        .collect()
}
