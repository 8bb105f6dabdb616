//! Synthetic data and reference implementations shared by the test suites
//! and benchmarks. Everything here is deterministic for a given seed.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use auralis_core::ambisonics::sh_gains_3oa;
use auralis_core::capture::{measurement_excitation, session_layout, Recording, SessionLayout, SweepSpec};
use auralis_core::dsp::{fft_convolve, FftKernel};
use auralis_core::sir_model::{Direction, GridSpec, ImpulseResponse, SirSet, AMBI_CHANNELS};
use auralis_core::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform white noise in `[-1, 1)`.
pub fn random_signal(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Time-domain linear convolution, `O(n m)`.
pub fn direct_convolution(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (o, &y) in out[i..].iter_mut().zip(b) {
            *o += x * y;
        }
    }
    out
}

/// Blackman-windowed sinc low-pass with unit DC gain; `taps` is odd.
pub fn lowpass_fir(cutoff_hz: f64, sample_rate: u32, taps: usize) -> Vec<f64> {
    assert!(taps % 2 == 1, "taps must be odd");
    let fc = cutoff_hz / sample_rate as f64;
    let m = (taps - 1) as f64;
    let h: Vec<f64> = (0..taps)
        .map(|n| {
            let k = n as f64 - m / 2.0;
            let sinc = if k == 0.0 {
                2.0 * fc
            } else {
                (2.0 * PI * fc * k).sin() / (PI * k)
            };
            let w = 0.42 - 0.5 * (2.0 * PI * n as f64 / m).cos() + 0.08 * (4.0 * PI * n as f64 / m).cos();
            sinc * w
        })
        .collect();
    let sum: f64 = h.iter().sum();
    h.into_iter().map(|v| v / sum).collect()
}

/// Shape of a synthetic spatial impulse response.
#[derive(Debug, Clone, Copy)]
pub struct SirShape {
    pub len: usize,
    /// Samples before the direct sound (before the low-pass group delay).
    pub direct_delay: usize,
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub tail_amplitude: f64,
    pub tail_tau_s: f64,
    pub lowpass_hz: f64,
}

impl Default for SirShape {
    fn default() -> Self {
        Self {
            len: 24_000,
            direct_delay: 40,
            azimuth_deg: 0.0,
            elevation_deg: 0.0,
            tail_amplitude: 0.01,
            tail_tau_s: 0.1,
            lowpass_hz: 18_000.0,
        }
    }
}

/// A plane-wave direct sound plus an exponentially decaying diffuse tail
/// on every channel, low-passed below `lowpass_hz`.
pub fn synthetic_sir(rng: &mut impl Rng, sample_rate: u32, shape: &SirShape) -> ImpulseResponse {
    let lp = lowpass_fir(shape.lowpass_hz, sample_rate, 63);
    let sh = sh_gains_3oa(shape.azimuth_deg, shape.elevation_deg);
    let tail_start = shape.direct_delay + (sample_rate as usize / 1000);
    let decay = shape.tail_tau_s * sample_rate as f64;
    let channels = (0..AMBI_CHANNELS)
        .map(|ch| {
            let mut raw = vec![0.0; shape.len];
            if shape.direct_delay < shape.len {
                raw[shape.direct_delay] = sh.0[ch];
            }
            for (n, v) in raw.iter_mut().enumerate().skip(tail_start) {
                let t = (n - shape.direct_delay) as f64;
                *v += shape.tail_amplitude * (-t / decay).exp() * rng.gen_range(-1.0..1.0);
            }
            let mut y = fft_convolve(&raw, &lp);
            y.truncate(shape.len);
            y
        })
        .collect();
    ImpulseResponse::new(sample_rate, channels).expect("16 equal-length channels")
}

/// Distinct synthetic SIRs for every (position, direction) of `grid`, in
/// position-major order.
pub fn synthetic_irs(grid: &GridSpec, sample_rate: u32, len: usize, seed: u64) -> Vec<ImpulseResponse> {
    let mut rng = rng(seed);
    let count = grid.position_count() * 4;
    (0..count)
        .map(|k| {
            let shape = SirShape {
                len,
                direct_delay: 40 + (k * 7) % 23,
                azimuth_deg: (k as f64 * 37.0) % 360.0,
                elevation_deg: ((k % 5) as f64 - 2.0) * 10.0,
                tail_amplitude: 0.005 + 0.01 * rng.gen::<f64>(),
                tail_tau_s: 0.05 + 0.1 * rng.gen::<f64>(),
                ..Default::default()
            };
            synthetic_sir(&mut rng, sample_rate, &shape)
        })
        .collect()
}

pub fn synthetic_sirset(grid: GridSpec, sample_rate: u32, len: usize, seed: u64) -> SirSet {
    let irs = synthetic_irs(&grid, sample_rate, len, seed);
    let map: BTreeMap<(usize, Direction), ImpulseResponse> = irs
        .into_iter()
        .enumerate()
        .map(|(k, ir)| ((k / 4, Direction::ALL[k % 4]), ir))
        .collect();
    SirSet::new(grid, sample_rate, map).expect("complete synthetic set")
}

/// A 16-channel session recording rendered on demand: the mono session
/// track where measurement `k`'s excitation is convolved with `irs[k]`.
/// Never holds the whole recording in memory.
pub struct SyntheticRecording {
    layout: SessionLayout,
    excitation: Vec<f64>,
    excitation_kernel: FftKernel,
    irs: Vec<ImpulseResponse>,
}

impl SyntheticRecording {
    pub fn new(spec: &SweepSpec, grid: &GridSpec, irs: Vec<ImpulseResponse>) -> Result<Self> {
        let layout = session_layout(spec, grid)?;
        assert_eq!(irs.len(), layout.measurements.len(), "one IR per measurement");
        let excitation = measurement_excitation(spec)?;
        let max_ir = irs.iter().map(ImpulseResponse::len).max().unwrap_or(1);
        Ok(Self {
            excitation_kernel: FftKernel::new(&excitation, max_ir),
            excitation,
            layout,
            irs,
        })
    }

    pub fn layout(&self) -> &SessionLayout {
        &self.layout
    }

    pub fn irs(&self) -> &[ImpulseResponse] {
        &self.irs
    }

    fn render(&self, channel: usize, start: usize, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        let exc_len = self.excitation.len();
        for (m, ir) in self.layout.measurements.iter().zip(&self.irs) {
            let h = ir.channel(channel);
            let base = m.sync_pop_sample;
            let span = exc_len + h.len() - 1;
            if base + span <= start || base >= start + len {
                continue;
            }
            let j0 = start.saturating_sub(base);
            let j1 = (start + len - base).min(span);
            let e0 = j0.saturating_sub(h.len() - 1);
            let e1 = j1.min(exc_len);
            if e0 >= e1 {
                continue;
            }
            let y = if e0 == 0 && e1 == exc_len {
                self.excitation_kernel.convolve(h)
            } else {
                fft_convolve(&self.excitation[e0..e1], h)
            };
            for j in j0..j1 {
                if let Some(v) = y.get(j - e0) {
                    out[base + j - start] += v;
                }
            }
        }
        out
    }
}

impl Recording for SyntheticRecording {
    fn sample_rate(&self) -> u32 {
        self.layout.sample_rate
    }

    fn channels(&self) -> usize {
        AMBI_CHANNELS
    }

    fn frames(&self) -> usize {
        self.layout.total_len
    }

    fn read(&self, start: usize, len: usize) -> Result<Vec<Vec<f64>>> {
        Ok((0..AMBI_CHANNELS).map(|c| self.render(c, start, len)).collect())
    }

    fn read_channel_range(&self, channel: usize, start: usize, len: usize) -> Result<Vec<f64>> {
        Ok(self.render(channel, start, len))
    }
}
