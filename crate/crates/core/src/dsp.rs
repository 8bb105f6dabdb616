//! Small signal-processing toolbox shared by the capture and engine stages.

use std::sync::Arc;

use realfft::num_complex::Complex;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

pub fn linear_to_db(gain: f64) -> f64 {
    20.0 * gain.log10()
}

pub fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

pub fn peak(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Index of the largest absolute sample (first one on ties).
pub fn argmax_abs(x: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in x.iter().enumerate() {
        let a = v.abs();
        if best.is_none_or(|(_, b)| a > b) {
            best = Some((i, a));
        }
    }
    best.map(|(i, _)| i)
}

/// Zero-lag normalized cross-correlation over the common prefix of `a` and `b`.
///
/// Returns 1.0 when both inputs are all zero and 0.0 when only one is.
pub fn ncc(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let ab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let aa: f64 = a.iter().map(|x| x * x).sum();
    let bb: f64 = b.iter().map(|x| x * x).sum();
    if aa == 0.0 && bb == 0.0 {
        return 1.0;
    }
    if aa == 0.0 || bb == 0.0 {
        return 0.0;
    }
    ab / (aa * bb).sqrt()
}

/// RMS of `a - b` divided by the RMS of `b`, over the longer of the two
/// (the shorter one is treated as zero-padded).
pub fn relative_rms_error(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(b.len());
    let at = |x: &[f64], i: usize| x.get(i).copied().unwrap_or(0.0);
    let mut err = 0.0;
    let mut reference = 0.0;
    for i in 0..n {
        let d = at(a, i) - at(b, i);
        err += d * d;
        reference += at(b, i) * at(b, i);
    }
    if reference == 0.0 {
        return if err == 0.0 { 0.0 } else { f64::INFINITY };
    }
    (err / reference).sqrt()
}

/// Full linear convolution via one zero-padded real FFT.
pub fn fft_convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let kernel = FftKernel::new(b, a.len());
    kernel.convolve(a)
}

/// A fixed convolution kernel with a precomputed spectrum, for convolving
/// many signals of bounded length against the same filter.
pub struct FftKernel {
    kernel_len: usize,
    max_signal_len: usize,
    fft_len: usize,
    spectrum: Vec<Complex<f64>>,
    forward: Arc<dyn RealToComplex<f64>>,
    inverse: Arc<dyn ComplexToReal<f64>>,
}

impl FftKernel {
    /// Prepares `kernel` for signals of up to `max_signal_len` samples.
    pub fn new(kernel: &[f64], max_signal_len: usize) -> Self {
        assert!(!kernel.is_empty(), "empty convolution kernel");
        let fft_len = (kernel.len() + max_signal_len.max(1) - 1).next_power_of_two().max(2);
        let mut planner = RealFftPlanner::<f64>::new();
        let forward = planner.plan_fft_forward(fft_len);
        let inverse = planner.plan_fft_inverse(fft_len);
        let mut buf = vec![0.0; fft_len];
        buf[..kernel.len()].copy_from_slice(kernel);
        let mut spectrum = forward.make_output_vec();
        forward
            .process(&mut buf, &mut spectrum)
            .expect("fft buffer sizes match the plan");
        let scale = 1.0 / fft_len as f64;
        for c in &mut spectrum {
            *c *= scale;
        }
        Self {
            kernel_len: kernel.len(),
            max_signal_len,
            fft_len,
            spectrum,
            forward,
            inverse,
        }
    }

    pub fn kernel_len(&self) -> usize {
        self.kernel_len
    }

    pub fn max_signal_len(&self) -> usize {
        self.max_signal_len
    }

    /// Full linear convolution of `signal` with the kernel
    /// (`signal.len() + kernel_len - 1` samples).
    pub fn convolve(&self, signal: &[f64]) -> Vec<f64> {
        assert!(
            signal.len() <= self.max_signal_len,
            "signal longer than the planned maximum"
        );
        if signal.is_empty() {
            return Vec::new();
        }
        let mut buf = vec![0.0; self.fft_len];
        buf[..signal.len()].copy_from_slice(signal);
        let mut spec = self.forward.make_output_vec();
        self.forward
            .process(&mut buf, &mut spec)
            .expect("fft buffer sizes match the plan");
        for (s, k) in spec.iter_mut().zip(&self.spectrum) {
            *s *= k;
        }
        // realfft requires purely real DC and Nyquist bins on the inverse.
        spec[0].im = 0.0;
        if let Some(last) = spec.last_mut() {
            last.im = 0.0;
        }
        self.inverse
            .process(&mut spec, &mut buf)
            .expect("fft buffer sizes match the plan");
        buf.truncate(signal.len() + self.kernel_len - 1);
        buf
    }
}
