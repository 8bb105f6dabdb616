//! Uniformly partitioned overlap-save convolution.
//!
//! Block size `B`, FFT size `2B`. Each IR partition of `B` samples is
//! zero-padded and transformed once. Per block, the last `2B` input samples
//! are transformed into a ring of past spectra, and the output spectrum is
//! `sum_k X[t-k] * H[k]`; the second half of its inverse transform is the
//! output block.

use std::sync::Arc;

use realfft::num_complex::Complex;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};

/// Shared FFT plans for one block size.
#[derive(Clone)]
pub(crate) struct Plans {
    pub forward: Arc<dyn RealToComplex<f64>>,
    pub inverse: Arc<dyn ComplexToReal<f64>>,
}

impl Plans {
    pub fn new(block: usize) -> Self {
        let mut planner = RealFftPlanner::<f64>::new();
        Self {
            forward: planner.plan_fft_forward(2 * block),
            inverse: planner.plan_fft_inverse(2 * block),
        }
    }
}

/// Frequency-domain partitions of one IR channel. The inverse-FFT scale is
/// folded into the stored spectra.
#[derive(Debug, Clone)]
pub struct PartitionedIr {
    bins: usize,
    partitions: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl PartitionedIr {
    pub fn new(ir: &[f64], block: usize) -> Self {
        Self::with_delay(ir, 0, block, &Plans::new(block))
    }

    /// Partitions `ir` preceded by `delay` zero samples.
    pub(crate) fn with_delay(ir: &[f64], delay: usize, block: usize, plans: &Plans) -> Self {
        let total = delay + ir.len();
        let partitions = total.div_ceil(block).max(1);
        let bins = block + 1;
        let mut re = Vec::with_capacity(partitions * bins);
        let mut im = Vec::with_capacity(partitions * bins);
        let mut buf = vec![0.0; 2 * block];
        let mut spec = plans.forward.make_output_vec();
        let scale = 1.0 / (2 * block) as f64;
        for k in 0..partitions {
            buf.fill(0.0);
            for (n, slot) in buf[..block].iter_mut().enumerate() {
                let idx = k * block + n;
                if idx >= delay && idx < total {
                    *slot = ir[idx - delay];
                }
            }
            plans
                .forward
                .process(&mut buf, &mut spec)
                .expect("fft buffer sizes match the plan");
            re.extend(spec.iter().map(|c| c.re * scale));
            im.extend(spec.iter().map(|c| c.im * scale));
        }
        Self {
            bins,
            partitions,
            re,
            im,
        }
    }

    pub fn partitions(&self) -> usize {
        self.partitions
    }

    fn partition(&self, k: usize) -> (&[f64], &[f64]) {
        let r = k * self.bins..(k + 1) * self.bins;
        (&self.re[r.clone()], &self.im[r])
    }
}

/// Ring of past input spectra (the frequency-domain delay line).
pub(crate) struct SpectralHistory {
    block: usize,
    bins: usize,
    slots: usize,
    head: usize,
    re: Vec<f64>,
    im: Vec<f64>,
    window: Vec<f64>,
    scratch: Vec<f64>,
    spectrum: Vec<Complex<f64>>,
    fft_scratch: Vec<Complex<f64>>,
    plans: Plans,
}

impl SpectralHistory {
    pub fn new(block: usize, slots: usize, plans: Plans) -> Self {
        let bins = block + 1;
        let slots = slots.max(1);
        Self {
            block,
            bins,
            slots,
            head: 0,
            re: vec![0.0; slots * bins],
            im: vec![0.0; slots * bins],
            window: vec![0.0; 2 * block],
            scratch: vec![0.0; 2 * block],
            spectrum: plans.forward.make_output_vec(),
            fft_scratch: plans.forward.make_scratch_vec(),
            plans,
        }
    }

    /// Slides the input window by one block and stores its spectrum.
    pub fn push(&mut self, input: &[f64]) {
        let b = self.block;
        self.window.copy_within(b.., 0);
        let n = input.len().min(b);
        self.window[b..b + n].copy_from_slice(&input[..n]);
        self.window[b + n..].fill(0.0);
        self.scratch.copy_from_slice(&self.window);
        self.plans
            .forward
            .process_with_scratch(&mut self.scratch, &mut self.spectrum, &mut self.fft_scratch)
            .expect("fft buffer sizes match the plan");
        self.head = (self.head + 1) % self.slots;
        let r = self.head * self.bins..(self.head + 1) * self.bins;
        for ((dr, di), c) in self.re[r.clone()]
            .iter_mut()
            .zip(&mut self.im[r])
            .zip(&self.spectrum)
        {
            *dr = c.re;
            *di = c.im;
        }
    }

    /// Adds `sum_k X[t-k] * H[k]` to the accumulator.
    pub fn accumulate(&self, ir: &PartitionedIr, acc_re: &mut [f64], acc_im: &mut [f64]) {
        let parts = ir.partitions.min(self.slots);
        for k in 0..parts {
            let slot = (self.head + self.slots - k) % self.slots;
            let r = slot * self.bins..(slot + 1) * self.bins;
            let (hr, hi) = ir.partition(k);
            complex_mac(acc_re, acc_im, &self.re[r.clone()], &self.im[r], hr, hi);
        }
    }
}

#[inline]
fn complex_mac(
    acc_re: &mut [f64],
    acc_im: &mut [f64],
    x_re: &[f64],
    x_im: &[f64],
    h_re: &[f64],
    h_im: &[f64],
) {
    let n = acc_re.len();
    let (acc_im, x_re, x_im, h_re, h_im) = (&mut acc_im[..n], &x_re[..n], &x_im[..n], &h_re[..n], &h_im[..n]);
    for j in 0..n {
        acc_re[j] += x_re[j] * h_re[j] - x_im[j] * h_im[j];
        acc_im[j] += x_re[j] * h_im[j] + x_im[j] * h_re[j];
    }
}

/// Inverse transform of an output spectrum; writes the valid second half.
pub(crate) struct Synthesis {
    block: usize,
    spectrum: Vec<Complex<f64>>,
    time: Vec<f64>,
    fft_scratch: Vec<Complex<f64>>,
    plans: Plans,
}

impl Synthesis {
    pub fn new(block: usize, plans: Plans) -> Self {
        Self {
            block,
            spectrum: plans.inverse.make_input_vec(),
            time: vec![0.0; 2 * block],
            fft_scratch: plans.inverse.make_scratch_vec(),
            plans,
        }
    }

    /// Returns the output block for the accumulated spectrum.
    pub fn run(&mut self, acc_re: &[f64], acc_im: &[f64]) -> &[f64] {
        for ((c, r), i) in self.spectrum.iter_mut().zip(acc_re).zip(acc_im) {
            *c = Complex::new(*r, *i);
        }
        self.spectrum[0].im = 0.0;
        self.spectrum[self.block].im = 0.0;
        self.plans
            .inverse
            .process_with_scratch(&mut self.spectrum, &mut self.time, &mut self.fft_scratch)
            .expect("fft buffer sizes match the plan");
        &self.time[self.block..]
    }
}

/// Single-channel streaming convolver built from the same parts as the
/// engine. Zero added latency: output block `t` depends on input blocks
/// up to and including `t`.
pub struct UniformConvolver {
    block: usize,
    ir: PartitionedIr,
    history: SpectralHistory,
    synthesis: Synthesis,
    acc_re: Vec<f64>,
    acc_im: Vec<f64>,
}

impl UniformConvolver {
    pub fn new(ir: &[f64], block: usize) -> Self {
        assert!(block.is_power_of_two() && block >= 1, "block must be a power of two");
        let plans = Plans::new(block);
        let ir = PartitionedIr::with_delay(ir, 0, block, &plans);
        let history = SpectralHistory::new(block, ir.partitions(), plans.clone());
        Self {
            block,
            history,
            synthesis: Synthesis::new(block, plans),
            acc_re: vec![0.0; block + 1],
            acc_im: vec![0.0; block + 1],
            ir,
        }
    }

    pub fn block_size(&self) -> usize {
        self.block
    }

    pub fn partitions(&self) -> usize {
        self.ir.partitions()
    }

    /// Convolves one block; `input` and `output` are `block` samples long.
    pub fn process(&mut self, input: &[f64], output: &mut [f64]) {
        self.history.push(input);
        self.acc_re.fill(0.0);
        self.acc_im.fill(0.0);
        self.history.accumulate(&self.ir, &mut self.acc_re, &mut self.acc_im);
        let y = self.synthesis.run(&self.acc_re, &self.acc_im);
        let n = output.len().min(self.block);
        output[..n].copy_from_slice(&y[..n]);
    }

    /// Full linear convolution of a finite signal, streamed block by block.
    pub fn convolve(ir: &[f64], signal: &[f64], block: usize) -> Vec<f64> {
        let mut conv = Self::new(ir, block);
        let total = signal.len() + ir.len() - 1;
        let mut out = vec![0.0; total.div_ceil(block) * block];
        let mut inbuf = vec![0.0; block];
        for (b, chunk) in out.chunks_mut(block).enumerate() {
            inbuf.fill(0.0);
            let start = b * block;
            if start < signal.len() {
                let n = block.min(signal.len() - start);
                inbuf[..n].copy_from_slice(&signal[start..start + n]);
            }
            conv.process(&inbuf, chunk);
        }
        out.truncate(total);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    }

    #[test]
    fn partition_count() {
        let p = PartitionedIr::new(&vec![0.1; 48_000], 256);
        assert_eq!(p.partitions(), 188);
        let plans = Plans::new(16);
        assert_eq!(PartitionedIr::with_delay(&[1.0; 16], 1, 16, &plans).partitions(), 2);
    }

    #[test]
    fn streamed_equals_direct() {
        let ir: Vec<f64> = (0..300).map(|i| ((i * 37 % 101) as f64 / 50.0 - 1.0) * 0.9f64.powi(i / 10)).collect();
        let x: Vec<f64> = (0..1000).map(|i| (i * 13 % 29) as f64 / 14.0 - 1.0).collect();
        let got = UniformConvolver::convolve(&ir, &x, 64);
        let want = direct(&x, &ir);
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-10);
        }
    }

    #[test]
    fn delayed_partitions_shift_output() {
        let plans = Plans::new(16);
        let ir = PartitionedIr::with_delay(&[1.0], 20, 16, &plans);
        let mut hist = SpectralHistory::new(16, ir.partitions(), plans.clone());
        let mut synth = Synthesis::new(16, plans);
        let mut x = vec![0.0; 16];
        x[3] = 1.0;
        let mut out = Vec::new();
        for b in 0..3 {
            hist.push(if b == 0 { &x } else { &[0.0; 16] });
            let mut re = vec![0.0; 17];
            let mut im = vec![0.0; 17];
            hist.accumulate(&ir, &mut re, &mut im);
            out.extend_from_slice(synth.run(&re, &im));
        }
        let k = crate::dsp::argmax_abs(&out).unwrap();
        assert_eq!(k, 23);
        assert!((out[23] - 1.0).abs() < 1e-12);
    }
}
