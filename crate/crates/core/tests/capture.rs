use auralis_core::capture::{
    deconvolve, inverse_filter, produce_sirs, segment_bounds, segment_session, sweep_samples, Deconvolver,
    PopDetector, Recording, SweepSpec, DIRECT_GUARD_SAMPLES, SEGMENT_TAIL_S,
};
use auralis_core::dsp::{argmax_abs, fft_convolve, linear_to_db, ncc};
use auralis_core::par::Exec;
use auralis_core::sir_model::{GridSpec, ImpulseResponse};
use auralis_testkit::{direct_convolution, lowpass_fir, synthetic_irs, SyntheticRecording};

/// Band-pass FIR as the difference of two windowed-sinc low-passes.
fn bandpass(lo_hz: f64, hi_hz: f64, sr: u32, taps: usize) -> Vec<f64> {
    let hi = lowpass_fir(hi_hz, sr, taps);
    let lo = lowpass_fir(lo_hz, sr, taps);
    hi.iter().zip(&lo).map(|(a, b)| a - b).collect()
}

/// Peak over the largest sample further than `half` samples from it.
fn peak_to_sidelobe_db(x: &[f64], half: usize) -> f64 {
    let p = argmax_abs(x).unwrap();
    let side = x
        .iter()
        .enumerate()
        .filter(|(i, _)| i.abs_diff(p) > half)
        .map(|(_, v)| v.abs())
        .fold(0.0, f64::max);
    linear_to_db(x[p].abs() / side)
}

/// Band-limits `response` to `[2 f_start, f_end / 2]` and measures it
/// outside the support of the band-pass filter.
fn in_band_sidelobe_db(spec: &SweepSpec, response: &[f64]) -> f64 {
    let sr = spec.sample_rate_hz;
    let taps = 4 * (sr as usize / spec.f_start_hz as usize) + 1;
    let bp = bandpass(2.0 * spec.f_start_hz, spec.f_end_hz / 2.0, sr, taps);
    peak_to_sidelobe_db(&fft_convolve(response, &bp), taps / 2)
}

#[test]
fn inverse_filter_sidelobes_in_band() {
    let spec = SweepSpec::default();
    let sweep = sweep_samples(&spec).unwrap();
    let response = fft_convolve(&sweep, &inverse_filter(&spec).unwrap());
    let ratio = in_band_sidelobe_db(&spec, &response);
    assert!(ratio >= 60.0, "{ratio} dB");

    // An inverse built for a different sweep rate smears the response.
    let other = SweepSpec {
        duration_s: 19.0,
        ..spec
    };
    let bad = in_band_sidelobe_db(&spec, &fft_convolve(&sweep, &inverse_filter(&other).unwrap()));
    assert!(bad < 40.0, "{bad} dB");
}

#[test]
fn inverse_peak_position_against_direct_oracle() {
    let spec = SweepSpec {
        duration_s: 0.25,
        ..Default::default()
    };
    let sweep = sweep_samples(&spec).unwrap();
    let response = direct_convolution(&sweep, &inverse_filter(&spec).unwrap());
    let p = argmax_abs(&response).unwrap();
    assert!(p.abs_diff(sweep.len() - 1) <= 1);
    assert!((response[p].abs() - 1.0).abs() <= 0.01);
}

#[test]
fn deconvolution_recovers_channel_zero_ir() {
    let spec = SweepSpec {
        duration_s: 1.0,
        ..Default::default()
    };
    let sweep = sweep_samples(&spec).unwrap();
    let grid = GridSpec::new(1, 1, 1.0).unwrap();
    let truth = &synthetic_irs(&grid, 48_000, 4800, 11)[0];
    let h = truth.channel(0);
    let mut seg = direct_convolution(&sweep, h);
    seg.resize(sweep.len() + 48_000, 0.0);
    let ir = deconvolve(&[seg], &inverse_filter(&spec).unwrap(), 48_000, 4800).unwrap();
    let start = argmax_abs(h).unwrap() - DIRECT_GUARD_SAMPLES;
    assert!(ncc(ir.channel(0), &h[start..]) >= 0.99);
}

fn aligned_truth(truth: &ImpulseResponse, len: usize) -> Vec<f64> {
    let start = argmax_abs(truth.channel(0)).unwrap().saturating_sub(DIRECT_GUARD_SAMPLES);
    truth
        .channels()
        .iter()
        .flat_map(|c| {
            let mut v = c[start..].to_vec();
            v.resize(len, 0.0);
            v
        })
        .collect()
}

#[test]
fn session_round_trip_small_grid() {
    let spec = SweepSpec {
        duration_s: 2.0,
        ..Default::default()
    };
    let grid = GridSpec::new(1, 2, 1.0).unwrap();
    let trim = 12_000;
    let irs = synthetic_irs(&grid, spec.sample_rate_hz, trim, 5);
    let rec = SyntheticRecording::new(&spec, &grid, irs.clone()).unwrap();
    let layout = rec.layout().clone();

    let pops = PopDetector::default().detect_recording(&rec, 0).unwrap();
    assert_eq!(pops.len(), 8);
    for ((p, m), ir) in pops.iter().zip(&layout.measurements).zip(&irs) {
        let direct = argmax_abs(ir.channel(0)).unwrap();
        assert!(p.abs_diff(m.sync_pop_sample + direct) <= 10);
    }

    let tail = (SEGMENT_TAIL_S * spec.sample_rate_hz as f64).round() as usize;
    let bounds = segment_bounds(&pops, 8, spec.len(), tail).unwrap();
    let dec = Deconvolver::new(&inverse_filter(&spec).unwrap(), spec.sample_rate_hz, spec.len() + tail);
    for exec in [Exec::Sequential, Exec::Parallel] {
        let sirs = produce_sirs(&rec, &bounds, &dec, trim, exec).unwrap();
        for (got, truth) in sirs.iter().zip(&irs) {
            let got: Vec<f64> = got.channels().concat();
            let score = ncc(&got, &aligned_truth(truth, trim));
            assert!(score >= 0.99, "ncc {score}");
        }
    }

    let segments = segment_session(&rec, &pops, 8, spec.len()).unwrap();
    assert_eq!(segments.len(), 8);
    assert_eq!(segments[0].len(), 16);
    assert!(matches!(
        segment_session(&rec, &pops[..7], 8, spec.len()),
        Err(auralis_core::Error::CountMismatch { found: 7, expected: 8 })
    ));
    assert_eq!(rec.channels(), 16);
}
