use std::path::Path;

use super::config::EngineConfig;
use super::graph::Engine;
use crate::interpolation::Interpolator;
use crate::sir_model::{load_sirset, Pose, SirSet};
use crate::wav::{read_wav, write_wav, SampleFormat};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub time_s: f64,
    pub pose: Pose,
}

/// Parses lines of `time_s x z yaw`. Blank lines and `#` comments are
/// skipped; times must be non-decreasing.
pub fn parse_trajectory(text: &str, origin: &Path) -> Result<Vec<TrajectoryPoint>> {
    let mut points: Vec<TrajectoryPoint> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: origin.to_path_buf(),
            line: i + 1,
            message,
        };
        let fields = line
            .split_whitespace()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(format!("not a finite number: {f:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let [time_s, x, z, yaw] = fields[..] else {
            return Err(parse_err(format!("expected 4 fields, found {}", fields.len())));
        };
        if points.last().is_some_and(|p| time_s < p.time_s) {
            return Err(Error::UnsortedTrajectory { index: i + 1 });
        }
        points.push(TrajectoryPoint {
            time_s,
            pose: Pose::new(x, z, yaw),
        });
    }
    Ok(points)
}

pub fn load_trajectory(path: impl AsRef<Path>) -> Result<Vec<TrajectoryPoint>> {
    let path = path.as_ref();
    parse_trajectory(&std::fs::read_to_string(path)?, path)
}

/// Block-accurate offline run of the real-time graph.
///
/// Before each block the latest trajectory pose at or before the block
/// start is applied. The first block's gains are applied without a ramp.
/// The output is `input.len() + longest IR (with delay) - 1` samples long.
pub fn render_offline(
    input: &[f64],
    input_sr: u32,
    trajectory: &[TrajectoryPoint],
    sirset: &SirSet,
    cfg: &EngineConfig,
) -> Result<[Vec<f64>; 2]> {
    if input_sr != cfg.sample_rate {
        return Err(Error::SampleRateMismatch {
            expected: cfg.sample_rate,
            found: input_sr,
        });
    }
    if let Some(i) = trajectory.windows(2).position(|w| w[1].time_s < w[0].time_s) {
        return Err(Error::UnsortedTrajectory { index: i + 1 });
    }
    let mut engine = Engine::build(sirset, cfg)?;
    let mut interp = Interpolator::new(*sirset.grid(), cfg.activation)?;
    let b = cfg.block_size;
    let tail = sirset.max_ir_len() + cfg.delay_samples();
    let total = input.len() + tail - 1;
    let blocks = total.div_ceil(b);
    let mut left = vec![0.0; blocks * b];
    let mut right = vec![0.0; blocks * b];
    let mut inbuf = vec![0.0; b];
    let mut next = 0;
    let mut pose = interp.pose();
    for k in 0..blocks {
        let t = (k * b) as f64 / cfg.sample_rate as f64;
        while next < trajectory.len() && trajectory[next].time_s <= t {
            pose = trajectory[next].pose;
            next += 1;
        }
        let gm = interp.update(pose);
        if k == 0 {
            engine.reset_gains(&gm)?;
        } else {
            engine.set_gain_matrix(&gm)?;
        }
        inbuf.fill(0.0);
        let start = k * b;
        if start < input.len() {
            let n = b.min(input.len() - start);
            inbuf[..n].copy_from_slice(&input[start..start + n]);
        }
        let r = start..start + b;
        engine.process_block(&inbuf, &mut left[r.clone()], &mut right[r]);
    }
    left.truncate(total);
    right.truncate(total);
    Ok([left, right])
}

/// File front end for [`render_offline`]. Multichannel input is averaged
/// to mono.
pub fn render_offline_files(
    input: impl AsRef<Path>,
    trajectory: Option<&Path>,
    manifest: impl AsRef<Path>,
    output: impl AsRef<Path>,
    cfg: &EngineConfig,
    format: SampleFormat,
) -> Result<()> {
    let wav = read_wav(input)?;
    let n = wav.channels.len() as f64;
    let mono: Vec<f64> = (0..wav.frames())
        .map(|i| wav.channels.iter().map(|c| c[i]).sum::<f64>() / n)
        .collect();
    let trajectory = match trajectory {
        Some(p) => load_trajectory(p)?,
        None => Vec::new(),
    };
    let set = load_sirset(manifest)?;
    let [l, r] = render_offline(&mono, wav.sample_rate, &trajectory, &set, cfg)?;
    write_wav(output, cfg.sample_rate, &[l, r], format)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sir_model::{Direction, GridSpec, ImpulseResponse, AMBI_CHANNELS};
    use std::collections::BTreeMap;

    #[test]
    fn parse_accepts_comments_and_rejects_unsorted() {
        let p = Path::new("t.txt");
        let pts = parse_trajectory("# t x z yaw\n0 0 0 0\n\n0.5 1 2 370 # turn\n", p).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[1].pose.x_m, 1.0);
        assert!((pts[1].pose.yaw_deg() - 10.0).abs() < 1e-12);
        assert!(matches!(
            parse_trajectory("1 0 0 0\n0.5 0 0 0\n", p),
            Err(Error::UnsortedTrajectory { index: 2 })
        ));
        assert!(matches!(parse_trajectory("0 0 0\n", p), Err(Error::Parse { line: 1, .. })));
        assert!(parse_trajectory("0 0 nan 0\n", p).is_err());
    }

    #[test]
    fn output_length_and_default_pose() {
        let grid = GridSpec::new(1, 2, 1.0).unwrap();
        let mut map = BTreeMap::new();
        for p in 0..2 {
            for d in Direction::ALL {
                let mut ch = vec![vec![0.0; 10]; AMBI_CHANNELS];
                ch[0][p] = 1.0;
                map.insert((p, d), ImpulseResponse::new(48_000, ch).unwrap());
            }
        }
        let set = SirSet::new(grid, 48_000, map).unwrap();
        let cfg = EngineConfig {
            block_size: 16,
            ..Default::default()
        };
        let x = vec![1.0; 40];
        let [l, r] = render_offline(&x, 48_000, &[], &set, &cfg).unwrap();
        assert_eq!(l.len(), 49);
        assert_eq!(r.len(), 49);
        // Default pose is node 0, yaw 0: the W impulse at lag 0 decodes at 0.5.
        assert!((l[0] - 0.5).abs() < 1e-12);
        assert!(render_offline(&x, 44_100, &[], &set, &cfg).is_err());
    }
}
