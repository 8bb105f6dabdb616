//! Third-order Ambisonics: ACN channel order, SN3D normalization.
//!
//! Azimuth is measured counter-clockwise from the front (90 degrees is
//! left), elevation upward from the horizontal plane.

use std::fs;
use std::path::Path;

use crate::sir_model::AMBI_CHANNELS;
use crate::{Error, Result};

/// Real spherical-harmonic gains for one direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShVector(pub [f64; AMBI_CHANNELS]);

impl ShVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Real SN3D spherical harmonics up to order 3 in ACN order.
pub fn sh_gains_3oa(azimuth_deg: f64, elevation_deg: f64) -> ShVector {
    let az = azimuth_deg.rem_euclid(360.0).to_radians();
    let el = elevation_deg.to_radians();
    let (sa, ca) = az.sin_cos();
    let (s2a, c2a) = (2.0 * az).sin_cos();
    let (s3a, c3a) = (3.0 * az).sin_cos();
    let (se, ce) = el.sin_cos();
    let s2e = (2.0 * el).sin();
    let ce2 = ce * ce;
    let ce3 = ce2 * ce;
    let se2 = se * se;

    let r3_2 = 3f64.sqrt() / 2.0;
    let r5_8 = (5.0f64 / 8.0).sqrt();
    let r15_2 = 15f64.sqrt() / 2.0;
    let r3_8 = (3.0f64 / 8.0).sqrt();

    ShVector([
        1.0,
        sa * ce,
        se,
        ca * ce,
        r3_2 * s2a * ce2,
        r3_2 * sa * s2e,
        0.5 * (3.0 * se2 - 1.0),
        r3_2 * ca * s2e,
        r3_2 * c2a * ce2,
        r5_8 * s3a * ce3,
        r15_2 * s2a * se * ce2,
        r3_8 * sa * ce * (5.0 * se2 - 1.0),
        0.5 * se * (5.0 * se2 - 3.0),
        r3_8 * ca * ce * (5.0 * se2 - 1.0),
        r15_2 * c2a * se * ce2,
        r5_8 * c3a * ce3,
    ])
}

/// Encodes a mono signal as a point source in direction `(azimuth, elevation)`.
pub fn encode_mono(signal: &[f64], azimuth_deg: f64, elevation_deg: f64) -> Vec<Vec<f64>> {
    let sh = sh_gains_3oa(azimuth_deg, elevation_deg);
    sh.0.iter()
        .map(|&g| signal.iter().map(|&x| x * g).collect())
        .collect()
}

/// 16 x 2 matrix mapping Ambisonic channels to left/right outputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeMatrix {
    rows: [[f64; 2]; AMBI_CHANNELS],
}

impl Default for DecodeMatrix {
    /// First-order virtual cardioids at +/-90 degrees:
    /// `L = 0.5 W + 0.5 Y`, `R = 0.5 W - 0.5 Y`.
    fn default() -> Self {
        let mut rows = [[0.0; 2]; AMBI_CHANNELS];
        rows[0] = [0.5, 0.5];
        rows[1] = [0.5, -0.5];
        Self { rows }
    }
}

impl DecodeMatrix {
    pub fn new(rows: [[f64; 2]; AMBI_CHANNELS]) -> Result<Self> {
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDecodeMatrix("non-finite entry".into()));
        }
        for (col, side) in ["left", "right"].iter().enumerate() {
            if rows.iter().all(|r| r[col] == 0.0) {
                return Err(Error::InvalidDecodeMatrix(format!("{side} column is all zero")));
            }
        }
        Ok(Self { rows })
    }

    /// All-zero matrix; mutes the decoded output.
    pub fn zero() -> Self {
        Self {
            rows: [[0.0; 2]; AMBI_CHANNELS],
        }
    }

    pub fn rows(&self) -> &[[f64; 2]; AMBI_CHANNELS] {
        &self.rows
    }

    pub fn gain(&self, channel: usize, side: usize) -> f64 {
        self.rows[channel][side]
    }

    /// Parses 16 lines of two whitespace-separated numbers, one line per ACN
    /// channel. Blank lines and `#` comments are ignored.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut rows = Vec::with_capacity(AMBI_CHANNELS);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: origin.to_path_buf(),
                line: lineno + 1,
                message,
            };
            let vals = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| parse_err(format!("`{t}`: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            if vals.len() != 2 {
                return Err(parse_err(format!("expected 2 columns, found {}", vals.len())));
            }
            rows.push([vals[0], vals[1]]);
        }
        if rows.len() != AMBI_CHANNELS {
            return Err(Error::InvalidDecodeMatrix(format!(
                "expected {AMBI_CHANNELS} rows, found {}",
                rows.len()
            )));
        }
        let mut arr = [[0.0; 2]; AMBI_CHANNELS];
        arr.copy_from_slice(&rows);
        Self::new(arr)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&fs::read_to_string(path)?, path)
    }

    pub fn to_text(&self) -> String {
        self.rows
            .iter()
            .map(|[l, r]| format!("{l} {r}\n"))
            .collect()
    }
}

/// Decodes a 16-channel bus to `[left, right]`.
pub fn decode(bus: &[Vec<f64>], m: &DecodeMatrix) -> Result<[Vec<f64>; 2]> {
    if bus.len() != AMBI_CHANNELS {
        return Err(Error::ChannelCount {
            context: "decode input",
            expected: AMBI_CHANNELS,
            found: bus.len(),
        });
    }
    let n = bus[0].len();
    let mut out = [vec![0.0; n], vec![0.0; n]];
    for (ch, samples) in bus.iter().enumerate() {
        for (side, o) in out.iter_mut().enumerate() {
            let g = m.rows[ch][side];
            if g == 0.0 {
                continue;
            }
            for (y, x) in o.iter_mut().zip(samples) {
                *y += g * x;
            }
        }
    }
    Ok(out)
}
