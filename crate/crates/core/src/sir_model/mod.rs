//! Domain types shared by every stage: the capture grid, the four capture
//! directions, impulse responses, listener poses, gain matrices and the
//! manifest-backed SIR dataset.

mod gains;
mod grid;
mod ir;
mod manifest;

pub use gains::GainMatrix;
pub use grid::GridSpec;
pub use ir::ImpulseResponse;
pub use manifest::{
    entry_file_name, load_sirset, save_sirset, write_manifest_for_files, SirSet, MANIFEST_FILE_NAME,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Number of Ambisonic channels in a third-order signal.
pub const AMBI_CHANNELS: usize = 16;

/// Speaker orientation during capture. Yaw grows clockwise seen from above.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Front = 0,
    Right = 1,
    Back = 2,
    Left = 3,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::Front,
        Direction::Right,
        Direction::Back,
        Direction::Left,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn yaw_deg(self) -> f64 {
        self.index() as f64 * 90.0
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::Front => "front",
            Direction::Right => "right",
            Direction::Back => "back",
            Direction::Left => "left",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "front" => Ok(Direction::Front),
            "right" => Ok(Direction::Right),
            "back" => Ok(Direction::Back),
            "left" => Ok(Direction::Left),
            other => Err(format!("unknown direction `{other}`")),
        }
    }
}

/// Wraps any finite angle into `[0, 360)`.
pub fn wrap_degrees(deg: f64) -> f64 {
    let w = deg.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs.
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

/// Listener state: planar position plus yaw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x_m: f64,
    pub z_m: f64,
    yaw_deg: f64,
}

impl Pose {
    pub fn new(x_m: f64, z_m: f64, yaw_deg: f64) -> Self {
        Self {
            x_m,
            z_m,
            yaw_deg: wrap_degrees(yaw_deg),
        }
    }

    /// Yaw in `[0, 360)`.
    pub fn yaw_deg(&self) -> f64 {
        self.yaw_deg
    }

    pub fn set_yaw_deg(&mut self, yaw_deg: f64) {
        self.yaw_deg = wrap_degrees(yaw_deg);
    }
}

impl Default for Pose {
    fn default() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }
}
