//! WebSocket message schema shared with the control panel.
//!
//! Inbound: `{"type":"pose","x_m":..,"z_m":..,"yaw_deg":..}`.
//! Outbound: `{"type":"state", ...}` at the snapshot rate, carrying the
//! grid geometry so clients need no dataset knowledge.

use auralis_core::sir_model::{Direction, GainMatrix, GridSpec, Pose};
use serde::{Deserialize, Serialize};

use crate::osc::{OscCounters, PoseMessage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ClientMessage {
    Pose { x_m: f64, z_m: f64, yaw_deg: f64 },
}

impl ClientMessage {
    /// Parses a text frame; `None` for anything that is not a valid pose.
    pub fn parse(text: &str) -> Option<PoseMessage> {
        match serde_json::from_str(text).ok()? {
            ClientMessage::Pose { x_m, z_m, yaw_deg } => PoseMessage::new(x_m, z_m, yaw_deg),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseState {
    pub x_m: f64,
    pub z_m: f64,
    pub yaw_deg: f64,
}

impl From<Pose> for PoseState {
    fn from(p: Pose) -> Self {
        Self {
            x_m: p.x_m,
            z_m: p.z_m,
            yaw_deg: p.yaw_deg(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainEntry {
    pub position: usize,
    pub direction: Direction,
    pub gain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridState {
    pub rows: usize,
    pub cols: usize,
    pub spacing_m: f64,
    pub origin_x: f64,
    pub origin_z: f64,
}

impl From<&GridSpec> for GridState {
    fn from(g: &GridSpec) -> Self {
        Self {
            rows: g.rows,
            cols: g.cols,
            spacing_m: g.spacing_m,
            origin_x: g.origin_x,
            origin_z: g.origin_z,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PeakState {
    pub left: f64,
    pub right: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CounterState {
    pub osc_poses: u64,
    pub osc_unknown: u64,
    pub osc_malformed: u64,
    pub ws_invalid: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename = "state")]
pub struct StateSnapshot {
    pub pose: PoseState,
    pub active: Vec<usize>,
    /// Nonzero entries only.
    pub gains: Vec<GainEntry>,
    pub peak: PeakState,
    pub blocks: u64,
    pub grid: GridState,
    pub counters: CounterState,
}

impl StateSnapshot {
    pub fn gain_entries(gm: &GainMatrix) -> Vec<GainEntry> {
        gm.nonzero()
            .map(|(position, direction, gain)| GainEntry {
                position,
                direction,
                gain,
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("snapshot serializes")
    }
}

impl CounterState {
    pub fn new(osc: OscCounters, ws_invalid: u64) -> Self {
        Self {
            osc_poses: osc.poses,
            osc_unknown: osc.unknown,
            osc_malformed: osc.malformed,
            ws_invalid,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pose_frames() {
        let p = ClientMessage::parse(r#"{"type":"pose","x_m":2.0,"z_m":1.5,"yaw_deg":-90}"#).unwrap();
        assert_eq!((p.x_m, p.z_m, p.yaw_deg), (2.0, 1.5, 270.0));
        assert!(ClientMessage::parse(r#"{"type":"pose","x_m":2.0}"#).is_none());
        assert!(ClientMessage::parse(r#"{"type":"state"}"#).is_none());
        assert!(ClientMessage::parse("not json").is_none());
    }

    #[test]
    fn snapshot_json_shape() {
        let mut gm = GainMatrix::zeros(2);
        gm.set(1, Direction::Left, 0.5).unwrap();
        let snap = StateSnapshot {
            pose: Pose::new(1.0, 0.0, 270.0).into(),
            active: vec![1],
            gains: StateSnapshot::gain_entries(&gm),
            peak: PeakState::default(),
            blocks: 3,
            grid: (&GridSpec::new(1, 2, 1.0).unwrap()).into(),
            counters: CounterState::default(),
        };
        let v: serde_json::Value = serde_json::from_str(&snap.to_json()).unwrap();
        assert_eq!(v["type"], "state");
        assert_eq!(v["gains"][0]["direction"], "left");
        assert_eq!(v["grid"]["cols"], 2);
        let back: StateSnapshot = serde_json::from_str(&snap.to_json()).unwrap();
        assert_eq!(back, snap);
    }
}
