//! OSC pose input and gain output.
//!
//! Inbound: `/auralis/pose [x_m, z_m, yaw_deg]`, three numeric arguments.
//! Outbound, native: `/auralis/gain [position, direction, gain]`.
//! Outbound, daw-compat: `/track/{n}/volume [gain]` with
//! `n = offset + 5 p + d` (offset 2: track 1 is the input, each position
//! has a folder track followed by its four direction tracks).

use auralis_core::sir_model::{Direction, GainMatrix, Pose};
use rosc::{OscMessage, OscPacket, OscType};

pub const POSE_ADDRESS: &str = "/auralis/pose";
pub const GAIN_ADDRESS: &str = "/auralis/gain";
pub const DEFAULT_TRACK_OFFSET: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseMessage {
    pub x_m: f64,
    pub z_m: f64,
    /// Wrapped to `[0, 360)`.
    pub yaw_deg: f64,
}

impl PoseMessage {
    pub fn new(x_m: f64, z_m: f64, yaw_deg: f64) -> Option<Self> {
        if !(x_m.is_finite() && z_m.is_finite() && yaw_deg.is_finite()) {
            return None;
        }
        let pose = Pose::new(x_m, z_m, yaw_deg);
        Some(Self {
            x_m,
            z_m,
            yaw_deg: pose.yaw_deg(),
        })
    }

    pub fn pose(&self) -> Pose {
        Pose::new(self.x_m, self.z_m, self.yaw_deg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OscCounters {
    pub poses: u64,
    pub unknown: u64,
    pub malformed: u64,
}

/// Parses inbound datagrams and keeps counters. Never panics on input.
#[derive(Debug, Default)]
pub struct PoseReceiver {
    counters: OscCounters,
}

impl PoseReceiver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn counters(&self) -> OscCounters {
        self.counters
    }

    /// Returns the last valid pose in the datagram, if any. Bundles are
    /// searched in order.
    pub fn handle_datagram(&mut self, bytes: &[u8]) -> Option<PoseMessage> {
        match rosc::decoder::decode_udp(bytes) {
            Ok((_, packet)) => {
                let mut last = None;
                self.visit(&packet, &mut last);
                last
            }
            Err(err) => {
                tracing::debug!(%err, len = bytes.len(), "malformed OSC datagram");
                self.counters.malformed += 1;
                None
            }
        }
    }

    fn visit(&mut self, packet: &OscPacket, last: &mut Option<PoseMessage>) {
        match packet {
            OscPacket::Message(msg) => {
                if msg.addr != POSE_ADDRESS {
                    self.counters.unknown += 1;
                    return;
                }
                match parse_pose_args(&msg.args) {
                    Some(p) => {
                        self.counters.poses += 1;
                        *last = Some(p);
                    }
                    None => {
                        tracing::debug!(args = ?msg.args, "malformed pose message");
                        self.counters.malformed += 1;
                    }
                }
            }
            OscPacket::Bundle(b) => {
                for p in &b.content {
                    self.visit(p, last);
                }
            }
        }
    }
}

fn numeric(arg: &OscType) -> Option<f64> {
    match *arg {
        OscType::Float(v) => Some(v as f64),
        OscType::Double(v) => Some(v),
        OscType::Int(v) => Some(v as f64),
        _ => None,
    }
}

fn parse_pose_args(args: &[OscType]) -> Option<PoseMessage> {
    let [x, z, yaw] = args else { return None };
    PoseMessage::new(numeric(x)?, numeric(z)?, numeric(yaw)?)
}

pub fn pose_packet(x_m: f32, z_m: f32, yaw_deg: f32) -> OscPacket {
    OscPacket::Message(OscMessage {
        addr: POSE_ADDRESS.into(),
        args: vec![OscType::Float(x_m), OscType::Float(z_m), OscType::Float(yaw_deg)],
    })
}

pub fn encode(packet: &OscPacket) -> Vec<u8> {
    rosc::encoder::encode(packet).expect("encoding an in-memory OSC packet cannot fail")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmitMode {
    Native,
    DawCompat { track_offset: usize },
}

/// Turns gain matrices into OSC messages, sending only entries that
/// changed since the previous call.
#[derive(Debug, Clone)]
pub struct GainEmitter {
    mode: EmitMode,
    last: Vec<[f32; 4]>,
}

impl GainEmitter {
    pub fn new(mode: EmitMode, positions: usize) -> Self {
        Self {
            mode,
            last: vec![[0.0; 4]; positions],
        }
    }

    pub fn mode(&self) -> EmitMode {
        self.mode
    }

    pub fn emit(&mut self, gm: &GainMatrix) -> Vec<OscMessage> {
        let mode = self.mode;
        let mut out = Vec::new();
        for (p, (row, last)) in gm.as_rows().iter().zip(&mut self.last).enumerate() {
            for d in Direction::ALL {
                let g = row[d.index()] as f32;
                if g == last[d.index()] {
                    continue;
                }
                last[d.index()] = g;
                out.push(message(mode, p, d, g));
            }
        }
        out
    }
}

fn message(mode: EmitMode, p: usize, d: Direction, g: f32) -> OscMessage {
    match mode {
        EmitMode::Native => OscMessage {
            addr: GAIN_ADDRESS.into(),
            args: vec![OscType::Int(p as i32), OscType::Int(d.index() as i32), OscType::Float(g)],
        },
        EmitMode::DawCompat { track_offset } => OscMessage {
            addr: format!("/track/{}/volume", track_offset + 5 * p + d.index()),
            args: vec![OscType::Float(g)],
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rosc::{OscBundle, OscTime};

    #[test]
    fn parses_pose_and_wraps_yaw() {
        let mut rx = PoseReceiver::new();
        let p = rx.handle_datagram(&encode(&pose_packet(1.5, 0.5, 45.0))).unwrap();
        assert_eq!((p.x_m, p.z_m, p.yaw_deg), (1.5, 0.5, 45.0));
        let p = rx.handle_datagram(&encode(&pose_packet(0.0, 0.0, -90.0))).unwrap();
        assert_eq!(p.yaw_deg, 270.0);
        assert_eq!(rx.counters().poses, 2);
    }

    #[test]
    fn counts_bad_input() {
        let mut rx = PoseReceiver::new();
        let bytes = encode(&pose_packet(1.0, 2.0, 3.0));
        assert!(rx.handle_datagram(&bytes[..bytes.len() - 3]).is_none());
        assert!(rx.handle_datagram(&[]).is_none());
        let other = OscPacket::Message(OscMessage {
            addr: "/other".into(),
            args: vec![],
        });
        assert!(rx.handle_datagram(&encode(&other)).is_none());
        let short = OscPacket::Message(OscMessage {
            addr: POSE_ADDRESS.into(),
            args: vec![OscType::Float(1.0)],
        });
        assert!(rx.handle_datagram(&encode(&short)).is_none());
        let nan = pose_packet(f32::NAN, 0.0, 0.0);
        assert!(rx.handle_datagram(&encode(&nan)).is_none());
        assert_eq!(
            rx.counters(),
            OscCounters {
                poses: 0,
                unknown: 1,
                malformed: 4
            }
        );
    }

    #[test]
    fn bundle_takes_last_pose() {
        let mut rx = PoseReceiver::new();
        let bundle = OscPacket::Bundle(OscBundle {
            timetag: OscTime::from((0, 1)),
            content: vec![pose_packet(1.0, 1.0, 0.0), pose_packet(2.0, 1.0, 10.0)],
        });
        let p = rx.handle_datagram(&encode(&bundle)).unwrap();
        assert_eq!(p.x_m, 2.0);
    }

    #[test]
    fn daw_compat_track_numbers_and_deltas() {
        let mut em = GainEmitter::new(
            EmitMode::DawCompat {
                track_offset: DEFAULT_TRACK_OFFSET,
            },
            20,
        );
        let mut gm = GainMatrix::zeros(20);
        gm.set(0, Direction::Front, 1.0).unwrap();
        let msgs = em.emit(&gm);
        assert_eq!(msgs.len(), 1);
        assert_eq!(msgs[0].addr, "/track/2/volume");
        assert_eq!(msgs[0].args, vec![OscType::Float(1.0)]);
        assert!(em.emit(&gm).is_empty());
        let msgs = em.emit(&GainMatrix::zeros(20));
        assert_eq!(msgs.len(), 1);
        assert_eq!(msgs[0].args, vec![OscType::Float(0.0)]);
    }

    #[test]
    fn native_message_layout() {
        let mut em = GainEmitter::new(EmitMode::Native, 20);
        let mut gm = GainMatrix::zeros(20);
        gm.set(1, Direction::Left, 0.25).unwrap();
        let msgs = em.emit(&gm);
        assert_eq!(msgs[0].addr, GAIN_ADDRESS);
        assert_eq!(msgs[0].args, vec![OscType::Int(1), OscType::Int(3), OscType::Float(0.25)]);
    }
}
