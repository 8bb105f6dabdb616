//! Control side of the service: poses in, gain snapshots out.

use auralis_core::engine::{gain_channel, Engine, EngineConfig, GainSender};
use auralis_core::interpolation::{ActivationConfig, Interpolator};
use auralis_core::sir_model::{GainMatrix, GridSpec, Pose, SirSet};
use rosc::OscMessage;

use crate::osc::{GainEmitter, OscCounters, PoseMessage, PoseReceiver};

/// Owns the interpolation state and the producer end of the gain handoff.
pub struct ControlPlane {
    interp: Interpolator,
    gains: GainMatrix,
    sender: GainSender,
    receiver: PoseReceiver,
    emitter: Option<GainEmitter>,
    outbound: Vec<OscMessage>,
}

impl ControlPlane {
    /// Starts at the default pose. `sender` must belong to the engine's
    /// handoff.
    pub fn new(
        grid: GridSpec,
        activation: ActivationConfig,
        sender: GainSender,
        emitter: Option<GainEmitter>,
    ) -> auralis_core::Result<Self> {
        let interp = Interpolator::new(grid, activation)?;
        let gains = interp.current();
        let mut plane = Self {
            interp,
            gains,
            sender,
            receiver: PoseReceiver::new(),
            emitter,
            outbound: Vec::new(),
        };
        plane.queue_outbound();
        Ok(plane)
    }

    pub fn pose(&self) -> Pose {
        self.interp.pose()
    }

    pub fn gains(&self) -> &GainMatrix {
        &self.gains
    }

    pub fn active(&self) -> Vec<usize> {
        self.interp.state().to_vec()
    }

    pub fn grid(&self) -> &GridSpec {
        self.interp.grid()
    }

    pub fn counters(&self) -> OscCounters {
        self.receiver.counters()
    }

    /// Recomputes gains for `pose`, publishes them and returns the
    /// snapshot sequence number.
    pub fn apply_pose(&mut self, pose: Pose) -> u64 {
        self.gains = self.interp.update(pose);
        self.queue_outbound();
        self.sender
            .send(&self.gains)
            .expect("handoff and grid have the same size")
    }

    pub fn apply_message(&mut self, msg: PoseMessage) -> u64 {
        self.apply_pose(msg.pose())
    }

    /// Feeds one OSC datagram; returns the snapshot sequence number when it
    /// carried a valid pose.
    pub fn handle_datagram(&mut self, bytes: &[u8]) -> Option<u64> {
        let msg = self.receiver.handle_datagram(bytes)?;
        Some(self.apply_message(msg))
    }

    /// OSC gain messages produced since the last call.
    pub fn take_outbound(&mut self) -> Vec<OscMessage> {
        std::mem::take(&mut self.outbound)
    }

    fn queue_outbound(&mut self) {
        if let Some(em) = self.emitter.as_mut() {
            self.outbound.extend(em.emit(&self.gains));
        }
    }
}

/// A datagram arriving at `time_s` on the control port.
#[derive(Debug, Clone)]
pub struct TimedDatagram {
    pub time_s: f64,
    pub bytes: Vec<u8>,
}

/// When a pose arrived and at which block the engine applied it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseLatency {
    pub seq: u64,
    pub receipt_s: f64,
    pub applied_block: usize,
    /// Blocks elapsed between receipt and the start of the applying block.
    pub latency_blocks: f64,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub latencies: Vec<PoseLatency>,
    pub counters: OscCounters,
    pub final_gains: GainMatrix,
    pub engine_gains: GainMatrix,
}

/// Offline run of the control plane and the engine with injected datagram
/// timestamps. Datagrams with `time_s` at or before a block's start are
/// delivered before that block is processed. `datagrams` must be sorted.
pub fn simulate_control(
    input: &[f64],
    sirset: &SirSet,
    cfg: &EngineConfig,
    datagrams: &[TimedDatagram],
) -> auralis_core::Result<Simulation> {
    let mut engine = Engine::build(sirset, cfg)?;
    let (tx, rx) = gain_channel(sirset.grid().position_count());
    engine.connect_control(rx)?;
    let mut control = ControlPlane::new(*sirset.grid(), cfg.activation, tx, None)?;

    let b = cfg.block_size;
    let bd = cfg.block_duration_s();
    let total = input.len() + sirset.max_ir_len() + cfg.delay_samples() - 1;
    let blocks = total.div_ceil(b);
    let mut left = vec![0.0; blocks * b];
    let mut right = vec![0.0; blocks * b];
    let mut inbuf = vec![0.0; b];
    let mut pending: Vec<(u64, f64)> = Vec::new();
    let mut latencies = Vec::new();
    let mut next = 0;
    for k in 0..blocks {
        let t = k as f64 * bd;
        while next < datagrams.len() && datagrams[next].time_s <= t {
            let d = &datagrams[next];
            if let Some(seq) = control.handle_datagram(&d.bytes) {
                pending.push((seq, d.time_s));
            }
            next += 1;
        }
        inbuf.fill(0.0);
        let s = k * b;
        if s < input.len() {
            let n = b.min(input.len() - s);
            inbuf[..n].copy_from_slice(&input[s..s + n]);
        }
        engine.process_block(&inbuf, &mut left[s..s + b], &mut right[s..s + b]);
        let applied = engine.applied_seq();
        pending.retain(|&(seq, receipt_s)| {
            if seq > applied {
                return true;
            }
            latencies.push(PoseLatency {
                seq,
                receipt_s,
                applied_block: k,
                latency_blocks: t / bd - receipt_s / bd,
            });
            false
        });
    }
    left.truncate(total);
    right.truncate(total);
    Ok(Simulation {
        left,
        right,
        latencies,
        counters: control.counters(),
        final_gains: control.gains().clone(),
        engine_gains: engine.gains(),
    })
}
