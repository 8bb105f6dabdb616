//! Wait-free handoff between the control thread and the audio thread.
//!
//! Both directions use a triple buffer: the writer never waits for the
//! reader, and the reader always sees the latest complete value. Buffers
//! are sized at construction so neither side allocates afterwards.

use triple_buffer::{triple_buffer, Input, Output};

use crate::sir_model::GainMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
struct GainSnapshot {
    seq: u64,
    rows: Vec<[f64; 4]>,
}

/// Control-side end of the gain handoff.
pub struct GainSender {
    input: Input<GainSnapshot>,
    seq: u64,
    positions: usize,
}

/// Audio-side end of the gain handoff.
pub struct GainReceiver {
    output: Output<GainSnapshot>,
    seen: u64,
    positions: usize,
}

/// Creates a gain handoff for a grid with `positions` nodes.
pub fn gain_channel(positions: usize) -> (GainSender, GainReceiver) {
    let initial = GainSnapshot {
        seq: 0,
        rows: vec![[0.0; 4]; positions],
    };
    let (input, output) = triple_buffer(&initial);
    (
        GainSender {
            input,
            seq: 0,
            positions,
        },
        GainReceiver {
            output,
            seen: 0,
            positions,
        },
    )
}

impl GainSender {
    /// Publishes a gain matrix and returns its sequence number.
    pub fn send(&mut self, gm: &GainMatrix) -> Result<u64> {
        self.send_rows(gm.as_rows())
    }

    pub fn send_rows(&mut self, rows: &[[f64; 4]]) -> Result<u64> {
        if rows.len() != self.positions {
            return Err(Error::DimensionMismatch {
                expected: self.positions,
                found: rows.len(),
            });
        }
        self.seq += 1;
        let buf = self.input.input_buffer_mut();
        buf.seq = self.seq;
        buf.rows.copy_from_slice(rows);
        self.input.publish();
        Ok(self.seq)
    }

    pub fn last_seq(&self) -> u64 {
        self.seq
    }

    pub fn positions(&self) -> usize {
        self.positions
    }
}

impl GainReceiver {
    /// Returns the newest unseen snapshot and its sequence number.
    pub fn poll(&mut self) -> Option<(u64, &[[f64; 4]])> {
        self.output.update();
        let snap = self.output.output_buffer();
        if snap.seq == self.seen {
            return None;
        }
        self.seen = snap.seq;
        Some((snap.seq, &snap.rows))
    }

    pub fn positions(&self) -> usize {
        self.positions
    }
}

/// Per-block report from the audio thread.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlockStats {
    /// Blocks processed so far.
    pub blocks: u64,
    /// Sequence number of the last gain snapshot applied.
    pub applied_seq: u64,
    pub enabled_units: usize,
    pub peak_l: f64,
    pub peak_r: f64,
}

pub struct StatsSender {
    input: Input<BlockStats>,
}

pub struct StatsReceiver {
    output: Output<BlockStats>,
}

pub fn stats_channel() -> (StatsSender, StatsReceiver) {
    let (input, output) = triple_buffer(&BlockStats::default());
    (StatsSender { input }, StatsReceiver { output })
}

impl StatsSender {
    pub fn send(&mut self, stats: BlockStats) {
        self.input.write(stats);
    }
}

impl StatsReceiver {
    /// Latest stats; repeats the previous value when nothing new arrived.
    pub fn latest(&mut self) -> BlockStats {
        *self.output.read()
    }
}
