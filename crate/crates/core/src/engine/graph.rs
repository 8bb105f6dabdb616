use super::config::{ChannelMap, EngineConfig};
use super::convolver::{PartitionedIr, Plans, SpectralHistory, Synthesis};
use super::handoff::{BlockStats, GainReceiver, StatsSender};
use crate::ambisonics::sh_gains_3oa;
use crate::dsp::db_to_linear;
use crate::interpolation::Interpolator;
use crate::par::{self, Exec};
use crate::sir_model::{Direction, GainMatrix, GridSpec, ImpulseResponse, SirSet, AMBI_CHANNELS};
use crate::{Error, Result};

/// One (position, direction) path of the graph.
///
/// The 16 SIR channels are weighted by the encoder gains and the decode
/// matrix when the unit is built, so a unit stores one left and one right
/// partitioned IR. A side whose weighted IR is identically zero is not
/// stored.
#[derive(Debug, Clone)]
pub struct ConvolverUnit {
    pub position: usize,
    pub direction: Direction,
    pub delay_samples: usize,
    sides: [Option<PartitionedIr>; 2],
    gain_current: f64,
    gain_target: f64,
    enabled: bool,
}

impl ConvolverUnit {
    fn build(
        position: usize,
        direction: Direction,
        ir: &ImpulseResponse,
        weights: &[[f64; 2]; AMBI_CHANNELS],
        delay: usize,
        block: usize,
        plans: &Plans,
    ) -> Self {
        let sides = [0, 1].map(|side| {
            let mut folded = vec![0.0; ir.len()];
            let mut any = false;
            for (ch, w) in weights.iter().enumerate() {
                let w = w[side];
                if w == 0.0 {
                    continue;
                }
                any = true;
                for (y, x) in folded.iter_mut().zip(ir.channel(ch)) {
                    *y += w * x;
                }
            }
            (any && folded.iter().any(|&v| v != 0.0))
                .then(|| PartitionedIr::with_delay(&folded, delay, block, plans))
        });
        Self {
            position,
            direction,
            delay_samples: delay,
            sides,
            gain_current: 0.0,
            gain_target: 0.0,
            enabled: false,
        }
    }

    pub fn gain_current(&self) -> f64 {
        self.gain_current
    }

    pub fn gain_target(&self) -> f64 {
        self.gain_target
    }

    /// A unit is enabled while its current or target gain is nonzero.
    pub fn enabled(&self) -> bool {
        self.enabled
    }

    /// Partitions per stored side; 0 when the unit is silent by construction.
    pub fn partitions(&self) -> usize {
        self.sides
            .iter()
            .flatten()
            .map(PartitionedIr::partitions)
            .max()
            .unwrap_or(0)
    }

    fn set_target(&mut self, g: f64) {
        self.gain_target = g;
        self.enabled = self.gain_current != 0.0 || g != 0.0;
    }

    fn reset(&mut self, g: f64) {
        self.gain_current = g;
        self.set_target(g);
    }

    fn settle(&mut self) {
        self.gain_current = self.gain_target;
        self.enabled = self.gain_target != 0.0;
    }
}

/// The real-time graph. Built once; [`Engine::process_block`] neither
/// allocates nor blocks.
pub struct Engine {
    cfg: EngineConfig,
    grid: GridSpec,
    units: Vec<ConvolverUnit>,
    history: SpectralHistory,
    synthesis: Synthesis,
    monitor_gain: f64,
    unit_re: Vec<f64>,
    unit_im: Vec<f64>,
    /// Per side: fixed-gain part and ramp part of the output spectrum.
    fixed: [(Vec<f64>, Vec<f64>); 2],
    ramp: [(Vec<f64>, Vec<f64>); 2],
    ramp_shape: Vec<f64>,
    control: Option<GainReceiver>,
    stats: Option<StatsSender>,
    blocks: u64,
    applied_seq: u64,
}

impl Engine {
    pub fn build(sirset: &SirSet, cfg: &EngineConfig) -> Result<Self> {
        Self::build_with(sirset, cfg, Exec::default())
    }

    /// Builds the graph; `exec` controls how IR partitioning is spread
    /// across threads.
    pub fn build_with(sirset: &SirSet, cfg: &EngineConfig, exec: Exec) -> Result<Self> {
        cfg.validate()?;
        if sirset.sample_rate() != cfg.sample_rate {
            return Err(Error::SampleRateMismatch {
                expected: cfg.sample_rate,
                found: sirset.sample_rate(),
            });
        }
        let grid = *sirset.grid();
        let block = cfg.block_size;
        let plans = Plans::new(block);
        let encode = match cfg.channel_map {
            ChannelMap::Matched => sh_gains_3oa(cfg.encode_azimuth_deg, cfg.encode_elevation_deg).0,
            ChannelMap::MonoDirect => [1.0; AMBI_CHANNELS],
        };
        let mut weights = *cfg.decode.rows();
        for (w, e) in weights.iter_mut().zip(encode) {
            w[0] *= e;
            w[1] *= e;
        }
        let delay = cfg.delay_samples();
        let entries: Vec<_> = sirset.iter().collect();
        let units = par::map(exec, &entries, |&(p, d, ir)| {
            ConvolverUnit::build(p, d, ir, &weights, delay, block, &plans)
        });
        let slots = units.iter().map(ConvolverUnit::partitions).max().unwrap_or(1);
        let bins = block + 1;
        let zeros = || (vec![0.0; bins], vec![0.0; bins]);
        let mut engine = Self {
            grid,
            units,
            history: SpectralHistory::new(block, slots, plans.clone()),
            synthesis: Synthesis::new(block, plans),
            monitor_gain: cfg.monitor_gain_db.map_or(0.0, db_to_linear),
            unit_re: vec![0.0; bins],
            unit_im: vec![0.0; bins],
            fixed: [zeros(), zeros()],
            ramp: [zeros(), zeros()],
            ramp_shape: (1..=block).map(|n| n as f64 / block as f64).collect(),
            control: None,
            stats: None,
            blocks: 0,
            applied_seq: 0,
            cfg: cfg.clone(),
        };
        let initial = Interpolator::new(grid, cfg.activation)?.current();
        engine.reset_gains(&initial)?;
        Ok(engine)
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn block_size(&self) -> usize {
        self.cfg.block_size
    }

    pub fn units(&self) -> &[ConvolverUnit] {
        &self.units
    }

    pub fn unit(&self, p: usize, d: Direction) -> &ConvolverUnit {
        &self.units[p * 4 + d.index()]
    }

    pub fn enabled_units(&self) -> usize {
        self.units.iter().filter(|u| u.enabled).count()
    }

    /// Length of the frequency-domain delay line in blocks.
    pub fn partitions(&self) -> usize {
        self.units.iter().map(ConvolverUnit::partitions).max().unwrap_or(0)
    }

    pub fn blocks_processed(&self) -> u64 {
        self.blocks
    }

    /// Sequence number of the last snapshot taken from the control handoff.
    pub fn applied_seq(&self) -> u64 {
        self.applied_seq
    }

    /// Current gains as a matrix.
    pub fn gains(&self) -> GainMatrix {
        let mut gm = GainMatrix::zeros(self.grid.position_count());
        for u in &self.units {
            gm.set(u.position, u.direction, u.gain_target)
                .expect("unit positions are in range");
        }
        gm
    }

    /// Sets new targets; gains ramp to them across the next block.
    pub fn set_gain_matrix(&mut self, gm: &GainMatrix) -> Result<()> {
        self.set_gain_rows(gm.as_rows())
    }

    fn set_gain_rows(&mut self, rows: &[[f64; 4]]) -> Result<()> {
        self.check_rows(rows)?;
        for u in &mut self.units {
            u.set_target(rows[u.position][u.direction.index()]);
        }
        Ok(())
    }

    /// Jumps to `gm` without a ramp.
    pub fn reset_gains(&mut self, gm: &GainMatrix) -> Result<()> {
        self.check_rows(gm.as_rows())?;
        for u in &mut self.units {
            u.reset(gm.get(u.position, u.direction));
        }
        Ok(())
    }

    fn check_rows(&self, rows: &[[f64; 4]]) -> Result<()> {
        if rows.len() != self.grid.position_count() {
            return Err(Error::DimensionMismatch {
                expected: self.grid.position_count(),
                found: rows.len(),
            });
        }
        Ok(())
    }

    /// Attaches the audio-side end of a gain handoff. Snapshots are picked
    /// up at the start of each block.
    pub fn connect_control(&mut self, rx: GainReceiver) -> Result<()> {
        if rx.positions() != self.grid.position_count() {
            return Err(Error::DimensionMismatch {
                expected: self.grid.position_count(),
                found: rx.positions(),
            });
        }
        self.control = Some(rx);
        Ok(())
    }

    pub fn connect_stats(&mut self, tx: StatsSender) {
        self.stats = Some(tx);
    }

    /// Processes one block. `input` shorter than the block is zero-padded;
    /// `left` and `right` receive up to one block of output.
    pub fn process_block(&mut self, input: &[f64], left: &mut [f64], right: &mut [f64]) {
        if let Some(rx) = self.control.as_mut() {
            if let Some((seq, rows)) = rx.poll() {
                for u in &mut self.units {
                    u.set_target(rows[u.position][u.direction.index()]);
                }
                self.applied_seq = seq;
            }
        }

        let b = self.cfg.block_size;
        let input = &input[..input.len().min(b)];
        self.history.push(input);

        for side in 0..2 {
            for v in [&mut self.fixed[side], &mut self.ramp[side]] {
                v.0.fill(0.0);
                v.1.fill(0.0);
            }
        }
        let mut ramping = false;
        for u in self.units.iter().filter(|u| u.enabled) {
            let g0 = u.gain_current;
            let dg = u.gain_target - g0;
            ramping |= dg != 0.0;
            for (side, ir) in u.sides.iter().enumerate() {
                let Some(ir) = ir else { continue };
                self.unit_re.fill(0.0);
                self.unit_im.fill(0.0);
                self.history.accumulate(ir, &mut self.unit_re, &mut self.unit_im);
                axpy(g0, &self.unit_re, &self.unit_im, &mut self.fixed[side]);
                if dg != 0.0 {
                    axpy(dg, &self.unit_re, &self.unit_im, &mut self.ramp[side]);
                }
            }
        }

        for (side, out) in [left, right].into_iter().enumerate() {
            let n = out.len().min(b);
            let out = &mut out[..n];
            let (re, im) = &self.fixed[side];
            out.copy_from_slice(&self.synthesis.run(re, im)[..n]);
            if ramping {
                let (re, im) = &self.ramp[side];
                let y = self.synthesis.run(re, im);
                for ((o, y), r) in out.iter_mut().zip(y).zip(&self.ramp_shape) {
                    *o += r * y;
                }
            }
            if self.monitor_gain != 0.0 {
                for (o, x) in out.iter_mut().zip(input) {
                    *o += self.monitor_gain * x;
                }
            }
        }

        for u in &mut self.units {
            u.settle();
        }
        self.blocks += 1;
    }

    /// Like [`Engine::process_block`], and also reports peaks and counters
    /// to the attached stats handoff.
    pub fn process_block_with_stats(&mut self, input: &[f64], left: &mut [f64], right: &mut [f64]) {
        let enabled = self.enabled_units();
        self.process_block(input, left, right);
        if let Some(tx) = self.stats.as_mut() {
            tx.send(BlockStats {
                blocks: self.blocks,
                applied_seq: self.applied_seq,
                enabled_units: enabled,
                peak_l: crate::dsp::peak(left),
                peak_r: crate::dsp::peak(right),
            });
        }
    }
}

fn axpy(a: f64, x_re: &[f64], x_im: &[f64], acc: &mut (Vec<f64>, Vec<f64>)) {
    for (y, x) in acc.0.iter_mut().zip(x_re) {
        *y += a * x;
    }
    for (y, x) in acc.1.iter_mut().zip(x_im) {
        *y += a * x;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambisonics::DecodeMatrix;
    use std::collections::BTreeMap;

    fn impulse_set(grid: GridSpec, len: usize, sr: u32) -> SirSet {
        let mut map = BTreeMap::new();
        for p in 0..grid.position_count() {
            for d in Direction::ALL {
                let mut ch = vec![vec![0.0; len]; AMBI_CHANNELS];
                ch[0][p % len] = 1.0;
                map.insert((p, d), ImpulseResponse::new(sr, ch).unwrap());
            }
        }
        SirSet::new(grid, sr, map).unwrap()
    }

    fn run(engine: &mut Engine, input: &[f64]) -> [Vec<f64>; 2] {
        let b = engine.block_size();
        let mut l = vec![0.0; input.len()];
        let mut r = vec![0.0; input.len()];
        for ((x, l), r) in input.chunks(b).zip(l.chunks_mut(b)).zip(r.chunks_mut(b)) {
            engine.process_block(x, l, r);
        }
        [l, r]
    }

    #[test]
    fn unit_and_partition_counts() {
        let set = impulse_set(GridSpec::default(), 48_000, 48_000);
        let e = Engine::build(&set, &EngineConfig::default()).unwrap();
        assert_eq!(e.units().len(), 80);
        assert_eq!(e.partitions(), 188);

        let one = impulse_set(GridSpec::new(1, 1, 1.0).unwrap(), 8, 48_000);
        assert_eq!(Engine::build(&one, &EngineConfig::default()).unwrap().units().len(), 4);
    }

    #[test]
    fn sample_rate_mismatch() {
        let set = impulse_set(GridSpec::new(1, 1, 1.0).unwrap(), 8, 44_100);
        assert!(matches!(
            Engine::build(&set, &EngineConfig::default()),
            Err(Error::SampleRateMismatch { expected: 48_000, found: 44_100 })
        ));
    }

    #[test]
    fn monitor_only_passes_input() {
        let set = impulse_set(GridSpec::new(1, 1, 1.0).unwrap(), 8, 48_000);
        let cfg = EngineConfig {
            block_size: 16,
            monitor_gain_db: Some(0.0),
            ..Default::default()
        };
        let mut e = Engine::build(&set, &cfg).unwrap();
        e.reset_gains(&GainMatrix::zeros(1)).unwrap();
        assert_eq!(e.enabled_units(), 0);
        let x: Vec<f64> = (0..64).map(|i| (i as f64 * 0.3).sin()).collect();
        let [l, r] = run(&mut e, &x);
        for i in 0..64 {
            assert!((l[i] - x[i]).abs() < 1e-12 && (r[i] - x[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn single_unit_w_path_is_half_gain_after_delay() {
        let set = impulse_set(GridSpec::new(1, 1, 1.0).unwrap(), 8, 48_000);
        let cfg = EngineConfig {
            block_size: 16,
            unit_delay_s: 5.0 / 48_000.0,
            ..Default::default()
        };
        let mut e = Engine::build(&set, &cfg).unwrap();
        let mut gm = GainMatrix::zeros(1);
        gm.set(0, Direction::Front, 1.0).unwrap();
        e.reset_gains(&gm).unwrap();
        assert_eq!(e.enabled_units(), 1);
        let x: Vec<f64> = (0..64).map(|i| ((i * 7 % 13) as f64) - 6.0).collect();
        let [l, r] = run(&mut e, &x);
        for n in 0..64 {
            let want = if n >= 5 { 0.5 * x[n - 5] } else { 0.0 };
            assert!((l[n] - want).abs() < 1e-12, "n={n}");
            assert!((r[n] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn disabled_after_ramp_to_zero() {
        let set = impulse_set(GridSpec::new(1, 2, 1.0).unwrap(), 8, 48_000);
        let cfg = EngineConfig {
            block_size: 16,
            ..Default::default()
        };
        let mut e = Engine::build(&set, &cfg).unwrap();
        assert!(e.enabled_units() > 0);
        e.set_gain_matrix(&GainMatrix::zeros(2)).unwrap();
        assert!(e.enabled_units() > 0);
        let mut l = [0.0; 16];
        let mut r = [0.0; 16];
        e.process_block(&[1.0; 16], &mut l, &mut r);
        assert_eq!(e.enabled_units(), 0);
        assert!(matches!(
            e.set_gain_matrix(&GainMatrix::zeros(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn ramp_is_linear_across_block() {
        let set = impulse_set(GridSpec::new(1, 1, 1.0).unwrap(), 8, 48_000);
        let cfg = EngineConfig {
            block_size: 16,
            ..Default::default()
        };
        let mut e = Engine::build(&set, &cfg).unwrap();
        e.reset_gains(&GainMatrix::zeros(1)).unwrap();
        let mut gm = GainMatrix::zeros(1);
        gm.set(0, Direction::Front, 1.0).unwrap();
        e.set_gain_matrix(&gm).unwrap();
        let [l, _] = run(&mut e, &[1.0; 32]);
        for (n, v) in l[..16].iter().enumerate() {
            assert!((v - 0.5 * (n + 1) as f64 / 16.0).abs() < 1e-12);
        }
        for v in &l[16..] {
            assert!((v - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_decode_stores_nothing() {
        let set = impulse_set(GridSpec::new(1, 1, 1.0).unwrap(), 8, 48_000);
        let cfg = EngineConfig {
            block_size: 16,
            decode: DecodeMatrix::zero(),
            ..Default::default()
        };
        let e = Engine::build(&set, &cfg).unwrap();
        assert!(e.units().iter().all(|u| u.partitions() == 0));
    }

    #[test]
    fn control_handoff_applies_at_block_start() {
        let set = impulse_set(GridSpec::new(1, 1, 1.0).unwrap(), 8, 48_000);
        let cfg = EngineConfig {
            block_size: 16,
            ..Default::default()
        };
        let mut e = Engine::build(&set, &cfg).unwrap();
        let (mut tx, rx) = super::super::gain_channel(1);
        e.connect_control(rx).unwrap();
        tx.send(&GainMatrix::zeros(1)).unwrap();
        let mut l = [0.0; 16];
        let mut r = [0.0; 16];
        e.process_block(&[0.0; 16], &mut l, &mut r);
        assert_eq!(e.applied_seq(), 1);
        assert_eq!(e.enabled_units(), 0);
    }
}
