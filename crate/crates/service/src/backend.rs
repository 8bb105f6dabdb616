//! Audio backends. The engine runs on its own thread; a backend only
//! decides where input comes from, where output goes and how blocks are
//! paced.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use auralis_core::engine::Engine;

pub trait AudioBackend: Send {
    /// Fills `input` with the next block.
    fn read_input(&mut self, input: &mut [f64]);
    /// Consumes one processed block.
    fn write_output(&mut self, left: &[f64], right: &[f64]);
    /// Block period; `None` runs as fast as possible.
    fn pace(&self) -> Option<Duration>;
}

/// Loops a mono buffer (or silence) at real-time pace and discards output.
pub struct PacedBackend {
    input: Vec<f64>,
    cursor: usize,
    period: Option<Duration>,
}

impl PacedBackend {
    pub fn new(input: Vec<f64>, block_size: usize, sample_rate: u32, realtime: bool) -> Self {
        let period = realtime.then(|| Duration::from_secs_f64(block_size as f64 / sample_rate as f64));
        Self {
            input,
            cursor: 0,
            period,
        }
    }
}

impl AudioBackend for PacedBackend {
    fn read_input(&mut self, input: &mut [f64]) {
        if self.input.is_empty() {
            input.fill(0.0);
            return;
        }
        for v in input.iter_mut() {
            *v = self.input[self.cursor];
            self.cursor = (self.cursor + 1) % self.input.len();
        }
    }

    fn write_output(&mut self, _left: &[f64], _right: &[f64]) {}

    fn pace(&self) -> Option<Duration> {
        self.period
    }
}

/// Runs the engine until `stop` is set. Buffers are allocated before the
/// loop starts.
pub fn spawn_audio(mut engine: Engine, mut backend: Box<dyn AudioBackend>, stop: Arc<AtomicBool>) -> std::io::Result<JoinHandle<Engine>> {
    std::thread::Builder::new().name("auralis-audio".into()).spawn(move || {
        let b = engine.block_size();
        let mut input = vec![0.0; b];
        let mut left = vec![0.0; b];
        let mut right = vec![0.0; b];
        let start = Instant::now();
        let mut next = Duration::ZERO;
        let mut late = 0u64;
        while !stop.load(Ordering::Relaxed) {
            backend.read_input(&mut input);
            engine.process_block_with_stats(&input, &mut left, &mut right);
            backend.write_output(&left, &right);
            if let Some(period) = backend.pace() {
                next += period;
                match next.checked_sub(start.elapsed()) {
                    Some(wait) => std::thread::sleep(wait),
                    None => late += 1,
                }
            }
        }
        if late > 0 {
            tracing::warn!(late, "audio blocks finished after their deadline");
        }
        engine
    })
}
