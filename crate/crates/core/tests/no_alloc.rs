//! The audio path must not allocate after the graph is built.

use std::alloc::{GlobalAlloc, Layout, System};
use std::cell::Cell;
use std::sync::atomic::{AtomicUsize, Ordering};

use auralis_core::engine::{gain_channel, stats_channel, Engine, EngineConfig};
use auralis_core::interpolation::{ActivationConfig, Interpolator};
use auralis_core::sir_model::{GridSpec, Pose};
use auralis_testkit::{random_signal, rng, synthetic_sirset};

struct Counting;

static ALLOCS: AtomicUsize = AtomicUsize::new(0);

thread_local! {
    static TRACKING: Cell<bool> = const { Cell::new(false) };
}

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        if TRACKING.with(Cell::get) {
            ALLOCS.fetch_add(1, Ordering::Relaxed);
        }
        System.alloc(layout)
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout)
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        if TRACKING.with(Cell::get) {
            ALLOCS.fetch_add(1, Ordering::Relaxed);
        }
        System.realloc(ptr, layout, new_size)
    }
}

#[global_allocator]
static GLOBAL: Counting = Counting;

#[test]
fn process_block_does_not_allocate() {
    let grid = GridSpec::default();
    let set = synthetic_sirset(grid, 48_000, 4096, 2);
    let cfg = EngineConfig {
        monitor_gain_db: Some(-6.0),
        ..Default::default()
    };
    let mut engine = Engine::build(&set, &cfg).unwrap();
    let (mut gains_tx, gains_rx) = gain_channel(grid.position_count());
    let (stats_tx, mut stats_rx) = stats_channel();
    engine.connect_control(gains_rx).unwrap();
    engine.connect_stats(stats_tx);

    let mut interp = Interpolator::new(grid, ActivationConfig::default()).unwrap();
    let poses: Vec<_> = (0..200)
        .map(|k| {
            let t = k as f64 * 0.05;
            interp.update(Pose::new(2.0 + 1.5 * t.sin(), 1.5 + t.cos(), 37.0 * t))
        })
        .collect();
    let x = random_signal(&mut rng(4), cfg.block_size);
    let mut l = vec![0.0; cfg.block_size];
    let mut r = vec![0.0; cfg.block_size];

    TRACKING.with(|t| t.set(true));
    for gm in &poses {
        gains_tx.send(gm).unwrap();
        engine.process_block_with_stats(&x, &mut l, &mut r);
        engine.process_block_with_stats(&x, &mut l, &mut r);
    }
    TRACKING.with(|t| t.set(false));

    assert_eq!(ALLOCS.load(Ordering::Relaxed), 0);
    assert_eq!(stats_rx.latest().blocks, 400);
    assert_eq!(stats_rx.latest().applied_seq, 200);
}
