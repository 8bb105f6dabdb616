use std::hint::black_box;
use std::time::Duration;

use auralis_core::capture::{inverse_filter, produce_sirs, segment_bounds, Deconvolver, Recording, SweepSpec, SEGMENT_TAIL_S};
use auralis_core::engine::{Engine, EngineConfig};
use auralis_core::par::Exec;
use auralis_core::sir_model::{Direction, GainMatrix, GridSpec};
use auralis_testkit::{random_signal, rng, synthetic_irs, synthetic_sirset, SyntheticRecording};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn gains_for(nodes: &[usize], positions: usize) -> GainMatrix {
    let mut gm = GainMatrix::zeros(positions);
    for &p in nodes {
        for d in Direction::ALL {
            gm.set(p, d, 0.25).unwrap();
        }
    }
    gm
}

fn engine_blocks(c: &mut Criterion) {
    let grid = GridSpec::default();
    let set = synthetic_sirset(grid, 48_000, 48_000, 7);
    let cfg = EngineConfig::default();
    let mut engine = Engine::build(&set, &cfg).unwrap();
    let input = random_signal(&mut rng(1), cfg.block_size);
    let mut l = vec![0.0; cfg.block_size];
    let mut r = vec![0.0; cfg.block_size];
    let mut group = c.benchmark_group("engine_block_256");
    let all: Vec<usize> = (0..grid.position_count()).collect();
    for (name, nodes) in [("16_units", &all[..4]), ("80_units", &all[..])] {
        engine.reset_gains(&gains_for(nodes, grid.position_count())).unwrap();
        group.bench_function(name, |b| {
            b.iter(|| engine.process_block(black_box(&input), &mut l, &mut r))
        });
    }
    group.finish();
}

fn graph_build(c: &mut Criterion) {
    let set = synthetic_sirset(GridSpec::default(), 48_000, 48_000, 7);
    let cfg = EngineConfig::default();
    let mut group = c.benchmark_group("graph_build");
    group.sample_size(10);
    for exec in [Exec::Sequential, Exec::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| Engine::build_with(&set, &cfg, exec).unwrap())
        });
    }
    group.finish();
}

fn deconvolve_batch(c: &mut Criterion) {
    let spec = SweepSpec {
        duration_s: 2.0,
        ..Default::default()
    };
    let grid = GridSpec::new(1, 2, 1.0).unwrap();
    let irs = synthetic_irs(&grid, spec.sample_rate_hz, 12_000, 3);
    let rec = SyntheticRecording::new(&spec, &grid, irs).unwrap();
    let layout = rec.layout().clone();
    let pops: Vec<usize> = layout.measurements.iter().map(|m| m.sync_pop_sample).collect();
    let tail = (SEGMENT_TAIL_S * spec.sample_rate_hz as f64) as usize;
    let bounds = segment_bounds(&pops, pops.len(), spec.len(), tail).unwrap();
    // Render once so the benchmark times deconvolution only.
    let mem = auralis_core::capture::MemoryRecording {
        sample_rate: rec.sample_rate(),
        channels: rec.read(0, rec.frames()).unwrap(),
    };
    let inv = inverse_filter(&spec).unwrap();
    let mut group = c.benchmark_group("deconvolve_batch");
    group.sample_size(10);
    for exec in [Exec::Sequential, Exec::Parallel] {
        let dec = Deconvolver::new(&inv, spec.sample_rate_hz, spec.len() + tail).with_exec(exec);
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| produce_sirs(&mem, &bounds, &dec, 12_000, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().measurement_time(Duration::from_secs(5)).warm_up_time(Duration::from_secs(1));
    targets = engine_blocks, graph_build, deconvolve_batch
}
criterion_main!(benches);
