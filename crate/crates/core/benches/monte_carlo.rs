use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use isac_core::allocator::{two_stage, Preset};
use isac_core::channel::FastFading;
use isac_core::ofdm::{random_body, OfdmConfig};
use isac_core::par::{map_indexed, map_indexed_sequential};
use isac_core::rng::substream;
use isac_core::sensing::{isl_slice, IslMode};
use isac_core::signal::Constellation;

fn isl_trial(cfg: &OfdmConfig, t: usize) -> f64 {
    let alloc = cfg.flat_allocation();
    let body = random_body(cfg, &alloc, &mut substream(11, t as u64)).unwrap();
    isl_slice(&body, IslMode::Aperiodic).unwrap()
}

fn ofdm_isl(c: &mut Criterion) {
    let mut g = c.benchmark_group("ofdm_isl_trials");
    g.sample_size(10);
    for n in [256usize, 1024] {
        let cfg = OfdmConfig::new(n, 1.0, n as f64, Constellation::qpsk()).unwrap();
        let trials = 64;
        g.bench_with_input(BenchmarkId::new("parallel", n), &cfg, |b, cfg| {
            b.iter(|| map_indexed(trials, |t| isl_trial(cfg, t)))
        });
        g.bench_with_input(BenchmarkId::new("sequential", n), &cfg, |b, cfg| {
            b.iter(|| map_indexed_sequential(trials, |t| isl_trial(cfg, t)))
        });
    }
    g.finish();
}

fn allocator_draws(c: &mut Criterion) {
    let preset = Preset {
        n: 256,
        notches: vec![64, 190],
        notch_width: 8.0,
        ..Default::default()
    };
    let draws = 16;
    let solve = |d: usize| {
        let gains = preset.gains(FastFading::Rayleigh, d as u64).unwrap();
        two_stage(&preset.problem(0.5, gains), 1e-9).unwrap().objective
    };
    let mut g = c.benchmark_group("allocator_draws");
    g.sample_size(10);
    g.bench_function("parallel", |b| b.iter(|| map_indexed(draws, solve)));
    g.bench_function("sequential", |b| b.iter(|| map_indexed_sequential(draws, solve)));
    g.finish();
}

criterion_group!(benches, ofdm_isl, allocator_draws);
criterion_main!(benches);
