//! Sequential versus parallel execution of the data-parallel kernels.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hft_core::backtest::{run_variants, BacktestConfig};
use hft_core::denoise::{denoise_many, DenoiseConfig};
use hft_core::marketdata::{resample, synth_ticks, SessionCalendar, SynthSpec, NANOS_PER_SEC};
use hft_core::strategy::{calibrate_delta1, Grid, PipelineConfig};
use hft_core::svm::{kernel_matrix, Kernel};
use hft_core::vpin::{bucket_fill, classify, sigma_delta_p};
use hft_core::Exec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn bvc(c: &mut Criterion) {
    let spec = SynthSpec {
        count: 1_000_000,
        ..SynthSpec::default()
    };
    let ticks = synth_ticks(&spec, &SessionCalendar::always_open()).unwrap();
    let fill = bucket_fill(&ticks, 400.0).unwrap();
    let sigma = vec![sigma_delta_p(ticks.ticks()).unwrap(); fill.delta_p.len()];
    let mut g = c.benchmark_group("bvc_classify_1e6_ticks");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_function(name, |b| b.iter(|| classify(&fill, &sigma, exec).unwrap()));
    }
    g.finish();
}

fn delta1_grid(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pts: Vec<(f64, f64)> = (0..5000)
        .map(|_| (rng.random_range(-3.0..3.0), rng.random_range(-0.01..0.01)))
        .collect();
    let grid = Grid {
        lo: 0.001,
        hi: 2.0,
        step: 0.001,
    };
    let mut g = c.benchmark_group("delta1_grid_2000x5000");
    for (name, exec) in POLICIES {
        g.bench_function(name, |b| b.iter(|| calibrate_delta1(&pts, &grid, 30, 0.0, exec).unwrap()));
    }
    g.finish();
}

fn kernel_rows(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut g = c.benchmark_group("rbf_kernel_matrix");
    for n in [500usize, 2000] {
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..11).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        for (name, exec) in POLICIES {
            g.bench_with_input(BenchmarkId::new(name, n), &x, |b, x| {
                b.iter(|| kernel_matrix(x, Kernel::Rbf { sigma: 1.0 }, exec).unwrap())
            });
        }
    }
    g.finish();
}

fn wavelets(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let signals: Vec<Vec<f64>> = (0..64).map(|_| (0..16_384).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let cfg = DenoiseConfig::default();
    let mut g = c.benchmark_group("denoise_64_signals");
    for (name, exec) in POLICIES {
        g.bench_function(name, |b| b.iter(|| denoise_many(&signals, &cfg, exec).unwrap()));
    }
    g.finish();
}

fn variants(c: &mut Criterion) {
    let cal = SessionCalendar::parse(&["09:30-11:30", "13:00-15:00"]).unwrap();
    let spec = SynthSpec {
        omega: 2e-8,
        alpha: 0.08,
        beta: 0.90,
        tick_interval_ms: 5_000,
        count: 5 * 2880,
        ..SynthSpec::default()
    };
    let ticks = synth_ticks(&spec, &cal).unwrap();
    let bars = resample(&ticks, 60 * NANOS_PER_SEC).unwrap();
    let mut p = PipelineConfig::default();
    p.strategy.svm_training_days = 2;
    p.svm.max_train = 400;
    let cfg = BacktestConfig::default();
    let mut g = c.benchmark_group("run_variants_5_days");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_function(name, |b| b.iter(|| run_variants(&ticks, &bars, &p, &cfg, exec).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, bvc, delta1_grid, kernel_rows, wavelets, variants);
criterion_main!(benches);
