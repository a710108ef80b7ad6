//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use hft_core::backtest::{
    max_drawdown, run_backtest, run_strategy, run_variants, BacktestConfig, Decision, MarketView, SignalSource, Variant,
};
use hft_core::denoise::{denoise, haar_dwt, haar_idwt, max_level, DenoiseConfig, ThresholdMode};
use hft_core::marketdata::{
    resample, synth_ticks, SessionCalendar, SynthSpec, Tick, TickSeries, NANOS_PER_DAY, NANOS_PER_SEC,
};
use hft_core::stats::{adf_test, granger_test, LagSelection};
use hft_core::strategy::{LayeredStrategy, PipelineConfig, Side, Signal};
use hft_core::svm::{train_smo, train_smo_detailed, Kernel, SmoConfig};
use hft_core::volatility::{fit_garch, log_likelihood_gradient, simulate, GarchParams, GarchSpec, MeanModel};
use hft_core::vpin::{bucket_fill, vpin_from_ticks, VpinConfig};
use hft_core::{Exec, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn normals(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn cn_calendar() -> SessionCalendar {
    SessionCalendar::parse(&["09:30-11:30", "13:00-15:00"]).unwrap()
}

fn ticks_from(prices: &[f64], volume: u64) -> TickSeries {
    let ticks = prices
        .iter()
        .enumerate()
        .map(|(i, p)| Tick::new(i as i64 * 500_000_000, *p, volume))
        .collect();
    TickSeries::new("X", ticks, SessionCalendar::always_open()).unwrap()
}

fn vpin_bounds() -> Outcome {
    let start = Instant::now();
    let spec = SynthSpec {
        count: 1_000_000,
        seed: 1,
        ..SynthSpec::default()
    };
    let ticks = synth_ticks(&spec, &cn_calendar()).unwrap();
    let run = vpin_from_ticks(&ticks, &VpinConfig::default(), Exec::Parallel).unwrap();
    let bounded = run.series.values.iter().all(|v| (0.0..=1.0).contains(v));
    let fill = bucket_fill(&ticks, run.bucket_volume).unwrap();
    let filled: f64 = fill.complete.iter().map(|b| b.total).sum::<f64>() + fill.remainder_volume();
    let conserved = filled == ticks.total_volume() as f64
        && run.buckets.iter().all(|b| b.buy_volume + b.sell_volume == b.total);

    let cfg = VpinConfig {
        bucket_volume: Some(50.0),
        ..VpinConfig::default()
    };
    let balanced: Vec<f64> = (0..1_000_000).map(|i| 3000.0 + (i % 2) as f64).collect();
    let bal = vpin_from_ticks(&ticks_from(&balanced, 1), &cfg, Exec::Parallel).unwrap();
    let bal_max = bal.series.values.iter().copied().fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut p = 3000.0;
    let rising: Vec<f64> = (0..1_000_000)
        .map(|_| {
            p += 1.0 + 1e-3 * rng.random::<f64>();
            p
        })
        .collect();
    let buy = vpin_from_ticks(&ticks_from(&rising, 1), &cfg, Exec::Parallel).unwrap();
    let buy_min = buy.series.values.iter().copied().fold(1.0, f64::min);
    let elapsed = start.elapsed();
    check(
        bounded && conserved && bal_max < 0.05 && buy_min > 0.999 && elapsed < Duration::from_secs(5),
        format!(
            "{} values in [0,1]: {bounded}; conservation exact: {conserved}; balanced max {bal_max:.2e}; all-buy min {buy_min:.6}; {:.2}s",
            run.series.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn garch_recovery() -> Outcome {
    let start = Instant::now();
    let truth = GarchParams::garch11(1e-6, 0.05, 0.90);
    let seeds: Vec<u64> = (0..20).collect();
    let spec = GarchSpec {
        mean: MeanModel::Zero,
        ..GarchSpec::default()
    };
    let results = Exec::Parallel.map(&seeds, |seed| {
        let r = simulate(&truth, 20_000, 1000 + seed).unwrap();
        let fit = fit_garch(&r, spec).unwrap();
        // analytic gradient against central differences at a random feasible point
        let mut rng = ChaCha8Rng::seed_from_u64(7000 + seed);
        let b = rng.random_range(0.5..0.9);
        let at_point = GarchParams::garch11(rng.random_range(2e-7..5e-6), rng.random_range(0.01..0.95 - b), b);
        let (_, g) = log_likelihood_gradient(&at_point, spec, &r);
        let x = [at_point.omega, at_point.alphas[0], at_point.betas[0]];
        let mut worst = 0.0f64;
        for i in 0..3 {
            let h = 1e-5 * x[i];
            let at = |d: f64| {
                let mut p = at_point.clone();
                match i {
                    0 => p.omega += d,
                    1 => p.alphas[0] += d,
                    _ => p.betas[0] += d,
                }
                log_likelihood_gradient(&p, spec, &r).0
            };
            let fd = (at(h) - at(-h)) / (2.0 * h);
            worst = worst.max((fd - g[i]).abs() / g[i].abs().max(f64::MIN_POSITIVE));
        }
        let ok = (fit.alphas()[0] - 0.05).abs() <= 0.03 && (fit.betas()[0] - 0.90).abs() <= 0.03;
        (ok, fit.persistence, worst)
    });
    let hits = results.iter().filter(|r| r.0).count();
    let max_pers = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let grad = results.iter().map(|r| r.2).fold(0.0, f64::max);
    let elapsed = start.elapsed();
    check(
        hits >= 18 && max_pers < 1.0 && grad <= 1e-5 && elapsed < Duration::from_secs(60),
        format!(
            "{hits}/20 seeds within ±0.03; max persistence {max_pers:.4}; max gradient rel. error {grad:.2e}; {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn size_and_power() -> Outcome {
    let start = Instant::now();
    let seeds: Vec<u64> = (0..200).collect();
    let adf = Exec::Parallel.map(&seeds, |s| {
        let mut rng = ChaCha8Rng::seed_from_u64(5000 + s);
        let e = normals(500, &mut rng);
        let wn = adf_test(&e, 4, LagSelection::Sic).unwrap().p_value < 0.01;
        let mut w = vec![0.0; e.len()];
        for t in 1..e.len() {
            w[t] = w[t - 1] + e[t];
        }
        let rw = adf_test(&w, 4, LagSelection::Sic).unwrap().p_value >= 0.05;
        (wn, rw)
    });
    let wn_rate = adf.iter().filter(|r| r.0).count() as f64 / 200.0;
    let rw_rate = adf.iter().filter(|r| r.1).count() as f64 / 200.0;
    let seeds: Vec<u64> = (0..1000).collect();
    let granger = Exec::Parallel.map(&seeds, |s| {
        let mut rng = ChaCha8Rng::seed_from_u64(90_000 + s);
        let n = 500;
        let (ex, ey) = (normals(n, &mut rng), normals(n, &mut rng));
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; n];
        for t in 2..n {
            x[t] = 0.4 * x[t - 1] + ex[t];
            y[t] = 0.2 * y[t - 1] + 0.3 * x[t - 1] + 0.2 * x[t - 2] + ey[t];
        }
        let causal = granger_test(&x, &y, 2).unwrap().x_causes_y.p_value < 0.01;
        let (a, b) = (normals(n, &mut rng), normals(n, &mut rng));
        let size = granger_test(&a, &b, 2).unwrap().x_causes_y.p_value < 0.05;
        (causal, size)
    });
    let power = granger.iter().filter(|r| r.0).count() as f64 / 1000.0;
    let size = granger.iter().filter(|r| r.1).count() as f64 / 1000.0;
    let elapsed = start.elapsed();
    check(
        wn_rate >= 0.9
            && rw_rate >= 0.9
            && power >= 0.9
            && (0.04..=0.065).contains(&size)
            && elapsed < Duration::from_secs(120),
        format!(
            "ADF white-noise rejection {:.1}%, random-walk non-rejection {:.1}%; Granger power {:.1}%, size {:.1}%; {:.1}s",
            100.0 * wn_rate,
            100.0 * rw_rate,
            100.0 * power,
            100.0 * size,
            elapsed.as_secs_f64()
        ),
    )
}

fn wavelets() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_rec = 0.0f64;
    let mut worst_energy = 0.0f64;
    let mut lengths: Vec<usize> = (0..300).map(|_| rng.random_range(2..=4096)).collect();
    lengths.extend([2, 3, 4096, 4095, 1024, 1000]);
    for n in lengths {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-100.0..100.0)).collect();
        let d = haar_dwt(&x, max_level(n)).unwrap();
        let r = haar_idwt(&d).unwrap();
        worst_rec = worst_rec.max(x.iter().zip(&r).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        let exact_levels = n.trailing_zeros() as usize;
        if exact_levels >= 1 {
            let d = haar_dwt(&x, exact_levels).unwrap();
            let ex: f64 = x.iter().map(|v| v * v).sum();
            let ec: f64 = d.approximation.iter().chain(d.details.iter().flatten()).map(|v| v * v).sum();
            worst_energy = worst_energy.max((ex - ec).abs() / ex);
        }
    }
    let n = 4096;
    let levels = [0.0, 4.0, -2.0, 6.0, 1.0, -3.0, 2.5, 0.5];
    let clean: Vec<f64> = (0..n).map(|i| levels[i * levels.len() / n]).collect();
    let m = clean.iter().sum::<f64>() / n as f64;
    let power = clean.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64;
    let sd = (power / 10.0).sqrt();
    let mut nrng = ChaCha8Rng::seed_from_u64(2024);
    let noisy: Vec<f64> = clean.iter().zip(normals(n, &mut nrng)).map(|(c, z)| c + sd * z).collect();
    let out = denoise(&noisy, &DenoiseConfig { level: 6, mode: ThresholdMode::Estimated }).unwrap();
    let mse = |a: &[f64]| a.iter().zip(&clean).map(|(x, c)| (x - c).powi(2)).sum::<f64>() / n as f64;
    let reduction = 1.0 - mse(&out) / mse(&noisy);
    check(
        worst_rec <= 1e-10 && worst_energy <= 1e-9 && reduction >= 0.30,
        format!(
            "max reconstruction error {worst_rec:.2e}; max energy rel. error {worst_energy:.2e}; MSE reduction {:.1}%",
            100.0 * reduction
        ),
    )
}

fn random_separable(rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<f64>) {
    let w: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (mut x, mut y) = (Vec::new(), Vec::new());
    while x.len() < 60 {
        let row: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let s: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / norm;
        if s.abs() > 0.2 {
            y.push(s.signum());
            x.push(row);
        }
    }
    (x, y)
}

fn svm() -> Outcome {
    let sep_x = vec![vec![2.0, 2.0], vec![3.0, 3.0], vec![-2.0, -2.0], vec![-3.0, -3.0]];
    let sep_y = vec![1.0, 1.0, -1.0, -1.0];
    let xor_x = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]];
    let xor_y = vec![1.0, 1.0, -1.0, -1.0];
    let acc = |m: &hft_core::svm::SvmModel, x: &[Vec<f64>], y: &[f64]| {
        x.iter().zip(y).filter(|(r, l)| f64::from(m.predict(r).unwrap()) == **l).count() as f64 / x.len() as f64
    };
    let cfg10 = SmoConfig { c: 10.0, ..SmoConfig::default() };
    let sep = train_smo(&sep_x, &sep_y, Kernel::Linear, &cfg10, Exec::Sequential).unwrap();
    let cfg100 = SmoConfig { c: 100.0, ..SmoConfig::default() };
    let xor = train_smo(&xor_x, &xor_y, Kernel::Rbf { sigma: 1.0 }, &cfg100, Exec::Sequential).unwrap();
    let (a_sep, a_xor) = (acc(&sep, &sep_x, &sep_y), acc(&xor, &xor_x, &xor_y));

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let tol = 1e-3;
    let mut worst_kkt = 0.0f64;
    let mut monotone = true;
    for _ in 0..50 {
        let (x, y) = random_separable(&mut rng);
        let cfg = SmoConfig { c: 10.0, tol, record_objective: true, ..SmoConfig::default() };
        let out = train_smo_detailed(&x, &y, Kernel::Linear, &cfg, Exec::Sequential).unwrap();
        for (i, row) in x.iter().enumerate() {
            let m = y[i] * out.model.decision(row).unwrap();
            let a = out.alphas[i];
            let v = if a <= 0.0 {
                (1.0 - m).max(0.0)
            } else if a >= cfg.c {
                (m - 1.0).max(0.0)
            } else {
                (m - 1.0).abs()
            };
            worst_kkt = worst_kkt.max(v);
        }
        monotone &= out.objective_trace.windows(2).all(|w| w[1] >= w[0] - 1e-12 * w[0].abs().max(1.0));
    }
    check(
        a_sep == 1.0 && a_xor == 1.0 && worst_kkt <= tol && monotone,
        format!(
            "separable accuracy {:.0}%, XOR accuracy {:.0}%; max KKT violation {worst_kkt:.2e} (tol {tol}); dual objective monotone: {monotone}",
            100.0 * a_sep,
            100.0 * a_xor
        ),
    )
}

struct RandomSides(ChaCha8Rng);

impl SignalSource for RandomSides {
    fn on_bar(&mut self, view: &MarketView<'_>) -> Result<Decision> {
        let ts = view.bars[view.bars.len() - 1].ts_ns + view.interval_ns;
        let side = match self.0.random_range(0..10) {
            0 => Side::Buy,
            1 => Side::Sell,
            _ => Side::None,
        };
        let mut d = Decision::none(ts);
        d.signal = Signal::new(ts, side);
        d.fraction = 0.15;
        Ok(d)
    }
}

struct Scripted(Vec<Side>, f64);

impl SignalSource for Scripted {
    fn on_bar(&mut self, view: &MarketView<'_>) -> Result<Decision> {
        let k = view.bars.len() - 1;
        let ts = view.bars[k].ts_ns + view.interval_ns;
        let mut d = Decision::none(ts);
        d.signal = Signal::new(ts, self.0.get(k).copied().unwrap_or(Side::None));
        d.fraction = self.1;
        Ok(d)
    }
}

fn flat_two_days(price: f64) -> TickSeries {
    let cal = cn_calendar();
    let mut ticks = Vec::new();
    for d in 0..2 {
        for &(open, close) in cal.sessions() {
            let mut s = open as i64;
            while s < close as i64 {
                ticks.push(Tick::new((20_000 + d) * NANOS_PER_DAY + s * NANOS_PER_SEC, price, 1));
                s += 60;
            }
        }
    }
    TickSeries::new("F", ticks, cal).unwrap()
}

fn accounting() -> Outcome {
    let spec = SynthSpec {
        count: 100_000,
        tick_interval_ms: 60_000,
        seed: 6,
        ..SynthSpec::default()
    };
    let ticks = synth_ticks(&spec, &cn_calendar()).unwrap();
    let bars = resample(&ticks, 60 * NANOS_PER_SEC).unwrap();
    let cfg = BacktestConfig::default();
    let run = run_backtest(&ticks, &bars, &mut RandomSides(ChaCha8Rng::seed_from_u64(7)), &cfg, "random").unwrap();
    let ledger = run.report.ledger_error;

    let null = run_backtest(&ticks, &bars, &mut Scripted(vec![], 0.1), &cfg, "null").unwrap();
    let null_ret = null.report.metrics.total_return;

    let flat = flat_two_days(3000.0);
    let fbars = resample(&flat, 60 * NANOS_PER_SEC).unwrap();
    let fcfg = BacktestConfig { tick_size: 0.0, ..BacktestConfig::default() };
    // margin for one contract is 3000 · 300 · 0.25 = 225,000 of 10,000,000
    let one = 225_000.0 / 1e7 * 1.000001;
    let fee_run = run_backtest(&flat, &fbars, &mut Scripted(vec![Side::Buy], one), &fcfg, "fee").unwrap();
    let fees: f64 = fee_run.trades.iter().map(|t| t.fee).sum();
    let dd = max_drawdown(&[1.0, 0.5, 0.75]);
    check(
        ledger < 1e-6 && null_ret == 0.0 && fees == 1236.6 && dd == -0.5,
        format!(
            "{} bars, {} fills, ledger error {ledger:.2e}; null return {null_ret}; round-trip fees {fees}; drawdown {dd}",
            bars.len(),
            run.trades.len()
        ),
    )
}

fn strategy_data(days: usize, seed: u64) -> TickSeries {
    let spec = SynthSpec {
        omega: 2e-8,
        alpha: 0.08,
        beta: 0.90,
        tick_interval_ms: 5_000,
        count: days * 2880,
        seed,
        ..SynthSpec::default()
    };
    synth_ticks(&spec, &cn_calendar()).unwrap()
}

fn strategy_pipeline() -> PipelineConfig {
    let mut p = PipelineConfig::default();
    p.strategy.svm_training_days = 3;
    p.svm.max_train = 600;
    p
}

fn layer_contracts() -> Outcome {
    let ticks = strategy_data(10, 31);
    let bars = resample(&ticks, 60 * NANOS_PER_SEC).unwrap();
    let runs = run_variants(&ticks, &bars, &strategy_pipeline(), &BacktestConfig::default(), Exec::Parallel).unwrap();
    let labels: Vec<&str> = runs.iter().map(|r| r.report.variant.as_str()).collect();
    let complete = labels == ["G", "G+S", "G+V", "G+V+S"]
        && runs.iter().all(|r| {
            let m = &r.report.metrics;
            [m.total_return, m.annualized_return, m.benchmark_return, m.relative_return, m.max_drawdown, m.sharpe]
                .iter()
                .all(|v| v.is_finite())
                && m.alpha.is_some_and(f64::is_finite)
                && m.beta.is_some_and(f64::is_finite)
        })
        && runs.iter().all(|r| r.report.data_hash == runs[0].report.data_hash);
    let (g, gs, gv) = (&runs[0], &runs[1], &runs[2]);
    let veto_only = gs.report.trade_count <= g.report.trade_count;
    let mut adjusted = 0;
    let mut spurious = 0;
    for s in gv.signals.iter().filter(|s| s.delta1.is_finite()) {
        let moved = s.delta1.to_bits() != s.base_delta1.to_bits();
        let crossed = s.vpin.is_some_and(|v| v > s.delta2 || v < s.delta3);
        if moved {
            adjusted += 1;
        }
        if moved && !crossed {
            spurious += 1;
        }
    }
    check(
        complete && veto_only && spurious == 0 && g.report.trade_count > 0,
        format!(
            "variants {labels:?}; trades G {} / G+S {} / G+V {} / G+V+S {}; δ₁ adjusted on {adjusted} bars, {spurious} without a threshold crossing",
            g.report.trade_count, gs.report.trade_count, gv.report.trade_count, runs[3].report.trade_count
        ),
    )
}

fn shift_after(ticks: &TickSeries, cut_ns: i64, offset: f64) -> TickSeries {
    let moved = ticks
        .ticks()
        .iter()
        .map(|t| {
            let mut u = *t;
            if u.ts_ns >= cut_ns {
                u.price += offset;
                u.bid1 = u.bid1.map(|b| b + offset);
                u.ask1 = u.ask1.map(|a| a + offset);
            }
            u
        })
        .collect();
    TickSeries::new(ticks.instrument(), moved, ticks.calendar().clone()).unwrap()
}

fn no_look_ahead() -> Outcome {
    let ticks = strategy_data(6, 47);
    let bars = resample(&ticks, 60 * NANOS_PER_SEC).unwrap();
    let cfg = BacktestConfig::default();
    let base = run_strategy(&ticks, &bars, &strategy_pipeline(), Variant::GVS, &cfg, Exec::Sequential).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = base.signals.len();
    let points: Vec<(usize, f64)> = (0..20)
        .map(|_| (rng.random_range(n / 2..n - 1), if rng.random_bool(0.5) { 30.0 } else { -30.0 }))
        .collect();
    let changed = Exec::Parallel.map(&points, |(k, offset)| {
        let t = base.signals[*k].ts_ns;
        let moved = shift_after(&ticks, t, *offset);
        let mbars = resample(&moved, 60 * NANOS_PER_SEC).unwrap();
        let mut p = strategy_pipeline();
        p.strategy.layers = Variant::GVS.layers();
        let mut strat = LayeredStrategy::new(p, Exec::Sequential).unwrap();
        let run = run_backtest(&moved, &mbars, &mut strat, &cfg, "shifted").unwrap();
        let same = base.signals[..=*k].iter().zip(&run.signals).all(|(a, b)| {
            a.ts_ns == b.ts_ns && a.side == b.side && a.layer_trace == b.layer_trace && a.delta1.to_bits() == b.delta1.to_bits()
        });
        let future_differs = run.signals[*k + 1..] != base.signals[*k + 1..];
        (same, future_differs)
    });
    let unchanged = changed.iter().filter(|c| c.0).count();
    let sensitive = changed.iter().filter(|c| c.1).count();
    check(
        unchanged == 20,
        format!("{unchanged}/20 decision points unchanged by future price shifts ({sensitive}/20 later paths did change)"),
    )
}

fn hft(dir: &Path, args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_hft"))
        .current_dir(dir)
        .env_remove("HFT_CONFIG")
        .env("RUST_LOG", "error")
        .args(["--config", "run.toml"])
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir.join("out"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn end_to_end() -> Outcome {
    let config = "seed = 9\n\
                  [data.synth]\ncount = 60000\ntick_interval_ms = 5000\nomega = 2e-8\nalpha = 0.08\nbeta = 0.9\n\
                  [strategy]\nsvm_training_days = 2\n\
                  [svm]\nmax_train = 400\n";
    let mut snaps = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("run.toml"), config).unwrap();
        let steps: [&[&str]; 4] = [
            &["generate"],
            &["vpin", "--input", "out/ticks.csv"],
            &["garch", "--input", "out/ticks.csv"],
            &["backtest", "--input", "out/ticks.csv", "--variants", "--plot"],
        ];
        if !steps.iter().all(|a| hft(dir.path(), a)) {
            return check(false, "a pipeline step exited with an error".into());
        }
        snaps.push(snapshot(dir.path()));
    }
    let names: Vec<&str> = snaps[0].iter().map(|f| f.0.as_str()).collect();
    let identical = snaps[0] == snaps[1];
    let has_reports = names.contains(&"report.json") && names.contains(&"equity.svg");
    check(
        identical && has_reports,
        format!("{} output files, byte-identical across runs: {identical}", names.len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("VPIN bounds and conservation", vpin_bounds),
        ("GARCH recovery", garch_recovery),
        ("statistical size and power", size_and_power),
        ("wavelet reconstruction and denoising", wavelets),
        ("SVM/SMO fixtures and KKT", svm),
        ("backtest accounting", accounting),
        ("layer-composition contracts", layer_contracts),
        ("no look-ahead", no_look_ahead),
        ("end-to-end determinism", end_to_end),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = format!("criterion {}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str()) || id.ends_with(p.as_str())) {
            continue;
        }
        let out = f();
        if !out.pass {
            failed += 1;
        }
        println!("{id} [{}] {name}: {}", if out.pass { "PASS" } else { "FAIL" }, out.detail);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
