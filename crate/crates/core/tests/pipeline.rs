//! End-to-end behaviour of the layered strategy inside the backtester.

use hft_core::backtest::{run_backtest, run_strategy, run_variants, BacktestConfig, Variant};
use hft_core::marketdata::{resample, synth_ticks, SessionCalendar, SynthSpec, Tick, TickSeries, NANOS_PER_SEC};
use hft_core::strategy::{LayeredStrategy, PipelineConfig, Quote, Side};
use hft_core::Exec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BAR_NS: i64 = 60 * NANOS_PER_SEC;

fn cn_calendar() -> SessionCalendar {
    SessionCalendar::parse(&["09:30-11:30", "13:00-15:00"]).unwrap()
}

fn data(days: usize, seed: u64) -> TickSeries {
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

fn pipeline() -> PipelineConfig {
    let mut p = PipelineConfig::default();
    p.strategy.svm_training_days = 2;
    p.svm.max_train = 400;
    p
}

#[test]
fn variants_complete_and_respect_layer_contracts() {
    let ticks = data(6, 11);
    let bars = resample(&ticks, BAR_NS).unwrap();
    let runs = run_variants(&ticks, &bars, &pipeline(), &BacktestConfig::default(), Exec::Parallel).unwrap();
    let labels: Vec<&str> = runs.iter().map(|r| r.report.variant.as_str()).collect();
    assert_eq!(labels, ["G", "G+S", "G+V", "G+V+S"]);
    let hash = &runs[0].report.data_hash;
    for r in &runs {
        assert_eq!(&r.report.data_hash, hash);
        assert!(r.report.metrics.total_return.is_finite());
        assert!(r.report.metrics.max_drawdown <= 0.0);
        assert!(r.report.ledger_error < 1e-6);
        assert_eq!(r.equity.len(), bars.len());
    }
    let (g, gs, gv, gvs) = (&runs[0], &runs[1], &runs[2], &runs[3]);
    assert!(g.report.trade_count > 0);
    assert!(gs.report.trade_count <= g.report.trade_count);
    assert!(gvs.report.trade_count <= gv.report.trade_count);

    // the SVM layer only removes signals, never adds or flips them
    for (a, b) in g.signals.iter().zip(&gs.signals) {
        assert_eq!(a.ts_ns, b.ts_ns);
        assert!(b.side == Side::None || b.side == a.side);
    }
    // δ₁ moves only when VPIN is outside [δ₃, δ₂]
    for (a, b) in g.signals.iter().zip(&gv.signals) {
        if !b.delta1.is_finite() {
            continue;
        }
        assert_eq!(a.base_delta1.to_bits(), b.base_delta1.to_bits());
        assert_eq!(a.delta1.to_bits(), a.base_delta1.to_bits());
        let inside = b.vpin.is_none_or(|v| v >= b.delta3 && v <= b.delta2);
        if inside {
            assert_eq!(b.delta1.to_bits(), b.base_delta1.to_bits());
        }
    }
    assert!(gv.signals.iter().any(|s| s.vpin.is_some()));
    // quote side follows trade side
    for r in &runs {
        for s in &r.signals {
            match s.side {
                Side::Buy => assert_eq!(s.quote(), Some(Quote::Bid1)),
                Side::Sell => assert_eq!(s.quote(), Some(Quote::Ask1)),
                Side::None => assert_eq!(s.quote(), None),
            }
        }
    }
}

#[test]
fn parallel_and_sequential_variants_agree() {
    let ticks = data(4, 5);
    let bars = resample(&ticks, BAR_NS).unwrap();
    let cfg = BacktestConfig::default();
    let a = run_variants(&ticks, &bars, &pipeline(), &cfg, Exec::Parallel).unwrap();
    let b = run_variants(&ticks, &bars, &pipeline(), &cfg, Exec::Sequential).unwrap();
    assert_eq!(a, b);
}

fn shift_after(ticks: &TickSeries, cut_ns: i64, offset: f64) -> TickSeries {
    let shifted: Vec<Tick> = ticks
        .ticks()
        .iter()
        .map(|t| {
            if t.ts_ns < cut_ns {
                *t
            } else {
                let mut u = *t;
                u.price += offset;
                u.bid1 = u.bid1.map(|b| b + offset);
                u.ask1 = u.ask1.map(|a| a + offset);
                u
            }
        })
        .collect();
    TickSeries::new(ticks.instrument(), shifted, ticks.calendar().clone()).unwrap()
}

#[test]
fn future_price_shift_leaves_past_signals_unchanged() {
    let ticks = data(4, 23);
    let bars = resample(&ticks, BAR_NS).unwrap();
    let cfg = BacktestConfig::default();
    let base = run_strategy(&ticks, &bars, &pipeline(), Variant::GVS, &cfg, Exec::Sequential).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let n = base.signals.len();
    for _ in 0..20 {
        let k = rng.random_range(n / 3..n - 1);
        let t = base.signals[k].ts_ns;
        let offset = if rng.random_bool(0.5) { 25.0 } else { -25.0 };
        let moved = shift_after(&ticks, t, offset);
        let moved_bars = resample(&moved, BAR_NS).unwrap();
        let mut strat = LayeredStrategy::new(
            {
                let mut p = pipeline();
                p.strategy.layers = Variant::GVS.layers();
                p
            },
            Exec::Sequential,
        )
        .unwrap();
        let run = run_backtest(&moved, &moved_bars, &mut strat, &cfg, "shifted").unwrap();
        for j in 0..=k {
            let (a, b) = (&base.signals[j], &run.signals[j]);
            assert_eq!(a.ts_ns, b.ts_ns);
            assert_eq!(a.side, b.side, "signal at {} changed", a.ts_ns);
            assert_eq!(a.layer_trace, b.layer_trace);
            assert_eq!(a.delta1.to_bits(), b.delta1.to_bits());
        }
    }
}
