//! Event-driven futures backtester.
//!
//! The engine walks bar closes. At close `k` it marks the account, applies
//! the margin and stop-loss checks, asks the signal source for a decision
//! and executes it at the quotes prevailing at that close. The source only
//! ever sees `bars[..=k]` and the ticks printed before the end of bar `k`,
//! so decisions cannot use later data.
//!
//! Accounting follows a futures margin account: opening posts
//! `|q|·P·multiplier·margin_rate` from cash to margin, closing releases it
//! and settles `q·(P_exit - P_entry)·multiplier`. Fees are
//! `notional·fee_rate` per side rounded to cents.

use std::hash::{Hash, Hasher};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::marketdata::{Bar, BarSeries, SessionCalendar, Tick, TickSeries, NANOS_PER_DAY, NANOS_PER_SEC};
use crate::strategy::{LayeredStrategy, Layers, PipelineConfig, Side, Signal, SignalRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BacktestConfig {
    pub capital: f64,
    pub margin_rate: f64,
    /// Forced flat when equity falls below this multiple of posted margin.
    pub maintenance_ratio: f64,
    pub fee_rate: f64,
    pub multiplier: f64,
    /// Price increment; fills without quotes pay half of it.
    pub tick_size: f64,
    pub trading_days_per_year: f64,
    /// Abort the run on a margin call instead of continuing flat.
    pub strict_margin: bool,
    /// Trailing bars for the stop-loss price standard deviation.
    pub sigma_window: usize,
    pub stop_loss_sigmas: f64,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        BacktestConfig {
            capital: 1e7,
            margin_rate: 0.25,
            maintenance_ratio: 0.75,
            fee_rate: 6.87e-4,
            multiplier: 300.0,
            tick_size: 0.2,
            trading_days_per_year: 250.0,
            strict_margin: false,
            sigma_window: 60,
            stop_loss_sigmas: 2.0,
        }
    }
}

impl BacktestConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.capital > 0.0
            && self.margin_rate > 0.0
            && self.margin_rate <= 1.0
            && self.maintenance_ratio >= 0.0
            && self.fee_rate >= 0.0
            && self.multiplier > 0.0
            && self.tick_size >= 0.0
            && self.trading_days_per_year > 0.0
            && self.sigma_window >= 2
            && self.stop_loss_sigmas > 0.0;
        if !ok {
            return Err(Error::param(format!("invalid backtest config {self:?}")));
        }
        Ok(())
    }
}

fn cents(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Futures margin account for one instrument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Account {
    pub cash: f64,
    /// Signed contracts.
    pub position: i64,
    pub entry_price: f64,
    pub margin_held: f64,
    pub fees_paid: f64,
    pub realized_pnl: f64,
    pub initial_capital: f64,
}

impl Account {
    pub fn new(capital: f64) -> Self {
        Account {
            cash: capital,
            position: 0,
            entry_price: 0.0,
            margin_held: 0.0,
            fees_paid: 0.0,
            realized_pnl: 0.0,
            initial_capital: capital,
        }
    }

    pub fn unrealized(&self, mark: f64, multiplier: f64) -> f64 {
        self.position as f64 * (mark - self.entry_price) * multiplier
    }

    pub fn equity(&self, mark: f64, multiplier: f64) -> f64 {
        self.cash + self.margin_held + self.unrealized(mark, multiplier)
    }

    /// `equity - capital - (realized + unrealized - fees)`; zero when the
    /// books balance.
    pub fn ledger_error(&self, mark: f64, multiplier: f64) -> f64 {
        self.equity(mark, multiplier)
            - self.initial_capital
            - (self.realized_pnl + self.unrealized(mark, multiplier) - self.fees_paid)
    }

    /// Open a position from flat; returns the fee.
    pub fn open(&mut self, qty: i64, price: f64, cfg: &BacktestConfig) -> f64 {
        debug_assert_eq!(self.position, 0);
        let notional = qty.unsigned_abs() as f64 * price * cfg.multiplier;
        let fee = cents(notional * cfg.fee_rate);
        let margin = notional * cfg.margin_rate;
        self.cash -= margin + fee;
        self.margin_held = margin;
        self.fees_paid += fee;
        self.position = qty;
        self.entry_price = price;
        fee
    }

    /// Close the whole position; returns `(fee, realized pnl)`.
    pub fn close(&mut self, price: f64, cfg: &BacktestConfig) -> (f64, f64) {
        let notional = self.position.unsigned_abs() as f64 * price * cfg.multiplier;
        let fee = cents(notional * cfg.fee_rate);
        let pnl = self.unrealized(price, cfg.multiplier);
        self.cash += self.margin_held + pnl - fee;
        self.margin_held = 0.0;
        self.fees_paid += fee;
        self.realized_pnl += pnl;
        self.position = 0;
        self.entry_price = 0.0;
        (fee, pnl)
    }
}

/// What the engine may look at when asking for a decision at bar `k`.
pub struct MarketView<'a> {
    /// Bars up to and including the current one.
    pub bars: &'a [Bar],
    /// Ticks printed before the current bar ends.
    pub ticks: &'a [Tick],
    pub calendar: &'a SessionCalendar,
    pub interval_ns: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub signal: Signal,
    /// Fraction of free cash to commit as margin on a new position.
    pub fraction: f64,
    pub record: Option<SignalRecord>,
}

impl Decision {
    pub fn none(ts_ns: i64) -> Self {
        Decision {
            signal: Signal::none(ts_ns),
            fraction: 0.0,
            record: None,
        }
    }
}

pub trait SignalSource {
    fn on_bar(&mut self, view: &MarketView<'_>) -> Result<Decision>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FillReason {
    Signal,
    Reverse,
    StopLoss,
    EndOfDay,
    MarginCall,
    EndOfData,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeRecord {
    pub ts_ns: i64,
    pub side: Side,
    pub qty: u64,
    pub price: f64,
    pub fee: f64,
    pub position_after: i64,
    pub cash_after: f64,
    pub reason: FillReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "G")]
    G,
    #[serde(rename = "G+S")]
    GS,
    #[serde(rename = "G+V")]
    GV,
    #[serde(rename = "G+V+S")]
    GVS,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::G, Variant::GS, Variant::GV, Variant::GVS];

    pub fn label(self) -> &'static str {
        match self {
            Variant::G => "G",
            Variant::GS => "G+S",
            Variant::GV => "G+V",
            Variant::GVS => "G+V+S",
        }
    }

    pub fn layers(self) -> Layers {
        Layers {
            garch: true,
            vpin: matches!(self, Variant::GV | Variant::GVS),
            svm: matches!(self, Variant::GS | Variant::GVS),
        }
    }
}

/// Performance indicators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub total_return: f64,
    pub annualized_return: f64,
    pub benchmark_return: f64,
    pub relative_return: f64,
    /// `None` when the benchmark has zero variance.
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub max_drawdown: f64,
    pub sharpe: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub variant: String,
    #[serde(flatten)]
    pub metrics: Metrics,
    /// Non-none signals emitted after all gates.
    pub trade_count: usize,
    pub fill_count: usize,
    pub fees_paid: f64,
    pub final_equity: f64,
    pub margin_calls: usize,
    pub stop_losses: usize,
    /// Largest absolute double-entry discrepancy seen during the run.
    pub ledger_error: f64,
    pub data_hash: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestRun {
    pub report: BacktestReport,
    pub equity: Vec<(i64, f64)>,
    pub benchmark: Vec<(i64, f64)>,
    pub trades: Vec<TradeRecord>,
    pub signals: Vec<SignalRecord>,
}

/// Maximum drawdown `min_t E_t / max_{s≤t} E_s - 1`.
pub fn max_drawdown(equity: &[f64]) -> f64 {
    let mut peak = f64::NEG_INFINITY;
    let mut dd = 0.0f64;
    for e in equity {
        peak = peak.max(*e);
        dd = dd.min(e / peak - 1.0);
    }
    dd
}

fn period_returns(x: &[f64]) -> Vec<f64> {
    x.windows(2).map(|w| w[1] / w[0] - 1.0).collect()
}

pub fn compute_metrics(equity: &[f64], benchmark: &[f64], periods_per_year: f64) -> Result<Metrics> {
    if equity.len() < 2 {
        return Err(Error::InsufficientData {
            what: "performance metrics",
            needed: 2,
            got: equity.len(),
        });
    }
    if benchmark.len() != equity.len() {
        return Err(Error::DimensionMismatch {
            expected: equity.len(),
            got: benchmark.len(),
        });
    }
    if !(periods_per_year > 0.0) {
        return Err(Error::param("periods_per_year must be positive"));
    }
    let periods = (equity.len() - 1) as f64;
    let total = |x: &[f64]| x[x.len() - 1] / x[0] - 1.0;
    let annual = |x: &[f64]| (x[x.len() - 1] / x[0]).powf(periods_per_year / periods) - 1.0;
    let rs = period_returns(equity);
    let rb = period_returns(benchmark);
    let ms = crate::math::mean(&rs);
    let mb = crate::math::mean(&rb);
    let cov: f64 = rs.iter().zip(&rb).map(|(a, b)| (a - ms) * (b - mb)).sum::<f64>() / periods;
    let var_b: f64 = rb.iter().map(|b| (b - mb).powi(2)).sum::<f64>() / periods;
    let sd_s = crate::math::variance(&rs, 0).sqrt();
    let (ann_s, ann_b) = (annual(equity), annual(benchmark));
    let beta = (var_b > 0.0).then(|| cov / var_b);
    Ok(Metrics {
        total_return: total(equity),
        annualized_return: ann_s,
        benchmark_return: total(benchmark),
        relative_return: total(equity) - total(benchmark),
        alpha: beta.map(|b| ann_s - b * ann_b),
        beta,
        max_drawdown: max_drawdown(equity),
        sharpe: if sd_s > 0.0 { ms / sd_s * periods_per_year.sqrt() } else { 0.0 },
    })
}

/// Bars per year implied by the calendar and bar interval.
pub fn periods_per_year(calendar: &SessionCalendar, interval_ns: i64, days_per_year: f64) -> f64 {
    let per_day = (calendar.seconds_per_day() as f64 * NANOS_PER_SEC as f64 / interval_ns as f64).ceil();
    per_day * days_per_year
}

/// Stable fingerprint of the replayed data.
pub fn data_hash(bars: &BarSeries, ticks: &TickSeries) -> String {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    bars.interval_ns.hash(&mut h);
    for b in &bars.bars {
        b.ts_ns.hash(&mut h);
        b.close.to_bits().hash(&mut h);
        b.volume.hash(&mut h);
    }
    ticks.len().hash(&mut h);
    format!("{:016x}", h.finish())
}

struct Engine<'a> {
    cfg: &'a BacktestConfig,
    acct: Account,
    trades: Vec<TradeRecord>,
    ledger_error: f64,
}

impl Engine<'_> {
    /// Passive fills follow the signal's quote side; forced exits cross.
    fn fill_price(&self, bar: &Bar, buying: bool, passive: bool) -> f64 {
        let half = 0.5 * self.cfg.tick_size;
        let quote = match (buying, passive) {
            (true, true) | (false, false) => bar.bid1,
            (true, false) | (false, true) => bar.ask1,
        };
        quote.unwrap_or(if buying { bar.close + half } else { bar.close - half })
    }

    fn check(&mut self, mark: f64) {
        let e = self.acct.ledger_error(mark, self.cfg.multiplier).abs();
        self.ledger_error = self.ledger_error.max(e);
    }

    fn record(&mut self, ts: i64, side: Side, qty: u64, price: f64, fee: f64, reason: FillReason) {
        self.trades.push(TradeRecord {
            ts_ns: ts,
            side,
            qty,
            price,
            fee,
            position_after: self.acct.position,
            cash_after: self.acct.cash,
            reason,
        });
    }

    fn close(&mut self, ts: i64, bar: &Bar, passive: bool, reason: FillReason) {
        let pos = self.acct.position;
        if pos == 0 {
            return;
        }
        let buying = pos < 0;
        let price = self.fill_price(bar, buying, passive);
        let (cash0, margin0, realized0) = (self.acct.cash, self.acct.margin_held, self.acct.realized_pnl);
        let (fee, pnl) = self.acct.close(price, self.cfg);
        let flow = (self.acct.cash - cash0) + (self.acct.margin_held - margin0) + fee - pnl;
        self.ledger_error = self.ledger_error.max(flow.abs()).max((self.acct.realized_pnl - realized0 - pnl).abs());
        self.record(ts, if buying { Side::Buy } else { Side::Sell }, pos.unsigned_abs(), price, fee, reason);
        self.check(price);
    }

    fn open(&mut self, ts: i64, bar: &Bar, side: Side, fraction: f64, reason: FillReason) {
        let buying = side == Side::Buy;
        let price = self.fill_price(bar, buying, true);
        let per_contract = price * self.cfg.multiplier * self.cfg.margin_rate;
        if !(per_contract > 0.0) {
            return;
        }
        let alloc = self.acct.cash.max(0.0) * fraction;
        let qty = (alloc / per_contract).floor() as i64;
        if qty <= 0 {
            return;
        }
        let (cash0, margin0) = (self.acct.cash, self.acct.margin_held);
        let fee = self.acct.open(if buying { qty } else { -qty }, price, self.cfg);
        let flow = (self.acct.cash - cash0) + (self.acct.margin_held - margin0) + fee;
        self.ledger_error = self.ledger_error.max(flow.abs());
        self.record(ts, side, qty as u64, price, fee, reason);
        self.check(price);
    }
}

fn price_sigma(bars: &[Bar], window: usize) -> f64 {
    let from = bars.len().saturating_sub(window + 1);
    let d: Vec<f64> = bars[from..].windows(2).map(|w| w[1].close - w[0].close).collect();
    if d.len() < 2 {
        return 0.0;
    }
    crate::math::variance(&d, 1).sqrt()
}

/// Replay `bars` (with the ticks that built them) through `source`.
pub fn run_backtest<S: SignalSource>(
    ticks: &TickSeries,
    bars: &BarSeries,
    source: &mut S,
    cfg: &BacktestConfig,
    variant: &str,
) -> Result<BacktestRun> {
    cfg.validate()?;
    let n = bars.len();
    let sessions: std::collections::BTreeSet<_> = bars.bars.iter().filter_map(|b| bars.calendar.session_of(b.ts_ns)).collect();
    if sessions.len() < 2 {
        return Err(Error::InsufficientData {
            what: "backtest sessions",
            needed: 2,
            got: sessions.len(),
        });
    }
    let last_close = bars.calendar.sessions().last().map_or(0, |s| s.1) as i64 * NANOS_PER_SEC;
    let tick_slice = ticks.ticks();
    let mut engine = Engine {
        cfg,
        acct: Account::new(cfg.capital),
        trades: Vec::new(),
        ledger_error: 0.0,
    };
    let mut equity = Vec::with_capacity(n);
    let mut signals = Vec::new();
    let mut trade_count = 0;
    let (mut margin_calls, mut stop_losses) = (0, 0);
    let mut tick_end = 0;
    let first_close = bars.bars[0].close;
    let mut benchmark = Vec::with_capacity(n);
    for k in 0..n {
        let bar = bars.bars[k];
        let end_ts = bar.ts_ns + bars.interval_ns;
        while tick_end < tick_slice.len() && tick_slice[tick_end].ts_ns < end_ts {
            tick_end += 1;
        }
        let ts = end_ts;
        let mark = bar.close;
        if engine.acct.position != 0 {
            let eq = engine.acct.equity(mark, cfg.multiplier);
            if eq < cfg.maintenance_ratio * engine.acct.margin_held {
                margin_calls += 1;
                log::warn!("margin call at {ts}: equity {eq:.2} below maintenance");
                engine.close(ts, &bar, false, FillReason::MarginCall);
                if cfg.strict_margin {
                    return Err(Error::MarginCall { ts_ns: ts });
                }
            } else {
                let sigma = price_sigma(&bars.bars[..=k], cfg.sigma_window);
                let side = if engine.acct.position > 0 { Side::Buy } else { Side::Sell };
                if sigma > 0.0
                    && crate::strategy::stop_loss_check(engine.acct.entry_price, mark, sigma, cfg.stop_loss_sigmas, side)?
                {
                    stop_losses += 1;
                    engine.close(ts, &bar, false, FillReason::StopLoss);
                }
            }
        }
        let view = MarketView {
            bars: &bars.bars[..=k],
            ticks: &tick_slice[..tick_end],
            calendar: &bars.calendar,
            interval_ns: bars.interval_ns,
        };
        let decision = source.on_bar(&view)?;
        if let Some(r) = decision.record.clone() {
            signals.push(r);
        }
        let side = decision.signal.side;
        if side != Side::None {
            trade_count += 1;
        }
        let day_end = end_ts.div_euclid(NANOS_PER_DAY) * NANOS_PER_DAY + last_close;
        let last_of_day = end_ts >= day_end || k + 1 == n;
        if last_of_day {
            let reason = if k + 1 == n { FillReason::EndOfData } else { FillReason::EndOfDay };
            engine.close(ts, &bar, false, reason);
        } else if side != Side::None {
            let pos = engine.acct.position;
            let want = side.sign() as i64;
            if pos.signum() != want {
                let reason = if pos != 0 { FillReason::Reverse } else { FillReason::Signal };
                engine.close(ts, &bar, true, FillReason::Reverse);
                engine.open(ts, &bar, side, decision.fraction, reason);
            }
        }
        engine.check(mark);
        equity.push((ts, engine.acct.equity(mark, cfg.multiplier)));
        benchmark.push((ts, cfg.capital * bar.close / first_close));
    }
    let e: Vec<f64> = equity.iter().map(|p| p.1).collect();
    let b: Vec<f64> = benchmark.iter().map(|p| p.1).collect();
    let ppy = periods_per_year(&bars.calendar, bars.interval_ns, cfg.trading_days_per_year);
    let metrics = compute_metrics(&e, &b, ppy)?;
    let report = BacktestReport {
        variant: variant.to_string(),
        metrics,
        trade_count,
        fill_count: engine.trades.len(),
        fees_paid: engine.acct.fees_paid,
        final_equity: *e.last().expect("non-empty"),
        margin_calls,
        stop_losses,
        ledger_error: engine.ledger_error,
        data_hash: data_hash(bars, ticks),
    };
    Ok(BacktestRun {
        report,
        equity,
        benchmark,
        trades: engine.trades,
        signals,
    })
}

/// Run the layered strategy with the given variant's layer flags.
pub fn run_strategy(
    ticks: &TickSeries,
    bars: &BarSeries,
    pipeline: &PipelineConfig,
    variant: Variant,
    cfg: &BacktestConfig,
    exec: Exec,
) -> Result<BacktestRun> {
    let mut p = pipeline.clone();
    p.strategy.layers = variant.layers();
    let mut strat = LayeredStrategy::new(p, exec)?;
    run_backtest(ticks, bars, &mut strat, cfg, variant.label())
}

/// All four layer combinations on identical data, in G, G+S, G+V, G+V+S
/// order. Variants run concurrently under a parallel policy.
pub fn run_variants(
    ticks: &TickSeries,
    bars: &BarSeries,
    pipeline: &PipelineConfig,
    cfg: &BacktestConfig,
    exec: Exec,
) -> Result<Vec<BacktestRun>> {
    exec.map(&Variant::ALL, |v| run_strategy(ticks, bars, pipeline, *v, cfg, Exec::Sequential))
        .into_iter()
        .collect()
}

/// Write `ts,side,qty,price,fee,position_after,cash_after`.
pub fn write_trades<W: Write>(out: W, trades: &[TradeRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["ts", "side", "qty", "price", "fee", "position_after", "cash_after"])?;
    for t in trades {
        w.write_record([
            t.ts_ns.to_string(),
            t.side.as_str().to_string(),
            t.qty.to_string(),
            t.price.to_string(),
            t.fee.to_string(),
            t.position_after.to_string(),
            t.cash_after.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Write `ts,equity`.
pub fn write_equity<W: Write>(out: W, equity: &[(i64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["ts", "equity"])?;
    for (ts, e) in equity {
        w.write_record([ts.to_string(), e.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

/// One row per report.
pub fn write_reports_csv<W: Write>(out: W, reports: &[BacktestReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "variant",
        "total_return",
        "annualized_return",
        "benchmark_return",
        "relative_return",
        "alpha",
        "beta",
        "max_drawdown",
        "sharpe",
        "trade_count",
        "fill_count",
        "fees_paid",
        "final_equity",
        "margin_calls",
        "stop_losses",
        "data_hash",
    ])?;
    for r in reports {
        let m = &r.metrics;
        w.write_record([
            r.variant.clone(),
            m.total_return.to_string(),
            m.annualized_return.to_string(),
            m.benchmark_return.to_string(),
            m.relative_return.to_string(),
            opt(m.alpha),
            opt(m.beta),
            m.max_drawdown.to_string(),
            m.sharpe.to_string(),
            r.trade_count.to_string(),
            r.fill_count.to_string(),
            r.fees_paid.to_string(),
            r.final_equity.to_string(),
            r.margin_calls.to_string(),
            r.stop_losses.to_string(),
            r.data_hash.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marketdata::{resample, SessionCalendar};

    /// Plays back a fixed list of sides, one per bar.
    pub(crate) struct Scripted(pub Vec<Side>);

    impl SignalSource for Scripted {
        fn on_bar(&mut self, view: &MarketView<'_>) -> Result<Decision> {
            let k = view.bars.len() - 1;
            let ts = view.bars[k].ts_ns + view.interval_ns;
            let side = self.0.get(k).copied().unwrap_or(Side::None);
            Ok(Decision {
                signal: Signal::new(ts, side),
                fraction: 0.1,
                record: None,
            })
        }
    }

    fn flat_data(price: f64, days: i64) -> (TickSeries, BarSeries) {
        let cal = SessionCalendar::default();
        let mut ticks = Vec::new();
        for d in 0..days {
            for &(open, close) in cal.sessions() {
                let mut s = open as i64;
                while s < close as i64 {
                    ticks.push(Tick::new((20_000 + d) * NANOS_PER_DAY + s * NANOS_PER_SEC, price, 1));
                    s += 60;
                }
            }
        }
        let ts = TickSeries::new("T", ticks, cal).unwrap();
        let bars = resample(&ts, 60 * NANOS_PER_SEC).unwrap();
        (ts, bars)
    }

    #[test]
    fn fee_example_round_trip() {
        let (ticks, bars) = flat_data(3000.0, 2);
        let cfg = BacktestConfig {
            tick_size: 0.0,
            ..BacktestConfig::default()
        };
        // one contract needs 225,000 of margin
        struct One(Scripted);
        impl SignalSource for One {
            fn on_bar(&mut self, view: &MarketView<'_>) -> Result<Decision> {
                let mut d = self.0.on_bar(view)?;
                d.fraction = 225_000.0 / 1e7 * 1.000001;
                Ok(d)
            }
        }
        let mut src = One(Scripted(vec![Side::Buy, Side::None]));
        let run = run_backtest(&ticks, &bars, &mut src, &cfg, "fee").unwrap();
        assert_eq!(run.trades[0].qty, 1);
        let total_fee: f64 = run.trades.iter().map(|t| t.fee).sum();
        assert_eq!(total_fee, 1236.6);
        assert!((run.report.final_equity - cfg.capital + 1236.6).abs() < 1e-6);
    }

    #[test]
    fn null_strategy_is_flat() {
        let (ticks, bars) = flat_data(3000.0, 2);
        let mut src = Scripted(vec![]);
        let run = run_backtest(&ticks, &bars, &mut src, &BacktestConfig::default(), "null").unwrap();
        assert_eq!(run.report.metrics.total_return, 0.0);
        assert_eq!(run.report.fees_paid, 0.0);
        assert!(run.equity.iter().all(|e| e.1 == 1e7));
    }

    #[test]
    fn zero_fee_constant_price_round_trip() {
        let (ticks, bars) = flat_data(3000.0, 2);
        let cfg = BacktestConfig {
            fee_rate: 0.0,
            tick_size: 0.0,
            ..BacktestConfig::default()
        };
        let mut src = Scripted(vec![Side::Buy, Side::Sell, Side::Buy]);
        let run = run_backtest(&ticks, &bars, &mut src, &cfg, "rt").unwrap();
        assert_eq!(run.report.final_equity, cfg.capital);
        assert!(run.report.ledger_error < 1e-9);
    }

    #[test]
    fn drawdown_and_metrics() {
        assert_eq!(max_drawdown(&[1.0, 0.5, 0.75]), -0.5);
        assert_eq!(max_drawdown(&[1.0, 1.0, 2.0]), 0.0);
        let e = [1.0, 1.1, 1.05, 1.2, 1.15];
        let m = compute_metrics(&e, &e, 252.0).unwrap();
        assert!((m.beta.unwrap() - 1.0).abs() < 1e-9);
        assert!(m.alpha.unwrap().abs() < 1e-9);
        let flat = compute_metrics(&e, &[1.0; 5], 252.0).unwrap();
        assert!(flat.beta.is_none() && flat.alpha.is_none());
        assert!(compute_metrics(&[1.0], &[1.0], 252.0).is_err());
    }

    #[test]
    fn single_session_rejected() {
        let (ticks, bars) = flat_data(3000.0, 1);
        let morning = BarSeries {
            bars: bars.bars[..10].to_vec(),
            ..bars
        };
        let mut src = Scripted(vec![]);
        assert!(run_backtest(&ticks, &morning, &mut src, &BacktestConfig::default(), "x").is_err());
    }
}
