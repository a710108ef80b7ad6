//! Layered intraday strategy.
//!
//! * GARCH layer: the standardized one-step mean forecast `m/√h` is compared
//!   with a threshold `δ₁` recalibrated every bar on the trailing hour.
//! * VPIN layer: `δ₁` is pulled toward the day's extreme calibrated values
//!   when VPIN leaves the band `[δ₃, δ₂]`, and position size shrinks or
//!   grows with it. `δ₂, δ₃` are fitted so that VPIN above `δ₂` flags large
//!   price fluctuation two buckets later and VPIN below `δ₃` flags small.
//! * SVM layer: a classifier of the next bar's direction vetoes trades it
//!   disagrees with.
//!
//! Buys are quoted at bid1 and sells at ask1.

use std::collections::VecDeque;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::backtest::{Decision, MarketView, SignalSource};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::marketdata::NANOS_PER_DAY;
use crate::svm::{train_standardized, SvmConfig, SvmModel};
use crate::volatility::{fit_garch, GarchSpec, GarchState, MeanModel};
use crate::vpin::{VpinConfig, VpinTracker};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Buy,
    Sell,
    None,
}

impl Side {
    /// +1, -1 or 0.
    pub fn sign(self) -> f64 {
        match self {
            Side::Buy => 1.0,
            Side::Sell => -1.0,
            Side::None => 0.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Buy => "buy",
            Side::Sell => "sell",
            Side::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quote {
    Bid1,
    Ask1,
}

impl Quote {
    pub fn as_str(self) -> &'static str {
        match self {
            Quote::Bid1 => "bid1",
            Quote::Ask1 => "ask1",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signal {
    pub ts_ns: i64,
    pub side: Side,
    pub layer_trace: String,
}

impl Signal {
    pub fn new(ts_ns: i64, side: Side) -> Self {
        Signal {
            ts_ns,
            side,
            layer_trace: String::new(),
        }
    }

    pub fn none(ts_ns: i64) -> Self {
        Signal::new(ts_ns, Side::None)
    }

    /// Quote side used for execution: buys at bid1, sells at ask1.
    pub fn quote(&self) -> Option<Quote> {
        match self.side {
            Side::Buy => Some(Quote::Bid1),
            Side::Sell => Some(Quote::Ask1),
            Side::None => None,
        }
    }

    fn trace(&mut self, item: &str) {
        if !self.layer_trace.is_empty() {
            self.layer_trace.push(';');
        }
        self.layer_trace.push_str(item);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Grid {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo < self.hi && self.step > 0.0 && self.lo.is_finite() && self.hi.is_finite()) {
            return Err(Error::param(format!("invalid grid {self:?}")));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| ((self.lo + i as f64 * self.step) * 1e10).round() / 1e10)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Layers {
    pub garch: bool,
    pub vpin: bool,
    pub svm: bool,
}

impl Default for Layers {
    fn default() -> Self {
        Layers {
            garch: true,
            vpin: true,
            svm: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StrategyConfig {
    pub delta1_grid: Grid,
    /// Initial VPIN thresholds, used until calibration succeeds.
    pub delta2: f64,
    pub delta3: f64,
    pub fluct_hi: f64,
    pub fluct_lo: f64,
    pub basket_delay: usize,
    pub position_fraction: f64,
    pub high_vpin_scale: f64,
    pub low_vpin_scale: f64,
    pub max_position_fraction: f64,
    pub stop_loss_sigmas: f64,
    pub layers: Layers,
    pub svm_training_days: usize,
    /// Trailing bars in the δ₁ calibration window.
    pub delta1_window: usize,
    pub delta1_min_points: usize,
    /// Cost charged per simulated trade in the δ₁ objective (return units).
    pub delta1_cost: f64,
    /// Minimum calibration points for δ₂/δ₃.
    pub vpin_min_points: usize,
    pub vpin_refine_iters: usize,
    /// Bars of history used by the daily GARCH refit.
    pub garch_window: usize,
    /// Trailing bars for the per-bar price standard deviation (stop loss).
    pub sigma_window: usize,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        StrategyConfig {
            delta1_grid: Grid {
                lo: 0.02,
                hi: 2.0,
                step: 0.02,
            },
            delta2: FALLBACK_DELTA2,
            delta3: FALLBACK_DELTA3,
            fluct_hi: 0.0015,
            fluct_lo: 0.0005,
            basket_delay: 2,
            position_fraction: 0.10,
            high_vpin_scale: 0.5,
            low_vpin_scale: 1.5,
            max_position_fraction: 0.20,
            stop_loss_sigmas: 2.0,
            layers: Layers::default(),
            svm_training_days: 30,
            delta1_window: 60,
            delta1_min_points: 30,
            delta1_cost: 0.0,
            vpin_min_points: 20,
            vpin_refine_iters: 200,
            garch_window: 4800,
            sigma_window: 60,
        }
    }
}

impl StrategyConfig {
    pub fn validate(&self) -> Result<()> {
        self.delta1_grid.validate()?;
        let frac = |v: f64| v > 0.0 && v <= 1.0;
        if !(0.0 <= self.delta3 && self.delta3 <= self.delta2 && self.delta2 <= 1.0) {
            return Err(Error::param("require 0 <= delta3 <= delta2 <= 1"));
        }
        if !(frac(self.position_fraction) && frac(self.max_position_fraction)) {
            return Err(Error::param("position fractions must lie in (0, 1]"));
        }
        if !(self.high_vpin_scale > 0.0 && self.low_vpin_scale > 0.0) {
            return Err(Error::param("VPIN position scales must be positive"));
        }
        if !(self.fluct_lo >= 0.0 && self.fluct_lo <= self.fluct_hi) {
            return Err(Error::param("require 0 <= fluct_lo <= fluct_hi"));
        }
        if !(self.stop_loss_sigmas > 0.0) {
            return Err(Error::param("stop_loss_sigmas must be positive"));
        }
        if self.delta1_window == 0 || self.delta1_min_points == 0 || self.sigma_window < 2 {
            return Err(Error::param("calibration windows must be positive"));
        }
        Ok(())
    }
}

pub const FALLBACK_DELTA2: f64 = 0.9;
pub const FALLBACK_DELTA3: f64 = 0.1;

/// Direction from a one-step forecast: buy above `+δ₁`, sell below `-δ₁`.
pub fn garch_signal(mean: f64, variance: f64, delta1: f64) -> Result<Side> {
    if !(mean.is_finite() && variance.is_finite() && variance > 0.0) {
        return Err(Error::param(format!("invalid forecast mean={mean} variance={variance}")));
    }
    Ok(side_for(mean / variance.sqrt(), delta1))
}

fn side_for(z: f64, delta1: f64) -> Side {
    if z > delta1 {
        Side::Buy
    } else if z < -delta1 {
        Side::Sell
    } else {
        Side::None
    }
}

/// Grid `δ₁` maximizing `Σ side(z_j, δ₁)·r_{j+1} - cost·|side|` over
/// `(z_j, r_{j+1})` pairs; ties go to the smallest grid value.
pub fn calibrate_delta1(points: &[(f64, f64)], grid: &Grid, min_points: usize, cost: f64, exec: Exec) -> Result<f64> {
    grid.validate()?;
    if points.len() < min_points {
        return Err(Error::InsufficientData {
            what: "delta1 calibration window",
            needed: min_points,
            got: points.len(),
        });
    }
    let candidates = grid.points();
    let returns = exec.map(&candidates, |d| {
        points
            .iter()
            .map(|(z, r)| {
                let s = side_for(*z, *d).sign();
                s * r - cost * s.abs()
            })
            .sum::<f64>()
    });
    let mut best = 0;
    for i in 1..candidates.len() {
        if returns[i] > returns[best] {
            best = i;
        }
    }
    Ok(candidates[best])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VpinThresholds {
    pub delta2: f64,
    pub delta3: f64,
    pub errors: usize,
    /// Errors of the never-fire pair `(1, 0)`.
    pub baseline_errors: usize,
    /// No pair improved meaningfully on never firing; fallback returned.
    pub flat: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSearch {
    pub fluct_hi: f64,
    pub fluct_lo: f64,
    pub refine_iters: usize,
    pub seed: u64,
}

impl Default for ThresholdSearch {
    fn default() -> Self {
        ThresholdSearch {
            fluct_hi: 0.0015,
            fluct_lo: 0.0005,
            refine_iters: 200,
            seed: 7,
        }
    }
}

/// Fit `δ₂ ≥ δ₃` minimizing misclassifications of the rules
/// "VPIN > δ₂ ⇒ fluct > hi" and "VPIN < δ₃ ⇒ fluct < lo".
///
/// A 0.01 grid is searched exhaustively (ties: smallest δ₂, then largest δ₃)
/// and then refined by seeded random perturbations that are accepted only on
/// strict improvement. When the best pair beats never firing by fewer than
/// `max(2, ⌈n/100⌉)` errors the objective is treated as flat and the
/// fallback `(0.9, 0.1)` is returned.
pub fn calibrate_vpin_thresholds(vpin: &[f64], fluct: &[f64], search: &ThresholdSearch) -> Result<VpinThresholds> {
    if vpin.len() != fluct.len() {
        return Err(Error::DimensionMismatch {
            expected: vpin.len(),
            got: fluct.len(),
        });
    }
    if vpin.is_empty() {
        return Err(Error::InsufficientData {
            what: "VPIN threshold calibration",
            needed: 1,
            got: 0,
        });
    }
    if vpin.iter().all(|v| *v == vpin[0]) {
        return Err(Error::degenerate("constant VPIN series"));
    }
    let high: Vec<bool> = fluct.iter().map(|f| *f > search.fluct_hi).collect();
    let low: Vec<bool> = fluct.iter().map(|f| *f < search.fluct_lo).collect();
    let err_a = |d2: f64| vpin.iter().zip(&high).filter(|(v, h)| (**v > d2) != **h).count();
    let err_b = |d3: f64| vpin.iter().zip(&low).filter(|(v, l)| (**v < d3) != **l).count();
    let total = |d2: f64, d3: f64| err_a(d2) + err_b(d3);

    let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let ea: Vec<usize> = grid.iter().map(|d| err_a(*d)).collect();
    let eb: Vec<usize> = grid.iter().map(|d| err_b(*d)).collect();
    let (mut b2, mut b3, mut best) = (100, 0, usize::MAX);
    for i2 in 0..grid.len() {
        for i3 in (0..=i2).rev() {
            let e = ea[i2] + eb[i3];
            if e < best {
                best = e;
                b2 = i2;
                b3 = i3;
            }
        }
    }
    let (mut d2, mut d3) = (grid[b2], grid[b3]);
    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    for _ in 0..search.refine_iters {
        let c2 = (d2 + rng.random_range(-0.01..0.01)).clamp(0.0, 1.0);
        let c3 = (d3 + rng.random_range(-0.01..0.01)).clamp(0.0, 1.0).min(c2);
        let e = total(c2, c3);
        if e < best {
            best = e;
            d2 = c2;
            d3 = c3;
        }
    }
    let baseline = total(1.0, 0.0);
    let margin = 2usize.max(vpin.len().div_ceil(100));
    if best + margin > baseline {
        return Ok(VpinThresholds {
            delta2: FALLBACK_DELTA2,
            delta3: FALLBACK_DELTA3,
            errors: total(FALLBACK_DELTA2, FALLBACK_DELTA3),
            baseline_errors: baseline,
            flat: true,
        });
    }
    Ok(VpinThresholds {
        delta2: d2,
        delta3: d3,
        errors: best,
        baseline_errors: baseline,
        flat: false,
    })
}

/// Pull `δ₁` halfway toward the day's largest calibrated value when VPIN is
/// above `δ₂` and toward the smallest when below `δ₃`.
pub fn adjust_delta1(delta1: f64, vpin_now: f64, delta2: f64, delta3: f64, day_max: f64, day_min: f64) -> f64 {
    if vpin_now > delta2 {
        0.5 * (delta1 + day_max)
    } else if vpin_now < delta3 {
        0.5 * (delta1 + day_min)
    } else {
        delta1
    }
}

/// Veto a proposed trade the classifier disagrees with.
pub fn svm_gate(model: &SvmModel, features: &[f64], proposed: Signal) -> Result<Signal> {
    let pred = model.predict(features)?;
    let mut out = proposed;
    let veto = matches!((out.side, pred), (Side::Buy, -1) | (Side::Sell, 1));
    if veto {
        out.side = Side::None;
        out.trace("svm-veto");
    } else if out.side != Side::None {
        out.trace("svm-pass");
    }
    Ok(out)
}

/// Fraction of available funds committed as margin.
pub fn position_fraction(vpin_now: Option<f64>, delta2: f64, delta3: f64, cfg: &StrategyConfig) -> f64 {
    let base = cfg.position_fraction;
    match vpin_now {
        Some(v) if cfg.layers.vpin && v > delta2 => base * cfg.high_vpin_scale,
        Some(v) if cfg.layers.vpin && v < delta3 => (base * cfg.low_vpin_scale).min(cfg.max_position_fraction),
        _ => base,
    }
}

/// Currency committed to a new position.
pub fn position_size(available_funds: f64, vpin_now: Option<f64>, delta2: f64, delta3: f64, cfg: &StrategyConfig) -> f64 {
    available_funds.max(0.0) * position_fraction(vpin_now, delta2, delta3, cfg)
}

/// True when the adverse move from entry exceeds `k·σ`.
pub fn stop_loss_check(entry: f64, current: f64, sigma_price: f64, k: f64, side: Side) -> Result<bool> {
    if !(sigma_price > 0.0) {
        return Err(Error::param(format!("sigma_price must be positive, got {sigma_price}")));
    }
    let adverse = match side {
        Side::Buy => entry - current,
        Side::Sell => current - entry,
        Side::None => return Ok(false),
    };
    Ok(adverse > k * sigma_price)
}

/// Market-maker quote `S₁ = μ - γσ²·i/(n+1)` and the premium `γσ²·i/(n+1)`.
pub fn liquidity_premium(mu: f64, gamma: f64, sigma2: f64, i: f64, n: u32) -> Result<(f64, f64)> {
    if n < 1 {
        return Err(Error::param("number of market makers must be >= 1"));
    }
    if gamma < 0.0 || sigma2 < 0.0 || i < 0.0 {
        return Err(Error::param("gamma, sigma2 and inventory must be non-negative"));
    }
    let spread = gamma * sigma2 * i / (n as f64 + 1.0);
    Ok((mu - spread, spread))
}

/// Per-decision log row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalRecord {
    pub ts_ns: i64,
    pub side: Side,
    pub delta1: f64,
    /// Calibrated δ₁ before any VPIN adjustment.
    pub base_delta1: f64,
    pub vpin: Option<f64>,
    pub delta2: f64,
    pub delta3: f64,
    pub layer_trace: String,
}

impl SignalRecord {
    pub fn quote(&self) -> Option<Quote> {
        Signal::new(self.ts_ns, self.side).quote()
    }
}

/// Write `ts,side,quote,delta1,vpin,layer_trace`.
pub fn write_signals<W: Write>(out: W, rows: &[SignalRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["ts", "side", "quote", "delta1", "vpin", "layer_trace"])?;
    for r in rows {
        w.write_record([
            r.ts_ns.to_string(),
            r.side.as_str().to_string(),
            r.quote().map_or("", Quote::as_str).to_string(),
            r.delta1.to_string(),
            r.vpin.map_or(String::new(), |v| v.to_string()),
            r.layer_trace.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Everything the layered strategy needs besides data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub strategy: StrategyConfig,
    pub garch: GarchSpec,
    pub vpin: VpinConfig,
    pub svm: SvmConfig,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            strategy: StrategyConfig::default(),
            garch: GarchSpec {
                mean: MeanModel::Ar1,
                ..GarchSpec::default()
            },
            vpin: VpinConfig::default(),
            svm: SvmConfig::default(),
            seed: 7,
        }
    }
}

const N_LAGS: usize = 5;

#[derive(Debug, Clone, Copy)]
struct BucketMark {
    day: usize,
    vpin: Option<f64>,
    close: f64,
}

/// The GARCH → VPIN → SVM decision stack driven bar by bar.
///
/// Signals depend only on market data, never on the account, so variants
/// that differ by layer flags see identical inputs.
pub struct LayeredStrategy {
    cfg: PipelineConfig,
    exec: Exec,
    // per-bar history
    day_of_bar: Vec<usize>,
    ret: Vec<Option<f64>>,
    z: Vec<Option<f64>>,
    std_ret: Vec<Option<f64>>,
    features: Vec<Option<Vec<f64>>>,
    // daily state
    day_index: usize,
    current_day: Option<i64>,
    day_max_d1: f64,
    day_min_d1: f64,
    garch: Option<GarchState>,
    svm: Option<SvmModel>,
    // VPIN
    tracker: Option<VpinTracker>,
    tick_cursor: usize,
    day_tick_start: usize,
    buckets: Vec<BucketMark>,
    delta2: f64,
    delta3: f64,
    svm_samples: VecDeque<(usize, Vec<f64>, f64)>,
}

impl LayeredStrategy {
    pub fn new(cfg: PipelineConfig, exec: Exec) -> Result<Self> {
        cfg.strategy.validate()?;
        cfg.garch.validate()?;
        let (d2, d3) = (cfg.strategy.delta2, cfg.strategy.delta3);
        Ok(LayeredStrategy {
            cfg,
            exec,
            day_of_bar: Vec::new(),
            ret: Vec::new(),
            z: Vec::new(),
            std_ret: Vec::new(),
            features: Vec::new(),
            day_index: 0,
            current_day: None,
            day_max_d1: f64::NEG_INFINITY,
            day_min_d1: f64::INFINITY,
            garch: None,
            svm: None,
            tracker: None,
            tick_cursor: 0,
            day_tick_start: 0,
            buckets: Vec::new(),
            delta2: d2,
            delta3: d3,
            svm_samples: VecDeque::new(),
        })
    }

    pub fn thresholds(&self) -> (f64, f64) {
        (self.delta2, self.delta3)
    }

    fn warmup_days(&self) -> usize {
        self.cfg.strategy.svm_training_days.max(1)
    }

    fn start_day(&mut self, view: &MarketView<'_>, k: usize) {
        let day = view.bars[k].ts_ns.div_euclid(NANOS_PER_DAY);
        if self.current_day.is_some() {
            self.day_index += 1;
        }
        self.current_day = Some(day);
        self.day_max_d1 = f64::NEG_INFINITY;
        self.day_min_d1 = f64::INFINITY;
        if k == 0 {
            return;
        }
        self.refit_garch(k);
        self.start_vpin_day(view);
        if self.cfg.strategy.layers.svm && self.day_index >= self.warmup_days() {
            self.retrain_svm();
        }
    }

    fn refit_garch(&mut self, k: usize) {
        let from = k.saturating_sub(self.cfg.strategy.garch_window);
        let r: Vec<f64> = self.ret[from..k].iter().flatten().copied().collect();
        match fit_garch(&r, self.cfg.garch) {
            Ok(fit) => self.garch = Some(fit.state()),
            Err(e) => log::warn!("daily GARCH refit failed, keeping previous model: {e}"),
        }
    }

    /// Size buckets and σ_ΔP from completed days only.
    fn start_vpin_day(&mut self, view: &MarketView<'_>) {
        let day_ticks = &view.ticks[self.day_tick_start..self.tick_cursor];
        self.day_tick_start = self.tick_cursor;
        let past = &view.ticks[..self.tick_cursor];
        let sigma = crate::vpin::sigma_delta_p(past).ok();
        match (&mut self.tracker, sigma) {
            (Some(t), Some(s)) => t.set_sigma(s),
            (None, Some(s)) => {
                let bv = match self.cfg.vpin.bucket_volume {
                    Some(v) => Some(v),
                    None => crate::vpin::bucket_volume_per_day(day_ticks, self.cfg.vpin.buckets_per_day).ok(),
                };
                if let Some(bv) = bv {
                    match VpinTracker::new(bv, self.cfg.vpin.window, s) {
                        Ok(t) => {
                            self.tracker = Some(t);
                        }
                        Err(e) => log::warn!("VPIN tracker unavailable: {e}"),
                    }
                }
            }
            _ => {}
        }
    }

    fn retrain_svm(&mut self) {
        let oldest = self.day_index.saturating_sub(self.cfg.strategy.svm_training_days);
        while self.svm_samples.front().is_some_and(|s| s.0 < oldest) {
            self.svm_samples.pop_front();
        }
        let x: Vec<Vec<f64>> = self.svm_samples.iter().map(|s| s.1.clone()).collect();
        let y: Vec<f64> = self.svm_samples.iter().map(|s| s.2).collect();
        match train_standardized(&x, &y, &self.cfg.svm, Exec::Sequential) {
            Ok(m) => self.svm = Some(m),
            Err(e) => log::warn!("SVM retrain failed, keeping previous model: {e}"),
        }
    }

    fn absorb_ticks(&mut self, view: &MarketView<'_>) {
        let end = view.ticks.len();
        let day = self.day_index;
        if let Some(tr) = self.tracker.as_mut() {
            for t in &view.ticks[self.tick_cursor..end] {
                for b in tr.push(t) {
                    self.buckets.push(BucketMark {
                        day,
                        vpin: tr.vpin(),
                        close: b.close_price,
                    });
                }
            }
            if self.cfg.strategy.layers.vpin {
                self.recalibrate_thresholds();
            }
        }
        self.tick_cursor = end;
    }

    /// Pairs from the previous and current trading day; bucket `i`'s VPIN
    /// is matched with the relative price change over bucket `i + delay`.
    fn recalibrate_thresholds(&mut self) {
        let delay = self.cfg.strategy.basket_delay.max(1);
        let first_day = self.day_index.saturating_sub(1);
        let n = self.buckets.len();
        let mut v = Vec::new();
        let mut f = Vec::new();
        for i in 0..n.saturating_sub(delay) {
            let b = self.buckets[i];
            if b.day < first_day {
                continue;
            }
            if let Some(vp) = b.vpin {
                let prev = self.buckets[i + delay - 1].close;
                let next = self.buckets[i + delay].close;
                v.push(vp);
                f.push((next / prev - 1.0).abs());
            }
        }
        if v.len() < self.cfg.strategy.vpin_min_points {
            return;
        }
        let search = ThresholdSearch {
            fluct_hi: self.cfg.strategy.fluct_hi,
            fluct_lo: self.cfg.strategy.fluct_lo,
            refine_iters: self.cfg.strategy.vpin_refine_iters,
            seed: self.cfg.seed,
        };
        if let Ok(t) = calibrate_vpin_thresholds(&v, &f, &search) {
            self.delta2 = t.delta2;
            self.delta3 = t.delta3;
        }
    }

    fn push_bar_history(&mut self, view: &MarketView<'_>, k: usize) {
        let bar = &view.bars[k];
        let same_session = k > 0 && {
            let a = view.calendar.session_of(view.bars[k - 1].ts_ns);
            a.is_some() && a == view.calendar.session_of(bar.ts_ns)
        };
        let r = same_session.then(|| (bar.close / view.bars[k - 1].close).ln());
        let mut sr = None;
        if let (Some(st), Some(r)) = (self.garch.as_mut(), r) {
            sr = Some((r - st.next_mean()) / st.next_variance().sqrt());
            st.update(r);
        }
        let z = self.garch.as_ref().map(|st| st.next_mean() / st.next_variance().sqrt());
        self.day_of_bar.push(self.day_index);
        self.ret.push(r);
        self.z.push(z);
        self.std_ret.push(sr);
        // label for the previous bar's features is this bar's return
        if k > 0 && self.cfg.strategy.layers.svm {
            if let (Some(fv), Some(r)) = (self.features[k - 1].clone(), r) {
                self.svm_samples.push_back((self.day_of_bar[k - 1], fv, if r > 0.0 { 1.0 } else { -1.0 }));
            }
        }
        let fv = self.feature_vector(k);
        self.features.push(fv);
    }

    fn feature_vector(&self, k: usize) -> Option<Vec<f64>> {
        if k + 1 < N_LAGS {
            return None;
        }
        let mut v = Vec::with_capacity(2 * N_LAGS + 1);
        for j in k + 1 - N_LAGS..=k {
            v.push(self.z[j]?);
        }
        for j in k + 1 - N_LAGS..=k {
            v.push(self.std_ret[j]?);
        }
        v.push(self.tracker.as_ref().and_then(VpinTracker::vpin).unwrap_or(0.0));
        Some(v)
    }

    fn calibration_points(&self, k: usize) -> Vec<(f64, f64)> {
        let w = self.cfg.strategy.delta1_window;
        let from = k.saturating_sub(w);
        (from..k)
            .filter_map(|j| Some((self.z[j]?, self.ret[j + 1]?)))
            .collect()
    }

    fn decide(&mut self, view: &MarketView<'_>, k: usize) -> Decision {
        let ts = view.bars[k].ts_ns + view.interval_ns;
        let s = self.cfg.strategy;
        let vpin_now = self.tracker.as_ref().and_then(VpinTracker::vpin);
        let mut signal = Signal::none(ts);
        let mut record = SignalRecord {
            ts_ns: ts,
            side: Side::None,
            delta1: f64::NAN,
            base_delta1: f64::NAN,
            vpin: vpin_now,
            delta2: self.delta2,
            delta3: self.delta3,
            layer_trace: String::new(),
        };
        let fraction = position_fraction(vpin_now, self.delta2, self.delta3, &s);
        let finish = |signal: Signal, mut record: SignalRecord| {
            record.side = signal.side;
            record.layer_trace = signal.layer_trace.clone();
            Decision {
                signal,
                fraction,
                record: Some(record),
            }
        };
        let Some(z) = self.z[k] else {
            signal.trace("garch:unfitted");
            return finish(signal, record);
        };
        let points = self.calibration_points(k);
        let base = match calibrate_delta1(&points, &s.delta1_grid, s.delta1_min_points, s.delta1_cost, self.exec) {
            Ok(d) => d,
            Err(_) => {
                signal.trace("garch:warmup");
                return finish(signal, record);
            }
        };
        self.day_max_d1 = self.day_max_d1.max(base);
        self.day_min_d1 = self.day_min_d1.min(base);
        let mut d1 = base;
        record.base_delta1 = base;
        if s.layers.vpin {
            match vpin_now {
                Some(v) => {
                    d1 = adjust_delta1(base, v, self.delta2, self.delta3, self.day_max_d1, self.day_min_d1);
                    signal.trace(if v > self.delta2 {
                        "vpin:widen"
                    } else if v < self.delta3 {
                        "vpin:tighten"
                    } else {
                        "vpin:hold"
                    });
                }
                None => signal.trace("vpin:unavailable"),
            }
        }
        record.delta1 = d1;
        signal.side = side_for(z, d1);
        let mut tr = format!("garch:{}", signal.side.as_str());
        if !signal.layer_trace.is_empty() {
            tr.push(';');
            tr.push_str(&signal.layer_trace);
        }
        signal.layer_trace = tr;
        if s.layers.svm && signal.side != Side::None {
            signal = match (&self.svm, &self.features[k]) {
                (Some(m), Some(fv)) => match svm_gate(m, fv, signal.clone()) {
                    Ok(g) => g,
                    Err(_) => veto(signal, "svm-unavailable"),
                },
                _ => veto(signal, "svm-unavailable"),
            };
        }
        finish(signal, record)
    }
}

fn veto(mut s: Signal, why: &str) -> Signal {
    s.side = Side::None;
    s.trace(why);
    s
}

impl SignalSource for LayeredStrategy {
    fn on_bar(&mut self, view: &MarketView<'_>) -> Result<Decision> {
        let k = view.bars.len() - 1;
        let day = view.bars[k].ts_ns.div_euclid(NANOS_PER_DAY);
        if self.current_day != Some(day) {
            self.start_day(view, k);
        }
        self.absorb_ticks(view);
        self.push_bar_history(view, k);
        if self.day_index < self.warmup_days() || !self.cfg.strategy.layers.garch {
            return Ok(Decision::none(view.bars[k].ts_ns + view.interval_ns));
        }
        Ok(self.decide(view, k))
    }
}
