//! Volume-synchronized probability of informed trading.
//!
//! The tape is cut into equal-volume buckets; a trade that overflows a
//! bucket is split pro-rata and the overflow opens the next one. Each
//! fragment is classified with bulk volume classification,
//! `V_B = V · Φ(ΔP / σ_ΔP)`, and VPIN is the mean absolute order imbalance
//! over the last `n` complete buckets divided by the bucket volume.
//!
//! In the information-event model behind the estimator, `E[|V_B - V_S|] ≈ αμ`
//! and `E[V] = αμ + 2ε`, so VPIN estimates `αμ / (αμ + 2ε)`. Those latent
//! parameters are never estimated here.

use std::collections::VecDeque;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::marketdata::{Tick, TickSeries, NANOS_PER_DAY};
use crate::math::special::normal_cdf;

/// A slice of one trade assigned to a bucket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fragment {
    pub tick: usize,
    pub volume: f64,
}

/// A bucket before classification.
#[derive(Debug, Clone, PartialEq)]
pub struct FilledBucket {
    /// 1-based bucket index τ.
    pub index: usize,
    pub fragments: Vec<Fragment>,
    pub total: f64,
    pub start_ts: i64,
    pub end_ts: i64,
    pub open_price: f64,
    pub close_price: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BucketFill {
    pub bucket_volume: f64,
    pub complete: Vec<FilledBucket>,
    /// Trailing partial bucket, excluded from VPIN.
    pub incomplete: Option<FilledBucket>,
    /// ΔP of each tick against the previous trade price; 0 for the first.
    pub delta_p: Vec<f64>,
}

impl BucketFill {
    pub fn remainder_volume(&self) -> f64 {
        self.incomplete.as_ref().map_or(0.0, |b| b.total)
    }
}

/// A classified bucket; `buy_volume + sell_volume == total` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeBucket {
    pub index: usize,
    pub buy_volume: f64,
    pub sell_volume: f64,
    pub total: f64,
    pub start_ts: i64,
    pub end_ts: i64,
    pub open_price: f64,
    pub close_price: f64,
}

impl VolumeBucket {
    pub fn imbalance(&self) -> f64 {
        (self.buy_volume - self.sell_volume).abs()
    }
}

fn check_bucket_volume(v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::param(format!("bucket volume must be positive, got {v}")));
    }
    Ok(())
}

/// Partition the tape into buckets of `bucket_volume` contracts.
pub fn bucket_fill(ticks: &TickSeries, bucket_volume: f64) -> Result<BucketFill> {
    check_bucket_volume(bucket_volume)?;
    if ticks.is_empty() {
        return Err(Error::InsufficientData {
            what: "bucket fill",
            needed: 1,
            got: 0,
        });
    }
    let ts = ticks.ticks();
    let mut delta_p = Vec::with_capacity(ts.len());
    let mut complete = Vec::new();
    let mut current: Option<FilledBucket> = None;
    for (i, t) in ts.iter().enumerate() {
        delta_p.push(if i == 0 { 0.0 } else { t.price - ts[i - 1].price });
        let mut left = t.volume as f64;
        while left > 0.0 {
            let b = current.get_or_insert_with(|| FilledBucket {
                index: complete.len() + 1,
                fragments: Vec::new(),
                total: 0.0,
                start_ts: t.ts_ns,
                end_ts: t.ts_ns,
                open_price: t.price,
                close_price: t.price,
            });
            let room = bucket_volume - b.total;
            let take = left.min(room);
            b.fragments.push(Fragment { tick: i, volume: take });
            b.end_ts = t.ts_ns;
            b.close_price = t.price;
            left -= take;
            if take >= room {
                b.total = bucket_volume;
                complete.push(current.take().expect("bucket present"));
            } else {
                b.total += take;
            }
        }
    }
    Ok(BucketFill {
        bucket_volume,
        complete,
        incomplete: current,
        delta_p,
    })
}

/// Bulk volume classification of `v` contracts given a price change.
pub fn bvc_split(delta_p: f64, sigma_dp: f64, v: f64) -> Result<(f64, f64)> {
    if !(sigma_dp > 0.0) {
        return Err(Error::param(format!("sigma_dp must be positive, got {sigma_dp}")));
    }
    if !(v > 0.0) {
        return Err(Error::param(format!("volume must be positive, got {v}")));
    }
    let vb = v * normal_cdf(delta_p / sigma_dp);
    Ok((vb, v - vb))
}

/// Population standard deviation of tick-to-tick price changes.
pub fn sigma_delta_p(ticks: &[Tick]) -> Result<f64> {
    if ticks.len() < 3 {
        return Err(Error::InsufficientData {
            what: "price-change standard deviation (needs at least 2 changes)",
            needed: 3,
            got: ticks.len(),
        });
    }
    let dp: Vec<f64> = ticks.windows(2).map(|w| w[1].price - w[0].price).collect();
    let sigma = crate::math::variance(&dp, 0).sqrt();
    if !(sigma > 0.0) {
        return Err(Error::degenerate("constant prices: price-change standard deviation is zero"));
    }
    Ok(sigma)
}

/// How σ_ΔP is obtained for classification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMode {
    /// One σ over the whole sample.
    FullSample,
    /// Trailing σ over the last `window` price changes (falls back to the
    /// full-sample σ until the window fills).
    Rolling { window: usize },
}

/// Per-tick σ_ΔP for the chosen mode.
pub fn sigma_path(fill: &BucketFill, mode: SigmaMode, full_sample: f64) -> Vec<f64> {
    match mode {
        SigmaMode::FullSample => vec![full_sample; fill.delta_p.len()],
        SigmaMode::Rolling { window } => {
            let dp = &fill.delta_p;
            let mut out = Vec::with_capacity(dp.len());
            let (mut s1, mut s2) = (0.0f64, 0.0f64);
            for i in 0..dp.len() {
                // changes are dp[1..]; dp[0] is a placeholder
                if i >= 1 {
                    s1 += dp[i];
                    s2 += dp[i] * dp[i];
                }
                if i > window {
                    s1 -= dp[i - window];
                    s2 -= dp[i - window] * dp[i - window];
                }
                let sigma = if i >= window && window >= 2 {
                    let m = s1 / window as f64;
                    (s2 / window as f64 - m * m).max(0.0).sqrt()
                } else {
                    0.0
                };
                out.push(if sigma > 0.0 { sigma } else { full_sample });
            }
            out
        }
    }
}

/// Classify filled buckets with a per-tick σ.
pub fn classify(fill: &BucketFill, sigma: &[f64], exec: Exec) -> Result<Vec<VolumeBucket>> {
    if sigma.len() != fill.delta_p.len() {
        return Err(Error::DimensionMismatch {
            expected: fill.delta_p.len(),
            got: sigma.len(),
        });
    }
    if let Some(s) = sigma.iter().find(|s| !(**s > 0.0)) {
        return Err(Error::param(format!("sigma_dp must be positive, got {s}")));
    }
    Ok(exec.map(&fill.complete, |b| classify_one(b, &fill.delta_p, sigma)))
}

/// Clamp `buy` to `[0, total]` and round the smaller side so that
/// `buy + sell == total` holds exactly in floating point.
fn exact_split(buy: f64, total: f64) -> (f64, f64) {
    let buy = buy.clamp(0.0, total);
    let sell = total - buy;
    if buy < sell {
        (total - sell, sell)
    } else {
        (buy, sell)
    }
}

fn classify_one(b: &FilledBucket, delta_p: &[f64], sigma: &[f64]) -> VolumeBucket {
    let buy = b
        .fragments
        .iter()
        .map(|f| f.volume * normal_cdf(delta_p[f.tick] / sigma[f.tick]))
        .sum::<f64>();
    let (buy, sell) = exact_split(buy, b.total);
    VolumeBucket {
        index: b.index,
        buy_volume: buy,
        sell_volume: sell,
        total: b.total,
        start_ts: b.start_ts,
        end_ts: b.end_ts,
        open_price: b.open_price,
        close_price: b.close_price,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VpinSeries {
    pub values: Vec<f64>,
    /// 1-based index of the last bucket in each window; starts at `window`.
    pub bucket_indices: Vec<usize>,
    pub bucket_end_ts: Vec<i64>,
    pub window: usize,
    pub bucket_volume: f64,
}

impl VpinSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Write `bucket_end_ts,vpin`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bucket_end_ts", "vpin"])?;
        for (ts, v) in self.bucket_end_ts.iter().zip(&self.values) {
            w.write_record([ts.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn window_vpin(imbalances: impl Iterator<Item = f64>, n: usize, v: f64) -> f64 {
    (imbalances.sum::<f64>() / (n as f64 * v)).clamp(0.0, 1.0)
}

/// Rolling VPIN over complete buckets.
pub fn compute_vpin(buckets: &[VolumeBucket], window: usize, bucket_volume: f64) -> Result<VpinSeries> {
    check_bucket_volume(bucket_volume)?;
    if window == 0 {
        return Err(Error::param("VPIN window must be >= 1"));
    }
    if buckets.len() < window {
        return Err(Error::InsufficientData {
            what: "VPIN window",
            needed: window,
            got: buckets.len(),
        });
    }
    let mut s = VpinSeries {
        values: Vec::with_capacity(buckets.len() + 1 - window),
        bucket_indices: Vec::new(),
        bucket_end_ts: Vec::new(),
        window,
        bucket_volume,
    };
    for w in buckets.windows(window) {
        s.values.push(window_vpin(w.iter().map(VolumeBucket::imbalance), window, bucket_volume));
        let last = w[window - 1];
        s.bucket_indices.push(last.index);
        s.bucket_end_ts.push(last.end_ts);
    }
    Ok(s)
}

/// Bucket volume as mean daily volume over `buckets_per_day`, rounded to
/// whole contracts.
pub fn bucket_volume_per_day(ticks: &[Tick], buckets_per_day: usize) -> Result<f64> {
    if buckets_per_day == 0 {
        return Err(Error::param("buckets_per_day must be >= 1"));
    }
    if ticks.is_empty() {
        return Err(Error::InsufficientData {
            what: "bucket sizing",
            needed: 1,
            got: 0,
        });
    }
    let mut days = 0usize;
    let mut prev_day = None;
    let mut total = 0u64;
    for t in ticks {
        let d = t.ts_ns.div_euclid(NANOS_PER_DAY);
        if prev_day != Some(d) {
            days += 1;
            prev_day = Some(d);
        }
        total += t.volume;
    }
    Ok((total as f64 / days as f64 / buckets_per_day as f64).round().max(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VpinConfig {
    pub buckets_per_day: usize,
    pub window: usize,
    /// Fixed bucket volume; derived from `buckets_per_day` when absent.
    pub bucket_volume: Option<f64>,
    pub sigma: SigmaMode,
}

impl Default for VpinConfig {
    fn default() -> Self {
        VpinConfig {
            buckets_per_day: 50,
            window: 50,
            bucket_volume: None,
            sigma: SigmaMode::FullSample,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VpinRun {
    pub bucket_volume: f64,
    pub sigma_dp: f64,
    pub buckets: Vec<VolumeBucket>,
    pub remainder: f64,
    pub series: VpinSeries,
}

/// Bucket, classify and estimate in one pass over a tick series.
pub fn vpin_from_ticks(ticks: &TickSeries, cfg: &VpinConfig, exec: Exec) -> Result<VpinRun> {
    let bucket_volume = match cfg.bucket_volume {
        Some(v) => v,
        None => bucket_volume_per_day(ticks.ticks(), cfg.buckets_per_day)?,
    };
    let sigma_dp = sigma_delta_p(ticks.ticks())?;
    let fill = bucket_fill(ticks, bucket_volume)?;
    let sigma = sigma_path(&fill, cfg.sigma, sigma_dp);
    let buckets = classify(&fill, &sigma, exec)?;
    let series = compute_vpin(&buckets, cfg.window, bucket_volume)?;
    Ok(VpinRun {
        bucket_volume,
        sigma_dp,
        remainder: fill.remainder_volume(),
        buckets,
        series,
    })
}

/// Incremental VPIN over a live tape with fixed bucket volume; σ_ΔP can be
/// replaced between ticks. Produces the same buckets as the batch path.
#[derive(Debug, Clone)]
pub struct VpinTracker {
    bucket_volume: f64,
    window: usize,
    sigma: f64,
    last_price: Option<f64>,
    filled: f64,
    buy: f64,
    start_ts: i64,
    open_price: f64,
    completed: usize,
    recent: VecDeque<f64>,
    vpin: Option<f64>,
}

impl VpinTracker {
    pub fn new(bucket_volume: f64, window: usize, sigma: f64) -> Result<Self> {
        check_bucket_volume(bucket_volume)?;
        if window == 0 {
            return Err(Error::param("VPIN window must be >= 1"));
        }
        if !(sigma > 0.0) {
            return Err(Error::param(format!("sigma_dp must be positive, got {sigma}")));
        }
        Ok(VpinTracker {
            bucket_volume,
            window,
            sigma,
            last_price: None,
            filled: 0.0,
            buy: 0.0,
            start_ts: 0,
            open_price: 0.0,
            completed: 0,
            recent: VecDeque::with_capacity(window),
            vpin: None,
        })
    }

    pub fn set_sigma(&mut self, sigma: f64) {
        if sigma > 0.0 {
            self.sigma = sigma;
        }
    }

    pub fn bucket_volume(&self) -> f64 {
        self.bucket_volume
    }

    /// Latest VPIN, once `window` buckets have completed.
    pub fn vpin(&self) -> Option<f64> {
        self.vpin
    }

    pub fn completed(&self) -> usize {
        self.completed
    }

    /// Feed one trade; returns buckets completed by it.
    pub fn push(&mut self, t: &Tick) -> Vec<VolumeBucket> {
        let dp = self.last_price.map_or(0.0, |p| t.price - p);
        self.last_price = Some(t.price);
        let phi = normal_cdf(dp / self.sigma);
        let mut out = Vec::new();
        let mut left = t.volume as f64;
        while left > 0.0 {
            if self.filled == 0.0 {
                self.start_ts = t.ts_ns;
                self.open_price = t.price;
            }
            let room = self.bucket_volume - self.filled;
            let take = left.min(room);
            self.buy += take * phi;
            left -= take;
            if take >= room {
                self.completed += 1;
                let total = self.bucket_volume;
                let (buy, sell) = exact_split(self.buy, total);
                let b = VolumeBucket {
                    index: self.completed,
                    buy_volume: buy,
                    sell_volume: sell,
                    total,
                    start_ts: self.start_ts,
                    end_ts: t.ts_ns,
                    open_price: self.open_price,
                    close_price: t.price,
                };
                if self.recent.len() == self.window {
                    self.recent.pop_front();
                }
                self.recent.push_back(b.imbalance());
                if self.recent.len() == self.window {
                    self.vpin = Some(window_vpin(self.recent.iter().copied(), self.window, total));
                }
                self.filled = 0.0;
                self.buy = 0.0;
                out.push(b);
            } else {
                self.filled += take;
            }
        }
        out
    }
}
