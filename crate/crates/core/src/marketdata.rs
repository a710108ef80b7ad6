//! Tick and bar data: ingestion, validation, session calendars, resampling,
//! log returns and a seeded GARCH(1,1) tick generator.
//!
//! Timestamps are nanoseconds since the Unix epoch read as exchange-local
//! wall-clock time; the calendar never applies a time-zone offset.

use std::ops::Range;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;

pub const NANOS_PER_SEC: i64 = 1_000_000_000;
pub const NANOS_PER_DAY: i64 = 86_400 * NANOS_PER_SEC;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tick {
    pub ts_ns: i64,
    pub price: f64,
    pub volume: u64,
    pub bid1: Option<f64>,
    pub ask1: Option<f64>,
}

impl Tick {
    pub fn new(ts_ns: i64, price: f64, volume: u64) -> Self {
        Tick {
            ts_ns,
            price,
            volume,
            bid1: None,
            ask1: None,
        }
    }

    pub fn with_quotes(mut self, bid1: f64, ask1: f64) -> Self {
        self.bid1 = Some(bid1);
        self.ask1 = Some(ask1);
        self
    }

    fn check(&self) -> std::result::Result<(), String> {
        if !(self.price.is_finite() && self.price > 0.0) {
            return Err(format!("price must be positive, got {}", self.price));
        }
        if self.volume == 0 {
            return Err("volume must be at least 1".into());
        }
        for (name, q) in [("bid1", self.bid1), ("ask1", self.ask1)] {
            if let Some(q) = q {
                if !(q.is_finite() && q > 0.0) {
                    return Err(format!("{name} must be positive, got {q}"));
                }
            }
        }
        if let (Some(b), Some(a)) = (self.bid1, self.ask1) {
            if b > a {
                return Err(format!("bid1 {b} above ask1 {a}"));
            }
        }
        Ok(())
    }
}

/// Identifies one trading session: calendar day and session slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SessionKey {
    pub day: i64,
    pub slot: usize,
}

/// Intraday trading sessions as `[open, close)` second offsets from midnight.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionCalendar {
    sessions: Vec<(u32, u32)>,
}

impl Default for SessionCalendar {
    /// CSI300 index futures: 09:30-11:30 and 13:00-15:00.
    fn default() -> Self {
        SessionCalendar {
            sessions: vec![(9 * 3600 + 1800, 11 * 3600 + 1800), (13 * 3600, 15 * 3600)],
        }
    }
}

impl SessionCalendar {
    pub fn new(mut sessions: Vec<(u32, u32)>) -> Result<Self> {
        sessions.sort_unstable();
        if sessions.is_empty() {
            return Err(Error::param("session calendar needs at least one session"));
        }
        for (i, &(open, close)) in sessions.iter().enumerate() {
            if open >= close || close > 86_400 {
                return Err(Error::param(format!("invalid session {open}..{close}")));
            }
            if i > 0 && sessions[i - 1].1 > open {
                return Err(Error::param("sessions overlap"));
            }
        }
        Ok(SessionCalendar { sessions })
    }

    /// A single session spanning the whole day.
    pub fn always_open() -> Self {
        SessionCalendar {
            sessions: vec![(0, 86_400)],
        }
    }

    /// Parse `"HH:MM-HH:MM"` entries.
    pub fn parse<S: AsRef<str>>(specs: &[S]) -> Result<Self> {
        fn hm(s: &str) -> Option<u32> {
            let (h, m) = s.trim().split_once(':')?;
            let (h, m): (u32, u32) = (h.parse().ok()?, m.parse().ok()?);
            (h <= 24 && m < 60).then_some(h * 3600 + m * 60)
        }
        let sessions = specs
            .iter()
            .map(|s| {
                let s = s.as_ref();
                s.split_once('-')
                    .and_then(|(a, b)| Some((hm(a)?, hm(b)?)))
                    .ok_or_else(|| Error::param(format!("bad session spec {s:?}, want HH:MM-HH:MM")))
            })
            .collect::<Result<Vec<_>>>()?;
        SessionCalendar::new(sessions)
    }

    pub fn sessions(&self) -> &[(u32, u32)] {
        &self.sessions
    }

    /// Total open seconds per day.
    pub fn seconds_per_day(&self) -> u32 {
        self.sessions.iter().map(|(o, c)| c - o).sum()
    }

    pub fn session_of(&self, ts_ns: i64) -> Option<SessionKey> {
        let day = ts_ns.div_euclid(NANOS_PER_DAY);
        let tod = ts_ns.rem_euclid(NANOS_PER_DAY);
        self.sessions
            .iter()
            .position(|&(o, c)| tod >= o as i64 * NANOS_PER_SEC && tod < c as i64 * NANOS_PER_SEC)
            .map(|slot| SessionKey { day, slot })
    }

    pub fn session_open_ns(&self, key: SessionKey) -> i64 {
        key.day * NANOS_PER_DAY + self.sessions[key.slot].0 as i64 * NANOS_PER_SEC
    }
}

/// Validated, time-ordered trades of one instrument.
#[derive(Debug, Clone, PartialEq)]
pub struct TickSeries {
    instrument: String,
    ticks: Vec<Tick>,
    calendar: SessionCalendar,
}

impl TickSeries {
    pub fn new(instrument: impl Into<String>, ticks: Vec<Tick>, calendar: SessionCalendar) -> Result<Self> {
        for (i, t) in ticks.iter().enumerate() {
            t.check().map_err(|m| Error::param(format!("tick {i}: {m}")))?;
            if i > 0 && t.ts_ns < ticks[i - 1].ts_ns {
                return Err(Error::param(format!("tick {i}: timestamp decreases")));
            }
            if calendar.session_of(t.ts_ns).is_none() {
                return Err(Error::param(format!("tick {i}: timestamp {} outside trading sessions", t.ts_ns)));
            }
        }
        Ok(TickSeries {
            instrument: instrument.into(),
            ticks,
            calendar,
        })
    }

    pub fn instrument(&self) -> &str {
        &self.instrument
    }

    pub fn ticks(&self) -> &[Tick] {
        &self.ticks
    }

    pub fn calendar(&self) -> &SessionCalendar {
        &self.calendar
    }

    pub fn len(&self) -> usize {
        self.ticks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ticks.is_empty()
    }

    pub fn prices(&self) -> Vec<f64> {
        self.ticks.iter().map(|t| t.price).collect()
    }

    pub fn total_volume(&self) -> u64 {
        self.ticks.iter().map(|t| t.volume).sum()
    }

    /// Index ranges of ticks grouped by calendar day.
    pub fn day_ranges(&self) -> Vec<Range<usize>> {
        group_ranges(&self.ticks, |t| t.ts_ns.div_euclid(NANOS_PER_DAY))
    }

    /// A copy restricted to the given index range.
    pub fn slice(&self, range: Range<usize>) -> TickSeries {
        TickSeries {
            instrument: self.instrument.clone(),
            ticks: self.ticks[range].to_vec(),
            calendar: self.calendar.clone(),
        }
    }

    /// Tick-to-tick log returns, skipping pairs that straddle a session break.
    pub fn log_returns(&self) -> ReturnSeries {
        session_returns(
            self.ticks.iter().map(|t| (t.ts_ns, t.price)),
            &self.calendar,
        )
    }
}

fn group_ranges<T, K: PartialEq>(items: &[T], key: impl Fn(&T) -> K) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=items.len() {
        if i == items.len() || key(&items[i]) != key(&items[start]) {
            if i > start {
                out.push(start..i);
            }
            start = i;
        }
    }
    out
}

fn session_returns(points: impl Iterator<Item = (i64, f64)>, cal: &SessionCalendar) -> ReturnSeries {
    let mut timestamps = Vec::new();
    let mut values = Vec::new();
    let mut prev: Option<(Option<SessionKey>, f64)> = None;
    for (ts, p) in points {
        let key = cal.session_of(ts);
        if let Some((pk, pp)) = prev {
            if pk == key {
                timestamps.push(ts);
                values.push((p / pp).ln());
            }
        }
        prev = Some((key, p));
    }
    ReturnSeries { timestamps, values }
}

/// Log returns `r_t = ln(P_t / P_{t-1})` with the timestamp of `P_t`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReturnSeries {
    pub timestamps: Vec<i64>,
    pub values: Vec<f64>,
}

impl ReturnSeries {
    pub fn from_values(values: Vec<f64>) -> Self {
        ReturnSeries {
            timestamps: (1..=values.len() as i64).collect(),
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Log returns of an ordered price vector; timestamps are price indices.
pub fn log_returns(prices: &[f64]) -> Result<ReturnSeries> {
    if prices.len() < 2 {
        return Err(Error::InsufficientData {
            what: "log returns",
            needed: 2,
            got: prices.len(),
        });
    }
    if let Some(p) = prices.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
        return Err(Error::param(format!("prices must be positive, got {p}")));
    }
    Ok(ReturnSeries {
        timestamps: (1..prices.len() as i64).collect(),
        values: prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    /// Start of the bar interval.
    pub ts_ns: i64,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: u64,
    /// Level-1 quotes of the last tick in the bar, when present.
    pub bid1: Option<f64>,
    pub ask1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarSeries {
    pub interval_ns: i64,
    pub bars: Vec<Bar>,
    pub calendar: SessionCalendar,
}

impl BarSeries {
    pub fn closes(&self) -> Vec<f64> {
        self.bars.iter().map(|b| b.close).collect()
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    /// Close-to-close log returns within sessions.
    pub fn log_returns(&self) -> ReturnSeries {
        session_returns(self.bars.iter().map(|b| (b.ts_ns, b.close)), &self.calendar)
    }

    pub fn day_ranges(&self) -> Vec<Range<usize>> {
        group_ranges(&self.bars, |b| b.ts_ns.div_euclid(NANOS_PER_DAY))
    }
}

/// Aggregate ticks into OHLCV bars on a grid anchored at each session open.
/// Empty intervals produce no bar, and no bar spans a session break.
pub fn resample(ticks: &TickSeries, interval_ns: i64) -> Result<BarSeries> {
    if interval_ns <= 0 {
        return Err(Error::param(format!("bar interval must be positive, got {interval_ns}")));
    }
    if ticks.is_empty() {
        return Err(Error::InsufficientData {
            what: "resample",
            needed: 1,
            got: 0,
        });
    }
    let cal = ticks.calendar();
    let mut bars: Vec<Bar> = Vec::new();
    let mut current: Option<(SessionKey, i64)> = None;
    for t in ticks.ticks() {
        let key = cal
            .session_of(t.ts_ns)
            .expect("TickSeries invariant: ticks lie inside sessions");
        let open = cal.session_open_ns(key);
        let slot = (t.ts_ns - open) / interval_ns;
        match (current, bars.last_mut()) {
            (Some(c), Some(bar)) if c == (key, slot) => {
                bar.high = bar.high.max(t.price);
                bar.low = bar.low.min(t.price);
                bar.close = t.price;
                bar.volume += t.volume;
                if t.bid1.is_some() || t.ask1.is_some() {
                    bar.bid1 = t.bid1;
                    bar.ask1 = t.ask1;
                }
            }
            _ => {
                current = Some((key, slot));
                bars.push(Bar {
                    ts_ns: open + slot * interval_ns,
                    open: t.price,
                    high: t.price,
                    low: t.price,
                    close: t.price,
                    volume: t.volume,
                    bid1: t.bid1,
                    ask1: t.ask1,
                });
            }
        }
    }
    Ok(BarSeries {
        interval_ns,
        bars,
        calendar: cal.clone(),
    })
}

/// Read a tick CSV with header `ts_ns,price,volume[,bid1,ask1]`.
pub fn load_ticks(path: impl AsRef<Path>, calendar: &SessionCalendar) -> Result<TickSeries> {
    let path = path.as_ref();
    let data_err = |message: String| Error::Data {
        path: path.to_path_buf(),
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| data_err(e.to_string()))?;
    let headers = rdr.headers().map_err(|e| data_err(e.to_string()))?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    let with_quotes = match cols.as_slice() {
        ["ts_ns", "price", "volume"] => false,
        ["ts_ns", "price", "volume", "bid1", "ask1"] => true,
        [] | [""] => return Err(data_err("empty file".into())),
        _ => {
            return Err(data_err(format!(
                "unexpected header {cols:?}, want ts_ns,price,volume[,bid1,ask1]"
            )))
        }
    };
    let mut ticks = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |message: String| Error::MalformedRow {
            path: path.to_path_buf(),
            line,
            message,
        };
        let field = |i: usize| rec.get(i).unwrap_or("");
        let ts_ns: i64 = field(0).parse().map_err(|_| bad(format!("bad ts_ns {:?}", field(0))))?;
        let price: f64 = field(1).parse().map_err(|_| bad(format!("bad price {:?}", field(1))))?;
        let volume: u64 = field(2).parse().map_err(|_| bad(format!("bad volume {:?}", field(2))))?;
        let quote = |i: usize| -> Result<Option<f64>> {
            if !with_quotes || field(i).is_empty() {
                return Ok(None);
            }
            field(i)
                .parse()
                .map(Some)
                .map_err(|_| bad(format!("bad quote {:?}", field(i))))
        };
        let tick = Tick {
            ts_ns,
            price,
            volume,
            bid1: quote(3)?,
            ask1: quote(4)?,
        };
        tick.check().map_err(&bad)?;
        if let Some(prev) = ticks.last().map(|t: &Tick| t.ts_ns) {
            if ts_ns < prev {
                return Err(bad(format!("timestamp {ts_ns} precedes previous {prev}")));
            }
        }
        if calendar.session_of(ts_ns).is_none() {
            return Err(bad(format!("timestamp {ts_ns} outside trading sessions")));
        }
        ticks.push(tick);
    }
    if ticks.is_empty() {
        return Err(data_err("empty file".into()));
    }
    let instrument = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    TickSeries::new(instrument, ticks, calendar.clone())
}

/// Write ticks with header `ts_ns,price,volume,bid1,ask1`.
pub fn write_ticks<W: std::io::Write>(out: W, ticks: &TickSeries) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["ts_ns", "price", "volume", "bid1", "ask1"])?;
    let opt = |q: Option<f64>| q.map(|v| v.to_string()).unwrap_or_default();
    for t in ticks.ticks() {
        w.write_record([
            t.ts_ns.to_string(),
            t.price.to_string(),
            t.volume.to_string(),
            opt(t.bid1),
            opt(t.ask1),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Write bars with header `ts_ns,open,high,low,close,volume`.
pub fn write_bars<W: std::io::Write>(out: W, bars: &BarSeries) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["ts_ns", "open", "high", "low", "close", "volume"])?;
    for b in &bars.bars {
        w.write_record([
            b.ts_ns.to_string(),
            b.open.to_string(),
            b.high.to_string(),
            b.low.to_string(),
            b.close.to_string(),
            b.volume.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Parameters of the synthetic tick generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
    pub mean_return: f64,
    /// Log-normal volume law: `ceil(exp(N(mu, sigma)))`, at least 1.
    pub volume_mu: f64,
    pub volume_sigma: f64,
    pub seed: u64,
    pub count: usize,
    pub start_price: f64,
    pub tick_interval_ms: u64,
    /// Quoted bid/ask spread in price units; 0 disables quotes.
    pub spread: f64,
    /// First trading day, in days since the epoch.
    pub start_day: i64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            omega: 1e-8,
            alpha: 0.05,
            beta: 0.90,
            mean_return: 0.0,
            volume_mu: 1.5,
            volume_sigma: 0.8,
            seed: 7,
            count: 100_000,
            start_price: 3000.0,
            tick_interval_ms: 500,
            spread: 0.2,
            // 2018-01-02, a Tuesday
            start_day: 17_533,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) {
            return Err(Error::param("omega must be > 0"));
        }
        if !(self.alpha >= 0.0 && self.beta >= 0.0) {
            return Err(Error::param("alpha and beta must be >= 0"));
        }
        if !(self.alpha + self.beta < 1.0) {
            return Err(Error::param(format!(
                "alpha + beta must be < 1, got {}",
                self.alpha + self.beta
            )));
        }
        if self.count < 2 {
            return Err(Error::InsufficientData {
                what: "synthetic ticks",
                needed: 2,
                got: self.count,
            });
        }
        if !(self.start_price > 0.0) || self.tick_interval_ms == 0 || !(self.volume_sigma >= 0.0) {
            return Err(Error::param("start_price, tick_interval_ms and volume_sigma must be positive"));
        }
        if !(self.spread >= 0.0) {
            return Err(Error::param("spread must be >= 0"));
        }
        Ok(())
    }
}

fn is_weekend(day: i64) -> bool {
    // 1970-01-01 was a Thursday
    matches!((day + 4).rem_euclid(7), 0 | 6)
}

/// Generate `spec.count` ticks at a fixed cadence inside the calendar's
/// sessions (weekdays only). Returns follow a GARCH(1,1) started at its
/// unconditional variance; prices are `start_price * exp(cumsum r)`.
pub fn synth_ticks(spec: &SynthSpec, calendar: &SessionCalendar) -> Result<TickSeries> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let vol_law = LogNormal::new(spec.volume_mu, spec.volume_sigma)
        .map_err(|e| Error::param(e.to_string()))?;
    let step = spec.tick_interval_ms as i64 * 1_000_000;
    let mut ticks = Vec::with_capacity(spec.count);
    let mut h = spec.omega / (1.0 - spec.alpha - spec.beta);
    let mut eps_prev = 0.0f64;
    let mut log_p = spec.start_price.ln();
    let mut day = spec.start_day;
    'days: loop {
        if is_weekend(day) {
            day += 1;
            continue;
        }
        for &(open, close) in calendar.sessions() {
            let mut ts = day * NANOS_PER_DAY + open as i64 * NANOS_PER_SEC;
            let end = day * NANOS_PER_DAY + close as i64 * NANOS_PER_SEC;
            while ts < end {
                if !ticks.is_empty() {
                    h = spec.omega + spec.alpha * eps_prev * eps_prev + spec.beta * h;
                    let z: f64 = StandardNormal.sample(&mut rng);
                    eps_prev = h.sqrt() * z;
                    log_p += spec.mean_return + eps_prev;
                }
                let volume = (vol_law.sample(&mut rng).ceil() as u64).max(1);
                let price = log_p.exp();
                let mut tick = Tick::new(ts, price, volume);
                if spec.spread > 0.0 {
                    tick = tick.with_quotes(price - 0.5 * spec.spread, price + 0.5 * spec.spread);
                }
                ticks.push(tick);
                if ticks.len() == spec.count {
                    break 'days;
                }
                ts += step;
            }
        }
        day += 1;
    }
    TickSeries::new("SYNTH", ticks, calendar.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveStats {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (divisor `n - 1`).
    pub std: f64,
    /// Moment skewness; `None` for a zero-variance series.
    pub skewness: Option<f64>,
    /// Non-excess moment kurtosis (normal = 3); `None` for zero variance.
    pub kurtosis: Option<f64>,
}

pub fn descriptive_stats(r: &[f64]) -> Result<DescriptiveStats> {
    if r.len() < 4 {
        return Err(Error::InsufficientData {
            what: "descriptive statistics",
            needed: 4,
            got: r.len(),
        });
    }
    let n = r.len() as f64;
    let mean = math::mean(r);
    let (m2, m3, m4) = r.iter().fold((0.0, 0.0, 0.0), |(a, b, c), x| {
        let d = x - mean;
        let d2 = d * d;
        (a + d2, b + d2 * d, c + d2 * d2)
    });
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    let scale = r.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let degenerate = m2 <= (1e-14 * scale).powi(2);
    Ok(DescriptiveStats {
        n: r.len(),
        mean,
        std: (m2 * n / (n - 1.0)).sqrt(),
        skewness: (!degenerate).then(|| m3 / m2.powf(1.5)),
        kurtosis: (!degenerate).then(|| m4 / (m2 * m2)),
    })
}
