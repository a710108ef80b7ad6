//! Subcommand implementations.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use hft_core::backtest::{
    run_strategy, run_variants, write_equity, write_reports_csv, write_trades, BacktestReport, BacktestRun, Variant,
};
use hft_core::denoise::denoise;
use hft_core::marketdata::{descriptive_stats, load_ticks, resample, synth_ticks, write_ticks, BarSeries, TickSeries};
use hft_core::stats::{adf_test, arch_effect_test, granger_test, jarque_bera, ljung_box, LagSelection, TestResult};
use hft_core::strategy::write_signals;
use hft_core::svm::train_standardized;
use hft_core::volatility::{fit_garch, forecast, GarchSpec, MeanModel};
use hft_core::vpin::vpin_from_ticks;
use hft_core::{Error, Exec};
use serde::Serialize;

use crate::config::RunConfig;
use crate::plot::{line_chart, Line};

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Output(PathBuf, std::io::Error),
    Input(PathBuf, String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Output(p, e) => write!(f, "cannot write {}: {e}", p.display()),
            CliError::Input(p, m) => write!(f, "{}: {m}", p.display()),
        }
    }
}

impl CliError {
    /// 1 usage, 2 data, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::InvalidParameter(_)) => 1,
            CliError::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub struct Ctx {
    pub cfg: RunConfig,
    pub exec: Exec,
}

impl Ctx {
    fn out_path(&self, name: &str) -> CliResult<PathBuf> {
        let dir = &self.cfg.output.dir;
        std::fs::create_dir_all(dir).map_err(|e| CliError::Output(dir.clone(), e))?;
        Ok(dir.join(name))
    }

    fn load(&self, path: &Path) -> CliResult<TickSeries> {
        Ok(load_ticks(path, &self.cfg.data.calendar()?)?)
    }

    fn bars(&self, ticks: &TickSeries) -> CliResult<BarSeries> {
        Ok(resample(ticks, self.cfg.data.bar_ns())?)
    }
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Output(dir.to_path_buf(), e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| CliError::Output(path.to_path_buf(), e))
}

fn write_with<F>(path: &Path, f: F) -> CliResult<()>
where
    F: FnOnce(&mut BufWriter<File>) -> hft_core::Result<()>,
{
    let mut w = create(path)?;
    f(&mut w)?;
    w.flush().map_err(|e| CliError::Output(path.to_path_buf(), e))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Output(path.to_path_buf(), e))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    write_text(path, &(text + "\n"))
}

pub struct GenerateArgs {
    pub count: Option<usize>,
    pub omega: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub out: Option<PathBuf>,
}

pub fn generate(ctx: &Ctx, a: GenerateArgs) -> CliResult<PathBuf> {
    let mut spec = ctx.cfg.data.synth.clone();
    spec.count = a.count.unwrap_or(spec.count);
    spec.omega = a.omega.unwrap_or(spec.omega);
    spec.alpha = a.alpha.unwrap_or(spec.alpha);
    spec.beta = a.beta.unwrap_or(spec.beta);
    let ticks = synth_ticks(&spec, &ctx.cfg.data.calendar()?)?;
    let path = match a.out {
        Some(p) => p,
        None => ctx.out_path("ticks.csv")?,
    };
    write_with(&path, |w| write_ticks(w, &ticks))?;
    println!("{} ticks -> {}", ticks.len(), path.display());
    Ok(path)
}

#[derive(Serialize)]
struct DiagRow {
    test: String,
    statistic: f64,
    p_value: f64,
    lags: String,
    reject_5pct: bool,
}

fn diag_row(test: &str, r: &TestResult) -> DiagRow {
    DiagRow {
        test: test.into(),
        statistic: r.statistic,
        p_value: r.p_value,
        lags: r.lags.map(|l| l.to_string()).unwrap_or_default(),
        reject_5pct: r.reject_at_5pct,
    }
}

pub fn diagnose(ctx: &Ctx, input: &Path, lags: usize, against: Option<&Path>) -> CliResult<()> {
    let ticks = ctx.load(input)?;
    let bars = ctx.bars(&ticks)?;
    let r = bars.log_returns().values;
    let log_p: Vec<f64> = bars.closes().iter().map(|p| p.ln()).collect();
    let mut rows = vec![
        diag_row("adf_log_price", &adf_test(&log_p, lags, LagSelection::Sic)?),
        diag_row("adf_returns", &adf_test(&r, lags, LagSelection::Sic)?),
        diag_row("jarque_bera", &jarque_bera(&r)?),
        diag_row("ljung_box", &ljung_box(&r, lags)?),
        diag_row("arch_effect", &arch_effect_test(&r, lags)?),
    ];
    if let Some(other) = against {
        let other_ticks = ctx.load(other)?;
        let y = ctx.bars(&other_ticks)?.log_returns().values;
        let n = r.len().min(y.len());
        let g = granger_test(&r[..n], &y[..n], 2)?;
        rows.push(diag_row("granger_input_causes_other", &g.x_causes_y));
        rows.push(diag_row("granger_other_causes_input", &g.y_causes_x));
    }
    let path = ctx.out_path("diagnostics.csv")?;
    write_with(&path, |w| {
        let mut c = csv::Writer::from_writer(w);
        for row in &rows {
            c.serialize(row)?;
        }
        c.flush()?;
        Ok(())
    })?;
    let d = descriptive_stats(&r)?;
    let path = ctx.out_path("descriptive.json")?;
    write_json(&path, &d)?;
    for row in &rows {
        println!(
            "{:<28} stat {:>12.4} p {:>8.4} {}",
            row.test,
            row.statistic,
            row.p_value,
            if row.reject_5pct { "reject" } else { "-" }
        );
    }
    Ok(())
}

pub fn vpin(ctx: &Ctx, input: &Path) -> CliResult<()> {
    let ticks = ctx.load(input)?;
    let run = vpin_from_ticks(&ticks, &ctx.cfg.vpin, ctx.exec)?;
    let path = ctx.out_path("vpin.csv")?;
    write_with(&path, |w| run.series.write_csv(w))?;
    let path = ctx.out_path("buckets.csv")?;
    write_with(&path, |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["index", "start_ts", "end_ts", "buy_volume", "sell_volume", "total", "close_price"])?;
        for b in &run.buckets {
            c.write_record([
                b.index.to_string(),
                b.start_ts.to_string(),
                b.end_ts.to_string(),
                b.buy_volume.to_string(),
                b.sell_volume.to_string(),
                b.total.to_string(),
                b.close_price.to_string(),
            ])?;
        }
        c.flush()?;
        Ok(())
    })?;
    if ctx.cfg.output.plot {
        let start = run.series.window - 1;
        let prices: Vec<f64> = run.buckets[start..].iter().map(|b| b.close_price).collect();
        let chart = line_chart(
            "VPIN and price by volume bucket",
            &[
                Line { label: "VPIN", values: &run.series.values, right_axis: false },
                Line { label: "price", values: &prices, right_axis: true },
            ],
        );
        if let Some(svg) = chart {
            write_text(&ctx.out_path("vpin.svg")?, &svg)?;
        }
    }
    let v = &run.series.values;
    let max = v.iter().copied().fold(f64::NAN, f64::max);
    let mean = v.iter().sum::<f64>() / v.len().max(1) as f64;
    println!(
        "bucket volume {} | sigma_dp {:.6} | {} buckets | {} VPIN values | mean {:.4} | max {:.4}",
        run.bucket_volume,
        run.sigma_dp,
        run.buckets.len(),
        v.len(),
        mean,
        max
    );
    Ok(())
}

pub struct GarchArgs {
    pub p: Option<usize>,
    pub q: Option<usize>,
    pub leverage: bool,
    pub mean: Option<MeanModel>,
    pub horizon: usize,
}

#[derive(Serialize)]
struct GarchSummary {
    spec: GarchSpec,
    n_obs: usize,
    log_likelihood: f64,
    persistence: f64,
    iterations: usize,
    unconditional_variance: Option<f64>,
}

pub fn garch(ctx: &Ctx, input: &Path, a: GarchArgs) -> CliResult<()> {
    let ticks = ctx.load(input)?;
    let r = ctx.bars(&ticks)?.log_returns().values;
    let mut spec = ctx.cfg.garch;
    spec.p = a.p.unwrap_or(spec.p);
    spec.q = a.q.unwrap_or(spec.q);
    spec.leverage |= a.leverage;
    spec.mean = a.mean.unwrap_or(spec.mean);
    let fit = fit_garch(&r, spec)?;
    write_with(&ctx.out_path("garch_params.csv")?, |w| fit.write_report_csv(w))?;
    let summary = GarchSummary {
        spec,
        n_obs: fit.n_obs(),
        log_likelihood: fit.log_likelihood,
        persistence: fit.persistence,
        iterations: fit.iterations,
        unconditional_variance: fit.params.unconditional_variance(),
    };
    write_json(&ctx.out_path("garch_summary.json")?, &summary)?;
    if a.horizon > 0 {
        let f = forecast(&fit, a.horizon)?;
        write_with(&ctx.out_path("garch_forecast.csv")?, |w| {
            let mut c = csv::Writer::from_writer(w);
            c.write_record(["step", "mean", "variance"])?;
            for (i, (m, v)) in f.mean_path.iter().zip(&f.variance_path).enumerate() {
                c.write_record([(i + 1).to_string(), m.to_string(), v.to_string()])?;
            }
            c.flush()?;
            Ok(())
        })?;
    }
    for (name, est, se) in fit.parameter_table() {
        println!("{name:<10} {est:>14.6e} (se {se:.3e})");
    }
    println!("log-likelihood {:.4} | persistence {:.4}", fit.log_likelihood, fit.persistence);
    Ok(())
}

/// Rows `label,x1,...,xd` with labels ±1.
fn read_features(path: &Path) -> CliResult<(Vec<Vec<f64>>, Vec<f64>)> {
    let bad = |m: String| CliError::Input(path.to_path_buf(), m);
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| bad(format!("row {}: {e}", i + 2)))?;
        let (label, feats) = vals.split_first().ok_or_else(|| bad(format!("row {} is empty", i + 2)))?;
        y.push(*label);
        x.push(feats.to_vec());
    }
    Ok((x, y))
}

/// Five lagged bar returns; label is the sign of the next return.
fn lagged_return_features(bars: &BarSeries) -> (Vec<Vec<f64>>, Vec<f64>) {
    let r = bars.log_returns().values;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for t in 5..r.len() {
        x.push(r[t - 5..t].to_vec());
        y.push(if r[t] > 0.0 { 1.0 } else { -1.0 });
    }
    (x, y)
}

pub fn svm_train(ctx: &Ctx, input: Option<&Path>, features: Option<&Path>) -> CliResult<()> {
    let (x, y) = match (features, input) {
        (Some(f), _) => read_features(f)?,
        (None, Some(i)) => lagged_return_features(&ctx.bars(&ctx.load(i)?)?),
        (None, None) => return Err(Error::InvalidParameter("svm-train needs --input or --features".into()).into()),
    };
    let model = train_standardized(&x, &y, &ctx.cfg.svm, ctx.exec)?;
    let path = ctx.out_path("svm_model.txt")?;
    write_with(&path, |w| model.save(w))?;
    let keep = ctx.cfg.svm.max_train.min(x.len());
    let from = x.len() - keep;
    let hits = x[from..]
        .iter()
        .zip(&y[from..])
        .filter(|(row, label)| model.predict(row).map(|p| f64::from(p) == **label).unwrap_or(false))
        .count();
    println!(
        "{} support vectors | training accuracy {:.4} on {} rows",
        model.support_vectors.len(),
        hits as f64 / keep.max(1) as f64,
        keep
    );
    Ok(())
}

pub fn denoise_cmd(ctx: &Ctx, input: &Path) -> CliResult<()> {
    let ticks = ctx.load(input)?;
    let prices = ticks.prices();
    let clean = denoise(&prices, &ctx.cfg.denoise)?;
    write_with(&ctx.out_path("denoised.csv")?, |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record(["ts_ns", "price", "denoised"])?;
        for ((t, p), d) in ticks.ticks().iter().zip(&prices).zip(&clean) {
            c.write_record([t.ts_ns.to_string(), p.to_string(), d.to_string()])?;
        }
        c.flush()?;
        Ok(())
    })?;
    if ctx.cfg.output.plot {
        let chart = line_chart(
            "Price before and after wavelet denoising",
            &[
                Line { label: "raw", values: &prices, right_axis: false },
                Line { label: "denoised", values: &clean, right_axis: false },
            ],
        );
        if let Some(svg) = chart {
            write_text(&ctx.out_path("denoised.svg")?, &svg)?;
        }
    }
    let rough = |x: &[f64]| x.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>();
    println!(
        "{} prices | squared-increment energy {:.6} -> {:.6}",
        prices.len(),
        rough(&prices),
        rough(&clean)
    );
    Ok(())
}

fn file_tag(v: Variant) -> &'static str {
    match v {
        Variant::G => "g",
        Variant::GS => "gs",
        Variant::GV => "gv",
        Variant::GVS => "gvs",
    }
}

fn write_run(ctx: &Ctx, v: Variant, run: &BacktestRun) -> CliResult<()> {
    let tag = file_tag(v);
    write_with(&ctx.out_path(&format!("trades_{tag}.csv"))?, |w| write_trades(w, &run.trades))?;
    write_with(&ctx.out_path(&format!("equity_{tag}.csv"))?, |w| write_equity(w, &run.equity))?;
    write_with(&ctx.out_path(&format!("signals_{tag}.csv"))?, |w| write_signals(w, &run.signals))?;
    Ok(())
}

pub fn backtest(ctx: &Ctx, input: &Path, variants: bool, variant: Variant) -> CliResult<Vec<BacktestReport>> {
    let ticks = ctx.load(input)?;
    let bars = ctx.bars(&ticks)?;
    let pipeline = ctx.cfg.pipeline();
    let runs: Vec<(Variant, BacktestRun)> = if variants {
        let runs = run_variants(&ticks, &bars, &pipeline, &ctx.cfg.backtest, ctx.exec)?;
        Variant::ALL.into_iter().zip(runs).collect()
    } else {
        vec![(variant, run_strategy(&ticks, &bars, &pipeline, variant, &ctx.cfg.backtest, ctx.exec)?)]
    };
    for (v, run) in &runs {
        write_run(ctx, *v, run)?;
    }
    let reports: Vec<BacktestReport> = runs.iter().map(|(_, r)| r.report.clone()).collect();
    write_with(&ctx.out_path("report.csv")?, |w| write_reports_csv(w, &reports))?;
    write_json(&ctx.out_path("report.json")?, &reports)?;
    if ctx.cfg.output.plot {
        let bench: Vec<f64> = runs[0].1.benchmark.iter().map(|p| p.1).collect();
        let curves: Vec<Vec<f64>> = runs.iter().map(|(_, r)| r.equity.iter().map(|p| p.1).collect()).collect();
        let mut lines: Vec<Line<'_>> = runs
            .iter()
            .zip(&curves)
            .map(|((v, _), c)| Line { label: v.label(), values: c, right_axis: false })
            .collect();
        lines.push(Line { label: "buy and hold", values: &bench, right_axis: false });
        if let Some(svg) = line_chart("Equity by strategy variant", &lines) {
            write_text(&ctx.out_path("equity.svg")?, &svg)?;
        }
    }
    print!("{}", render_table(&reports));
    Ok(reports)
}

fn pct(v: f64) -> String {
    format!("{:.2}%", 100.0 * v)
}

fn opt(v: Option<f64>, f: impl Fn(f64) -> String) -> String {
    v.map_or_else(|| "n/a".into(), f)
}

/// Indicators as rows, variants as columns.
pub fn render_table(reports: &[BacktestReport]) -> String {
    let rows: Vec<(&str, Box<dyn Fn(&BacktestReport) -> String>)> = vec![
        ("total returns", Box::new(|r| pct(r.metrics.total_return))),
        ("annualized returns", Box::new(|r| pct(r.metrics.annualized_return))),
        ("benchmark returns", Box::new(|r| pct(r.metrics.benchmark_return))),
        ("relative returns", Box::new(|r| pct(r.metrics.relative_return))),
        ("Alpha", Box::new(|r| opt(r.metrics.alpha, pct))),
        ("Beta", Box::new(|r| opt(r.metrics.beta, |b| format!("{b:.3}")))),
        ("max drawdown", Box::new(|r| pct(r.metrics.max_drawdown))),
        ("Sharpe", Box::new(|r| format!("{:.3}", r.metrics.sharpe))),
        ("trades", Box::new(|r| r.trade_count.to_string())),
        ("fees paid", Box::new(|r| format!("{:.2}", r.fees_paid))),
    ];
    let mut out = format!("| {:<20} |", "indicator");
    for r in reports {
        out.push_str(&format!(" {:>10} |", r.variant));
    }
    out.push('\n');
    out.push_str(&format!("|{}|", "-".repeat(22)));
    for _ in reports {
        out.push_str(&format!("{}|", "-".repeat(12)));
    }
    out.push('\n');
    for (name, f) in &rows {
        out.push_str(&format!("| {name:<20} |"));
        for r in reports {
            out.push_str(&format!(" {:>10} |", f(r)));
        }
        out.push('\n');
    }
    out
}

pub fn report(input: &Path, out: Option<&Path>) -> CliResult<()> {
    let text = std::fs::read_to_string(input).map_err(|e| CliError::Input(input.to_path_buf(), e.to_string()))?;
    let reports: Vec<BacktestReport> =
        serde_json::from_str(&text).map_err(|e| CliError::Input(input.to_path_buf(), e.to_string()))?;
    let table = render_table(&reports);
    match out {
        Some(p) => write_text(p, &table)?,
        None => print!("{table}"),
    }
    Ok(())
}
