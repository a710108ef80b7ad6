//! `hft`: data generation, diagnostics, model fitting and backtests.

mod commands;
mod config;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::OnceLock;

use clap::{Parser, Subcommand, ValueEnum};
use hft_core::backtest::Variant;
use hft_core::volatility::MeanModel;
use hft_core::Exec;

use commands::{CliError, Ctx};
use config::RunConfig;

#[derive(Parser)]
#[command(name = "hft", version, about = "VPIN, GARCH and SVM layered intraday strategy toolkit")]
#[command(after_help = after_help())]
struct Cli {
    /// TOML run configuration; unknown keys are rejected.
    #[arg(long, global = true, env = "HFT_CONFIG")]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `output.dir`.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Run data-parallel kernels on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    #[value(name = "G")]
    G,
    #[value(name = "G+S")]
    Gs,
    #[value(name = "G+V")]
    Gv,
    #[value(name = "G+V+S")]
    Gvs,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::G => Variant::G,
            VariantArg::Gs => Variant::GS,
            VariantArg::Gv => Variant::GV,
            VariantArg::Gvs => Variant::GVS,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic GARCH(1,1) tick CSV.
    Generate {
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        /// Output file (default `<output.dir>/ticks.csv`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stationarity, normality, autocorrelation and ARCH tests on bar returns.
    Diagnose {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 5)]
        lags: usize,
        /// Second tick file for a two-lag Granger test.
        #[arg(long)]
        against: Option<PathBuf>,
    },
    /// Volume buckets and the VPIN series.
    Vpin {
        #[arg(long)]
        input: PathBuf,
        /// Also write an SVG chart.
        #[arg(long)]
        plot: bool,
    },
    /// Fit a GARCH-family model to bar returns.
    Garch {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long)]
        q: Option<usize>,
        /// Add the threshold (leverage) term.
        #[arg(long)]
        leverage: bool,
        /// zero, constant or ar1.
        #[arg(long)]
        mean: Option<MeanModel>,
        /// Forecast horizon in bars (0 disables).
        #[arg(long, default_value_t = 0)]
        horizon: usize,
    },
    /// Train the SVM on a feature CSV or on lagged bar returns.
    SvmTrain {
        /// Tick CSV; features are five lagged bar returns.
        #[arg(long, conflicts_with = "features")]
        input: Option<PathBuf>,
        /// CSV with header; first column is the ±1 label.
        #[arg(long)]
        features: Option<PathBuf>,
    },
    /// Haar wavelet shrinkage of the tick price series.
    Denoise {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        plot: bool,
    },
    /// Run the layered strategy through the backtester.
    Backtest {
        #[arg(long)]
        input: PathBuf,
        /// Run G, G+S, G+V and G+V+S.
        #[arg(long)]
        variants: bool,
        /// Single variant when --variants is absent.
        #[arg(long, value_enum, default_value = "G+V+S")]
        variant: VariantArg,
        /// Also write an SVG equity chart.
        #[arg(long)]
        plot: bool,
    },
    /// Print a report JSON as an indicator-by-variant table.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn after_help() -> &'static str {
    static TEXT: OnceLock<String> = OnceLock::new();
    TEXT.get_or_init(|| {
        format!(
            "Configuration keys (TOML sections, shown with defaults):\n{}\n\n\
             Exit codes: 0 ok, 1 usage or invalid parameter, 2 data error, 3 numerical failure.",
            config::key_listing()
        )
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match RunConfig::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => return Err(CliError::Core(hft_core::Error::InvalidParameter(e.to_string()))),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(d) = cli.out_dir {
        cfg.output.dir = d;
    }
    match &cli.command {
        Command::Vpin { plot: true, .. } | Command::Denoise { plot: true, .. } | Command::Backtest { plot: true, .. } => {
            cfg.output.plot = true
        }
        _ => {}
    }
    let cfg = cfg.resolve();
    log::info!("resolved configuration:\n{}", cfg.to_toml());
    let exec = if cli.sequential { Exec::Sequential } else { Exec::default() };
    let ctx = Ctx { cfg, exec };
    match cli.command {
        Command::Generate { count, omega, alpha, beta, out } => {
            commands::generate(&ctx, commands::GenerateArgs { count, omega, alpha, beta, out }).map(|_| ())
        }
        Command::Diagnose { input, lags, against } => commands::diagnose(&ctx, &input, lags, against.as_deref()),
        Command::Vpin { input, .. } => commands::vpin(&ctx, &input),
        Command::Garch { input, p, q, leverage, mean, horizon } => {
            commands::garch(&ctx, &input, commands::GarchArgs { p, q, leverage, mean, horizon })
        }
        Command::SvmTrain { input, features } => commands::svm_train(&ctx, input.as_deref(), features.as_deref()),
        Command::Denoise { input, .. } => commands::denoise_cmd(&ctx, &input),
        Command::Backtest { input, variants, variant, .. } => {
            commands::backtest(&ctx, &input, variants, variant.into()).map(|_| ())
        }
        Command::Report { input, out } => commands::report(&input, out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
