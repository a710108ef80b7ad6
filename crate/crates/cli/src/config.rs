//! Run configuration loaded from TOML.

use std::path::{Path, PathBuf};

use hft_core::backtest::BacktestConfig;
use hft_core::denoise::DenoiseConfig;
use hft_core::marketdata::{SessionCalendar, SynthSpec};
use hft_core::strategy::{PipelineConfig, StrategyConfig};
use hft_core::svm::SvmConfig;
use hft_core::volatility::{GarchSpec, MeanModel};
use hft_core::vpin::VpinConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    /// Session windows as `HH:MM-HH:MM`, local exchange time.
    pub sessions: Vec<String>,
    pub bar_seconds: i64,
    /// Synthetic generator settings; its seed comes from the top-level `seed`.
    pub synth: SynthSpec,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            sessions: vec!["09:30-11:30".into(), "13:00-15:00".into()],
            bar_seconds: 60,
            synth: SynthSpec::default(),
        }
    }
}

impl DataConfig {
    pub fn calendar(&self) -> hft_core::Result<SessionCalendar> {
        SessionCalendar::parse(&self.sessions)
    }

    pub fn bar_ns(&self) -> i64 {
        self.bar_seconds * hft_core::marketdata::NANOS_PER_SEC
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Emit SVG charts alongside CSV outputs.
    pub plot: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            plot: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub data: DataConfig,
    pub vpin: VpinConfig,
    pub garch: GarchSpec,
    pub svm: SvmConfig,
    pub denoise: DenoiseConfig,
    pub strategy: StrategyConfig,
    pub backtest: BacktestConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 7,
            data: DataConfig::default(),
            vpin: VpinConfig::default(),
            garch: GarchSpec {
                mean: MeanModel::Ar1,
                ..GarchSpec::default()
            },
            svm: SvmConfig::default(),
            denoise: DenoiseConfig::default(),
            strategy: StrategyConfig::default(),
            backtest: BacktestConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug)]
pub enum ConfigError {
    Read(PathBuf, std::io::Error),
    Parse(PathBuf, String),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Read(p, e) => write!(f, "cannot read config {}: {e}", p.display()),
            ConfigError::Parse(p, e) => write!(f, "invalid config {}: {e}", p.display()),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read(path.to_path_buf(), e))?;
        Self::parse(&text).map_err(|e| ConfigError::Parse(path.to_path_buf(), e))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// Apply the top-level seed to every seeded component.
    pub fn resolve(mut self) -> Self {
        self.data.synth.seed = self.seed;
        self
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            strategy: self.strategy,
            garch: self.garch,
            vpin: self.vpin.clone(),
            svm: self.svm,
            seed: self.seed,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_else(|e| format!("<unserializable config: {e}>"))
    }
}

/// Every configuration key with its default, one `section.key = value` per line.
pub fn key_listing() -> String {
    let v = serde_json::to_value(RunConfig::default()).expect("config serializes");
    let mut lines = Vec::new();
    flatten("", &v, &mut lines);
    lines.join("\n")
}

fn flatten(prefix: &str, v: &serde_json::Value, out: &mut Vec<String>) {
    match v {
        serde_json::Value::Object(map) if !map.is_empty() => {
            for (k, child) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, child, out);
            }
        }
        serde_json::Value::Null => out.push(format!("  {prefix} = (unset)")),
        other => out.push(format!("  {prefix} = {other}")),
    }
}
