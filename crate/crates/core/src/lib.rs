//! Market-microstructure signal library: order-flow toxicity (VPIN),
//! GARCH-family volatility, SMO-trained support vector machines, Haar
//! wavelet denoising and an event-driven futures backtester that composes
//! them into a layered intraday strategy.

pub mod backtest;
pub mod denoise;
pub mod error;
pub mod exec;
pub mod marketdata;
pub mod math;
pub mod stats;
pub mod strategy;
pub mod svm;
pub mod volatility;
pub mod vpin;

pub use error::{Error, Result};
pub use exec::Exec;
