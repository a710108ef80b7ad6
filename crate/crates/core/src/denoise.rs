//! Haar wavelet shrinkage.
//!
//! Orthonormal Haar analysis: each level maps pairs `(a, b)` to an
//! approximation `(a + b)/√2` and a detail `(a - b)/√2`, recursing on the
//! approximations. A level whose input has odd length is extended by
//! repeating its last sample; the input lengths are kept so the inverse can
//! drop the extension.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::math::median;

const MAD_TO_SIGMA: f64 = 0.6745;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletDecomposition {
    pub level: usize,
    pub approximation: Vec<f64>,
    /// Detail coefficients, level 1 (finest) first.
    pub details: Vec<Vec<f64>>,
    pub original_length: usize,
    /// Input length at each level before extension; odd entries were padded.
    pub level_lengths: Vec<usize>,
}

impl WaveletDecomposition {
    pub fn is_padded(&self) -> bool {
        self.level_lengths.iter().any(|n| n % 2 == 1)
    }

    fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::param(format!("inconsistent decomposition: {m}")));
        if self.level == 0 || self.details.len() != self.level || self.level_lengths.len() != self.level {
            return bad("level count".into());
        }
        if self.level_lengths[0] != self.original_length {
            return bad("original length".into());
        }
        for k in 0..self.level {
            let half = self.level_lengths[k].div_ceil(2);
            if self.details[k].len() != half {
                return bad(format!("detail length at level {}", k + 1));
            }
            let next = if k + 1 < self.level {
                self.level_lengths[k + 1]
            } else {
                self.approximation.len()
            };
            if next != half {
                return bad(format!("approximation length at level {}", k + 1));
            }
        }
        Ok(())
    }
}

/// Deepest level `haar_dwt` accepts for a signal of length `n`.
pub fn max_level(n: usize) -> usize {
    let mut len = n;
    let mut level = 0;
    while len >= 2 {
        len = len.div_ceil(2);
        level += 1;
    }
    level
}

pub fn haar_dwt(signal: &[f64], level: usize) -> Result<WaveletDecomposition> {
    if level == 0 {
        return Err(Error::param("wavelet level must be >= 1"));
    }
    if level > max_level(signal.len()) {
        return Err(Error::InsufficientData {
            what: "wavelet level (signal too short)",
            needed: 1usize << level.min(62),
            got: signal.len(),
        });
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut approx = signal.to_vec();
    let mut details = Vec::with_capacity(level);
    let mut level_lengths = Vec::with_capacity(level);
    for _ in 0..level {
        level_lengths.push(approx.len());
        if approx.len() % 2 == 1 {
            approx.push(*approx.last().expect("non-empty"));
        }
        let (a, d): (Vec<f64>, Vec<f64>) = approx.chunks_exact(2).map(|p| ((p[0] + p[1]) * s, (p[0] - p[1]) * s)).unzip();
        details.push(d);
        approx = a;
    }
    Ok(WaveletDecomposition {
        level,
        approximation: approx,
        details,
        original_length: signal.len(),
        level_lengths,
    })
}

pub fn haar_idwt(dec: &WaveletDecomposition) -> Result<Vec<f64>> {
    dec.check()?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut approx = dec.approximation.clone();
    for k in (0..dec.level).rev() {
        let d = &dec.details[k];
        let mut out = Vec::with_capacity(2 * d.len());
        for (a, d) in approx.iter().zip(d) {
            out.push((a + d) * s);
            out.push((a - d) * s);
        }
        out.truncate(dec.level_lengths[k]);
        approx = out;
    }
    Ok(approx)
}

/// Shrink every detail coefficient toward zero by `thr`.
pub fn soft_threshold(dec: &WaveletDecomposition, thr: f64) -> Result<WaveletDecomposition> {
    if !(thr >= 0.0) {
        return Err(Error::param(format!("threshold must be non-negative, got {thr}")));
    }
    let mut out = dec.clone();
    for d in out.details.iter_mut().flatten() {
        *d = d.signum() * (d.abs() - thr).max(0.0);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMode {
    /// Noise scale taken as 1.
    #[default]
    Unscaled,
    /// Noise scale from the median absolute level-1 detail.
    Estimated,
}

/// `σ·√(2 ln N)` with `N` the original signal length.
pub fn universal_threshold(dec: &WaveletDecomposition, mode: ThresholdMode) -> Result<f64> {
    if dec.details.is_empty() || dec.details[0].is_empty() {
        return Err(Error::param("decomposition has no detail coefficients"));
    }
    let base = universal_factor(dec.original_length);
    Ok(match mode {
        ThresholdMode::Unscaled => base,
        ThresholdMode::Estimated => {
            let abs: Vec<f64> = dec.details[0].iter().map(|d| d.abs()).collect();
            median(&abs) / MAD_TO_SIGMA * base
        }
    })
}

/// `√(2 ln n)`.
pub fn universal_factor(n: usize) -> f64 {
    (2.0 * (n as f64).ln()).max(0.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DenoiseConfig {
    pub level: usize,
    pub mode: ThresholdMode,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        DenoiseConfig {
            level: 6,
            mode: ThresholdMode::Unscaled,
        }
    }
}

/// Decompose, soft-threshold at the universal threshold and reconstruct.
/// The level is capped at `⌊log₂ N⌋`.
pub fn denoise(signal: &[f64], cfg: &DenoiseConfig) -> Result<Vec<f64>> {
    if signal.len() < 2 {
        return Err(Error::InsufficientData {
            what: "denoising",
            needed: 2,
            got: signal.len(),
        });
    }
    let cap = signal.len().ilog2() as usize;
    let level = if cfg.level > cap {
        log::warn!("wavelet level {} capped at {cap} for {} samples", cfg.level, signal.len());
        cap
    } else {
        cfg.level.max(1)
    };
    let dec = haar_dwt(signal, level)?;
    let thr = universal_threshold(&dec, cfg.mode)?;
    haar_idwt(&soft_threshold(&dec, thr)?)
}

pub fn denoise_many(signals: &[Vec<f64>], cfg: &DenoiseConfig, exec: Exec) -> Result<Vec<Vec<f64>>> {
    exec.map(signals, |s| denoise(s, cfg)).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const R2: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn hand_examples() {
        let d = haar_dwt(&[1.0, 1.0, 1.0, 1.0], 1).unwrap();
        assert!(d.approximation.iter().all(|a| (a - R2).abs() < 1e-15));
        assert_eq!(d.details[0], vec![0.0, 0.0]);
        let d = haar_dwt(&[1.0, -1.0], 1).unwrap();
        assert_eq!(d.approximation, vec![0.0]);
        assert!((d.details[0][0] - R2).abs() < 1e-15);
        let d = haar_dwt(&[3.5; 64], 6).unwrap();
        assert!(d.details.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn shrinkage_examples() {
        let mut d = haar_dwt(&[1.0, 3.0, 5.0, 4.0], 1).unwrap();
        d.details[0] = vec![3.0, -0.5];
        let s = soft_threshold(&d, 1.0).unwrap();
        assert_eq!(s.details[0], vec![2.0, 0.0]);
        assert_eq!(soft_threshold(&d, 0.0).unwrap(), d);
        assert!(soft_threshold(&d, -1.0).is_err());
        let z = haar_dwt(&[1.0, 3.0], 1).unwrap();
        let z = soft_threshold(&z, 100.0).unwrap();
        let r = haar_idwt(&z).unwrap();
        assert!((r[0] - 2.0).abs() < 1e-12 && (r[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn thresholds() {
        assert!((universal_factor(1024) - 3.723).abs() < 1e-3);
        let n = (1f64).exp().powi(2);
        assert!(((2.0 * n.ln()).sqrt() - 2.0).abs() < 1e-15);
        let mut d = haar_dwt(&[0.0; 8], 1).unwrap();
        d.details[0] = vec![0.6745, -0.6745, 0.6745, -0.6745];
        let thr = universal_threshold(&d, ThresholdMode::Estimated).unwrap();
        assert!((thr - universal_factor(8)).abs() < 1e-12);
    }

    #[test]
    fn odd_lengths_round_trip() {
        for n in [2usize, 3, 5, 7, 33, 100] {
            let x: Vec<f64> = (0..n).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
            let d = haar_dwt(&x, max_level(n)).unwrap();
            let r = haar_idwt(&d).unwrap();
            assert_eq!(r.len(), n);
            for (a, b) in x.iter().zip(&r) {
                assert!((a - b).abs() < 1e-10);
            }
        }
        assert!(haar_dwt(&[1.0, 2.0], 2).is_err());
    }

    #[test]
    fn tampered_lengths_rejected() {
        let mut d = haar_dwt(&[1.0, 2.0, 3.0, 4.0], 2).unwrap();
        d.details[0].pop();
        assert!(haar_idwt(&d).is_err());
    }

    #[test]
    fn level_is_capped() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y = denoise(&x, &DenoiseConfig { level: 6, ..DenoiseConfig::default() }).unwrap();
        assert_eq!(y.len(), 10);
    }
}
