//! Monte Carlo and closed-form oracles for the statistical routines.

use hft_core::denoise::{denoise, DenoiseConfig, ThresholdMode};
use hft_core::marketdata::{descriptive_stats, synth_ticks, SessionCalendar, SynthSpec};
use hft_core::stats::{adf_test, arch_effect_test, jarque_bera, LagSelection};
use hft_core::volatility::{fit_garch, fit_tgarch, simulate, GarchParams, GarchSpec, MeanModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn normals(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

#[test]
fn synthetic_returns_match_unconditional_variance() {
    let spec = SynthSpec {
        count: 100_000,
        ..SynthSpec::default()
    };
    let ticks = synth_ticks(&spec, &SessionCalendar::always_open()).unwrap();
    let prices = ticks.prices();
    let r: Vec<f64> = prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    let target = spec.omega / (1.0 - spec.alpha - spec.beta);
    let m = r.iter().sum::<f64>() / r.len() as f64;
    let v = r.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (r.len() - 1) as f64;
    assert!((v / target - 1.0).abs() < 0.10, "variance {v} vs {target}");
}

#[test]
fn normal_sample_is_not_rejected_by_jarque_bera() {
    let mut rejections = 0;
    for seed in 0..200 {
        if jarque_bera(&normals(2000, seed)).unwrap().p_value < 0.05 {
            rejections += 1;
        }
    }
    // nominal 5% size; binomial(200, 0.05) stays below 20 with overwhelming probability
    assert!(rejections < 20, "{rejections} rejections");
    let d = descriptive_stats(&normals(200_000, 1)).unwrap();
    assert!((d.kurtosis.unwrap() - 3.0).abs() < 0.1);
}

#[test]
fn garch_simulation_shows_arch_effects() {
    let r = simulate(&GarchParams::garch11(1e-6, 0.15, 0.80), 5000, 4).unwrap();
    assert!(arch_effect_test(&r, 5).unwrap().p_value < 0.01);
}

#[test]
fn adf_rejection_survives_doubling_the_sample() {
    let mut kept = 0;
    let mut strong = 0;
    for seed in 0..100 {
        let e = normals(1000, 500 + seed);
        let mut x = vec![0.0; 1000];
        for t in 1..1000 {
            x[t] = 0.5 * x[t - 1] + e[t];
        }
        if adf_test(&x[..500], 4, LagSelection::Fixed).unwrap().p_value < 0.01 {
            strong += 1;
            if adf_test(&x, 4, LagSelection::Fixed).unwrap().p_value < 0.01 {
                kept += 1;
            }
        }
    }
    assert!(strong > 0);
    assert!(kept as f64 >= 0.95 * strong as f64, "{kept}/{strong}");
}

#[test]
fn tgarch_recovers_leverage_sign() {
    let p = GarchParams {
        leverage: 0.10,
        ..GarchParams::garch11(1e-6, 0.03, 0.85)
    };
    let r = simulate(&p, 20_000, 17).unwrap();
    let fit = fit_tgarch(&r, MeanModel::Zero).unwrap();
    assert!(fit.leverage_coef() > 0.03, "{:?}", fit.params);
    assert!((fit.leverage_coef() - 0.10).abs() < 0.05);
    assert!(fit.persistence < 1.0);
}

#[test]
fn iid_noise_fits_low_arch_coefficient() {
    let r: Vec<f64> = normals(10_000, 8).iter().map(|z| 0.001 * z).collect();
    let fit = fit_garch(&r, GarchSpec { mean: MeanModel::Constant, ..GarchSpec::default() }).unwrap();
    assert!(fit.alphas()[0] < 0.03, "{:?}", fit.params);
    let uv = fit.params.unconditional_variance().unwrap();
    assert!((uv / 1e-6 - 1.0).abs() < 0.1, "unconditional variance {uv}");
}

#[test]
fn denoising_reduces_error_on_piecewise_constant_signal() {
    let n = 4096;
    let levels = [0.0, 4.0, -2.0, 6.0, 1.0, -3.0, 2.5, 0.5];
    let clean: Vec<f64> = (0..n).map(|i| levels[i * levels.len() / n]).collect();
    let m = clean.iter().sum::<f64>() / n as f64;
    let power = clean.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64;
    // signal-to-noise power ratio 10
    let sd = (power / 10.0).sqrt();
    let noisy: Vec<f64> = clean.iter().zip(normals(n, 2024)).map(|(c, z)| c + sd * z).collect();
    let cfg = DenoiseConfig {
        level: 6,
        mode: ThresholdMode::Estimated,
    };
    let out = denoise(&noisy, &cfg).unwrap();
    let mse = |a: &[f64]| a.iter().zip(&clean).map(|(x, c)| (x - c).powi(2)).sum::<f64>() / n as f64;
    let before = mse(&noisy);
    let after = mse(&out);
    assert!(after <= 0.7 * before, "mse {before} -> {after}");
}
