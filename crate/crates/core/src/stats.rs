//! Econometric diagnostics: OLS, augmented Dickey-Fuller, Jarque-Bera,
//! Ljung-Box on squared demeaned returns (ARCH effect) and Granger causality.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::linalg::{least_squares, Matrix};
use crate::math::special::{chi2_sf, f_sf, normal_cdf};
use crate::math::{mean, variance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Centered R², `1 - SSR/SST`; can be negative without an intercept.
    pub r_squared: f64,
    pub log_likelihood: f64,
    pub ssr: f64,
    pub n_obs: usize,
}

impl OlsFit {
    pub fn t_stat(&self, i: usize) -> f64 {
        self.coefficients[i] / self.standard_errors[i]
    }

    /// Schwarz information criterion, `ln(SSR/n) + k ln(n)/n`.
    pub fn sic(&self) -> f64 {
        let n = self.n_obs as f64;
        (self.ssr / n).ln() + self.coefficients.len() as f64 * n.ln() / n
    }
}

/// Ordinary least squares of `y` on the columns of `x`.
pub fn ols(x: &Matrix, y: &[f64]) -> Result<OlsFit> {
    let ls = least_squares(x, y)?;
    let n = x.rows();
    let k = x.cols();
    let fitted = x.mul_vec(&ls.coefficients);
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let ssr: f64 = residuals.iter().map(|e| e * e).sum();
    let s2 = ssr / (n - k) as f64;
    let ybar = mean(y);
    let sst: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    let nf = n as f64;
    Ok(OlsFit {
        standard_errors: ls.xtx_inv_diag.iter().map(|d| (d * s2).sqrt()).collect(),
        coefficients: ls.coefficients,
        residuals,
        r_squared: if sst > 0.0 { 1.0 - ssr / sst } else { f64::NAN },
        log_likelihood: -0.5 * nf * (1.0 + (2.0 * std::f64::consts::PI).ln() + (ssr / nf).ln()),
        ssr,
        n_obs: n,
    })
}

/// 1%, 5% and 10% critical values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalValues {
    pub pct1: f64,
    pub pct5: f64,
    pub pct10: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Degrees of freedom of the reference distribution, when it has any.
    pub df: Vec<f64>,
    pub critical_values: Option<CriticalValues>,
    pub reject_at_5pct: bool,
    pub n_obs: usize,
    /// Lag order used (ADF, Granger, Ljung-Box).
    pub lags: Option<usize>,
}

impl TestResult {
    fn from_p(statistic: f64, p_value: f64, df: Vec<f64>, n_obs: usize, lags: Option<usize>) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        TestResult {
            statistic,
            p_value,
            df,
            critical_values: None,
            reject_at_5pct: p_value < 0.05,
            n_obs,
            lags,
        }
    }
}

/// Jarque-Bera normality test, `n/6 (S² + (K-3)²/4)` against χ²(2).
pub fn jarque_bera(r: &[f64]) -> Result<TestResult> {
    if r.len() < 8 {
        return Err(Error::InsufficientData {
            what: "Jarque-Bera",
            needed: 8,
            got: r.len(),
        });
    }
    let n = r.len() as f64;
    let m = mean(r);
    let (m2, m3, m4) = r.iter().fold((0.0, 0.0, 0.0), |(a, b, c), x| {
        let d = x - m;
        (a + d * d, b + d * d * d, c + d * d * d * d)
    });
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    if m2 <= 0.0 {
        return Err(Error::degenerate("Jarque-Bera on a zero-variance series"));
    }
    let s = m3 / m2.powf(1.5);
    let k = m4 / (m2 * m2);
    let jb = n / 6.0 * (s * s + (k - 3.0).powi(2) / 4.0);
    Ok(TestResult::from_p(jb, chi2_sf(jb, 2.0), vec![2.0], r.len(), None))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LagSelection {
    /// Use exactly `max_lag` augmentation lags.
    Fixed,
    /// Minimize the Schwarz criterion over `0..=max_lag` on a common sample.
    Sic,
}

/// MacKinnon (2010) finite-sample critical values, constant-only case.
pub fn adf_critical_values(n_obs: usize) -> CriticalValues {
    let t = n_obs as f64;
    let surface = |b: [f64; 4]| b[0] + b[1] / t + b[2] / (t * t) + b[3] / (t * t * t);
    CriticalValues {
        pct1: surface([-3.43035, -6.5393, -16.786, -79.433]),
        pct5: surface([-2.86154, -2.8903, -4.234, -40.040]),
        pct10: surface([-2.56677, -1.5384, -2.809, 0.0]),
    }
}

/// Approximate asymptotic p-value of the constant-case ADF statistic
/// (MacKinnon 1994 normal-CDF response surface).
pub fn adf_p_value(tau: f64) -> f64 {
    const TAU_MAX: f64 = 2.74;
    const TAU_MIN: f64 = -18.86;
    const TAU_STAR: f64 = -1.61;
    const SMALL_P: [f64; 3] = [2.1659, 1.4412, 0.038269];
    const LARGE_P: [f64; 4] = [1.7339, 0.093202, -0.012745, -0.000_103_68];
    if tau > TAU_MAX {
        return 1.0;
    }
    if tau < TAU_MIN {
        return 0.0;
    }
    let poly = |c: &[f64]| c.iter().rev().fold(0.0, |acc, b| acc * tau + b);
    let z = if tau <= TAU_STAR { poly(&SMALL_P) } else { poly(&LARGE_P) };
    normal_cdf(z)
}

fn adf_regression(dy: &[f64], y: &[f64], lag: usize, start: usize) -> Result<OlsFit> {
    // dy[i] = y[i+1] - y[i]; row for dy[i] uses y[i] and dy[i-1..=i-lag]
    let rows: Vec<Vec<f64>> = (start..dy.len())
        .map(|i| {
            let mut r = Vec::with_capacity(lag + 2);
            r.push(1.0);
            r.push(y[i]);
            r.extend((1..=lag).map(|j| dy[i - j]));
            r
        })
        .collect();
    let x = Matrix::from_rows(&rows)?;
    ols(&x, &dy[start..])
}

/// Augmented Dickey-Fuller unit-root test with a constant.
///
/// The statistic is the t-ratio on `y_{t-1}` in
/// `Δy_t = c + ρ y_{t-1} + Σ φ_i Δy_{t-i}`; rejection at 5% compares it
/// with the finite-sample critical value.
pub fn adf_test(series: &[f64], max_lag: usize, selection: LagSelection) -> Result<TestResult> {
    if series.len() <= max_lag + 10 {
        return Err(Error::InsufficientData {
            what: "ADF test",
            needed: max_lag + 11,
            got: series.len(),
        });
    }
    if series.iter().all(|v| *v == series[0]) {
        return Err(Error::degenerate("ADF test on a constant series"));
    }
    let dy: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
    let lag = match selection {
        LagSelection::Fixed => max_lag,
        LagSelection::Sic => {
            let mut best = (f64::INFINITY, 0);
            for p in 0..=max_lag {
                let fit = adf_regression(&dy, series, p, max_lag)?;
                let sic = fit.sic();
                if sic < best.0 {
                    best = (sic, p);
                }
            }
            best.1
        }
    };
    let fit = adf_regression(&dy, series, lag, lag)?;
    let tau = fit.t_stat(1);
    let cv = adf_critical_values(fit.n_obs);
    Ok(TestResult {
        statistic: tau,
        p_value: adf_p_value(tau),
        df: vec![],
        critical_values: Some(cv),
        reject_at_5pct: tau < cv.pct5,
        n_obs: fit.n_obs,
        lags: Some(lag),
    })
}

/// Ljung-Box portmanteau statistic against χ²(lags).
pub fn ljung_box(x: &[f64], lags: usize) -> Result<TestResult> {
    if lags == 0 {
        return Err(Error::param("Ljung-Box needs at least one lag"));
    }
    if x.len() <= lags + 10 {
        return Err(Error::InsufficientData {
            what: "Ljung-Box",
            needed: lags + 11,
            got: x.len(),
        });
    }
    let n = x.len() as f64;
    let m = mean(x);
    let denom: f64 = x.iter().map(|v| (v - m).powi(2)).sum();
    if denom <= 0.0 {
        return Err(Error::degenerate("Ljung-Box on a zero-variance series"));
    }
    let q: f64 = (1..=lags)
        .map(|k| {
            let rho: f64 = (k..x.len()).map(|t| (x[t] - m) * (x[t - k] - m)).sum::<f64>() / denom;
            rho * rho / (n - k as f64)
        })
        .sum::<f64>()
        * n
        * (n + 2.0);
    Ok(TestResult::from_p(q, chi2_sf(q, lags as f64), vec![lags as f64], x.len(), Some(lags)))
}

/// ARCH-effect test: Ljung-Box on the squared demeaned series.
pub fn arch_effect_test(r: &[f64], lags: usize) -> Result<TestResult> {
    if r.len() <= lags + 10 {
        return Err(Error::InsufficientData {
            what: "ARCH-effect test",
            needed: lags + 11,
            got: r.len(),
        });
    }
    if variance(r, 0) <= 0.0 {
        return Err(Error::degenerate("ARCH-effect test on a constant series"));
    }
    let m = mean(r);
    let sq: Vec<f64> = r.iter().map(|v| (v - m).powi(2)).collect();
    ljung_box(&sq, lags)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrangerResult {
    /// Null: x does not Granger-cause y.
    pub x_causes_y: TestResult,
    /// Null: y does not Granger-cause x.
    pub y_causes_x: TestResult,
}

fn granger_direction(cause: &[f64], effect: &[f64], lag: usize) -> Result<TestResult> {
    let n = effect.len();
    let rows = n - lag;
    let target = &effect[lag..];
    let mut unrestricted = Matrix::zeros(rows, 1 + 2 * lag);
    let mut restricted = Matrix::zeros(rows, 1 + lag);
    for (r, t) in (lag..n).enumerate() {
        unrestricted[(r, 0)] = 1.0;
        restricted[(r, 0)] = 1.0;
        for j in 1..=lag {
            unrestricted[(r, j)] = effect[t - j];
            restricted[(r, j)] = effect[t - j];
            unrestricted[(r, lag + j)] = cause[t - j];
        }
    }
    let fu = ols(&unrestricted, target)?;
    let fr = ols(&restricted, target)?;
    let df2 = (rows - 2 * lag - 1) as f64;
    let f = ((fr.ssr - fu.ssr) / lag as f64) / (fu.ssr / df2);
    let f = f.max(0.0);
    Ok(TestResult::from_p(f, f_sf(f, lag as f64, df2), vec![lag as f64, df2], rows, Some(lag)))
}

/// Pairwise Granger causality F-tests with the same lag on both variables.
pub fn granger_test(x: &[f64], y: &[f64], lag: usize) -> Result<GrangerResult> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if lag == 0 {
        return Err(Error::param("Granger test needs lag >= 1"));
    }
    if x.len() <= 2 * lag + 10 {
        return Err(Error::InsufficientData {
            what: "Granger test",
            needed: 2 * lag + 11,
            got: x.len(),
        });
    }
    Ok(GrangerResult {
        x_causes_y: granger_direction(x, y, lag)?,
        y_causes_x: granger_direction(y, x, lag)?,
    })
}
