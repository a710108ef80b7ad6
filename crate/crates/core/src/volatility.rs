//! GARCH-family conditional variance models, realized volatility and the
//! HAR-VPIN regression.
//!
//! The variance recursion is
//! `h_t = ω + Σ α_i ε²_{t-i} + λ ε²_{t-1}·1[ε_{t-1} < 0] + Σ β_j h_{t-j}`
//! with `λ = 0` unless the threshold (leverage) term is enabled. Fitting is
//! Gaussian quasi-maximum likelihood with BFGS over unconstrained
//! coordinates: `ω = exp(θ₀)` and the persistence components live on an
//! open simplex through an additive logistic map, so every iterate is
//! feasible. With leverage the simplex components are
//! `(α₁/2, (α₁+λ)/2, α₂.., β..)`, which keeps `α₁ ≥ 0`, `α₁ + λ ≥ 0` and
//! `α + λ/2 + β < 1` while allowing a negative `λ`.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marketdata::BarSeries;
use crate::math::linalg::Matrix;
use crate::math::{mean, variance};
use crate::stats::{ols, OlsFit};

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const MAX_ITER: usize = 500;
const LL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeanModel {
    Zero,
    #[default]
    Constant,
    #[serde(rename = "ar1")]
    Ar1,
}

impl std::str::FromStr for MeanModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zero" => Ok(MeanModel::Zero),
            "constant" => Ok(MeanModel::Constant),
            "ar1" | "ar(1)" => Ok(MeanModel::Ar1),
            other => Err(Error::param(format!("unknown mean model '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GarchSpec {
    /// ARCH order (number of α terms).
    pub p: usize,
    /// GARCH order (number of β terms).
    pub q: usize,
    pub leverage: bool,
    pub mean: MeanModel,
}

impl Default for GarchSpec {
    fn default() -> Self {
        GarchSpec {
            p: 1,
            q: 1,
            leverage: false,
            mean: MeanModel::Constant,
        }
    }
}

impl GarchSpec {
    pub fn garch(p: usize, q: usize) -> Self {
        GarchSpec {
            p,
            q,
            ..GarchSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p + self.q == 0 {
            return Err(Error::param("GARCH orders must satisfy p + q >= 1"));
        }
        if self.leverage && self.p == 0 {
            return Err(Error::param("the leverage term requires p >= 1"));
        }
        Ok(())
    }

    fn n_mean(&self) -> usize {
        match self.mean {
            MeanModel::Zero => 0,
            MeanModel::Constant => 1,
            MeanModel::Ar1 => 2,
        }
    }

    fn n_components(&self) -> usize {
        self.p + self.q + usize::from(self.leverage)
    }

    fn n_params(&self) -> usize {
        1 + self.n_components() + self.n_mean()
    }

    fn offset(&self) -> usize {
        usize::from(self.mean == MeanModel::Ar1)
    }
}

/// Model parameters on the scale of the returns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchParams {
    pub omega: f64,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    /// Threshold coefficient on `ε²_{t-1}·1[ε_{t-1} < 0]`; 0 when disabled.
    pub leverage: f64,
    pub mean: MeanModel,
    pub mu: f64,
    pub phi: f64,
}

impl GarchParams {
    pub fn garch11(omega: f64, alpha: f64, beta: f64) -> Self {
        GarchParams {
            omega,
            alphas: vec![alpha],
            betas: vec![beta],
            leverage: 0.0,
            mean: MeanModel::Zero,
            mu: 0.0,
            phi: 0.0,
        }
    }

    pub fn spec(&self) -> GarchSpec {
        GarchSpec {
            p: self.alphas.len(),
            q: self.betas.len(),
            leverage: self.leverage != 0.0,
            mean: self.mean,
        }
    }

    /// `Σα + Σβ + λ/2`; under symmetric innovations the expected threshold
    /// contribution is half of `λ`.
    pub fn persistence(&self) -> f64 {
        self.alphas.iter().sum::<f64>() + self.betas.iter().sum::<f64>() + 0.5 * self.leverage
    }

    pub fn unconditional_variance(&self) -> Option<f64> {
        let s = self.persistence();
        (s < 1.0).then(|| self.omega / (1.0 - s))
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.omega > 0.0
            && self.alphas.iter().all(|a| *a >= 0.0)
            && self.betas.iter().all(|b| *b >= 0.0)
            && self.alphas.first().map_or(self.leverage == 0.0, |a| a + self.leverage >= 0.0)
            && self.persistence() < 1.0;
        if !ok {
            return Err(Error::param(format!("infeasible GARCH parameters: {self:?}")));
        }
        Ok(())
    }

    fn to_vec(&self, spec: &GarchSpec) -> Vec<f64> {
        let mut x = Vec::with_capacity(spec.n_params());
        x.push(self.omega);
        x.extend(&self.alphas);
        if spec.leverage {
            x.push(self.leverage);
        }
        x.extend(&self.betas);
        match spec.mean {
            MeanModel::Zero => {}
            MeanModel::Constant => x.push(self.mu),
            MeanModel::Ar1 => x.extend([self.mu, self.phi]),
        }
        x
    }

    fn from_vec(spec: &GarchSpec, x: &[f64]) -> Self {
        let mut i = 1;
        let alphas = x[i..i + spec.p].to_vec();
        i += spec.p;
        let leverage = if spec.leverage {
            i += 1;
            x[i - 1]
        } else {
            0.0
        };
        let betas = x[i..i + spec.q].to_vec();
        i += spec.q;
        let (mu, phi) = match spec.mean {
            MeanModel::Zero => (0.0, 0.0),
            MeanModel::Constant => (x[i], 0.0),
            MeanModel::Ar1 => (x[i], x[i + 1]),
        };
        GarchParams {
            omega: x[0],
            alphas,
            betas,
            leverage,
            mean: spec.mean,
            mu,
            phi,
        }
    }

    fn names(spec: &GarchSpec) -> Vec<String> {
        let mut n = vec!["omega".to_string()];
        n.extend((1..=spec.p).map(|i| format!("alpha{i}")));
        if spec.leverage {
            n.push("leverage".into());
        }
        n.extend((1..=spec.q).map(|j| format!("beta{j}")));
        match spec.mean {
            MeanModel::Zero => {}
            MeanModel::Constant => n.push("mu".into()),
            MeanModel::Ar1 => n.extend(["mu".into(), "phi".into()]),
        }
        n
    }

    /// Same parameters after multiplying the returns by `c`.
    fn rescaled(&self, c: f64) -> Self {
        GarchParams {
            omega: self.omega * c * c,
            mu: self.mu * c,
            ..self.clone()
        }
    }
}

/// Residuals and conditional variances implied by `params` on `r`.
///
/// `h` starts at `h0`; pre-sample residuals are 0 and pre-sample variances
/// equal `h0`. With an AR(1) mean the first return only serves as a lag.
pub fn filter_variance(params: &GarchParams, r: &[f64], h0: f64) -> (Vec<f64>, Vec<f64>) {
    let spec = full_spec(params);
    let out = Evaluator::new(spec, r, h0).run(&params.to_vec(&spec), false);
    (out.eps, out.h)
}

/// Layout that always carries a leverage slot when there is an α to attach
/// it to, so a zero coefficient adds exactly nothing.
fn full_spec(params: &GarchParams) -> GarchSpec {
    let spec = params.spec();
    GarchSpec {
        leverage: spec.p >= 1,
        ..spec
    }
}

struct EvalOut {
    ll: f64,
    grad: Vec<f64>,
    eps: Vec<f64>,
    h: Vec<f64>,
}

/// Log-likelihood and its gradient in natural parameters.
struct Evaluator<'a> {
    spec: GarchSpec,
    r: &'a [f64],
    h0: f64,
}

impl<'a> Evaluator<'a> {
    fn new(spec: GarchSpec, r: &'a [f64], h0: f64) -> Self {
        Evaluator { spec, r, h0 }
    }

    fn n_obs(&self) -> usize {
        self.r.len() - self.spec.offset()
    }

    fn run(&self, x: &[f64], want_grad: bool) -> EvalOut {
        let s = &self.spec;
        let (p, q) = (s.p, s.q);
        let k = s.n_params();
        let lev = usize::from(s.leverage);
        let ia = 1;
        let il = 1 + p;
        let ib = 1 + p + lev;
        let im = ib + q;
        let omega = x[0];
        let alphas = &x[ia..ia + p];
        let lambda = if s.leverage { x[il] } else { 0.0 };
        let betas = &x[ib..ib + q];
        let (mu, phi) = match s.mean {
            MeanModel::Zero => (0.0, 0.0),
            MeanModel::Constant => (x[im], 0.0),
            MeanModel::Ar1 => (x[im], x[im + 1]),
        };
        let off = s.offset();
        let m = self.n_obs();
        let mut eps = vec![0.0; m];
        let mut h = vec![0.0; m];
        // derivative of ε_t with respect to (μ, φ)
        let mut de = if want_grad { vec![[0.0f64; 2]; m] } else { Vec::new() };
        let mut dh = if want_grad { vec![0.0f64; m * k] } else { Vec::new() };
        let mut grad = vec![0.0; if want_grad { k } else { 0 }];
        let mut ll = 0.0;
        for t in 0..m {
            let rt = self.r[t + off];
            let lag = if off == 1 { self.r[t] } else { 0.0 };
            eps[t] = match s.mean {
                MeanModel::Zero => rt,
                MeanModel::Constant => rt - mu,
                MeanModel::Ar1 => rt - mu - phi * lag,
            };
            if want_grad {
                de[t] = [-1.0, -lag];
            }
            if t == 0 {
                h[0] = self.h0;
            } else {
                let mut ht = omega;
                for (i, a) in alphas.iter().enumerate() {
                    if t > i {
                        ht += a * eps[t - 1 - i] * eps[t - 1 - i];
                    }
                }
                let neg = eps[t - 1] < 0.0;
                if neg {
                    ht += lambda * eps[t - 1] * eps[t - 1];
                }
                for (j, b) in betas.iter().enumerate() {
                    ht += b * if t > j { h[t - 1 - j] } else { self.h0 };
                }
                h[t] = ht;
                if want_grad {
                    let (prev, cur) = dh.split_at_mut(t * k);
                    let cur = &mut cur[..k];
                    cur[0] = 1.0;
                    for i in 0..p {
                        if t > i {
                            let e = eps[t - 1 - i];
                            cur[ia + i] = e * e;
                            for mp in 0..s.n_mean() {
                                cur[im + mp] += 2.0 * alphas[i] * e * de[t - 1 - i][mp];
                            }
                        }
                    }
                    if s.leverage && neg {
                        let e = eps[t - 1];
                        cur[il] = e * e;
                        for mp in 0..s.n_mean() {
                            cur[im + mp] += 2.0 * lambda * e * de[t - 1][mp];
                        }
                    }
                    for j in 0..q {
                        if t > j {
                            cur[ib + j] += h[t - 1 - j];
                            let row = &prev[(t - 1 - j) * k..(t - j) * k];
                            for (c, d) in cur.iter_mut().zip(row) {
                                *c += betas[j] * d;
                            }
                        } else {
                            cur[ib + j] += self.h0;
                        }
                    }
                }
            }
            let ht = h[t];
            if !(ht > 0.0) || !ht.is_finite() {
                return EvalOut {
                    ll: f64::NEG_INFINITY,
                    grad,
                    eps,
                    h,
                };
            }
            let e2 = eps[t] * eps[t];
            ll -= 0.5 * (LN_2PI + ht.ln() + e2 / ht);
            if want_grad {
                let w = -0.5 * (1.0 / ht - e2 / (ht * ht));
                let row = &dh[t * k..(t + 1) * k];
                for (g, d) in grad.iter_mut().zip(row) {
                    *g += w * d;
                }
                for mp in 0..s.n_mean() {
                    grad[im + mp] -= eps[t] / ht * de[t][mp];
                }
            }
        }
        EvalOut { ll, grad, eps, h }
    }
}

/// Map between unconstrained coordinates and natural parameters.
struct Transform {
    spec: GarchSpec,
}

impl Transform {
    fn components_to_natural(&self, c: &[f64], out: &mut [f64]) {
        let s = &self.spec;
        if s.leverage {
            out[1] = 2.0 * c[0];
            out[2..1 + s.p].copy_from_slice(&c[2..1 + s.p]);
            out[1 + s.p] = 2.0 * (c[1] - c[0]);
            out[2 + s.p..].copy_from_slice(&c[1 + s.p..]);
        } else {
            out[1..].copy_from_slice(c);
        }
    }

    fn natural(&self, theta: &[f64]) -> Vec<f64> {
        let nc = self.spec.n_components();
        let mut x = vec![0.0; theta.len()];
        x[0] = theta[0].exp();
        let c = simplex(&theta[1..1 + nc]);
        self.components_to_natural(&c, &mut x[..1 + nc]);
        x[1 + nc..].copy_from_slice(&theta[1 + nc..]);
        x
    }

    fn theta(&self, x: &[f64]) -> Vec<f64> {
        let s = &self.spec;
        let nc = s.n_components();
        let mut c = vec![0.0; nc];
        if s.leverage {
            c[0] = 0.5 * x[1];
            c[1] = 0.5 * (x[1] + x[1 + s.p]);
            c[2..1 + s.p].copy_from_slice(&x[2..1 + s.p]);
            c[1 + s.p..].copy_from_slice(&x[2 + s.p..1 + nc]);
        } else {
            c.copy_from_slice(&x[1..1 + nc]);
        }
        let rest = 1.0 - c.iter().sum::<f64>();
        let mut t = Vec::with_capacity(x.len());
        t.push(x[0].ln());
        t.extend(c.iter().map(|ci| (ci / rest).ln()));
        t.extend(&x[1 + nc..]);
        t
    }

    /// Chain rule from natural-parameter gradient to θ-gradient.
    fn pull_back(&self, theta: &[f64], x: &[f64], gx: &[f64]) -> Vec<f64> {
        let s = &self.spec;
        let nc = s.n_components();
        let mut gt = vec![0.0; theta.len()];
        gt[0] = x[0] * gx[0];
        let mut gc = vec![0.0; nc];
        if s.leverage {
            let (ga, gl) = (gx[1], gx[1 + s.p]);
            gc[0] = 2.0 * ga - 2.0 * gl;
            gc[1] = 2.0 * gl;
            gc[2..1 + s.p].copy_from_slice(&gx[2..1 + s.p]);
            gc[1 + s.p..].copy_from_slice(&gx[2 + s.p..1 + nc]);
        } else {
            gc.copy_from_slice(&gx[1..1 + nc]);
        }
        let c = simplex(&theta[1..1 + nc]);
        let dot: f64 = c.iter().zip(&gc).map(|(a, b)| a * b).sum();
        for i in 0..nc {
            gt[1 + i] = c[i] * (gc[i] - dot);
        }
        gt[1 + nc..].copy_from_slice(&gx[1 + nc..]);
        gt
    }
}

fn simplex(t: &[f64]) -> Vec<f64> {
    let mx = t.iter().copied().fold(0.0f64, f64::max);
    let ex: Vec<f64> = t.iter().map(|v| (v - mx).exp()).collect();
    let d = (-mx).exp() + ex.iter().sum::<f64>();
    ex.iter().map(|e| e / d).collect()
}

/// Fitted conditional variance model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GarchFit {
    pub spec: GarchSpec,
    pub params: GarchParams,
    /// Standard errors in the same layout as [`GarchFit::parameter_table`].
    pub std_errors: Vec<f64>,
    pub cond_variance: Vec<f64>,
    pub residuals: Vec<f64>,
    pub log_likelihood: f64,
    pub persistence: f64,
    pub iterations: usize,
    pub h0: f64,
    pub last_return: f64,
}

impl GarchFit {
    pub fn omega(&self) -> f64 {
        self.params.omega
    }

    pub fn alphas(&self) -> &[f64] {
        &self.params.alphas
    }

    pub fn betas(&self) -> &[f64] {
        &self.params.betas
    }

    pub fn leverage_coef(&self) -> f64 {
        self.params.leverage
    }

    pub fn n_obs(&self) -> usize {
        self.residuals.len()
    }

    /// `(name, estimate, std_error)` rows.
    pub fn parameter_table(&self) -> Vec<(String, f64, f64)> {
        GarchParams::names(&self.spec)
            .into_iter()
            .zip(self.params.to_vec(&self.spec))
            .zip(&self.std_errors)
            .map(|((n, v), s)| (n, v, *s))
            .collect()
    }

    /// Write `parameter,estimate,std_error`.
    pub fn write_report_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["parameter", "estimate", "std_error"])?;
        for (n, v, s) in self.parameter_table() {
            w.write_record([n, v.to_string(), s.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Filter positioned after the last fitted observation.
    pub fn state(&self) -> GarchState {
        let p = self.params.alphas.len();
        let q = self.params.betas.len();
        let n = self.residuals.len();
        let eps = (0..p.max(1))
            .map(|i| if n > i { self.residuals[n - 1 - i] } else { 0.0 })
            .collect();
        let h = (0..q.max(1))
            .map(|j| if n > j { self.cond_variance[n - 1 - j] } else { self.h0 })
            .collect();
        GarchState {
            params: self.params.clone(),
            eps,
            h,
            last_return: self.last_return,
        }
    }
}

/// Variance and mean forecasts.
#[derive(Debug, Clone, PartialEq)]
pub struct Forecast {
    pub variance_path: Vec<f64>,
    pub mean_path: Vec<f64>,
}

/// Forecast `horizon` steps past the end of the fitted sample.
pub fn forecast(fit: &GarchFit, horizon: usize) -> Result<Forecast> {
    fit.state().forecast(horizon)
}

/// Recursive filter that can absorb new returns after fitting.
#[derive(Debug, Clone, PartialEq)]
pub struct GarchState {
    params: GarchParams,
    /// Most recent residual first.
    eps: Vec<f64>,
    /// Most recent conditional variance first.
    h: Vec<f64>,
    last_return: f64,
}

impl GarchState {
    pub fn params(&self) -> &GarchParams {
        &self.params
    }

    /// Conditional mean of the next return.
    pub fn next_mean(&self) -> f64 {
        match self.params.mean {
            MeanModel::Zero => 0.0,
            MeanModel::Constant => self.params.mu,
            MeanModel::Ar1 => self.params.mu + self.params.phi * self.last_return,
        }
    }

    /// Conditional variance of the next return.
    pub fn next_variance(&self) -> f64 {
        let p = &self.params;
        let mut v = p.omega;
        for (a, e) in p.alphas.iter().zip(&self.eps) {
            v += a * e * e;
        }
        if self.eps[0] < 0.0 {
            v += p.leverage * self.eps[0] * self.eps[0];
        }
        for (b, h) in p.betas.iter().zip(&self.h) {
            v += b * h;
        }
        v
    }

    /// Absorb an observed return.
    pub fn update(&mut self, r: f64) {
        let h = self.next_variance();
        let e = r - self.next_mean();
        self.eps.rotate_right(1);
        self.eps[0] = e;
        self.h.rotate_right(1);
        self.h[0] = h;
        self.last_return = r;
    }

    pub fn forecast(&self, horizon: usize) -> Result<Forecast> {
        if horizon == 0 {
            return Err(Error::param("forecast horizon must be >= 1"));
        }
        let p = &self.params;
        let mut eps2: Vec<f64> = self.eps.iter().map(|e| e * e).collect();
        let mut lev = if self.eps[0] < 0.0 { eps2[0] } else { 0.0 };
        let mut h = self.h.clone();
        let mut variance_path = Vec::with_capacity(horizon);
        let mut mean_path = Vec::with_capacity(horizon);
        let mut last = self.last_return;
        for _ in 0..horizon {
            let mut v = p.omega + p.leverage * lev;
            for (a, e2) in p.alphas.iter().zip(&eps2) {
                v += a * e2;
            }
            for (b, hj) in p.betas.iter().zip(&h) {
                v += b * hj;
            }
            variance_path.push(v);
            // beyond the first step E[ε²] = h and E[ε²·1[ε<0]] = h/2
            eps2.rotate_right(1);
            eps2[0] = v;
            lev = 0.5 * v;
            h.rotate_right(1);
            h[0] = v;
            let m = match p.mean {
                MeanModel::Zero => 0.0,
                MeanModel::Constant => p.mu,
                MeanModel::Ar1 => p.mu + p.phi * last,
            };
            mean_path.push(m);
            last = m;
        }
        Ok(Forecast {
            variance_path,
            mean_path,
        })
    }
}

/// Quasi-maximum-likelihood GARCH(p,q) fit under Gaussian innovations.
pub fn fit_garch(r: &[f64], spec: GarchSpec) -> Result<GarchFit> {
    spec.validate()?;
    let needed = 50 * (spec.p + spec.q).max(1);
    if r.len() < needed {
        return Err(Error::InsufficientData {
            what: "GARCH fit",
            needed,
            got: r.len(),
        });
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("returns must be finite"));
    }
    let var = variance(r, 1);
    let max_abs = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(var > (1e-14 * max_abs).powi(2)) {
        return Err(Error::degenerate("constant return series"));
    }
    let scale = var.sqrt();
    let rs: Vec<f64> = r.iter().map(|v| v / scale).collect();
    let eval = Evaluator::new(spec, &rs, 1.0);
    let tf = Transform { spec };
    let m = eval.n_obs() as f64;

    let start = start_params(&spec, &rs);
    let theta0 = tf.theta(&start.to_vec(&spec));
    let objective = |theta: &[f64]| -> (f64, Vec<f64>) {
        let x = tf.natural(theta);
        let out = eval.run(&x, true);
        if !out.ll.is_finite() {
            return (f64::INFINITY, vec![0.0; theta.len()]);
        }
        let g = tf.pull_back(theta, &x, &out.grad);
        (-out.ll / m, g.iter().map(|v| -v / m).collect())
    };
    let (theta, iterations) = bfgs(objective, theta0, LL_TOL / m)?;

    let x_scaled = tf.natural(&theta);
    let se_scaled = standard_errors(&eval, &x_scaled);
    let params = GarchParams::from_vec(&spec, &x_scaled).rescaled(scale);
    // unscaled evaluation so the stored path matches the stored parameters
    let raw = Evaluator::new(spec, r, var).run(&params.to_vec(&spec), false);
    if !raw.ll.is_finite() {
        return Err(Error::degenerate("non-positive conditional variance at the optimum"));
    }
    let std_errors = se_scaled
        .iter()
        .enumerate()
        .map(|(i, s)| s * param_scale(&spec, i, scale))
        .collect();
    Ok(GarchFit {
        spec,
        persistence: params.persistence(),
        params,
        std_errors,
        cond_variance: raw.h,
        residuals: raw.eps,
        log_likelihood: raw.ll,
        iterations,
        h0: var,
        last_return: *r.last().expect("non-empty"),
    })
}

/// GARCH(1,1) with the threshold leverage term.
pub fn fit_tgarch(r: &[f64], mean: MeanModel) -> Result<GarchFit> {
    fit_garch(
        r,
        GarchSpec {
            p: 1,
            q: 1,
            leverage: true,
            mean,
        },
    )
}

/// Gaussian log-likelihood of `params` on `r` with `h0` = sample variance.
pub fn log_likelihood(params: &GarchParams, r: &[f64]) -> f64 {
    let spec = full_spec(params);
    Evaluator::new(spec, r, variance(r, 1)).run(&params.to_vec(&spec), false).ll
}

/// Analytic log-likelihood gradient in the natural parameter layout of
/// [`GarchFit::parameter_table`].
pub fn log_likelihood_gradient(params: &GarchParams, spec: GarchSpec, r: &[f64]) -> (f64, Vec<f64>) {
    let out = Evaluator::new(spec, r, variance(r, 1)).run(&params.to_vec(&spec), true);
    (out.ll, out.grad)
}

fn param_scale(spec: &GarchSpec, i: usize, scale: f64) -> f64 {
    let nc = spec.n_components();
    if i == 0 {
        scale * scale
    } else if i == 1 + nc {
        scale
    } else {
        1.0
    }
}

fn start_params(spec: &GarchSpec, rs: &[f64]) -> GarchParams {
    let (a_tot, b_tot) = if spec.q == 0 { (0.3, 0.0) } else if spec.p == 0 { (0.0, 0.8) } else { (0.05, 0.85) };
    let persistence = a_tot + b_tot;
    GarchParams {
        omega: 1.0 - persistence,
        alphas: vec![a_tot / spec.p.max(1) as f64; spec.p],
        betas: vec![b_tot / spec.q.max(1) as f64; spec.q],
        leverage: 0.0,
        mean: spec.mean,
        mu: mean(rs),
        phi: 0.0,
    }
}

fn standard_errors(eval: &Evaluator, x: &[f64]) -> Vec<f64> {
    let k = x.len();
    let mut hess = Matrix::zeros(k, k);
    let mut rows = Vec::with_capacity(k);
    for i in 0..k {
        let step = 1e-5 * x[i].abs().max(1e-3);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += step;
        xm[i] -= step;
        let gp = eval.run(&xp, true).grad;
        let gm = eval.run(&xm, true).grad;
        rows.push(gp.iter().zip(&gm).map(|(a, b)| -(a - b) / (2.0 * step)).collect::<Vec<f64>>());
    }
    for i in 0..k {
        for j in 0..k {
            hess[(i, j)] = 0.5 * (rows[i][j] + rows[j][i]);
        }
    }
    match hess.inverse() {
        Ok(inv) => (0..k)
            .map(|i| {
                let v = inv[(i, i)];
                if v > 0.0 { v.sqrt() } else { f64::NAN }
            })
            .collect(),
        Err(_) => vec![f64::NAN; k],
    }
}

/// Minimize `f` with BFGS and an Armijo backtracking line search. Stops when
/// the objective improves by less than `tol` in one iteration.
fn bfgs<F>(f: F, x0: Vec<f64>, tol: f64) -> Result<(Vec<f64>, usize)>
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0;
    let (mut fx, mut g) = f(&x);
    if !fx.is_finite() {
        return Err(Error::degenerate("GARCH likelihood is not finite at the starting point"));
    }
    let mut hinv = identity(n);
    let mut restarted = false;
    for iter in 1..=MAX_ITER {
        let mut d: Vec<f64> = (0..n).map(|i| -(0..n).map(|j| hinv[i][j] * g[j]).sum::<f64>()).collect();
        let mut slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if slope >= 0.0 {
            hinv = identity(n);
            d = g.iter().map(|v| -v).collect();
            slope = -g.iter().map(|v| v * v).sum::<f64>();
        }
        let dnorm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut step = if dnorm > 5.0 { 5.0 / dnorm } else { 1.0 };
        let mut accepted = None;
        for _ in 0..60 {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            let (fn_, gn) = f(&xn);
            if fn_.is_finite() && fn_ <= fx + 1e-4 * step * slope {
                accepted = Some((xn, fn_, gn));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            if restarted {
                return Ok((x, iter));
            }
            restarted = true;
            hinv = identity(n);
            continue;
        };
        restarted = false;
        let improvement = fx - fn_;
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        x = xn;
        fx = fn_;
        g = gn;
        if improvement < tol {
            return Ok((x, iter));
        }
        if sy > 1e-12 {
            let hy: Vec<f64> = (0..n).map(|i| (0..n).map(|j| hinv[i][j] * y[j]).sum()).collect();
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            let rho = 1.0 / sy;
            for i in 0..n {
                for j in 0..n {
                    hinv[i][j] += (1.0 + yhy * rho) * rho * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
        }
    }
    Err(Error::NonConvergence {
        iterations: MAX_ITER,
        gradient_norm: g.iter().map(|v| v * v).sum::<f64>().sqrt(),
    })
}

fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

/// Simulate `n` returns from a GARCH process after a 500-step burn-in that
/// starts at the unconditional variance.
pub fn simulate(params: &GarchParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    params.validate()?;
    let uv = params.unconditional_variance().expect("validated");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = GarchState {
        params: params.clone(),
        eps: vec![0.0; params.alphas.len().max(1)],
        h: vec![uv; params.betas.len().max(1)],
        last_return: params.mu,
    };
    let burn = 500;
    let mut out = Vec::with_capacity(n);
    for t in 0..burn + n {
        let z: f64 = StandardNormal.sample(&mut rng);
        let r = state.next_mean() + state.next_variance().sqrt() * z;
        state.update(r);
        if t >= burn {
            out.push(r);
        }
    }
    Ok(out)
}

/// Rolling realized variance: sums of `blocks` consecutive squared bar
/// returns. Element `k` covers returns `k..k+blocks`.
pub fn realized_vol(bars: &BarSeries, blocks: usize) -> Result<Vec<f64>> {
    realized_vol_from_returns(&bars.log_returns().values, blocks)
}

pub fn realized_vol_from_returns(r: &[f64], blocks: usize) -> Result<Vec<f64>> {
    if blocks == 0 {
        return Err(Error::param("realized volatility window must be >= 1"));
    }
    if r.len() < blocks {
        return Err(Error::InsufficientData {
            what: "realized volatility window",
            needed: blocks,
            got: r.len(),
        });
    }
    Ok(r.windows(blocks).map(|w| w.iter().map(|v| v * v).sum()).collect())
}

pub const HAR_HOUR_BLOCKS: usize = 12;
pub const HAR_DAY_BLOCKS: usize = 48;

/// Aligned HAR-VPIN regressors, one row per 5-minute block.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HarInputs {
    pub rv_f: Vec<f64>,
    pub rv_h: Vec<f64>,
    pub rv_d: Vec<f64>,
    pub volume: Vec<f64>,
    pub vpin: Vec<f64>,
}

impl HarInputs {
    /// Build hourly and daily components as trailing sums of block RV.
    /// The first 47 blocks lack a full daily window and are dropped.
    pub fn from_blocks(rv_f: &[f64], volume: &[f64], vpin: &[f64]) -> Result<Self> {
        let n = rv_f.len();
        for len in [volume.len(), vpin.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, got: len });
            }
        }
        if n < HAR_DAY_BLOCKS {
            return Err(Error::InsufficientData {
                what: "HAR daily window",
                needed: HAR_DAY_BLOCKS,
                got: n,
            });
        }
        let trailing = |w: usize, t: usize| rv_f[t + 1 - w..=t].iter().sum::<f64>();
        let rows = HAR_DAY_BLOCKS - 1..n;
        Ok(HarInputs {
            rv_f: rv_f[rows.clone()].to_vec(),
            rv_h: rows.clone().map(|t| trailing(HAR_HOUR_BLOCKS, t)).collect(),
            rv_d: rows.clone().map(|t| trailing(HAR_DAY_BLOCKS, t)).collect(),
            volume: volume[rows.clone()].to_vec(),
            vpin: vpin[rows].to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.rv_f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rv_f.is_empty()
    }

    fn check(&self) -> Result<()> {
        let n = self.rv_f.len();
        for len in [self.rv_h.len(), self.rv_d.len(), self.volume.len(), self.vpin.len()] {
            if len != n {
                return Err(Error::DimensionMismatch { expected: n, got: len });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarVpinFit {
    pub beta0: f64,
    pub beta_f: f64,
    pub beta_h: f64,
    pub beta_d: f64,
    pub beta_v: f64,
    pub beta_vpin: f64,
    pub horizon: usize,
    /// Coefficient order: intercept, rv_f, rv_h, rv_d, volume, vpin.
    pub diagnostics: OlsFit,
}

/// Regress the sum of the next `horizon` block RVs on the regressors.
pub fn fit_har_vpin(inputs: &HarInputs, horizon: usize) -> Result<HarVpinFit> {
    inputs.check()?;
    if horizon == 0 {
        return Err(Error::param("HAR horizon must be >= 1"));
    }
    let n = inputs.len();
    if n <= horizon {
        return Err(Error::InsufficientData {
            what: "HAR-VPIN regression",
            needed: 100 + horizon,
            got: n,
        });
    }
    let target: Vec<f64> = (0..n - horizon)
        .map(|t| inputs.rv_f[t + 1..=t + horizon].iter().sum())
        .collect();
    fit_har_vpin_with_target(inputs, &target, horizon)
}

/// HAR-VPIN regression against an explicit target; row `t` of the target
/// pairs with row `t` of the regressors.
pub fn fit_har_vpin_with_target(inputs: &HarInputs, target: &[f64], horizon: usize) -> Result<HarVpinFit> {
    inputs.check()?;
    let m = target.len();
    if m > inputs.len() {
        return Err(Error::DimensionMismatch {
            expected: inputs.len(),
            got: m,
        });
    }
    if m < 100 {
        return Err(Error::InsufficientData {
            what: "HAR-VPIN regression",
            needed: 100,
            got: m,
        });
    }
    let ones = vec![1.0; m];
    let x = Matrix::from_columns(&[
        &ones,
        &inputs.rv_f[..m],
        &inputs.rv_h[..m],
        &inputs.rv_d[..m],
        &inputs.volume[..m],
        &inputs.vpin[..m],
    ])?;
    let fit = ols(&x, target)?;
    let b = &fit.coefficients;
    Ok(HarVpinFit {
        beta0: b[0],
        beta_f: b[1],
        beta_h: b[2],
        beta_d: b[3],
        beta_v: b[4],
        beta_vpin: b[5],
        horizon,
        diagnostics: fit,
    })
}
