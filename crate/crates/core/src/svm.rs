//! Binary soft-margin support vector machine trained by sequential minimal
//! optimization.
//!
//! The solver works on the dual `max Σα - ½ ΣΣ α_i α_j y_i y_j K_ij` subject
//! to `0 ≤ α ≤ C` and `Σ α_i y_i = 0`. Each step picks the maximal violating
//! pair from the maintained gradient and solves the two-variable subproblem
//! analytically. It stops once the largest KKT violation gap drops below
//! `tol`, which bounds every training point's margin residual by `tol`.

use std::collections::VecDeque;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;

const FORMAT_HEADER: &str = "hft-svm";
const FORMAT_VERSION: u32 = 1;
const CACHE_BYTES: usize = 128 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    Rbf { sigma: f64 },
}

impl Kernel {
    fn validate(&self) -> Result<()> {
        match *self {
            Kernel::Rbf { sigma } if !(sigma > 0.0 && sigma.is_finite()) => {
                Err(Error::param(format!("RBF sigma must be positive, got {sigma}")))
            }
            _ => Ok(()),
        }
    }

    fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { sigma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-d2 / (2.0 * sigma * sigma)).exp()
            }
        }
    }

    /// Checked evaluation.
    pub fn apply(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        self.validate()?;
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                got: b.len(),
            });
        }
        Ok(self.eval(a, b))
    }
}

/// `exp(-||x1 - x2||² / (2σ²))`.
pub fn rbf_kernel(x1: &[f64], x2: &[f64], sigma: f64) -> Result<f64> {
    Kernel::Rbf { sigma }.apply(x1, x2)
}

/// Dense Gram matrix, rows computed with `exec`.
pub fn kernel_matrix(x: &[Vec<f64>], kernel: Kernel, exec: Exec) -> Result<Vec<Vec<f64>>> {
    kernel.validate()?;
    check_rows(x)?;
    Ok(exec.map(x, |a| x.iter().map(|b| kernel.eval(a, b)).collect()))
}

fn check_rows(x: &[Vec<f64>]) -> Result<usize> {
    let d = x.first().map_or(0, Vec::len);
    for row in x {
        if row.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("features must be finite"));
        }
    }
    Ok(d)
}

/// Per-feature centering and scaling fitted on a training window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    /// Population mean and standard deviation per column; a constant column
    /// keeps scale 1.
    pub fn fit(x: &[Vec<f64>]) -> Result<Self> {
        let d = check_rows(x)?;
        if x.is_empty() {
            return Err(Error::InsufficientData {
                what: "standardizer",
                needed: 1,
                got: 0,
            });
        }
        let n = x.len() as f64;
        let means: Vec<f64> = (0..d).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let stds = (0..d)
            .map(|j| {
                let v = x.iter().map(|r| (r[j] - means[j]).powi(2)).sum::<f64>() / n;
                let s = v.sqrt();
                if s > 1e-12 * means[j].abs().max(1e-300) { s } else { 1.0 }
            })
            .collect();
        Ok(Standardizer { means, stds })
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmoConfig {
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Record the dual objective after every update.
    pub record_objective: bool,
}

impl Default for SmoConfig {
    fn default() -> Self {
        SmoConfig {
            c: 1.0,
            tol: 1e-3,
            max_iter: 1_000_000,
            record_objective: false,
        }
    }
}

/// Trained classifier. `dual_coefs[i] = α_i y_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub support_vectors: Vec<Vec<f64>>,
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub kernel: Kernel,
    pub c: f64,
    pub tol: f64,
    pub dim: usize,
    /// Applied to raw inputs before the kernel when present.
    pub standardizer: Option<Standardizer>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoOutcome {
    pub model: SvmModel,
    /// α for every training row, in input order.
    pub alphas: Vec<f64>,
    pub iterations: usize,
    /// Dual objective after initialization and after each update.
    pub objective_trace: Vec<f64>,
}

struct RowCache<'a> {
    x: &'a [Vec<f64>],
    kernel: Kernel,
    exec: Exec,
    rows: Vec<Option<Vec<f64>>>,
    order: VecDeque<usize>,
    capacity: usize,
}

impl<'a> RowCache<'a> {
    fn new(x: &'a [Vec<f64>], kernel: Kernel, exec: Exec) -> Self {
        let n = x.len();
        RowCache {
            x,
            kernel,
            exec,
            rows: vec![None; n],
            order: VecDeque::new(),
            capacity: (CACHE_BYTES / (8 * n.max(1))).max(2),
        }
    }

    fn ensure(&mut self, i: usize) {
        if self.rows[i].is_some() {
            return;
        }
        if self.order.len() >= self.capacity {
            if let Some(old) = self.order.pop_front() {
                self.rows[old] = None;
            }
        }
        let (x, k) = (self.x, self.kernel);
        let xi = &x[i];
        self.rows[i] = Some(self.exec.map(x, |b| k.eval(xi, b)));
        self.order.push_back(i);
    }

    fn pair(&mut self, i: usize, j: usize) -> (&[f64], &[f64]) {
        self.ensure(i);
        self.ensure(j);
        if self.rows[i].is_none() {
            // j's insertion evicted i when capacity is tiny
            self.ensure(i);
        }
        (self.rows[i].as_deref().expect("cached"), self.rows[j].as_deref().expect("cached"))
    }
}

/// Train with SMO; see [`train_smo_detailed`] for solver diagnostics.
pub fn train_smo(x: &[Vec<f64>], y: &[f64], kernel: Kernel, cfg: &SmoConfig, exec: Exec) -> Result<SvmModel> {
    Ok(train_smo_detailed(x, y, kernel, cfg, exec)?.model)
}

pub fn train_smo_detailed(
    x: &[Vec<f64>],
    y: &[f64],
    kernel: Kernel,
    cfg: &SmoConfig,
    exec: Exec,
) -> Result<SmoOutcome> {
    kernel.validate()?;
    if !(cfg.c > 0.0) || !(cfg.tol > 0.0) {
        return Err(Error::param("C and tol must be positive"));
    }
    let n = x.len();
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }
    if n < 2 {
        return Err(Error::InsufficientData {
            what: "SVM training",
            needed: 2,
            got: n,
        });
    }
    let dim = check_rows(x)?;
    if y.iter().any(|v| *v != 1.0 && *v != -1.0) {
        return Err(Error::param("labels must be -1 or +1"));
    }
    if y.iter().all(|v| *v == y[0]) {
        return Err(Error::param("training labels contain a single class"));
    }
    let c = cfg.c;
    let diag: Vec<f64> = x.iter().map(|r| kernel.eval(r, r)).collect();
    let mut alpha = vec![0.0f64; n];
    // gradient of ½αᵀQα - eᵀα with Q_ij = y_i y_j K_ij
    let mut grad = vec![-1.0f64; n];
    let mut cache = RowCache::new(x, kernel, exec);
    let objective = |alpha: &[f64], grad: &[f64]| -> f64 {
        -0.5 * alpha.iter().zip(grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>()
    };
    let mut trace = Vec::new();
    if cfg.record_objective {
        trace.push(0.0);
    }
    let mut iterations = 0;
    loop {
        let (mut gmax, mut gmin) = (f64::NEG_INFINITY, f64::INFINITY);
        let (mut i, mut j) = (usize::MAX, usize::MAX);
        for t in 0..n {
            let v = -y[t] * grad[t];
            let up = (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0);
            let low = (y[t] < 0.0 && alpha[t] < c) || (y[t] > 0.0 && alpha[t] > 0.0);
            if up && v > gmax {
                gmax = v;
                i = t;
            }
            if low && v < gmin {
                gmin = v;
                j = t;
            }
        }
        if gmax - gmin < cfg.tol || i == usize::MAX || j == usize::MAX {
            break;
        }
        if iterations >= cfg.max_iter {
            let violating = (0..n)
                .filter(|&t| {
                    let v = -y[t] * grad[t];
                    let up = (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0);
                    let low = (y[t] < 0.0 && alpha[t] < c) || (y[t] > 0.0 && alpha[t] > 0.0);
                    (up && v - gmin >= cfg.tol) || (low && gmax - v >= cfg.tol)
                })
                .count();
            return Err(Error::SmoNonConvergence {
                iterations,
                violating,
            });
        }
        iterations += 1;
        let (ki, kj) = cache.pair(i, j);
        let kij = ki[j];
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (diag[i] + diag[j] + 2.0 * (y[i] * y[j] * kij)).max(1e-12);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (diag[i] + diag[j] - 2.0 * kij).max(1e-12);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj);
        }
        if cfg.record_objective {
            trace.push(objective(&alpha, &grad));
        }
    }

    let bias = -rho(&alpha, &grad, y, c);
    let mut support_vectors = Vec::new();
    let mut dual_coefs = Vec::new();
    for t in 0..n {
        if alpha[t] > 0.0 {
            support_vectors.push(x[t].clone());
            dual_coefs.push(alpha[t] * y[t]);
        }
    }
    Ok(SmoOutcome {
        model: SvmModel {
            support_vectors,
            dual_coefs,
            bias,
            kernel,
            c,
            tol: cfg.tol,
            dim,
            standardizer: None,
        },
        alphas: alpha,
        iterations,
        objective_trace: trace,
    })
}

fn rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum, mut free) = (0.0, 0usize);
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else {
            free += 1;
            sum += yg;
        }
    }
    if free > 0 { sum / free as f64 } else { 0.5 * (ub + lb) }
}

impl SvmModel {
    /// Raw decision value `Σ coef_i K(sv_i, x) + b`.
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        if self.support_vectors.is_empty() {
            return Err(Error::Untrained);
        }
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let z;
        let x = match &self.standardizer {
            Some(s) => {
                z = s.transform(x);
                &z[..]
            }
            None => x,
        };
        Ok(self
            .support_vectors
            .iter()
            .zip(&self.dual_coefs)
            .map(|(sv, a)| a * self.kernel.eval(sv, x))
            .sum::<f64>()
            + self.bias)
    }

    /// Class label; a zero decision value maps to +1.
    pub fn predict(&self, x: &[f64]) -> Result<i8> {
        Ok(if self.decision(x)? >= 0.0 { 1 } else { -1 })
    }

    /// Write the versioned text model file.
    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{FORMAT_HEADER} {FORMAT_VERSION}")?;
        match self.kernel {
            Kernel::Linear => writeln!(w, "kernel linear")?,
            Kernel::Rbf { sigma } => writeln!(w, "kernel rbf {sigma:?}")?,
        }
        writeln!(w, "c {:?}", self.c)?;
        writeln!(w, "tol {:?}", self.tol)?;
        writeln!(w, "bias {:?}", self.bias)?;
        writeln!(w, "dim {}", self.dim)?;
        match &self.standardizer {
            None => writeln!(w, "standardizer none")?,
            Some(s) => {
                writeln!(w, "standardizer {}", join(s.means.iter().chain(&s.stds)))?;
            }
        }
        writeln!(w, "sv {}", self.support_vectors.len())?;
        for (sv, a) in self.support_vectors.iter().zip(&self.dual_coefs) {
            writeln!(w, "{}", join(std::iter::once(a).chain(sv)))?;
        }
        Ok(())
    }

    pub fn load<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let mut next = |expect: &str| -> Result<(u64, Vec<String>)> {
            let (i, line) = lines.next().ok_or_else(|| bad(0, format!("missing '{expect}' line")))?;
            let line = line?;
            let toks: Vec<String> = line.split_whitespace().map(str::to_string).collect();
            if !expect.is_empty() && toks.first().map(String::as_str) != Some(expect) {
                return Err(bad(i as u64 + 1, format!("expected '{expect}'")));
            }
            Ok((i as u64 + 1, toks))
        };
        let (ln, head) = next(FORMAT_HEADER)?;
        if head.get(1).map(String::as_str) != Some("1") {
            return Err(bad(ln, "unsupported model version".into()));
        }
        let (ln, k) = next("kernel")?;
        let kernel = match k.get(1).map(String::as_str) {
            Some("linear") => Kernel::Linear,
            Some("rbf") => Kernel::Rbf { sigma: num(ln, k.get(2))? },
            _ => return Err(bad(ln, "unknown kernel".into())),
        };
        let (ln, t) = next("c")?;
        let c = num(ln, t.get(1))?;
        let (ln, t) = next("tol")?;
        let tol = num(ln, t.get(1))?;
        let (ln, t) = next("bias")?;
        let bias = num(ln, t.get(1))?;
        let (ln, t) = next("dim")?;
        let dim = num(ln, t.get(1))? as usize;
        let (ln, t) = next("standardizer")?;
        let standardizer = if t.get(1).map(String::as_str) == Some("none") {
            None
        } else {
            let v = t[1..].iter().map(|s| num(ln, Some(s))).collect::<Result<Vec<f64>>>()?;
            if v.len() != 2 * dim {
                return Err(bad(ln, "standardizer width does not match dim".into()));
            }
            Some(Standardizer {
                means: v[..dim].to_vec(),
                stds: v[dim..].to_vec(),
            })
        };
        let (ln, t) = next("sv")?;
        let count = num(ln, t.get(1))? as usize;
        let mut support_vectors = Vec::with_capacity(count);
        let mut dual_coefs = Vec::with_capacity(count);
        for _ in 0..count {
            let (ln, t) = next("")?;
            let v = t.iter().map(|s| num(ln, Some(s))).collect::<Result<Vec<f64>>>()?;
            if v.len() != dim + 1 {
                return Err(bad(ln, "support vector width does not match dim".into()));
            }
            dual_coefs.push(v[0]);
            support_vectors.push(v[1..].to_vec());
        }
        let model = SvmModel {
            support_vectors,
            dual_coefs,
            bias,
            kernel,
            c,
            tol,
            dim,
            standardizer,
        };
        model.kernel.validate()?;
        Ok(model)
    }
}

fn join<'a>(it: impl Iterator<Item = &'a f64>) -> String {
    it.map(|v| format!("{v:?}")).collect::<Vec<_>>().join(" ")
}

fn bad(line: u64, message: String) -> Error {
    Error::MalformedRow {
        path: "<svm model>".into(),
        line,
        message,
    }
}

fn num(line: u64, tok: Option<&String>) -> Result<f64> {
    let s = tok.ok_or_else(|| bad(line, "missing value".into()))?;
    s.parse().map_err(|_| bad(line, format!("invalid number '{s}'")))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Rbf,
}

/// SVM settings for the veto layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvmConfig {
    pub kernel: KernelKind,
    pub sigma: f64,
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Most recent samples kept for training.
    pub max_train: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            kernel: KernelKind::Rbf,
            sigma: 1e-4,
            c: 1.0,
            tol: 1e-3,
            max_iter: 1_000_000,
            max_train: 2000,
        }
    }
}

impl SvmConfig {
    pub fn kernel(&self) -> Kernel {
        match self.kernel {
            KernelKind::Linear => Kernel::Linear,
            KernelKind::Rbf => Kernel::Rbf { sigma: self.sigma },
        }
    }

    pub fn smo(&self) -> SmoConfig {
        SmoConfig {
            c: self.c,
            tol: self.tol,
            max_iter: self.max_iter,
            record_objective: false,
        }
    }
}

/// Standardize, keep the latest `max_train` rows and train.
pub fn train_standardized(x: &[Vec<f64>], y: &[f64], cfg: &SvmConfig, exec: Exec) -> Result<SvmModel> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let start = x.len().saturating_sub(cfg.max_train.max(2));
    let (x, y) = (&x[start..], &y[start..]);
    let st = Standardizer::fit(x)?;
    let z: Vec<Vec<f64>> = x.iter().map(|r| st.transform(r)).collect();
    let mut model = train_smo(&z, y, cfg.kernel(), &cfg.smo(), exec)?;
    model.standardizer = Some(st);
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable() -> (Vec<Vec<f64>>, Vec<f64>) {
        (
            vec![vec![2.0, 2.0], vec![3.0, 3.0], vec![-2.0, -2.0], vec![-3.0, -3.0]],
            vec![1.0, 1.0, -1.0, -1.0],
        )
    }

    fn xor() -> (Vec<Vec<f64>>, Vec<f64>) {
        (
            vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![1.0, 1.0, -1.0, -1.0],
        )
    }

    #[test]
    fn rbf_examples() {
        assert_eq!(rbf_kernel(&[1.0, 2.0], &[1.0, 2.0], 0.5).unwrap(), 1.0);
        let s = 0.7f64;
        // ||d||² = 2σ²
        let v = rbf_kernel(&[0.0], &[s * 2f64.sqrt()], s).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-6);
        let far = rbf_kernel(&[0.0], &[10.0 * s], s).unwrap();
        assert!(far >= 0.0 && far < (-49.0f64).exp());
        assert!(rbf_kernel(&[0.0], &[0.0, 1.0], 1.0).is_err());
        assert!(rbf_kernel(&[0.0], &[0.0], 0.0).is_err());
    }

    #[test]
    fn separable_fixture() {
        let (x, y) = separable();
        let cfg = SmoConfig { c: 10.0, ..SmoConfig::default() };
        let m = train_smo(&x, &y, Kernel::Linear, &cfg, Exec::Sequential).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(m.predict(xi).unwrap() as f64, *yi);
        }
        // hyperplane x1 + x2 = 0 bisects the two closest points
        assert!(m.bias.abs() < 1e-2, "{}", m.bias);
        assert!(m.dual_coefs.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn xor_fixture() {
        let (x, y) = xor();
        let cfg = SmoConfig { c: 100.0, record_objective: true, ..SmoConfig::default() };
        let out = train_smo_detailed(&x, &y, Kernel::Rbf { sigma: 1.0 }, &cfg, Exec::Sequential).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(out.model.predict(xi).unwrap() as f64, *yi);
        }
        assert!(out.objective_trace.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        assert_eq!(out.model.predict(&x[0]).unwrap(), 1);
    }

    #[test]
    fn single_class_and_untrained() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(train_smo(&x, &[1.0, 1.0], Kernel::Linear, &SmoConfig::default(), Exec::Sequential).is_err());
        let empty = SvmModel {
            support_vectors: vec![],
            dual_coefs: vec![],
            bias: 0.0,
            kernel: Kernel::Linear,
            c: 1.0,
            tol: 1e-3,
            dim: 1,
            standardizer: None,
        };
        assert!(matches!(empty.predict(&[0.0]), Err(Error::Untrained)));
    }

    #[test]
    fn model_file_round_trip() {
        let (x, y) = xor();
        let cfg = SvmConfig { sigma: 1.0, c: 100.0, ..SvmConfig::default() };
        let m = train_standardized(&x, &y, &cfg, Exec::Sequential).unwrap();
        let mut buf = Vec::new();
        m.save(&mut buf).unwrap();
        let back = SvmModel::load(&buf[..]).unwrap();
        assert_eq!(back, m);
        assert!(SvmModel::load(&b"hft-svm 2\n"[..]).is_err());
        let m2 = train_smo(&x, &y, Kernel::Linear, &SmoConfig::default(), Exec::Sequential).unwrap();
        let mut buf = Vec::new();
        m2.save(&mut buf).unwrap();
        assert_eq!(SvmModel::load(&buf[..]).unwrap(), m2);
    }

    #[test]
    fn tiny_sigma_collapses_to_bias() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let y: Vec<f64> = (0..20).map(|i| if i % 3 == 0 { 1.0 } else { -1.0 }).collect();
        let m = train_standardized(&x, &y, &SvmConfig::default(), Exec::Sequential).unwrap();
        let d = m.decision(&[100.5, -3.0]).unwrap();
        assert_eq!(d, m.bias);
    }
}
