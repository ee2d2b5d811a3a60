//! Box-Cox power transform followed by z-scoring, fitted per feature.
//!
//! λ maximizes the Gaussian log-likelihood of the transformed sample with
//! mean and variance profiled out, i.e. it minimizes log Var(T_λ(x)) using
//! the unbiased variance. There is no Jacobian term, so the objective stays
//! defined when features are exactly zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::Parallelism;

pub const LAMBDA_MIN: f64 = 0.01;
pub const LAMBDA_MAX: f64 = 2.0;
const GRID_POINTS: usize = 200;
const GOLDEN_TOL: f64 = 1e-7;
pub const STD_FLOOR: f64 = 1e-9;
/// λ is fitted on at most this many (evenly strided) rows.
pub const FIT_ROWS: usize = 100_000;

/// T_λ(x) = (x^λ − 1)/λ for x ≥ 0, λ > 0.
#[inline]
pub fn boxcox(x: f64, lambda: f64) -> f64 {
    if x <= 0.0 {
        -1.0 / lambda
    } else {
        (lambda * x.ln()).exp_m1() / lambda
    }
}

#[inline]
fn boxcox_ln(ln_x: f64, lambda: f64) -> f64 {
    if ln_x == f64::NEG_INFINITY {
        -1.0 / lambda
    } else {
        (lambda * ln_x).exp_m1() / lambda
    }
}

fn mean_var(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let mut n = 0usize;
    let mut sum = 0.0;
    for v in values.clone() {
        sum += v;
        n += 1;
    }
    let mean = sum / n as f64;
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, if n > 1 { ss / (n - 1) as f64 } else { 0.0 })
}

/// Profile objective log Var(T_λ(x)) evaluated from precomputed logs.
fn objective(ln_x: &[f64], lambda: f64) -> f64 {
    mean_var(ln_x.iter().map(|&l| boxcox_ln(l, lambda))).1.ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaFit {
    pub lambda: f64,
    pub degenerate: bool,
}

/// Log-spaced search grid over [`LAMBDA_MIN`, `LAMBDA_MAX`].
pub fn lambda_grid(points: usize) -> Vec<f64> {
    let (a, b) = (LAMBDA_MIN.ln(), LAMBDA_MAX.ln());
    (0..points).map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp()).collect()
}

/// Fits λ: grid scan, then golden-section refinement around the best cell.
/// Fewer than two distinct values gives λ = 1 with the degenerate flag.
pub fn fit_lambda(samples: &[f64]) -> LambdaFit {
    let degenerate = LambdaFit { lambda: 1.0, degenerate: true };
    let Some(&first) = samples.first() else { return degenerate };
    if samples.iter().all(|&v| v == first) {
        return degenerate;
    }
    let ln_x: Vec<f64> = samples.iter().map(|&v| if v > 0.0 { v.ln() } else { f64::NEG_INFINITY }).collect();
    let grid = lambda_grid(GRID_POINTS);
    let scores: Vec<f64> = grid.iter().map(|&l| objective(&ln_x, l)).collect();
    if scores.iter().all(|s| !s.is_finite()) {
        return degenerate;
    }
    let best = scores
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_finite())
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(GRID_POINTS - 1)];
    let lambda = golden_section(|l| objective(&ln_x, l), lo, hi, GOLDEN_TOL);
    let lambda = if objective(&ln_x, lambda) <= scores[best] { lambda } else { grid[best] };
    LambdaFit { lambda, degenerate: false }
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub lambda: f64,
    pub mean: f64,
    pub std: f64,
    pub degenerate: bool,
}

impl FeatureScaler {
    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        if self.degenerate {
            0.0
        } else {
            (boxcox(x, self.lambda) - self.mean) / self.std
        }
    }
}

/// Per-feature Box-Cox + z-score layer fitted on a training matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTransform {
    pub features: Vec<FeatureScaler>,
    /// FNV-1a hash of the training matrix.
    pub fitted_on: String,
}

/// Fits every column of `rows` (all of equal length).
pub fn fit_transform(rows: &[&[f64]], par: Parallelism) -> Result<FeatureTransform> {
    let Some(first) = rows.first() else {
        return Err(Error::Config("cannot fit a transform on an empty training set".into()));
    };
    let dim = first.len();
    if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
        return Err(Error::Dimension { expected: dim, got: bad.len() });
    }
    let stride = rows.len().div_ceil(FIT_ROWS).max(1);
    let features = par.map_range(dim, |j| {
        let sub: Vec<f64> = rows.iter().step_by(stride).map(|r| r[j].max(0.0)).collect();
        let fit = fit_lambda(&sub);
        if fit.degenerate {
            return FeatureScaler { lambda: 1.0, mean: 0.0, std: 1.0, degenerate: true };
        }
        let (mean, var) = mean_var(rows.iter().map(|r| boxcox(r[j].max(0.0), fit.lambda)));
        FeatureScaler { lambda: fit.lambda, mean, std: var.sqrt().max(STD_FLOOR), degenerate: false }
    });
    Ok(FeatureTransform { features, fitted_on: fingerprint_rows(rows) })
}

/// FNV-1a over the row count, dimension and every value's bit pattern.
pub fn fingerprint_rows(rows: &[&[f64]]) -> String {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0100_0000_01b3;
    let mut h = OFFSET;
    let mut feed = |bytes: [u8; 8]| {
        for b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(PRIME);
        }
    };
    feed((rows.len() as u64).to_le_bytes());
    feed((rows.first().map_or(0, |r| r.len()) as u64).to_le_bytes());
    for r in rows {
        for v in r.iter() {
            feed(v.to_bits().to_le_bytes());
        }
    }
    format!("fnv1a64:{h:016x}")
}

impl FeatureTransform {
    pub fn dim(&self) -> usize {
        self.features.len()
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: x.len() });
        }
        if out.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: out.len() });
        }
        for ((o, &v), s) in out.iter_mut().zip(x).zip(&self.features) {
            *o = s.apply(v);
        }
        Ok(())
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.apply_into(x, &mut out)?;
        Ok(out)
    }
}
