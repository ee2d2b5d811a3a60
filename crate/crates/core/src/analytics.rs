//! Model diagnostics: binned partial dependence of the predicted law on the
//! spread or an imbalance, and the price response to hypothetical inserts
//! with Student-t significance.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::flow::{imbalance_lo, imbalance_mo, shift_order, FeatureLayout};
use crate::net::{Model, Scratch};
use crate::par::Parallelism;
use crate::stream::Side;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PdVariable {
    Spread,
    ImbalanceLo,
    ImbalanceMo,
}

impl PdVariable {
    pub fn as_str(self) -> &'static str {
        match self {
            PdVariable::Spread => "spread",
            PdVariable::ImbalanceLo => "imbalance_lo",
            PdVariable::ImbalanceMo => "imbalance_mo",
        }
    }

    /// Value of the variable on the primary block of a raw feature row.
    pub fn value(self, layout: &FeatureLayout, row: &[f64]) -> f64 {
        match self {
            PdVariable::Spread => row[FeatureLayout::SPREAD],
            PdVariable::ImbalanceLo => imbalance_lo(layout, row),
            PdVariable::ImbalanceMo => imbalance_mo(layout, row),
        }
    }
}

impl FromStr for PdVariable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spread" => Ok(PdVariable::Spread),
            "imbalance_lo" => Ok(PdVariable::ImbalanceLo),
            "imbalance_mo" => Ok(PdVariable::ImbalanceMo),
            _ => Err(Error::Config(format!("unknown variable {s:?} (spread, imbalance_lo, imbalance_mo)"))),
        }
    }
}

pub fn log_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..=bins).map(|i| (a + (b - a) * i as f64 / bins as f64).exp()).collect()
}

pub fn linear_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    (0..=bins).map(|i| lo + (hi - lo) * i as f64 / bins as f64).collect()
}

/// Spread: log-spaced over 0.1–10 bps. Imbalances: linear over the observed range.
pub fn default_edges(var: PdVariable, values: &[f64], bins: usize) -> Vec<f64> {
    match var {
        PdVariable::Spread => log_edges(0.1, 10.0, bins),
        _ => {
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !(lo.is_finite() && hi.is_finite()) || lo == hi {
                let c = if lo.is_finite() { lo } else { 0.0 };
                linear_edges(c - 0.5, c + 0.5, bins)
            } else {
                linear_edges(lo, hi, bins)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub weight: f64,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub sharpe: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialDependenceReport {
    pub variable: PdVariable,
    pub bins: Vec<PdBin>,
    /// Rows outside the outer edges.
    pub excluded: usize,
}

impl PartialDependenceReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("variable,bin_lo,bin_hi,count,weight,mean_bps,std_bps,sharpe\n");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for b in &self.bins {
            let _ = writeln!(s, "{},{},{},{},{},{},{},{}", self.variable.as_str(), b.lo, b.hi, b.count, b.weight, opt(b.mean), opt(b.std), opt(b.sharpe));
        }
        s
    }
}

fn bin_of(edges: &[f64], v: f64) -> Option<usize> {
    let last = edges.len() - 1;
    if !(v >= edges[0] && v <= edges[last]) {
        return None;
    }
    Some((edges.partition_point(|&e| e <= v).max(1) - 1).min(last - 1))
}

/// Averages predicted mean, std and Sharpe of the primary move per bin of
/// `var` over `rows` (raw features). Empty bins carry weight 0 and no
/// averages.
pub fn partial_dependence(model: &Model, rows: &[&[f64]], var: PdVariable, edges: &[f64], par: Parallelism) -> Result<PartialDependenceReport> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config("bin edges must be strictly increasing with at least two entries".into()));
    }
    let layout = model.kernel.layout();
    let nb = edges.len() - 1;
    let parts = par.map_chunks(rows, 4096, |_, chunk| -> Result<Vec<[f64; 4]>> {
        let mut acc = vec![[0.0; 4]; nb + 1];
        let mut scratch = Scratch::default();
        for row in chunk {
            let slot = bin_of(edges, var.value(&layout, row)).unwrap_or(nb);
            if slot == nb {
                acc[nb][0] += 1.0;
                continue;
            }
            let theta = model.predict_with(row, &mut scratch)?;
            let (m, v) = theta.marginal(0).mean_var();
            let sd = v.sqrt();
            let a = &mut acc[slot];
            a[0] += 1.0;
            a[1] += m;
            a[2] += sd;
            a[3] += m / sd;
        }
        Ok(acc)
    });
    let mut total = vec![[0.0; 4]; nb + 1];
    for p in parts {
        for (t, a) in total.iter_mut().zip(p?) {
            for k in 0..4 {
                t[k] += a[k];
            }
        }
    }
    let inside: f64 = total[..nb].iter().map(|a| a[0]).sum();
    let bins = (0..nb)
        .map(|i| {
            let a = total[i];
            let n = a[0];
            let avg = |k: usize| (n > 0.0).then(|| a[k] / n);
            PdBin {
                lo: edges[i],
                hi: edges[i + 1],
                count: n as usize,
                weight: if inside > 0.0 { n / inside } else { 0.0 },
                mean: avg(1),
                std: avg(2),
                sharpe: avg(3),
            }
        })
        .collect();
    Ok(PartialDependenceReport { variable: var, bins, excluded: total[nb][0] as usize })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResponseGrid {
    /// Q, USD.
    pub sizes: Vec<f64>,
    /// δ, bps.
    pub distances: Vec<f64>,
}

impl Default for ResponseGrid {
    fn default() -> Self {
        Self { sizes: vec![1e3, 5e3, 1e4, 5e4, 1e5], distances: vec![0.1, 1.0, 5.0, 10.0, 50.0] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseCell {
    pub size: f64,
    pub distance_bps: f64,
    pub n: usize,
    /// Mean Sharpe change over the samples.
    pub mean_delta: f64,
    /// Sample variance of the change (N − 1 denominator).
    pub var_delta: f64,
    /// √N · mean / √var; absent when the variance is zero.
    pub t_stat: Option<f64>,
    /// Two-sided Student p-value with N − 1 degrees of freedom.
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceResponseReport {
    pub side: Side,
    /// Marginal of the predicted law whose Sharpe ratio is tracked.
    pub target: usize,
    pub n: usize,
    /// Row indices of the sampled states.
    pub samples: Vec<usize>,
    /// Q outer, δ inner.
    pub cells: Vec<ResponseCell>,
}

impl PriceResponseReport {
    pub fn cell(&self, size: f64, distance_bps: f64) -> Option<&ResponseCell> {
        self.cells.iter().find(|c| c.size == size && c.distance_bps == distance_bps)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("side,size_usd,distance_bps,n,mean_delta_sharpe,var_delta_sharpe,t_stat,p_value\n");
        for c in &self.cells {
            let t = c.t_stat.map(|v| v.to_string()).unwrap_or_else(|| "undefined".into());
            let p = c.p_value.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(s, "{},{},{},{},{},{},{t},{p}", self.side, c.size, c.distance_bps, c.n, c.mean_delta, c.var_delta);
        }
        s
    }
}

/// Mean, N − 1 variance, t statistic and two-sided p-value of `d`.
pub fn t_test(d: &[f64]) -> (f64, f64, Option<f64>, Option<f64>) {
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let constant = d.iter().all(|&x| x == d[0]);
    let var = if constant { 0.0 } else { d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0) };
    if !(var > 0.0) {
        return (mean, var, None, None);
    }
    let t = n.sqrt() * mean / var.sqrt();
    let dist = StudentsT::new(0.0, 1.0, n - 1.0).expect("n >= 2");
    let p = (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0);
    (mean, var, Some(t), Some(p))
}

/// Average change of the predicted Sharpe ratio when a hypothetical order of
/// size Q at δ bps is added to `side` of the primary book, over `n` states
/// drawn without replacement from `rows` with `seed`.
pub fn price_response(
    model: &Model,
    rows: &[&[f64]],
    side: Side,
    grid: &ResponseGrid,
    n: usize,
    seed: u64,
    target: usize,
    par: Parallelism,
) -> Result<PriceResponseReport> {
    if n < 2 {
        return Err(Error::Config("price response needs N >= 2".into()));
    }
    if rows.len() < n {
        return Err(Error::Config(format!("{} states available, {n} requested", rows.len())));
    }
    if target >= model.head().target_dim() {
        return Err(Error::Config(format!("target marginal {target} out of range")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = sample(&mut rng, rows.len(), n).into_vec();
    let block = model.kernel.layout().len();
    let base: Vec<f64> = samples.iter().map(|&i| model.predict(rows[i]).map(|t| t.marginal(target).sharpe())).collect::<Result<_>>()?;
    let cells: Vec<(f64, f64)> = grid.sizes.iter().flat_map(|&q| grid.distances.iter().map(move |&d| (q, d))).collect();
    let out = par.map(&cells, |&(q, d)| -> Result<ResponseCell> {
        let mut scratch = Scratch::default();
        let mut x = Vec::new();
        let mut diffs = Vec::with_capacity(n);
        for (&i, &s0) in samples.iter().zip(&base) {
            x.clear();
            x.extend_from_slice(rows[i]);
            if q != 0.0 {
                shift_order(&model.kernel, &mut x[..block], side, q, d, 1.0);
            }
            let s1 = model.predict_with(&x, &mut scratch)?.marginal(target).sharpe();
            diffs.push(s1 - s0);
        }
        let (mean_delta, var_delta, t_stat, p_value) = t_test(&diffs);
        Ok(ResponseCell { size: q, distance_bps: d, n, mean_delta, var_delta, t_stat, p_value })
    });
    Ok(PriceResponseReport { side, target, n, samples, cells: out.into_iter().collect::<Result<_>>()? })
}
