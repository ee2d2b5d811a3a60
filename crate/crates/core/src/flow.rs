//! Multi-scale exponentially decayed order-flow sums.
//!
//! For every side s, time scale β (s⁻¹) and distance scale η (bp⁻¹) the
//! state holds
//!
//! ```text
//! L[s][β][η](t) = Σ_{limit inserts on s, τ ≤ t} e^{−β(t−τ)} f(v) e^{−ηδ}
//! M[s][β](t)    = Σ_{trades on s, τ ≤ t}        e^{−β(t−τ)} f(v)
//! ```
//!
//! with f(v) = v in USD. Decay is lazy: sums are scaled by e^{−βΔt} only when
//! touched, which is exact by the semigroup property of the exponential.
//!
//! Feature layout (stable, serialized with models):
//! `[Ψ, L[b] (β outer, η inner), L[a], M[b] by β, M[a]]`, 31 values with the
//! default scales.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stream::Side;

/// Layout version mixed into the fingerprint; bump on any ordering change.
const LAYOUT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelConfig {
    /// Time scales, s⁻¹.
    pub betas: Vec<f64>,
    /// Distance scales, bp⁻¹.
    pub etas: Vec<f64>,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self { betas: vec![10.0, 100.0, 1000.0], etas: vec![0.001, 0.1, 1.0, 10.0] }
    }
}

impl KernelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.betas.is_empty() || self.etas.is_empty() {
            return Err(Error::Config("kernel scale sets must be non-empty".into()));
        }
        if self.betas.iter().chain(&self.etas).any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::Config("kernel scales must be positive and finite".into()));
        }
        Ok(())
    }

    pub fn layout(&self) -> FeatureLayout {
        FeatureLayout { n_beta: self.betas.len(), n_eta: self.etas.len() }
    }

    /// Warm-up window 10 / min β seconds, during which sums are still
    /// history-truncated.
    pub fn warmup_s(&self) -> f64 {
        10.0 / self.betas.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Identifies the feature semantics a model was trained on.
    pub fn fingerprint(&self) -> String {
        let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",");
        format!("layout-v{LAYOUT_VERSION};f=identity;betas={};etas={}", fmt(&self.betas), fmt(&self.etas))
    }
}

/// Index arithmetic for one asset's feature block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureLayout {
    pub n_beta: usize,
    pub n_eta: usize,
}

impl FeatureLayout {
    pub const SPREAD: usize = 0;

    #[inline]
    pub fn n_limit_per_side(&self) -> usize {
        self.n_beta * self.n_eta
    }

    #[inline]
    pub fn len(&self) -> usize {
        1 + 2 * self.n_limit_per_side() + 2 * self.n_beta
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn limit(&self, side: Side, b: usize, e: usize) -> usize {
        1 + side.index() * self.n_limit_per_side() + b * self.n_eta + e
    }

    #[inline]
    pub fn market(&self, side: Side, b: usize) -> usize {
        1 + 2 * self.n_limit_per_side() + side.index() * self.n_beta + b
    }

    /// Column names, e.g. `L_bid_b10_e0.1`, optionally prefixed by an asset.
    pub fn names(&self, cfg: &KernelConfig, prefix: &str) -> Vec<String> {
        let mut out = vec![format!("{prefix}spread_bps")];
        for side in ["bid", "ask"] {
            for b in &cfg.betas {
                for e in &cfg.etas {
                    out.push(format!("{prefix}L_{side}_b{b}_e{e}"));
                }
            }
        }
        for side in ["bid", "ask"] {
            for b in &cfg.betas {
                out.push(format!("{prefix}M_{side}_b{b}"));
            }
        }
        out
    }
}

/// A raw (un-normalized) feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub ts_ns: i64,
    pub values: Vec<f64>,
}

/// Per-asset bank of decayed kernel sums.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    betas: Vec<f64>,
    etas: Vec<f64>,
    layout: FeatureLayout,
    /// `[side][β][η]` flattened.
    limit: Vec<f64>,
    /// `[side][β]` flattened.
    market: Vec<f64>,
    last_ns: Option<i64>,
    decay: Vec<f64>,
}

impl FlowState {
    pub fn new(cfg: &KernelConfig) -> Self {
        let layout = cfg.layout();
        Self {
            betas: cfg.betas.clone(),
            etas: cfg.etas.clone(),
            layout,
            limit: vec![0.0; 2 * layout.n_limit_per_side()],
            market: vec![0.0; 2 * layout.n_beta],
            last_ns: None,
            decay: vec![1.0; layout.n_beta],
        }
    }

    pub fn layout(&self) -> FeatureLayout {
        self.layout
    }

    pub fn last_update_ns(&self) -> Option<i64> {
        self.last_ns
    }

    fn elapsed_s(&self, ts_ns: i64) -> Result<f64> {
        match self.last_ns {
            None => Ok(0.0),
            Some(last) if ts_ns < last => Err(Error::ClockSkew { event_ns: ts_ns, state_ns: last }),
            Some(last) => Ok((ts_ns - last) as f64 * 1e-9),
        }
    }

    /// Decays every sum to `ts_ns`.
    pub fn advance_to(&mut self, ts_ns: i64) -> Result<()> {
        let dt = self.elapsed_s(ts_ns)?;
        if dt > 0.0 {
            let ne = self.layout.n_eta;
            let nl = self.layout.n_limit_per_side();
            let nb = self.layout.n_beta;
            for (d, &beta) in self.decay.iter_mut().zip(&self.betas) {
                *d = (-beta * dt).exp();
            }
            for s in 0..2 {
                for b in 0..nb {
                    let d = self.decay[b];
                    for v in &mut self.limit[s * nl + b * ne..s * nl + (b + 1) * ne] {
                        *v *= d;
                    }
                    self.market[s * nb + b] *= d;
                }
            }
        }
        self.last_ns = Some(ts_ns);
        Ok(())
    }

    /// Limit insert of notional `v` (USD) at `distance_bps` from the touch.
    pub fn apply_limit(&mut self, ts_ns: i64, side: Side, v: f64, distance_bps: f64) -> Result<()> {
        self.advance_to(ts_ns)?;
        let ne = self.layout.n_eta;
        let base = side.index() * self.layout.n_limit_per_side();
        for (e, &eta) in self.etas.iter().enumerate() {
            let c = v * (-eta * distance_bps).exp();
            for b in 0..self.layout.n_beta {
                self.limit[base + b * ne + e] += c;
            }
        }
        Ok(())
    }

    /// Trade of notional `v` (USD) on `side`; a bid-side trade is a sell
    /// marketable order.
    pub fn apply_trade(&mut self, ts_ns: i64, side: Side, v: f64) -> Result<()> {
        self.advance_to(ts_ns)?;
        let nb = self.layout.n_beta;
        for m in &mut self.market[side.index() * nb..(side.index() + 1) * nb] {
            *m += v;
        }
        Ok(())
    }

    /// Writes the feature block at time `ts_ns` into `out` without mutating
    /// the state.
    pub fn snapshot_into(&self, ts_ns: i64, spread_bps: f64, out: &mut [f64]) -> Result<()> {
        if out.len() != self.layout.len() {
            return Err(Error::Dimension { expected: self.layout.len(), got: out.len() });
        }
        let dt = self.elapsed_s(ts_ns)?;
        let ne = self.layout.n_eta;
        let nb = self.layout.n_beta;
        let nl = self.layout.n_limit_per_side();
        out[FeatureLayout::SPREAD] = spread_bps;
        for b in 0..nb {
            let d = if dt > 0.0 { (-self.betas[b] * dt).exp() } else { 1.0 };
            for s in 0..2 {
                for e in 0..ne {
                    out[1 + s * nl + b * ne + e] = self.limit[s * nl + b * ne + e] * d;
                }
                out[1 + 2 * nl + s * nb + b] = self.market[s * nb + b] * d;
            }
        }
        Ok(())
    }

    pub fn snapshot(&self, ts_ns: i64, spread_bps: f64) -> Result<FeatureVector> {
        let mut values = vec![0.0; self.layout.len()];
        self.snapshot_into(ts_ns, spread_bps, &mut values)?;
        Ok(FeatureVector { ts_ns, values })
    }
}

/// Adds (sign = +1) or removes (sign = −1) an order's contribution
/// f(Q)·e^{−ηδ} to every limit cell of `side` in a single-asset block.
/// Removal floors cells at zero against round-off.
pub fn shift_order(cfg: &KernelConfig, block: &mut [f64], side: Side, notional: f64, distance_bps: f64, sign: f64) {
    let layout = cfg.layout();
    for (e, &eta) in cfg.etas.iter().enumerate() {
        let c = sign * notional * (-eta * distance_bps).exp();
        for b in 0..layout.n_beta {
            let cell = &mut block[layout.limit(side, b, e)];
            *cell = (*cell + c).max(0.0);
        }
    }
}

/// (x⁺, x⁰) for an order just inserted: `with_order` is the post-insertion
/// block, the second vector has the order's contribution removed.
pub fn counterfactual_pair(
    cfg: &KernelConfig,
    with_order: &[f64],
    side: Side,
    notional: f64,
    distance_bps: f64,
) -> (Vec<f64>, Vec<f64>) {
    let plus = with_order.to_vec();
    let mut zero = with_order.to_vec();
    shift_order(cfg, &mut zero, side, notional, distance_bps, -1.0);
    (plus, zero)
}

/// x⁺(Q, δ) for every grid cell, Q outer and δ inner, from a pre-insertion block.
pub fn hypothetical_insert(cfg: &KernelConfig, base: &[f64], side: Side, sizes: &[f64], distances: &[f64]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(sizes.len() * distances.len());
    for &q in sizes {
        for &d in distances {
            let mut x = base.to_vec();
            shift_order(cfg, &mut x, side, q, d, 1.0);
            out.push(x);
        }
    }
    out
}

/// Uniformly weighted limit-flow imbalance Σ_k (1/K) log((1+L_k^b)/(1+L_k^a)).
pub fn imbalance_lo(layout: &FeatureLayout, block: &[f64]) -> f64 {
    let k = layout.n_limit_per_side();
    let bid = &block[1..1 + k];
    let ask = &block[1 + k..1 + 2 * k];
    bid.iter().zip(ask).map(|(b, a)| b.ln_1p() - a.ln_1p()).sum::<f64>() / k as f64
}

/// Uniformly weighted market-flow imbalance over the β scales.
pub fn imbalance_mo(layout: &FeatureLayout, block: &[f64]) -> f64 {
    let k = layout.n_beta;
    let start = 1 + 2 * layout.n_limit_per_side();
    let bid = &block[start..start + k];
    let ask = &block[start + k..start + 2 * k];
    bid.iter().zip(ask).map(|(b, a)| b.ln_1p() - a.ln_1p()).sum::<f64>() / k as f64
}

/// Weighted imbalance over arbitrary paired cells; weights must sum to one.
pub fn weighted_imbalance(bid: &[f64], ask: &[f64], weights: &[f64]) -> f64 {
    bid.iter().zip(ask).zip(weights).map(|((b, a), w)| w * (b.ln_1p() - a.ln_1p())).sum()
}
