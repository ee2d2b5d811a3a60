//! Synthetic marked-Hawkes order-book stream with a known coupling between
//! limit-order flow and mid-price drift, plus injectable spoofing episodes.
//!
//! Four event types (limit bid, limit ask, trade bid, trade ask) follow a
//! linear Hawkes process with exponential kernels n_ij·γ·e^{−γt}, generated
//! by Ogata thinning inside fixed grid steps. At the end of every step the
//! mid moves by
//!
//! ```text
//! Δmid/mid·10⁴ = κ·I·dt + σ_m·(Ψ/Ψ̄)·√dt·N(0,1)
//! I = (1/K) Σ_η ln((1 + L_η^b)/(1 + L_η^a)),  L_η^s = Σ_orders v·e^{−η δ}·e^{−β (t − t_k)}
//! ```
//!
//! so the drift is a functional of the same decayed limit-flow sums the
//! feature engine computes, and volatility scales with the spread Ψ, which
//! follows a log Ornstein-Uhlenbeck process. A BBO event is emitted every step.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dist::{quad, sn_logpdf, sn_pdf, SkewNormalParams};
use crate::econ::LARGE_ORDER_USD;
use crate::error::{Error, Result};
use crate::flow::{imbalance_lo, FeatureLayout};
use crate::stream::{BookTop, EventBody, LobEvent, Side};

/// Event types, in matrix order.
pub const EVENT_TYPES: [&str; 4] = ["limit_bid", "limit_ask", "trade_bid", "trade_ask"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub asset: String,
    pub start_ns: i64,
    pub initial_mid: f64,
    /// Baseline intensities μ_i, events/s.
    pub baseline: [f64; 4],
    /// Branching ratios n_ij: excitation of type i by an event of type j.
    pub excitation: [[f64; 4]; 4],
    /// Kernel decay γ, 1/s.
    pub excitation_decay: f64,
    /// ln of the median order notional (USD).
    pub notional_log_mean: f64,
    pub notional_log_sd: f64,
    pub distance_mean_bps: f64,
    /// κ, bps/s per unit of imbalance.
    pub kappa: f64,
    pub drift_beta: f64,
    /// Depth decays (per bp); the imbalance averages one log-ratio per decay.
    pub drift_etas: Vec<f64>,
    /// σ_m, bps/√s at the mean spread.
    pub noise_bps: f64,
    pub spread_mean_bps: f64,
    /// Stationary standard deviation of ln Ψ.
    pub spread_log_sd: f64,
    /// Mean-reversion rate of ln Ψ, 1/s.
    pub spread_reversion: f64,
    pub dt_s: f64,
    /// Width of the ground-truth bins.
    pub truth_bin_s: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            asset: "SIM-USD".into(),
            start_ns: 1_700_000_000_000_000_000,
            initial_mid: 100.0,
            baseline: [30.0, 30.0, 8.0, 8.0],
            excitation: [
                [0.30, 0.05, 0.05, 0.0],
                [0.05, 0.30, 0.0, 0.05],
                [0.10, 0.0, 0.20, 0.05],
                [0.0, 0.10, 0.05, 0.20],
            ],
            excitation_decay: 5.0,
            notional_log_mean: 200f64.ln(),
            notional_log_sd: 1.0,
            distance_mean_bps: 5.0,
            kappa: 5.0,
            drift_beta: 10.0,
            drift_etas: vec![0.1],
            noise_bps: 1.0,
            spread_mean_bps: 1.0,
            spread_log_sd: 0.7,
            spread_reversion: 0.05,
            dt_s: 0.01,
            truth_bin_s: 1.0,
            seed: 0,
        }
    }
}

/// Gelfand estimate ‖Aᵏ‖^{1/k}, an upper bound on the spectral radius that
/// tightens with k.
pub fn spectral_radius(m: &[[f64; 4]; 4]) -> f64 {
    let mut p = *m;
    let mut log_scale = 0.0;
    let mut k = 1u32;
    while k < 1024 {
        let mut q = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                q[i][j] = (0..4).map(|l| p[i][l] * p[l][j]).sum();
            }
        }
        k *= 2;
        log_scale *= 2.0;
        let norm = q.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        if norm == 0.0 {
            return 0.0;
        }
        for r in &mut q {
            for v in r {
                *v /= norm;
            }
        }
        log_scale += norm.ln();
        p = q;
    }
    (log_scale / k as f64).exp()
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.asset.is_empty() || self.asset.contains(',') {
            return bad("asset name must be non-empty and comma-free");
        }
        if self.baseline.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return bad("baseline intensities must be positive");
        }
        if self.excitation.iter().flatten().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return bad("branching ratios must be non-negative");
        }
        let positive = [
            self.initial_mid,
            self.excitation_decay,
            self.notional_log_sd,
            self.distance_mean_bps,
            self.drift_beta,
            self.noise_bps,
            self.spread_mean_bps,
            self.spread_reversion,
            self.dt_s,
            self.truth_bin_s,
        ];
        if positive.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return bad("scales must be positive and finite");
        }
        if self.drift_etas.is_empty() {
            return bad("drift_etas must not be empty");
        }
        if !(self.drift_etas.iter().all(|&e| e >= 0.0) && self.spread_log_sd >= 0.0 && self.kappa.is_finite() && self.notional_log_mean.is_finite()) {
            return bad("drift_etas and spread_log_sd must be non-negative, kappa finite");
        }
        let rho = spectral_radius(&self.excitation);
        if rho >= 1.0 {
            return Err(Error::Config(format!("excitation matrix is explosive (spectral radius {rho:.4} >= 1)")));
        }
        Ok(())
    }

    /// Stationary event rates (I − N)⁻¹ μ, by fixed-point iteration.
    pub fn stationary_rates(&self) -> [f64; 4] {
        let mut r = self.baseline;
        for _ in 0..10_000 {
            let mut next = self.baseline;
            for (i, n) in next.iter_mut().enumerate() {
                *n += (0..4).map(|j| self.excitation[i][j] * r[j]).sum::<f64>();
            }
            let done = next.iter().zip(&r).all(|(a, b)| (a - b).abs() <= 1e-12 * a);
            r = next;
            if done {
                break;
            }
        }
        r
    }
}

/// Per-bin ground truth: start/end mid and the time-averaged imbalance I
/// that drove the drift inside the bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthBin {
    pub start_ns: i64,
    pub mid_start: f64,
    pub mid_end: f64,
    pub mean_imbalance: f64,
}

impl TruthBin {
    pub fn move_bps(&self) -> f64 {
        (self.mid_end - self.mid_start) / self.mid_start * 1e4
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub events: Vec<LobEvent>,
    pub truth: Vec<TruthBin>,
    /// Events per type.
    pub counts: [u64; 4],
}

fn to_ns(start_ns: i64, t: f64) -> i64 {
    start_ns + (t * 1e9).round() as i64
}

/// Generates `duration_s` seconds of stream. Deterministic given the config.
pub fn simulate(cfg: &SimConfig, duration_s: f64) -> Result<SimOutput> {
    cfg.validate()?;
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(Error::Config("duration must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let notional = LogNormal::new(cfg.notional_log_mean, cfg.notional_log_sd).map_err(|e| Error::Config(e.to_string()))?;
    let distance = Exp::new(1.0 / cfg.distance_mean_bps).map_err(|e| Error::Config(e.to_string()))?;
    let gamma = cfg.excitation_decay;
    let dt = cfg.dt_s;
    let steps = (duration_s / dt).round().max(1.0) as u64;
    let bin_steps = ((cfg.truth_bin_s / dt).round() as u64).max(1);

    let rate_guess: f64 = cfg.stationary_rates().iter().sum();
    let mut events = Vec::with_capacity((duration_s * (rate_guess + 1.0 / dt) * 1.05) as usize);
    let mut truth = Vec::with_capacity((steps / bin_steps) as usize + 1);
    let mut counts = [0u64; 4];

    let mut excite = [0.0f64; 4];
    // flow[side][k]: decayed limit notional at depth decay drift_etas[k]
    let n_eta = cfg.drift_etas.len();
    let mut flow = [vec![0.0f64; n_eta], vec![0.0f64; n_eta]];
    let mut mid = cfg.initial_mid;
    let ln_mean = cfg.spread_mean_bps.ln();
    let mut ln_spread = ln_mean;
    let ou_decay = (-cfg.spread_reversion * dt).exp();
    let ou_noise = cfg.spread_log_sd * (1.0 - ou_decay * ou_decay).sqrt();
    let (mut bin_start_mid, mut bin_i_sum, mut bin_start_ns) = (mid, 0.0, cfg.start_ns);

    for step in 0..steps {
        let t0 = step as f64 * dt;
        let t1 = t0 + dt;
        let step_ns = to_ns(cfg.start_ns, t0);
        let spread = ln_spread.exp();
        let half = spread * 0.5e-4 * mid;
        let top = BookTop { best_bid: mid - half, best_ask: mid + half };
        events.push(LobEvent::bbo(step_ns, &cfg.asset, top.best_bid, top.best_ask));

        // Ogata thinning; between events the intensity only decays, so its
        // current value bounds it until the next accepted event.
        let mut t = t0;
        let mut flow_t = t0;
        loop {
            let lam_bar: f64 = (0..4).map(|i| cfg.baseline[i] + (0..4).map(|j| cfg.excitation[i][j] * excite[j]).sum::<f64>()).sum();
            let w: f64 = rng.sample::<f64, _>(Exp::new(lam_bar).expect("positive rate"));
            let next = t + w;
            let stop = next >= t1;
            let decay = (-gamma * ((if stop { t1 } else { next }) - t)).exp();
            excite.iter_mut().for_each(|e| *e *= decay);
            if stop {
                break;
            }
            t = next;
            let lam: [f64; 4] = std::array::from_fn(|i| cfg.baseline[i] + (0..4).map(|j| cfg.excitation[i][j] * excite[j]).sum::<f64>());
            let total: f64 = lam.iter().sum();
            let u: f64 = rng.random::<f64>() * lam_bar;
            if u > total {
                continue;
            }
            let mut kind = 3;
            let mut acc = 0.0;
            for (i, l) in lam.iter().enumerate() {
                acc += l;
                if u <= acc {
                    kind = i;
                    break;
                }
            }
            excite[kind] += gamma;
            counts[kind] += 1;
            let ts = to_ns(cfg.start_ns, t);
            let v: f64 = notional.sample(&mut rng);
            match kind {
                0 | 1 => {
                    let side = if kind == 0 { Side::Bid } else { Side::Ask };
                    let d: f64 = distance.sample(&mut rng);
                    let k = top.mid() * 1e-4;
                    let price = match side {
                        Side::Bid => top.best_bid - d * k,
                        Side::Ask => top.best_ask + d * k,
                    };
                    if price <= 0.0 {
                        continue;
                    }
                    let fd = (-cfg.drift_beta * (t - flow_t)).exp();
                    flow.iter_mut().flatten().for_each(|f| *f *= fd);
                    flow_t = t;
                    for (f, &e) in flow[side.index()].iter_mut().zip(&cfg.drift_etas) {
                        *f += v * (-e * d).exp();
                    }
                    events.push(LobEvent::limit_add(ts, &cfg.asset, side, price, v / price));
                }
                _ => {
                    let side = if kind == 2 { Side::Bid } else { Side::Ask };
                    let price = match side {
                        Side::Bid => top.best_bid,
                        Side::Ask => top.best_ask,
                    };
                    events.push(LobEvent::trade(ts, &cfg.asset, side, price, v / price));
                }
            }
        }
        let fd = (-cfg.drift_beta * (t1 - flow_t)).exp();
        flow.iter_mut().flatten().for_each(|f| *f *= fd);

        let imbalance = flow[0].iter().zip(&flow[1]).map(|(b, a)| b.ln_1p() - a.ln_1p()).sum::<f64>() / n_eta as f64;
        let z: f64 = rng.sample(StandardNormal);
        mid *= 1.0 + (cfg.kappa * imbalance * dt + cfg.noise_bps * (spread / cfg.spread_mean_bps) * dt.sqrt() * z) * 1e-4;
        let zs: f64 = rng.sample(StandardNormal);
        ln_spread = ln_mean + (ln_spread - ln_mean) * ou_decay + ou_noise * zs;

        bin_i_sum += imbalance;
        if (step + 1) % bin_steps == 0 {
            truth.push(TruthBin {
                start_ns: bin_start_ns,
                mid_start: bin_start_mid,
                mid_end: mid,
                mean_imbalance: bin_i_sum / bin_steps as f64,
            });
            bin_start_mid = mid;
            bin_i_sum = 0.0;
            bin_start_ns = to_ns(cfg.start_ns, t1);
        }
    }
    let end_ns = to_ns(cfg.start_ns, steps as f64 * dt);
    let half = ln_spread.exp() * 0.5e-4 * mid;
    events.push(LobEvent::bbo(end_ns, &cfg.asset, mid - half, mid + half));
    Ok(SimOutput { events, truth, counts })
}

/// One layered spoofing episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpoofEpisode {
    pub start_ns: i64,
    pub side: Side,
    /// (notional USD, distance bps) per layer.
    pub layers: Vec<(f64, f64)>,
    /// Spacing between consecutive layers.
    pub layer_gap_ns: i64,
    /// Duration of the engineered drift ramp.
    pub lifetime_s: f64,
    /// Mid shift reached at the end of the ramp, bps (positive values push
    /// the price away from the spoof side).
    pub drift_bps: f64,
}

/// Ground-truth row of the labels file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpoofLabel {
    pub ts_ns: i64,
    pub asset: String,
    pub side: Side,
    pub notional: f64,
    pub distance_bps: f64,
    pub episode_id: usize,
}

pub const LABELS_HEADER: &str = "ts_ns,asset,side,notional,distance_bps,episode_id";

impl SpoofEpisode {
    fn validate(&self, first: i64, last: i64) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Config("episode without layers".into()));
        }
        if let Some(&(n, d)) = self.layers.iter().find(|(n, d)| !(*n >= LARGE_ORDER_USD && *d >= 0.0 && d.is_finite())) {
            return Err(Error::Config(format!("layer ({n}, {d}) must have notional >= {LARGE_ORDER_USD} and distance >= 0")));
        }
        if !(self.lifetime_s > 0.0) || self.layer_gap_ns < 0 || !self.drift_bps.is_finite() {
            return Err(Error::Config("episode lifetime must be positive, gap non-negative".into()));
        }
        let end = self.start_ns + self.layer_gap_ns * (self.layers.len() as i64 - 1);
        if self.start_ns < first || end > last {
            return Err(Error::Config(format!("episode [{}, {end}] outside the stream [{first}, {last}]", self.start_ns)));
        }
        Ok(())
    }

    /// Signed mid shift (bps) at `ts`.
    fn shift_bps(&self, ts: i64) -> f64 {
        if ts < self.start_ns {
            return 0.0;
        }
        let ramp = ((ts - self.start_ns) as f64 * 1e-9 / self.lifetime_s).min(1.0);
        let sign = match self.side {
            Side::Bid => 1.0,
            Side::Ask => -1.0,
        };
        sign * self.drift_bps * ramp
    }
}

/// Recipe for random layered episodes spread evenly over a stream: one
/// episode per equal slice, layer k placed at
/// `first_distance_bps + k·distance_step_bps` plus uniform jitter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodePlan {
    pub count: usize,
    pub layers: usize,
    pub min_notional: f64,
    pub max_notional: f64,
    pub first_distance_bps: f64,
    pub distance_step_bps: f64,
    pub distance_jitter_bps: f64,
    pub layer_gap_ns: i64,
    pub lifetime_s: f64,
    pub drift_bps: f64,
    /// Quiet time kept free at both ends of the stream.
    pub margin_s: f64,
}

impl Default for EpisodePlan {
    fn default() -> Self {
        Self {
            count: 50,
            layers: 3,
            min_notional: 5e3,
            max_notional: 5e4,
            first_distance_bps: 6.0,
            distance_step_bps: 4.0,
            distance_jitter_bps: 2.0,
            layer_gap_ns: 2_000_000,
            lifetime_s: 2.0,
            drift_bps: 3.0,
            margin_s: 10.0,
        }
    }
}

impl EpisodePlan {
    pub fn generate(&self, first_ns: i64, last_ns: i64, seed: u64) -> Result<Vec<SpoofEpisode>> {
        let margin = (self.margin_s * 1e9) as i64;
        let span = (last_ns - first_ns - 2 * margin - self.layer_gap_ns * self.layers as i64) as f64;
        if self.count > 0 && span <= 0.0 {
            return Err(Error::Config(format!("stream too short for episodes with a {}s margin", self.margin_s)));
        }
        if !(self.min_notional <= self.max_notional) || self.distance_jitter_bps < 0.0 {
            return Err(Error::Config("episode plan ranges are inverted".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let episodes = (0..self.count)
            .map(|i| {
                let slot = (i as f64 + rng.random_range(0.1..0.9)) / self.count as f64;
                let side = if rng.random::<bool>() { Side::Bid } else { Side::Ask };
                let layers = (0..self.layers)
                    .map(|k| {
                        let n = self.min_notional + (self.max_notional - self.min_notional) * rng.random::<f64>();
                        let d = self.first_distance_bps + self.distance_step_bps * k as f64 + self.distance_jitter_bps * rng.random::<f64>();
                        (n, d)
                    })
                    .collect();
                SpoofEpisode {
                    start_ns: first_ns + margin + (span * slot) as i64,
                    side,
                    layers,
                    layer_gap_ns: self.layer_gap_ns,
                    lifetime_s: self.lifetime_s,
                    drift_bps: self.drift_bps,
                }
            })
            .collect();
        Ok(episodes)
    }
}

fn scale_event(ev: &mut LobEvent, f: f64) {
    match &mut ev.body {
        EventBody::LimitAdd { price, .. } | EventBody::Trade { price, .. } => *price *= f,
        EventBody::Bbo { bid, ask } => {
            *bid *= f;
            *ask *= f;
        }
    }
}

/// Inserts the layers of every episode into a single-asset stream and
/// multiplies all later prices by Π(1 + shift/10⁴): a linear ramp over the
/// episode lifetime, then held.
pub fn inject_spoofs(events: &[LobEvent], episodes: &[SpoofEpisode]) -> Result<(Vec<LobEvent>, Vec<SpoofLabel>)> {
    if episodes.is_empty() {
        return Ok((events.to_vec(), Vec::new()));
    }
    let (Some(first), Some(last)) = (events.first(), events.last()) else {
        return Err(Error::Config("cannot inject into an empty stream".into()));
    };
    let asset = first.asset.clone();
    for ep in episodes {
        ep.validate(first.ts_ns, last.ts_ns)?;
    }
    let factor = |ts: i64| episodes.iter().map(|e| 1.0 + e.shift_bps(ts) * 1e-4).product::<f64>();
    let mut out: Vec<LobEvent> = events
        .iter()
        .map(|ev| {
            let mut ev = ev.clone();
            let f = factor(ev.ts_ns);
            scale_event(&mut ev, f);
            ev
        })
        .collect();
    let bbo_ts: Vec<(i64, BookTop)> = out
        .iter()
        .filter_map(|e| match e.body {
            EventBody::Bbo { bid, ask } => Some((e.ts_ns, BookTop { best_bid: bid, best_ask: ask })),
            _ => None,
        })
        .collect();
    let mut injected = Vec::new();
    let mut labels = Vec::new();
    for (id, ep) in episodes.iter().enumerate() {
        for (j, &(notional, d)) in ep.layers.iter().enumerate() {
            let ts = ep.start_ns + ep.layer_gap_ns * j as i64;
            let idx = bbo_ts.partition_point(|(t, _)| *t <= ts);
            if idx == 0 {
                return Err(Error::Config(format!("no BBO before injected order at {ts}")));
            }
            let top = bbo_ts[idx - 1].1;
            let k = top.mid() * 1e-4;
            let price = match ep.side {
                Side::Bid => top.best_bid - d * k,
                Side::Ask => top.best_ask + d * k,
            };
            injected.push(LobEvent::limit_add(ts, &asset, ep.side, price, notional / price));
            labels.push(SpoofLabel { ts_ns: ts, asset: asset.clone(), side: ep.side, notional, distance_bps: d, episode_id: id });
        }
    }
    // stable: injected orders follow original events sharing their timestamp
    out.extend(injected);
    let n_orig = events.len();
    let mut order: Vec<usize> = (0..out.len()).collect();
    order.sort_by_key(|&i| (out[i].ts_ns, i >= n_orig, i));
    let merged = order.into_iter().map(|i| out[i].clone()).collect();
    labels.sort_by_key(|l| l.ts_ns);
    Ok((merged, labels))
}

pub fn write_labels<W: Write>(mut w: W, labels: &[SpoofLabel]) -> Result<()> {
    writeln!(w, "{LABELS_HEADER}")?;
    for l in labels {
        writeln!(w, "{},{},{},{},{},{}", l.ts_ns, l.asset, l.side, l.notional, l.distance_bps, l.episode_id)?;
    }
    Ok(())
}

pub fn read_labels<R: BufRead>(r: R) -> Result<Vec<SpoofLabel>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || (i == 0 && line == LABELS_HEADER) {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let err = |msg: String| Error::Parse { line: i + 1, msg };
        if f.len() != 6 {
            return Err(err(format!("expected 6 fields, got {}", f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| err(format!("{s:?}: {e}")));
        out.push(SpoofLabel {
            ts_ns: f[0].parse().map_err(|e| err(format!("ts_ns: {e}")))?,
            asset: f[1].to_string(),
            side: f[2].parse().map_err(|e| err(format!("side: {e}")))?,
            notional: num(f[3])?,
            distance_bps: num(f[4])?,
            episode_id: f[5].parse().map_err(|e| err(format!("episode_id: {e}")))?,
        });
    }
    Ok(out)
}

/// Draws from SN(μ, σ, α) via Z = b|U₀| + √(1−b²)U₁.
pub fn sample_skew_normal<R: Rng + ?Sized>(p: &SkewNormalParams, rng: &mut R) -> f64 {
    let b = p.alpha / (1.0 + p.alpha * p.alpha).sqrt();
    let u0: f64 = rng.sample(StandardNormal);
    let u1: f64 = rng.sample(StandardNormal);
    p.mu + p.sigma * (b * u0.abs() + (1.0 - b * b).sqrt() * u1)
}

/// Differential entropy of the standard skew-normal SN(0, 1, α).
pub fn sn_entropy(alpha: f64) -> f64 {
    let p = SkewNormalParams { mu: 0.0, sigma: 1.0, alpha };
    let f = |z: f64| {
        let d = sn_pdf(&p, z);
        if d > 0.0 {
            -d * sn_logpdf(&p, z)
        } else {
            0.0
        }
    };
    quad::integrate(f, -40.0, 0.0, 1e-14, 1e-13).value + quad::integrate(f, 0.0, 40.0, 1e-14, 1e-13).value
}

/// Known conditional law of a relabelled target:
/// y | x ~ SN(a·I^LO(x), s₀ + s₁·Ψ(x), α).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnownLaw {
    pub a: f64,
    pub s0: f64,
    pub s1: f64,
    pub alpha: f64,
}

impl KnownLaw {
    pub fn params(&self, layout: &FeatureLayout, x: &[f64]) -> SkewNormalParams {
        SkewNormalParams {
            mu: self.a * imbalance_lo(layout, x),
            sigma: self.s0 + self.s1 * x[FeatureLayout::SPREAD],
            alpha: self.alpha,
        }
    }

    /// E[−ln f(y|x)] = ln σ(x) + H(α).
    pub fn expected_nll(&self, layout: &FeatureLayout, x: &[f64], entropy: f64) -> f64 {
        self.params(layout, x).sigma.ln() + entropy
    }
}
