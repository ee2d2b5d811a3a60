//! End-to-end flows: observations → fitted model, and event stream →
//! verdicts with latency accounting.

use std::collections::HashMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::econ::{expected_gain, iso8601, judge, Fees, SpoofScenario, SpoofVerdict, LARGE_ORDER_USD};
use crate::engine::{FeatureEngine, LabeledObservation, OrderFilter};
use crate::error::{Error, Result};
use crate::flow::{shift_order, KernelConfig};
use crate::net::{train, Dataset, HeadKind, Model, Scratch, TrainConfig, TrainReport};
use crate::preprocess::{fit_transform, FeatureTransform};
use crate::sim::SpoofLabel;
use crate::stream::{LobEvent, Side};

/// Normalized inputs and targets for `head`.
pub fn to_dataset(obs: &[LabeledObservation], transform: &FeatureTransform, head: HeadKind) -> Result<Dataset> {
    let mut data = Dataset::with_capacity(transform.dim(), head.target_dim(), obs.len());
    let mut z = vec![0.0; transform.dim()];
    for o in obs {
        transform.apply_into(&o.x, &mut z)?;
        match head {
            HeadKind::BivariateGaussian => {
                let y2 = o.y2.ok_or_else(|| Error::Config("bivariate head needs a second asset".into()))?;
                data.push(&z, &[o.y, y2]);
            }
            _ => data.push(&z, &[o.y]),
        }
    }
    Ok(data)
}

/// Fits the feature transform on the training half and trains the network
/// on time-sorted observations.
pub fn fit_model(
    obs: &[LabeledObservation],
    kernel: &KernelConfig,
    assets: &[String],
    horizon_s: f64,
    head: HeadKind,
    cfg: &TrainConfig,
) -> Result<(Model, TrainReport)> {
    if obs.len() < 2 {
        return Err(Error::Config(format!("need at least 2 observations, got {}", obs.len())));
    }
    let rows: Vec<&[f64]> = obs[..obs.len() / 2].iter().map(|o| o.x.as_slice()).collect();
    let transform = fit_transform(&rows, cfg.parallelism)?;
    let data = to_dataset(obs, &transform, head)?;
    let (mlp, report) = train(head, &data, cfg)?;
    Ok((Model::new(mlp, transform, kernel.clone(), assets.to_vec(), horizon_s)?, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectConfig {
    pub threshold_notional: f64,
    pub bona_fide_notional: f64,
    pub bona_fide_distance_bps: f64,
    pub fees: Fees,
    pub filter: OrderFilter,
}

impl Default for DetectConfig {
    fn default() -> Self {
        Self {
            threshold_notional: LARGE_ORDER_USD,
            bona_fide_notional: 100.0,
            bona_fide_distance_bps: 0.0,
            fees: Fees::default(),
            filter: OrderFilter::default(),
        }
    }
}

/// Streaming scorer: one verdict per filter-passing primary-asset insert.
pub struct Detector<'m> {
    model: &'m Model,
    cfg: DetectConfig,
    engine: FeatureEngine,
    scratch: Scratch,
    x_plus: Vec<f64>,
    x_zero: Vec<f64>,
    unscored: u64,
}

impl<'m> Detector<'m> {
    pub fn new(model: &'m Model, cfg: DetectConfig) -> Result<Self> {
        let engine = FeatureEngine::new(&model.kernel, &model.assets, cfg.filter)?;
        let dim = engine.dim();
        if dim != model.input_dim() {
            return Err(Error::Dimension { expected: model.input_dim(), got: dim });
        }
        Ok(Self { model, cfg, engine, scratch: Scratch::default(), x_plus: vec![0.0; dim], x_zero: vec![0.0; dim], unscored: 0 })
    }

    /// Inserts that passed the filter but could not be scored because some
    /// secondary asset had no quote yet.
    pub fn unscored(&self) -> u64 {
        self.unscored
    }

    pub fn on_event(&mut self, ev: &LobEvent) -> Result<Option<SpoofVerdict>> {
        let start = Instant::now();
        let Some(order) = self.engine.on_event(ev)? else { return Ok(None) };
        if !self.engine.features_into(order.ts_ns, &mut self.x_plus)? {
            self.unscored += 1;
            return Ok(None);
        }
        self.x_zero.copy_from_slice(&self.x_plus);
        let block = self.engine.block_len();
        shift_order(&self.model.kernel, &mut self.x_zero[..block], order.side, order.notional, order.distance_bps, -1.0);
        let scenario = SpoofScenario {
            spoof_side: order.side,
            spoof_notional: order.notional,
            spoof_distance_bps: order.distance_bps,
            bona_fide_notional: self.cfg.bona_fide_notional,
            bona_fide_distance_bps: self.cfg.bona_fide_distance_bps,
            fees: self.cfg.fees,
        };
        let g = expected_gain(self.model, &self.x_plus, &self.x_zero, &order.top, &scenario, &mut self.scratch)?;
        let mut v = SpoofVerdict {
            timestamp: iso8601(order.ts_ns),
            ts_ns: order.ts_ns,
            asset: ev.asset.clone(),
            side: order.side,
            price: order.price,
            notional: order.notional,
            distance_bps: order.distance_bps,
            delta_c: g.delta_c,
            suspicious: judge(order.notional, g.delta_c, self.cfg.threshold_notional),
            theta_plus: g.theta_plus,
            theta_zero: g.theta_zero,
            scenario,
            latency_ns: 0,
        };
        v.latency_ns = start.elapsed().as_nanos() as u64;
        Ok(Some(v))
    }
}

/// Nearest-rank latency percentiles.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LatencyStats {
    pub n: usize,
    pub p50_ns: u64,
    pub p95_ns: u64,
    pub p99_ns: u64,
    pub mean_ns: f64,
    pub max_ns: u64,
}

impl LatencyStats {
    pub fn from_samples(mut v: Vec<u64>) -> Self {
        if v.is_empty() {
            return Self::default();
        }
        v.sort_unstable();
        let rank = |p: f64| v[((p * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1];
        Self {
            n: v.len(),
            p50_ns: rank(0.50),
            p95_ns: rank(0.95),
            p99_ns: rank(0.99),
            mean_ns: v.iter().map(|&x| x as f64).sum::<f64>() / v.len() as f64,
            max_ns: *v.last().unwrap(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectSummary {
    pub events: u64,
    pub orders_scored: u64,
    pub unscored: u64,
    pub large_orders: u64,
    pub suspicious: u64,
    /// suspicious / large; absent when there are no large orders.
    pub suspicious_share_of_large: Option<f64>,
    pub latency: LatencyStats,
    pub wall_s: f64,
    /// Scored orders per second of wall time over the whole stream.
    pub throughput_per_s: f64,
}

/// Streams `events` through a [`Detector`], handing each verdict to `sink`.
/// The first `warmup` verdicts are excluded from latency statistics.
pub fn run_detection<I, F>(model: &Model, events: I, cfg: DetectConfig, warmup: usize, mut sink: F) -> Result<DetectSummary>
where
    I: IntoIterator<Item = Result<LobEvent>>,
    F: FnMut(&SpoofVerdict) -> Result<()>,
{
    let mut det = Detector::new(model, cfg)?;
    let mut latencies = Vec::new();
    let (mut n_events, mut scored, mut large, mut suspicious) = (0u64, 0u64, 0u64, 0u64);
    let started = Instant::now();
    for ev in events {
        let ev = ev?;
        n_events += 1;
        let Some(v) = det.on_event(&ev)? else { continue };
        scored += 1;
        large += (v.notional >= cfg.threshold_notional) as u64;
        suspicious += v.suspicious as u64;
        if scored as usize > warmup {
            latencies.push(v.latency_ns);
        }
        sink(&v)?;
    }
    let wall_s = started.elapsed().as_secs_f64();
    Ok(DetectSummary {
        events: n_events,
        orders_scored: scored,
        unscored: det.unscored(),
        large_orders: large,
        suspicious,
        suspicious_share_of_large: (large > 0).then(|| suspicious as f64 / large as f64),
        latency: LatencyStats::from_samples(latencies),
        wall_s,
        throughput_per_s: if wall_s > 0.0 { scored as f64 / wall_s } else { 0.0 },
    })
}

/// Detection quality against injected ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DetectionScore {
    pub labeled: u64,
    /// Labeled orders that received a verdict.
    pub labeled_scored: u64,
    pub labeled_flagged: u64,
    pub recall: f64,
    pub flagged: u64,
    pub precision: f64,
    pub normal_small: u64,
    pub normal_small_flagged: u64,
    /// Flag rate among unlabeled orders below the size threshold.
    pub false_positive_rate_small: f64,
    pub normal_large: u64,
    pub normal_large_flagged: u64,
}

/// Matches verdicts to labels by timestamp, side and notional.
pub struct GroundTruth {
    labels: HashMap<(i64, Side), Vec<f64>>,
    threshold: f64,
    score: DetectionScore,
}

impl GroundTruth {
    pub fn new(labels: &[SpoofLabel], threshold_notional: f64) -> Self {
        let mut map: HashMap<(i64, Side), Vec<f64>> = HashMap::new();
        for l in labels {
            map.entry((l.ts_ns, l.side)).or_default().push(l.notional);
        }
        let score = DetectionScore { labeled: labels.len() as u64, ..Default::default() };
        Self { labels: map, threshold: threshold_notional, score }
    }

    fn take_label(&mut self, v: &SpoofVerdict) -> bool {
        let Some(list) = self.labels.get_mut(&(v.ts_ns, v.side)) else { return false };
        match list.iter().position(|&n| (n - v.notional).abs() <= 1e-6 * n) {
            Some(i) => {
                list.swap_remove(i);
                true
            }
            None => false,
        }
    }

    pub fn observe(&mut self, v: &SpoofVerdict) {
        let labeled = self.take_label(v);
        let s = &mut self.score;
        s.flagged += v.suspicious as u64;
        if labeled {
            s.labeled_scored += 1;
            s.labeled_flagged += v.suspicious as u64;
        } else if v.notional < self.threshold {
            s.normal_small += 1;
            s.normal_small_flagged += v.suspicious as u64;
        } else {
            s.normal_large += 1;
            s.normal_large_flagged += v.suspicious as u64;
        }
    }

    pub fn finish(self) -> DetectionScore {
        let mut s = self.score;
        let ratio = |a: u64, b: u64| if b > 0 { a as f64 / b as f64 } else { 0.0 };
        s.recall = ratio(s.labeled_flagged, s.labeled);
        s.precision = ratio(s.labeled_flagged, s.flagged);
        s.false_positive_rate_small = ratio(s.normal_small_flagged, s.normal_small);
        s
    }
}
