//! Streaming feature engine and labeled-observation builder.
//!
//! One engine tracks a fixed, ordered list of assets. The first asset is the
//! primary one: only its limit inserts are sampled, and its feature block
//! comes first in the concatenated input. Events for other symbols are
//! ignored. Multi-asset input must be merged in timestamp order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{FlowState, KernelConfig};
use crate::stream::{
    compute_distance, label_target, BookTop, EventBody, LobEvent, MidSeries, Side, MAX_DISTANCE_BPS, MIN_NOTIONAL_USD,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OrderFilter {
    pub min_notional: f64,
    pub max_distance_bps: f64,
}

impl Default for OrderFilter {
    fn default() -> Self {
        Self { min_notional: MIN_NOTIONAL_USD, max_distance_bps: MAX_DISTANCE_BPS }
    }
}

impl OrderFilter {
    #[inline]
    pub fn passes(&self, notional: f64, distance_bps: f64) -> bool {
        notional >= self.min_notional && distance_bps <= self.max_distance_bps
    }
}

/// A filter-passing limit insert on the primary asset, already applied to
/// the flow state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderSample {
    pub ts_ns: i64,
    pub side: Side,
    pub price: f64,
    pub notional: f64,
    pub distance_bps: f64,
    pub top: BookTop,
}

#[derive(Debug, Clone)]
struct AssetBook {
    symbol: String,
    state: FlowState,
    top: Option<BookTop>,
}

#[derive(Debug, Clone)]
pub struct FeatureEngine {
    kernel: KernelConfig,
    filter: OrderFilter,
    books: Vec<AssetBook>,
    block: usize,
    first_ns: Option<i64>,
    rejected_quotes: u64,
}

impl FeatureEngine {
    pub fn new(kernel: &KernelConfig, assets: &[String], filter: OrderFilter) -> Result<Self> {
        kernel.validate()?;
        if assets.is_empty() {
            return Err(Error::Config("at least one asset is required".into()));
        }
        let books = assets
            .iter()
            .map(|s| AssetBook { symbol: s.clone(), state: FlowState::new(kernel), top: None })
            .collect();
        Ok(Self {
            kernel: kernel.clone(),
            filter,
            books,
            block: kernel.layout().len(),
            first_ns: None,
            rejected_quotes: 0,
        })
    }

    pub fn kernel(&self) -> &KernelConfig {
        &self.kernel
    }

    /// Length of the concatenated input vector.
    pub fn dim(&self) -> usize {
        self.block * self.books.len()
    }

    pub fn block_len(&self) -> usize {
        self.block
    }

    pub fn first_ns(&self) -> Option<i64> {
        self.first_ns
    }

    pub fn rejected_quotes(&self) -> u64 {
        self.rejected_quotes
    }

    pub fn top(&self, asset: usize) -> Option<BookTop> {
        self.books[asset].top
    }

    /// Applies one event. Returns the order sample when it is a primary-asset
    /// limit insert that passes the filter and has a valid top of book.
    pub fn on_event(&mut self, ev: &LobEvent) -> Result<Option<OrderSample>> {
        let Some(idx) = self.books.iter().position(|b| b.symbol == ev.asset) else {
            return Ok(None);
        };
        self.first_ns.get_or_insert(ev.ts_ns);
        let book = &mut self.books[idx];
        match ev.body {
            EventBody::Bbo { bid, ask } => {
                book.state.advance_to(ev.ts_ns)?;
                match BookTop::new(bid, ask) {
                    Ok(t) => book.top = Some(t),
                    Err(_) => {
                        self.rejected_quotes += 1;
                        log::warn!("{}: rejected crossed quote {bid}/{ask} at {}", ev.asset, ev.ts_ns);
                    }
                }
                Ok(None)
            }
            EventBody::Trade { side, price, size } => {
                book.state.apply_trade(ev.ts_ns, side, price * size)?;
                Ok(None)
            }
            EventBody::LimitAdd { side, price, size } => {
                let Some(top) = book.top else {
                    book.state.advance_to(ev.ts_ns)?;
                    return Ok(None);
                };
                let notional = price * size;
                let distance_bps = compute_distance(side, price, &top);
                if !self.filter.passes(notional, distance_bps) {
                    book.state.advance_to(ev.ts_ns)?;
                    return Ok(None);
                }
                book.state.apply_limit(ev.ts_ns, side, notional, distance_bps)?;
                if idx != 0 {
                    return Ok(None);
                }
                Ok(Some(OrderSample { ts_ns: ev.ts_ns, side, price, notional, distance_bps, top }))
            }
        }
    }

    /// Concatenated raw features at `ts_ns`, primary asset first. Returns
    /// false when some asset has no quote yet.
    pub fn features_into(&self, ts_ns: i64, out: &mut [f64]) -> Result<bool> {
        if out.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: out.len() });
        }
        for (book, chunk) in self.books.iter().zip(out.chunks_mut(self.block)) {
            let Some(top) = book.top else { return Ok(false) };
            book.state.snapshot_into(ts_ns, top.spread_bps(), chunk)?;
        }
        Ok(true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObservationConfig {
    pub horizon_s: f64,
    pub filter: OrderFilter,
    /// Drop samples this soon after the first event; defaults to 10 / min β.
    pub warmup_s: Option<f64>,
}

impl Default for ObservationConfig {
    fn default() -> Self {
        Self { horizon_s: 1.0, filter: OrderFilter::default(), warmup_s: None }
    }
}

/// One training/evaluation sample anchored at a limit insert.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledObservation {
    pub event_index: usize,
    pub ts_ns: i64,
    /// Raw features including the order itself.
    pub x: Vec<f64>,
    /// Horizon mid move of the primary asset, bps.
    pub y: f64,
    /// Horizon mid move of the second asset, when there is one.
    pub y2: Option<f64>,
    pub notional: f64,
    pub distance_bps: f64,
    pub side: Side,
    pub top: BookTop,
}

/// Replays `events` and emits one observation per sampled limit insert with a
/// defined target.
pub fn build_observations(
    events: &[LobEvent],
    assets: &[String],
    kernel: &KernelConfig,
    cfg: &ObservationConfig,
) -> Result<Vec<LabeledObservation>> {
    let mut engine = FeatureEngine::new(kernel, assets, cfg.filter)?;
    let end = events.iter().map(|e| e.ts_ns).max().unwrap_or(i64::MIN);
    let series: Vec<MidSeries> = assets
        .iter()
        .map(|a| {
            let mut s = MidSeries::from_events(a, events);
            s.set_end(end);
            s
        })
        .collect();
    let warmup_ns = (cfg.warmup_s.unwrap_or_else(|| kernel.warmup_s()) * 1e9).round() as i64;
    let mut out = Vec::new();
    let mut last_ts = i64::MIN;
    for (i, ev) in events.iter().enumerate() {
        if ev.ts_ns < last_ts && assets.len() > 1 {
            return Err(Error::Ordering { line: i + 1, msg: "merged multi-asset stream is not time-sorted".into() });
        }
        last_ts = last_ts.max(ev.ts_ns);
        let Some(order) = engine.on_event(ev)? else { continue };
        if order.ts_ns - engine.first_ns().unwrap_or(order.ts_ns) < warmup_ns {
            continue;
        }
        let Some(y) = label_target(order.ts_ns, cfg.horizon_s, &series[0]) else { continue };
        let y2 = match series.get(1) {
            Some(s) => match label_target(order.ts_ns, cfg.horizon_s, s) {
                Some(v) => Some(v),
                None => continue,
            },
            None => None,
        };
        let mut x = vec![0.0; engine.dim()];
        if !engine.features_into(order.ts_ns, &mut x)? {
            continue;
        }
        out.push(LabeledObservation {
            event_index: i,
            ts_ns: order.ts_ns,
            x,
            y,
            y2,
            notional: order.notional,
            distance_bps: order.distance_bps,
            side: order.side,
            top: order.top,
        });
    }
    Ok(out)
}
