//! Level-3 event records: parsing, top-of-book tracking, order distance and
//! horizon labels.
//!
//! Record format (CSV, UTF-8, optionally gzip-compressed):
//!
//! ```text
//! ts_ns,asset,kind,side,price,size,bid,ask
//! 1733356078123456789,BTC-USD,LIMIT_ADD,BID,99990.0,0.5,,
//! 1733356078123500000,BTC-USD,TRADE,ASK,100010.0,0.02,,
//! 1733356078124000000,BTC-USD,BBO,,,,99990.0,100010.0
//! ```
//!
//! Inapplicable columns are empty; trailing empty columns may be omitted.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "ts_ns,asset,kind,side,price,size,bid,ask";

/// Minimum order notional (USD) kept for modelling.
pub const MIN_NOTIONAL_USD: f64 = 50.0;
/// Maximum placement distance (bps), i.e. ±20% of the mid.
pub const MAX_DISTANCE_BPS: f64 = 2000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Side {
    Bid,
    Ask,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Bid => Side::Ask,
            Side::Ask => Side::Bid,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Side::Bid => 0,
            Side::Ask => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Bid => "BID",
            Side::Ask => "ASK",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Side {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "BID" | "bid" | "B" | "b" => Ok(Side::Bid),
            "ASK" | "ask" | "A" | "a" => Ok(Side::Ask),
            other => Err(format!("unknown side {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventBody {
    LimitAdd { side: Side, price: f64, size: f64 },
    /// A trade on `side`: a bid-side trade is a sell marketable order.
    Trade { side: Side, price: f64, size: f64 },
    Bbo { bid: f64, ask: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LobEvent {
    pub ts_ns: i64,
    pub asset: String,
    pub body: EventBody,
}

impl LobEvent {
    pub fn limit_add(ts_ns: i64, asset: &str, side: Side, price: f64, size: f64) -> Self {
        Self { ts_ns, asset: asset.to_owned(), body: EventBody::LimitAdd { side, price, size } }
    }

    pub fn trade(ts_ns: i64, asset: &str, side: Side, price: f64, size: f64) -> Self {
        Self { ts_ns, asset: asset.to_owned(), body: EventBody::Trade { side, price, size } }
    }

    pub fn bbo(ts_ns: i64, asset: &str, bid: f64, ask: f64) -> Self {
        Self { ts_ns, asset: asset.to_owned(), body: EventBody::Bbo { bid, ask } }
    }

    /// Notional (USD) = size × price, for limit inserts and trades.
    pub fn notional(&self) -> Option<f64> {
        match self.body {
            EventBody::LimitAdd { price, size, .. } | EventBody::Trade { price, size, .. } => Some(price * size),
            EventBody::Bbo { .. } => None,
        }
    }

    /// One CSV record, no trailing newline.
    pub fn to_csv(&self) -> String {
        match self.body {
            EventBody::LimitAdd { side, price, size } => {
                format!("{},{},LIMIT_ADD,{},{},{},,", self.ts_ns, self.asset, side, price, size)
            }
            EventBody::Trade { side, price, size } => {
                format!("{},{},TRADE,{},{},{},,", self.ts_ns, self.asset, side, price, size)
            }
            EventBody::Bbo { bid, ask } => format!("{},{},BBO,,,,{},{}", self.ts_ns, self.asset, bid, ask),
        }
    }
}

fn field<'a>(fields: &[&'a str], i: usize) -> &'a str {
    fields.get(i).map(|s| s.trim()).unwrap_or("")
}

fn positive(fields: &[&str], i: usize, name: &str, line: usize) -> Result<f64> {
    let raw = field(fields, i);
    if raw.is_empty() {
        return Err(Error::Parse { line, msg: format!("missing {name}") });
    }
    let v: f64 = raw
        .parse()
        .map_err(|_| Error::Parse { line, msg: format!("bad {name} {raw:?}") })?;
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::Parse { line, msg: format!("{name} must be positive, got {raw}") });
    }
    Ok(v)
}

/// Parses and validates one record. `line` is only used for error messages.
pub fn parse_event(record: &str, line: usize) -> Result<LobEvent> {
    let fields: Vec<&str> = record.trim_end_matches(['\r', '\n']).split(',').collect();
    if fields.len() < 3 || fields.len() > 8 {
        return Err(Error::Parse { line, msg: format!("expected 3..=8 fields, got {}", fields.len()) });
    }
    let ts_ns: i64 = field(&fields, 0)
        .parse()
        .map_err(|_| Error::Parse { line, msg: format!("bad timestamp {:?}", field(&fields, 0)) })?;
    let asset = field(&fields, 1);
    if asset.is_empty() {
        return Err(Error::Parse { line, msg: "missing asset".into() });
    }
    let side = || -> Result<Side> {
        field(&fields, 3).parse().map_err(|msg| Error::Parse { line, msg })
    };
    let body = match field(&fields, 2) {
        "LIMIT_ADD" => EventBody::LimitAdd {
            side: side()?,
            price: positive(&fields, 4, "price", line)?,
            size: positive(&fields, 5, "size", line)?,
        },
        "TRADE" => EventBody::Trade {
            side: side()?,
            price: positive(&fields, 4, "price", line)?,
            size: positive(&fields, 5, "size", line)?,
        },
        "BBO" => {
            let bid = positive(&fields, 6, "bid", line)?;
            let ask = positive(&fields, 7, "ask", line)?;
            if bid >= ask {
                return Err(Error::Ordering { line, msg: format!("crossed quote bid {bid} >= ask {ask}") });
            }
            EventBody::Bbo { bid, ask }
        }
        other => return Err(Error::Parse { line, msg: format!("unknown kind {other:?}") }),
    };
    Ok(LobEvent { ts_ns, asset: asset.to_owned(), body })
}

/// Streaming reader over a (possibly gzip-compressed) event file that also
/// enforces per-asset timestamp monotonicity.
pub struct EventReader<R: BufRead> {
    inner: R,
    line_no: usize,
    buf: String,
    last_ts: HashMap<String, i64>,
}

impl EventReader<Box<dyn BufRead>> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let mut file = File::open(path.as_ref())?;
        let mut magic = [0u8; 2];
        let n = file.read(&mut magic)?;
        let file = File::open(path.as_ref())?;
        let reader: Box<dyn BufRead> = if n == 2 && magic == [0x1f, 0x8b] {
            Box::new(BufReader::new(MultiGzDecoder::new(file)))
        } else {
            Box::new(BufReader::new(file))
        };
        Ok(EventReader::new(reader))
    }
}

impl<R: BufRead> EventReader<R> {
    pub fn new(inner: R) -> Self {
        Self { inner, line_no: 0, buf: String::new(), last_ts: HashMap::new() }
    }
}

impl<R: BufRead> Iterator for EventReader<R> {
    type Item = Result<LobEvent>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.inner.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e.into())),
            }
            self.line_no += 1;
            let rec = self.buf.trim();
            if rec.is_empty() || (self.line_no == 1 && rec.starts_with("ts_ns")) {
                continue;
            }
            let ev = match parse_event(rec, self.line_no) {
                Ok(ev) => ev,
                Err(e) => return Some(Err(e)),
            };
            if let Some(&prev) = self.last_ts.get(&ev.asset) {
                if ev.ts_ns < prev {
                    return Some(Err(Error::Ordering {
                        line: self.line_no,
                        msg: format!("timestamp {} precedes {} for {}", ev.ts_ns, prev, ev.asset),
                    }));
                }
            }
            match self.last_ts.get_mut(&ev.asset) {
                Some(t) => *t = ev.ts_ns,
                None => {
                    self.last_ts.insert(ev.asset.clone(), ev.ts_ns);
                }
            }
            return Some(Ok(ev));
        }
    }
}

/// Reads a whole event file into memory.
pub fn read_events(path: impl AsRef<Path>) -> Result<Vec<LobEvent>> {
    EventReader::open(path)?.collect()
}

pub fn write_events<W: Write>(mut w: W, events: &[LobEvent]) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for ev in events {
        writeln!(w, "{}", ev.to_csv())?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `events` to `path`, gzip-compressed when the name ends in `.gz`.
pub fn save_events(path: impl AsRef<Path>, events: &[LobEvent]) -> Result<()> {
    let path = path.as_ref();
    let file = BufWriter::new(File::create(path)?);
    if path.extension().is_some_and(|e| e == "gz") {
        let mut gz = GzEncoder::new(file, Compression::default());
        write_events(&mut gz, events)?;
        gz.finish()?.flush()?;
    } else {
        write_events(file, events)?;
    }
    Ok(())
}

/// Best bid / best ask snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BookTop {
    pub best_bid: f64,
    pub best_ask: f64,
}

impl BookTop {
    pub fn new(best_bid: f64, best_ask: f64) -> Result<Self> {
        if !(best_bid > 0.0) || !(best_bid < best_ask) || !best_ask.is_finite() {
            return Err(Error::Ordering { line: 0, msg: format!("invalid quote bid {best_bid} ask {best_ask}") });
        }
        Ok(Self { best_bid, best_ask })
    }

    #[inline]
    pub fn mid(&self) -> f64 {
        0.5 * (self.best_bid + self.best_ask)
    }

    /// Spread Ψ in bps of the mid.
    #[inline]
    pub fn spread_bps(&self) -> f64 {
        (self.best_ask - self.best_bid) / self.mid() * 1e4
    }

    /// Price units per basis point of the mid.
    #[inline]
    pub fn bps_to_price(&self) -> f64 {
        self.mid() * 1e-4
    }
}

/// Applies one event to the top of book. BBO events replace it, everything
/// else leaves it untouched. A crossed BBO is rejected and the caller keeps
/// the previous top.
pub fn track_book(event: &LobEvent, top: Option<BookTop>) -> Result<Option<BookTop>> {
    match event.body {
        EventBody::Bbo { bid, ask } => match BookTop::new(bid, ask) {
            Ok(t) => Ok(Some(t)),
            Err(_) => {
                log::warn!("{}: rejected crossed quote {bid}/{ask} at {}", event.asset, event.ts_ns);
                Err(Error::Ordering { line: 0, msg: format!("crossed quote bid {bid} >= ask {ask}") })
            }
        },
        _ => Ok(top),
    }
}

/// Distance (bps of mid) of a limit price from the same-side best quote;
/// orders at or inside the touch get zero.
#[inline]
pub fn compute_distance(side: Side, price: f64, top: &BookTop) -> f64 {
    let mid = top.mid();
    let d = match side {
        Side::Bid => (top.best_bid - price) / mid,
        Side::Ask => (price - top.best_ask) / mid,
    };
    (d * 1e4).max(0.0)
}

/// Last-tick mid series of one asset plus the timestamp where its stream ends.
#[derive(Debug, Clone, Default)]
pub struct MidSeries {
    ts: Vec<i64>,
    mid: Vec<f64>,
    end_ts: i64,
}

impl MidSeries {
    pub fn from_events<'a>(asset: &str, events: impl IntoIterator<Item = &'a LobEvent>) -> Self {
        let mut s = MidSeries { end_ts: i64::MIN, ..Default::default() };
        for ev in events {
            if ev.asset != asset {
                continue;
            }
            s.end_ts = s.end_ts.max(ev.ts_ns);
            if let EventBody::Bbo { bid, ask } = ev.body {
                if bid < ask {
                    s.push(ev.ts_ns, 0.5 * (bid + ask));
                }
            }
        }
        s
    }

    pub fn push(&mut self, ts: i64, mid: f64) {
        debug_assert!(self.ts.last().is_none_or(|&t| t <= ts));
        self.ts.push(ts);
        self.mid.push(mid);
        self.end_ts = self.end_ts.max(ts);
    }

    pub fn set_end(&mut self, end_ts: i64) {
        self.end_ts = self.end_ts.max(end_ts);
    }

    pub fn len(&self) -> usize {
        self.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ts.is_empty()
    }

    /// Mid of the last BBO at or before `t`.
    pub fn mid_at(&self, t: i64) -> Option<f64> {
        let idx = self.ts.partition_point(|&x| x <= t);
        (idx > 0).then(|| self.mid[idx - 1])
    }
}

/// Horizon move (bps) of the mid: (mid(t+T) − mid(t)) / mid(t) · 10⁴.
/// `None` when no mid is known at t or the stream ends before t + T.
pub fn label_target(sample_ns: i64, horizon_s: f64, series: &MidSeries) -> Option<f64> {
    let end = sample_ns + (horizon_s * 1e9).round() as i64;
    if series.end_ts < end {
        return None;
    }
    let m0 = series.mid_at(sample_ns)?;
    let m1 = series.mid_at(end)?;
    Some((m1 - m0) / m0 * 1e4)
}
