//! Spoofer economics: expected execution costs, the manipulation gain ΔC and
//! the per-order verdict.
//!
//! An agent wanting to *sell* posts a small bona fide ask of notional q at
//! δᵃ bps beyond the best ask and a large non-bona-fide bid of notional Q at
//! δᵇ bps below the best bid (cost Cᵃ). The buy-side tactic mirrors it (Cᵇ).
//! An order fills iff the mid crosses its price at the horizon; leftovers are
//! liquidated with a marketable order on the opposite side.
//!
//! Units: moves and distances are in bps of the mid and are converted to
//! price with k = mid/10⁴; notionals are USD and are turned into base
//! quantities at the order's own limit price; fees are fractions.

use std::io::Write;

use chrono::{DateTime, SecondsFormat};
use serde::{Deserialize, Serialize};

use crate::dist::Marginal;
use crate::error::Result;
use crate::net::{Model, Scratch, Theta};
use crate::stream::{BookTop, Side};

/// Orders at or above this notional (USD) are "large".
pub const LARGE_ORDER_USD: f64 = 4500.0;

/// One asset as seen by the cost formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Leg {
    pub law: Marginal,
    pub best_bid: f64,
    pub best_ask: f64,
}

impl Leg {
    pub fn new(law: Marginal, top: &BookTop) -> Self {
        Self { law, best_bid: top.best_bid, best_ask: top.best_ask }
    }

    /// Price per bp (absolute, so price-mirrored legs keep a positive scale).
    #[inline]
    pub fn k(&self) -> f64 {
        (0.5 * (self.best_bid + self.best_ask)).abs() * 1e-4
    }

    /// Half spread in bps.
    #[inline]
    pub fn half_spread_bps(&self) -> f64 {
        (self.best_ask - self.best_bid) / self.k() * 0.5
    }
}

/// Maker (ε⁺) and taker (ε⁻) fees as fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Fees {
    pub maker: f64,
    pub taker: f64,
}

impl Default for Fees {
    fn default() -> Self {
        Self { maker: 0.0, taker: 5e-4 }
    }
}

/// Bona fide sale on `bona` (ask side) plus a spoof bid on `spoof`, with
/// quantities already in base units. Returns Cᵃ in quote currency.
pub fn cost_sell_intention_units(bona: &Leg, q_units: f64, delta_a: f64, spoof: &Leg, q_spoof_units: f64, delta_b: f64, fees: Fees) -> f64 {
    let up = delta_a + bona.half_spread_bps();
    let kb = bona.k();
    let t = bona.law.tail_moments(up);
    let mut c = -t.prob_gt * (1.0 - fees.maker) * q_units * (bona.best_ask + delta_a * kb)
        - t.prob_le * (1.0 - fees.taker) * q_units * (bona.best_bid + t.mean_le * kb);
    if q_spoof_units != 0.0 {
        let dn = -(delta_b + spoof.half_spread_bps());
        let ks = spoof.k();
        let s = spoof.law.tail_moments(dn);
        c += s.prob_le * (1.0 + fees.maker) * q_spoof_units * (spoof.best_bid - delta_b * ks)
            - s.prob_le * (1.0 - fees.taker) * q_spoof_units * (spoof.best_bid + s.mean_le * ks);
    }
    c
}

/// Bona fide purchase on `bona` (bid side) plus a spoof ask on `spoof`, with
/// quantities in base units. Returns Cᵇ in quote currency.
pub fn cost_buy_intention_units(bona: &Leg, q_units: f64, delta_b: f64, spoof: &Leg, q_spoof_units: f64, delta_a: f64, fees: Fees) -> f64 {
    let dn = -(delta_b + bona.half_spread_bps());
    let kb = bona.k();
    let t = bona.law.tail_moments(dn);
    let mut c = t.prob_le * (1.0 + fees.maker) * q_units * (bona.best_bid - delta_b * kb)
        + t.prob_gt * (1.0 + fees.taker) * q_units * (bona.best_ask + t.mean_gt * kb);
    if q_spoof_units != 0.0 {
        let up = delta_a + spoof.half_spread_bps();
        let ks = spoof.k();
        let s = spoof.law.tail_moments(up);
        c += -s.prob_gt * (1.0 - fees.maker) * q_spoof_units * (spoof.best_ask + delta_a * ks)
            + s.prob_gt * (1.0 + fees.taker) * q_spoof_units * (spoof.best_ask + s.mean_gt * ks);
    }
    c
}

/// Inputs of one cost evaluation; the spoof side decides the tactic
/// (a bid spoof serves a sale, an ask spoof serves a purchase).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpoofScenario {
    pub spoof_side: Side,
    /// Q, USD.
    pub spoof_notional: f64,
    /// Distance of the spoof order from its best quote, bps.
    pub spoof_distance_bps: f64,
    /// q, USD.
    pub bona_fide_notional: f64,
    /// Distance of the bona fide order from its best quote, bps.
    pub bona_fide_distance_bps: f64,
    pub fees: Fees,
}

impl SpoofScenario {
    /// Defaults: q = 100 USD quoted at the touch, maker 0, taker 5 bps.
    pub fn new(spoof_side: Side, spoof_notional: f64, spoof_distance_bps: f64) -> Self {
        Self {
            spoof_side,
            spoof_notional,
            spoof_distance_bps,
            bona_fide_notional: 100.0,
            bona_fide_distance_bps: 0.0,
            fees: Fees::default(),
        }
    }

    /// The same scenario without the spoof order.
    pub fn without_spoof(&self) -> Self {
        Self { spoof_notional: 0.0, spoof_distance_bps: 0.0, ..*self }
    }
}

/// Expected cost with the bona fide order on `bona` and the spoof on `spoof`
/// (the same leg for a single asset).
pub fn expected_cost_legs(sc: &SpoofScenario, bona: &Leg, spoof: &Leg) -> f64 {
    match sc.spoof_side {
        Side::Bid => {
            let qa = bona.best_ask + sc.bona_fide_distance_bps * bona.k();
            let qb = spoof.best_bid - sc.spoof_distance_bps * spoof.k();
            let spoof_units = if sc.spoof_notional == 0.0 { 0.0 } else { sc.spoof_notional / qb };
            cost_sell_intention_units(bona, sc.bona_fide_notional / qa, sc.bona_fide_distance_bps, spoof, spoof_units, sc.spoof_distance_bps, sc.fees)
        }
        Side::Ask => {
            let qb = bona.best_bid - sc.bona_fide_distance_bps * bona.k();
            let qa = spoof.best_ask + sc.spoof_distance_bps * spoof.k();
            let spoof_units = if sc.spoof_notional == 0.0 { 0.0 } else { sc.spoof_notional / qa };
            cost_buy_intention_units(bona, sc.bona_fide_notional / qb, sc.bona_fide_distance_bps, spoof, spoof_units, sc.spoof_distance_bps, sc.fees)
        }
    }
}

/// Cᵃ for a single asset (the spoof sits on the bid).
pub fn expected_cost_sell_side_spoof(sc: &SpoofScenario, top: &BookTop, law: Marginal) -> f64 {
    let leg = Leg::new(law, top);
    expected_cost_legs(&SpoofScenario { spoof_side: Side::Bid, ..*sc }, &leg, &leg)
}

/// Cᵇ for a single asset (the spoof sits on the ask).
pub fn expected_cost_buy_side_spoof(sc: &SpoofScenario, top: &BookTop, law: Marginal) -> f64 {
    let leg = Leg::new(law, top);
    expected_cost_legs(&SpoofScenario { spoof_side: Side::Ask, ..*sc }, &leg, &leg)
}

/// Cross-asset cost: spoof on asset 1 (`spoof_top`), bona fide order on
/// asset 2 (`bona_top`), each leg using its marginal of the joint law.
pub fn expected_cost_cross(sc: &SpoofScenario, spoof_top: &BookTop, bona_top: &BookTop, theta: &Theta) -> f64 {
    let spoof = Leg::new(theta.marginal(0), spoof_top);
    let bona = Leg::new(theta.marginal(1), bona_top);
    expected_cost_legs(sc, &bona, &spoof)
}

/// Result of scoring one order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainEval {
    pub delta_c: f64,
    pub theta_plus: Theta,
    pub theta_zero: Theta,
}

/// ΔC = E[C(Q = 0) | x⁰] − E[C(Q, δ) | x⁺] for a single-asset model.
pub fn expected_gain(model: &Model, x_plus: &[f64], x_zero: &[f64], top: &BookTop, sc: &SpoofScenario, scratch: &mut Scratch) -> Result<GainEval> {
    let theta_plus = model.predict_with(x_plus, scratch)?;
    let theta_zero = model.predict_with(x_zero, scratch)?;
    let delta_c = gain_from_thetas(&theta_plus, &theta_zero, top, sc);
    Ok(GainEval { delta_c, theta_plus, theta_zero })
}

/// ΔC from already-predicted laws.
pub fn gain_from_thetas(theta_plus: &Theta, theta_zero: &Theta, top: &BookTop, sc: &SpoofScenario) -> f64 {
    let zero = Leg::new(theta_zero.marginal(0), top);
    let plus = Leg::new(theta_plus.marginal(0), top);
    expected_cost_legs(&sc.without_spoof(), &zero, &zero) - expected_cost_legs(sc, &plus, &plus)
}

/// Flagging rule: large order and strictly positive expected gain.
#[inline]
pub fn judge(notional: f64, delta_c: f64, threshold_notional: f64) -> bool {
    notional >= threshold_notional && delta_c > 0.0
}

/// One alert-log record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpoofVerdict {
    pub timestamp: String,
    pub ts_ns: i64,
    pub asset: String,
    pub side: Side,
    pub price: f64,
    pub notional: f64,
    pub distance_bps: f64,
    pub delta_c: f64,
    pub suspicious: bool,
    pub theta_plus: Theta,
    pub theta_zero: Theta,
    pub scenario: SpoofScenario,
    pub latency_ns: u64,
}

/// ISO-8601 UTC with nanoseconds.
pub fn iso8601(ts_ns: i64) -> String {
    DateTime::from_timestamp_nanos(ts_ns).to_rfc3339_opts(SecondsFormat::Nanos, true)
}

/// Append-only JSON-lines sink.
pub struct AlertLog<W: Write> {
    out: W,
    written: u64,
}

impl<W: Write> AlertLog<W> {
    pub fn new(out: W) -> Self {
        Self { out, written: 0 }
    }

    pub fn append(&mut self, v: &SpoofVerdict) -> Result<()> {
        serde_json::to_writer(&mut self.out, v)?;
        self.out.write_all(b"\n")?;
        self.written += 1;
        Ok(())
    }

    pub fn written(&self) -> u64 {
        self.written
    }

    pub fn into_inner(mut self) -> Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}
