//! Acceptance suite. Each test prints one `PASS`/`FAIL` line and then asserts.
//! Heavy tests hold a global lock so timings are not disturbed by siblings.

use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::Instant;

use lobguard::analytics::{default_edges, partial_dependence, price_response, PdVariable, PriceResponseReport, ResponseGrid};
use lobguard::dist::{
    bvn_logpdf, gaussian_tail_moments, quad, sn_logpdf, sn_mean_var, sn_tail_moments, BivariateNormalParams, Marginal,
    SkewNormalParams,
};
use lobguard::econ::{expected_cost_buy_side_spoof, expected_cost_cross, expected_cost_sell_side_spoof, gain_from_thetas, Fees, SpoofScenario};
use lobguard::engine::{build_observations, LabeledObservation, ObservationConfig};
use lobguard::flow::{FlowState, KernelConfig};
use lobguard::net::gradcheck::check_gradient;
use lobguard::net::{mean_nll, HeadKind, Mlp, Model, Dataset, TrainConfig, Theta};
use lobguard::par::Parallelism;
use lobguard::pipeline::{fit_model, run_detection, to_dataset, DetectConfig, DetectSummary, DetectionScore, GroundTruth};
use lobguard::sim::{inject_spoofs, simulate, sn_entropy, EpisodePlan, KnownLaw, SimConfig};
use lobguard::stream::{BookTop, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

/// Written to the raw stderr handle so the line survives libtest's capture.
fn report(id: u32, pass: bool, detail: String) {
    use std::io::Write;
    let line = format!("criterion {id}: {} {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
}

// ---------------------------------------------------------------- 1

/// Density of SN(μ, σ, α) from statrs primitives, on the log scale.
fn ln_sn_density(mu: f64, sigma: f64, alpha: f64, t: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).unwrap();
    let z = (t - mu) / sigma;
    std::f64::consts::LN_2 - sigma.ln() + n.ln_pdf(z) + n.cdf(alpha * z).ln()
}

/// P(X ≤ x), P(X > x), E[X | X ≤ x], E[X | X > x] by adaptive quadrature.
/// Conditional means integrate the density relative to f(x) so far tails
/// keep full relative precision.
fn quadrature_tails(mu: f64, sigma: f64, alpha: f64, x: f64) -> [f64; 4] {
    let lnf = |t: f64| ln_sn_density(mu, sigma, alpha, t);
    let span = 40.0 * sigma;
    let dens = |t: f64| lnf(t).exp();
    let p_le = quad::integrate(dens, x - span, x, 1e-15, 1e-13).value;
    let p_gt = quad::integrate(dens, x, x + span, 1e-15, 1e-13).value;
    let f0 = lnf(x);
    let g = |s: f64| {
        let v = lnf(s) - f0;
        if v.is_finite() { v.exp() } else { 0.0 }
    };
    let lo_mass = quad::integrate(|s| g(x - s), 0.0, span, 0.0, 1e-14).value;
    let lo_first = quad::integrate(|s| s * g(x - s), 0.0, span, 0.0, 1e-14).value;
    let hi_mass = quad::integrate(|s| g(x + s), 0.0, span, 0.0, 1e-14).value;
    let hi_first = quad::integrate(|s| s * g(x + s), 0.0, span, 0.0, 1e-14).value;
    [p_le, p_gt, x - lo_first / lo_mass, x + hi_first / hi_mass]
}

#[test]
fn criterion_1_tail_moment_formulas() {
    let _g = serial();
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    let mut points = 0;
    let mut skipped = 0;
    for mu in -5..=5 {
        for sigma in [0.1, 1.0, 10.0] {
            for k in -4..=4 {
                let x = mu as f64 + k as f64 * sigma;
                for alpha in std::iter::once(None).chain((-5..=5).map(Some)) {
                    let (t, a) = match alpha {
                        None => (gaussian_tail_moments(mu as f64, sigma, x), 0.0),
                        Some(a) => (sn_tail_moments(&SkewNormalParams { mu: mu as f64, sigma, alpha: a as f64 }, x), a as f64),
                    };
                    let o = quadrature_tails(mu as f64, sigma, a, x);
                    let mut errs = vec![(t.prob_le - o[0]).abs(), (t.prob_gt - o[1]).abs()];
                    if !t.degenerate_le {
                        errs.push((t.mean_le - o[2]).abs());
                    }
                    if !t.degenerate_gt {
                        errs.push((t.mean_gt - o[3]).abs());
                    }
                    skipped += t.degenerate_le as usize + t.degenerate_gt as usize;
                    let e = errs.into_iter().fold(0.0, f64::max);
                    if e > worst {
                        worst = e;
                    }
                    points += 1;
                }
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    let pass = worst < 1e-8 && points >= 1000 && secs < 60.0;
    report(1, pass, format!("points={points} max_abs_err={worst:.3e} degenerate_sides={skipped} time={secs:.1}s (tol 1e-8, <60s)"));
    assert!(pass);
}

// ---------------------------------------------------------------- 2

#[test]
fn criterion_2_streamed_features_equal_brute_force() {
    let _g = serial();
    let t0 = Instant::now();
    let cfg = KernelConfig::default();
    let layout = cfg.layout();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 100_000;
    // (ts, is_limit, side, v, δ)
    let mut ts = 1_000_000_000i64;
    let mut events = Vec::with_capacity(n);
    for _ in 0..n {
        if rng.random::<f64>() > 0.1 {
            ts += (rng.random::<f64>().powi(3) * 5e7) as i64;
        }
        let side = if rng.random::<bool>() { Side::Bid } else { Side::Ask };
        let v = 10f64.powf(rng.random_range(0.0..6.0));
        let d = rng.random_range(0.0..3.0f64).exp() - 1.0;
        events.push((ts, rng.random::<f64>() < 0.8, side, v, d));
    }
    let checkpoints: Vec<usize> = (1..=400).map(|i| i * n / 400 - 1).collect();
    let mut state = FlowState::new(&cfg);
    let mut worst: f64 = 0.0;
    let mut compared = 0usize;
    let mut ci = 0;
    let mut snap = vec![0.0; layout.len()];
    for (i, &(t, limit, side, v, d)) in events.iter().enumerate() {
        if limit {
            state.apply_limit(t, side, v, d).unwrap();
        } else {
            state.apply_trade(t, side, v).unwrap();
        }
        if ci < checkpoints.len() && checkpoints[ci] == i {
            ci += 1;
            let at = t + 1_000_000;
            state.snapshot_into(at, 1.0, &mut snap).unwrap();
            let mut brute = vec![0.0; layout.len()];
            for &(tk, lk, sk, vk, dk) in &events[..=i] {
                let age = (at - tk) as f64 * 1e-9;
                for (b, &beta) in cfg.betas.iter().enumerate() {
                    let decay = (-beta * age).exp();
                    if lk {
                        for (e, &eta) in cfg.etas.iter().enumerate() {
                            brute[layout.limit(sk, b, e)] += vk * (-eta * dk).exp() * decay;
                        }
                    } else {
                        brute[layout.market(sk, b)] += vk * decay;
                    }
                }
            }
            for j in 1..layout.len() {
                // cells below 1e-250 are numerically zero (sub-normal range)
                let scale = brute[j].abs().max(1e-250);
                worst = worst.max((snap[j] - brute[j]).abs() / scale);
                compared += 1;
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    let pass = worst < 1e-9 && secs < 60.0;
    report(2, pass, format!("events={n} checkpoints={} cells={compared} max_rel_err={worst:.3e} time={secs:.1}s (tol 1e-9, <60s)", checkpoints.len()));
    assert!(pass);
}

// ---------------------------------------------------------------- 3

#[test]
fn criterion_3_gradients_match_finite_differences() {
    let _g = serial();
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut instances = 0;
    for head in [HeadKind::Gaussian, HeadKind::SkewGaussian, HeadKind::BivariateGaussian] {
        for inst in 0..50 {
            let (dim, hidden, batch) = if inst == 0 { (31, 64, 4) } else { (rng.random_range(2..=31), rng.random_range(2..=16), rng.random_range(1..=16)) };
            let mut mlp = Mlp::init(head, dim, hidden, &mut rng);
            for p in &mut mlp.params {
                *p += rng.random_range(-0.2..0.2);
            }
            let mut data = Dataset::new(dim, head.target_dim());
            for _ in 0..batch {
                let z: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                let y: Vec<f64> = (0..head.target_dim()).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
                data.push(&z, &y);
            }
            let idx: Vec<usize> = (0..batch).collect();
            let r = check_gradient(&mlp, &data, &idx, 1e-5);
            worst = worst.max(r.max_rel_err);
            checked += r.checked;
            instances += 1;
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    let pass = worst < 1e-4 && secs < 120.0;
    report(3, pass, format!("instances={instances} coordinates={checked} max_rel_err={worst:.3e} time={secs:.1}s (tol 1e-4, <120s)"));
    assert!(pass);
}

// ---------------------------------------------------------------- 4

#[test]
fn criterion_4_synthetic_recovery() {
    let _g = serial();
    let t0 = Instant::now();
    let kernel = KernelConfig::default();
    let layout = kernel.layout();
    let sim = SimConfig { seed: 4, ..SimConfig::default() };
    let target_obs = 1_000_000usize;
    let rate = sim.stationary_rates()[0] + sim.stationary_rates()[1];
    let duration = (target_obs as f64 / (0.9 * rate)).ceil();
    let events = simulate(&sim, duration).unwrap().events;
    let assets = vec![sim.asset.clone()];
    let mut obs = build_observations(&events, &assets, &kernel, &ObservationConfig::default()).unwrap();
    drop(events);
    obs.truncate(target_obs);
    let law = KnownLaw { a: 1.5, s0: 0.5, s1: 0.5, alpha: 3.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    for o in &mut obs {
        o.y = lobguard::sim::sample_skew_normal(&law.params(&layout, &o.x), &mut rng);
    }
    let split = obs.len() * 4 / 5;
    let cfg = TrainConfig { max_epochs: 60, patience: 8, learning_rate: 2e-3, seed: 41, ..TrainConfig::default() };
    let (model, rep) = fit_model(&obs[..split], &kernel, &assets, 1.0, HeadKind::SkewGaussian, &cfg).unwrap();
    let test = &obs[split..];
    let data = to_dataset(test, &model.transform, HeadKind::SkewGaussian).unwrap();
    let nll = mean_nll(&model.mlp, &data, Parallelism::default());
    let h = sn_entropy(law.alpha);
    let truth_nll = test.iter().map(|o| law.expected_nll(&layout, &o.x, h)).sum::<f64>() / test.len() as f64;
    let (pred, truth): (Vec<f64>, Vec<f64>) = test
        .iter()
        .map(|o| {
            let p = model.predict(&o.x).unwrap().mean_var().0;
            let t = sn_mean_var(&law.params(&layout, &o.x)).0;
            (p, t)
        })
        .unzip();
    let r = pearson(&pred, &truth);
    let rel = (nll - truth_nll).abs() / truth_nll.abs();
    let secs = t0.elapsed().as_secs_f64();
    let pass = rel < 0.02 && r > 0.9 && secs < 600.0;
    report(
        4,
        pass,
        format!(
            "observations={} epochs={} best_epoch={} test_nll={nll:.5} generator_nll={truth_nll:.5} rel_gap={rel:.4} pearson={r:.4} time={secs:.0}s (gap<0.02, r>0.9, <600s)",
            obs.len(),
            rep.epochs.len(),
            rep.best_epoch
        ),
    );
    assert!(pass);
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        for k in i..=j {
            r[idx[k]] = (i + j) as f64 / 2.0;
        }
        i = j + 1;
    }
    r
}

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    pearson(&ranks(a), &ranks(b))
}

// ---------------------------------------------------- shared synthetic fixture

struct Fixture {
    model: Model,
    train_obs: Vec<LabeledObservation>,
    summary: DetectSummary,
    score: DetectionScore,
    build_s: f64,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let t0 = Instant::now();
        let kernel = KernelConfig::default();
        let sim = SimConfig { seed: 50, ..SimConfig::default() };
        let assets = vec![sim.asset.clone()];
        let train_events = simulate(&sim, 10_000.0).unwrap().events;
        let train_obs = build_observations(&train_events, &assets, &kernel, &ObservationConfig::default()).unwrap();
        drop(train_events);
        let cfg = TrainConfig { max_epochs: 60, patience: 8, learning_rate: 2e-3, seed: 51, ..TrainConfig::default() };
        let (model, _) = fit_model(&train_obs, &kernel, &assets, 1.0, HeadKind::SkewGaussian, &cfg).unwrap();

        let eval = simulate(&SimConfig { seed: 52, ..sim }, 1500.0).unwrap().events;
        let plan = EpisodePlan { count: 150, ..EpisodePlan::default() };
        let eps = plan.generate(eval[0].ts_ns, eval.last().unwrap().ts_ns, 53).unwrap();
        let (stream, labels) = inject_spoofs(&eval, &eps).unwrap();
        let mut truth = GroundTruth::new(&labels, DetectConfig::default().threshold_notional);
        let summary = run_detection(&model, stream.into_iter().map(Ok), DetectConfig::default(), 10_000, |v| {
            truth.observe(v);
            Ok(())
        })
        .unwrap();
        Fixture { model, train_obs, summary, score: truth.finish(), build_s: t0.elapsed().as_secs_f64() }
    })
}

// ---------------------------------------------------------------- 5

/// Grid cells breaking the expected shape: wrong sign, |Δ| growing with δ,
/// or |Δ| shrinking with Q. Each entry is (kind, Q, δ).
fn response_violations(r: &PriceResponseReport, grid: &ResponseGrid, sign: f64) -> Vec<(&'static str, f64, f64)> {
    let tol = 1e-12;
    let mut out = Vec::new();
    for &q in &grid.sizes {
        for (k, &d) in grid.distances.iter().enumerate() {
            let c = r.cell(q, d).unwrap();
            if sign * c.mean_delta < -tol {
                out.push(("sign", q, d));
            }
            if k > 0 && c.mean_delta.abs() > r.cell(q, grid.distances[k - 1]).unwrap().mean_delta.abs() + tol {
                out.push(("distance", q, d));
            }
        }
    }
    for &d in &grid.distances {
        for w in grid.sizes.windows(2) {
            if r.cell(w[1], d).unwrap().mean_delta.abs() + tol < r.cell(w[0], d).unwrap().mean_delta.abs() {
                out.push(("size", w[1], d));
            }
        }
    }
    out
}

#[test]
fn criterion_5_qualitative_figures() {
    let _g = serial();
    let t0 = Instant::now();
    let f = fixture();
    let test = &f.train_obs[f.train_obs.len() / 2..];
    let rows: Vec<&[f64]> = test.iter().map(|o| o.x.as_slice()).collect();
    let edges = default_edges(PdVariable::Spread, &[], 20);
    let pd = partial_dependence(&f.model, &rows, PdVariable::Spread, &edges, Parallelism::default()).unwrap();
    let occupied: Vec<_> = pd.bins.iter().filter(|b| b.count >= 50).collect();
    let mids: Vec<f64> = occupied.iter().map(|b| (b.lo * b.hi).sqrt()).collect();
    let stds: Vec<f64> = occupied.iter().map(|b| b.std.unwrap()).collect();
    let rho = spearman(&mids, &stds);
    let grid = ResponseGrid::default();
    let bid = price_response(&f.model, &rows, Side::Bid, &grid, 10, 55, 0, Parallelism::default()).unwrap();
    let ask = price_response(&f.model, &rows, Side::Ask, &grid, 10, 55, 0, Parallelism::default()).unwrap();
    let b = response_violations(&bid, &grid, 1.0);
    let a = response_violations(&ask, &grid, -1.0);
    let secs = t0.elapsed().as_secs_f64() + f.build_s;
    let pass_a = rho > 0.9;
    let pass_b = b.is_empty() && a.is_empty();
    let pass = pass_a && pass_b && secs < 600.0;
    report(
        5,
        pass,
        format!(
            "(a) spread bins={} spearman={rho:.3} (>0.9); (b) violations bid={:?} ask={:?} over {} cells per side, max bid ΔS={:.4} min ask ΔS={:.4}; time={secs:.0}s incl. fixture",
            occupied.len(),
            b,
            a,
            bid.cells.len(),
            bid.cells.iter().map(|c| c.mean_delta).fold(f64::MIN, f64::max),
            ask.cells.iter().map(|c| c.mean_delta).fold(f64::MAX, f64::min),
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 6

fn random_skew(rng: &mut ChaCha8Rng) -> SkewNormalParams {
    SkewNormalParams { mu: rng.random_range(-3.0..3.0), sigma: rng.random_range(0.5..5.0), alpha: rng.random_range(-5.0..5.0) }
}

fn random_top(rng: &mut ChaCha8Rng) -> BookTop {
    let mid = 10f64.powf(rng.random_range(1.0..5.0));
    let spread_bps = rng.random_range(0.2..5.0);
    let half = spread_bps * 0.5e-4 * mid;
    BookTop::new(mid - half, mid + half).unwrap()
}

fn random_scenario(rng: &mut ChaCha8Rng, side: Side) -> SpoofScenario {
    SpoofScenario {
        spoof_side: side,
        spoof_notional: rng.random_range(5e3..1e5),
        spoof_distance_bps: rng.random_range(0.0..10.0),
        bona_fide_notional: rng.random_range(50.0..500.0),
        bona_fide_distance_bps: rng.random_range(0.0..3.0),
        fees: Fees { maker: rng.random_range(-1e-4..2e-4), taker: rng.random_range(0.0..1e-3) },
    }
}

fn skew_draw(p: &SkewNormalParams, u0: f64, u1: f64) -> f64 {
    let b = p.alpha / (1.0 + p.alpha * p.alpha).sqrt();
    p.mu + p.sigma * (b * u0.abs() + (1.0 - b * b).sqrt() * u1)
}

/// Realized cost of the two orders for mid moves `dp_bona`, `dp_spoof` (bps):
/// a limit order fills iff the moved mid crosses its price; the book moves
/// with the mid and leftovers are liquidated at the moved opposite quote.
fn realized_cost(sc: &SpoofScenario, bona: &BookTop, spoof: &BookTop, dp_bona: f64, dp_spoof: f64) -> f64 {
    let mut cash = 0.0;
    let kb = bona.mid() * 1e-4;
    let ks = spoof.mid() * 1e-4;
    let fee = |maker: bool| if maker { sc.fees.maker } else { sc.fees.taker };
    let mut flows: Vec<(bool, f64, f64, bool)> = Vec::new(); // (is_sell, price, units, maker)
    match sc.spoof_side {
        Side::Bid => {
            let pa = bona.best_ask + sc.bona_fide_distance_bps * kb;
            let q = sc.bona_fide_notional / pa;
            if bona.mid() + dp_bona * kb > pa {
                flows.push((true, pa, q, true));
            } else {
                flows.push((true, bona.best_bid + dp_bona * kb, q, false));
            }
            let pb = spoof.best_bid - sc.spoof_distance_bps * ks;
            let qs = sc.spoof_notional / pb;
            if spoof.mid() + dp_spoof * ks < pb {
                flows.push((false, pb, qs, true));
                flows.push((true, spoof.best_bid + dp_spoof * ks, qs, false));
            }
        }
        Side::Ask => {
            let pb = bona.best_bid - sc.bona_fide_distance_bps * kb;
            let q = sc.bona_fide_notional / pb;
            if bona.mid() + dp_bona * kb < pb {
                flows.push((false, pb, q, true));
            } else {
                flows.push((false, bona.best_ask + dp_bona * kb, q, false));
            }
            let pa = spoof.best_ask + sc.spoof_distance_bps * ks;
            let qs = sc.spoof_notional / pa;
            if spoof.mid() + dp_spoof * ks > pa {
                flows.push((true, pa, qs, true));
                flows.push((false, spoof.best_ask + dp_spoof * ks, qs, false));
            }
        }
    }
    for (is_sell, price, units, maker) in flows {
        if is_sell {
            cash += price * units * (1.0 - fee(maker));
        } else {
            cash -= price * units * (1.0 + fee(maker));
        }
    }
    -cash
}

#[test]
fn criterion_6_costs_match_monte_carlo() {
    let _g = serial();
    let t0 = Instant::now();
    let draws = 10_000_000usize;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = [0.0f64; 3];
    for (op, worst_op) in worst.iter_mut().enumerate() {
        for s in 0..50 {
            let side = if s % 2 == 0 { Side::Bid } else { Side::Ask };
            let sc = random_scenario(&mut rng, side);
            let top1 = random_top(&mut rng);
            let (analytic, mc) = if op < 2 {
                let p = random_skew(&mut rng);
                let sc = SpoofScenario { spoof_side: if op == 0 { Side::Bid } else { Side::Ask }, ..sc };
                let analytic = if op == 0 {
                    expected_cost_sell_side_spoof(&sc, &top1, Marginal::Skew(p))
                } else {
                    expected_cost_buy_side_spoof(&sc, &top1, Marginal::Skew(p))
                };
                let mut sum = 0.0;
                for _ in 0..draws {
                    let dp = skew_draw(&p, rng.sample(StandardNormal), rng.sample(StandardNormal));
                    sum += realized_cost(&sc, &top1, &top1, dp, dp);
                }
                (analytic, sum / draws as f64)
            } else {
                let top2 = random_top(&mut rng);
                let b = BivariateNormalParams::new(
                    rng.random_range(-3.0..3.0),
                    rng.random_range(-3.0..3.0),
                    rng.random_range(0.5..5.0),
                    rng.random_range(0.5..5.0),
                    rng.random_range(-0.95..0.95),
                )
                .unwrap();
                let analytic = expected_cost_cross(&sc, &top1, &top2, &Theta::Bivariate(b));
                let c = (1.0 - b.rho * b.rho).sqrt();
                let mut sum = 0.0;
                for _ in 0..draws {
                    let z1: f64 = rng.sample(StandardNormal);
                    let z2: f64 = rng.sample(StandardNormal);
                    let dp1 = b.mu1 + b.sigma1 * z1;
                    let dp2 = b.mu2 + b.sigma2 * (b.rho * z1 + c * z2);
                    sum += realized_cost(&sc, &top2, &top1, dp2, dp1);
                }
                (analytic, sum / draws as f64)
            };
            *worst_op = worst_op.max((analytic - mc).abs() / mc.abs());
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    let pass = worst.iter().all(|&w| w < 1e-3) && secs < 600.0;
    report(
        6,
        pass,
        format!("draws={draws} scenarios=50x3 max_rel_err sell={:.2e} buy={:.2e} cross={:.2e} time={secs:.0}s (tol 1e-3, <600s)", worst[0], worst[1], worst[2]),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 7

#[test]
fn criterion_7_detection_on_ground_truth() {
    let _g = serial();
    let f = fixture();
    let s = f.score;
    let large_rate = if s.normal_large > 0 { s.normal_large_flagged as f64 / s.normal_large as f64 } else { 0.0 };
    let pass = s.recall >= 0.8 && s.false_positive_rate_small <= 0.05 && s.labeled_scored == s.labeled;
    report(
        7,
        pass,
        format!(
            "labeled={} scored={} recall={:.3} (>=0.8) fpr_small={:.4} over {} orders (<=0.05); normal large orders flagged {}/{} ({large_rate:.3}); precision={:.3}",
            s.labeled, s.labeled_scored, s.recall, s.false_positive_rate_small, s.normal_small, s.normal_large_flagged, s.normal_large, s.precision
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 8

#[test]
fn criterion_8_latency() {
    let _g = serial();
    let f = fixture();
    let l = f.summary.latency;
    let pass = l.n >= 100_000 && l.p50_ns < 100_000 && l.p99_ns < 500_000 && f.model.input_dim() == 31;
    report(
        8,
        pass,
        format!(
            "orders={} p50={:.1}us p95={:.1}us p99={:.1}us throughput={:.0}/s (p50<100us, p99<500us)",
            l.n,
            l.p50_ns as f64 / 1e3,
            l.p95_ns as f64 / 1e3,
            l.p99_ns as f64 / 1e3,
            f.summary.throughput_per_s
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 9

#[test]
fn criterion_9_identities() {
    let _g = serial();
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut ok = true;
    let mut notes = Vec::new();

    // ΔC(Q = 0) = 0 exactly, with the counterfactual equal to the state
    let mut max_q0: f64 = 0.0;
    for head in [HeadKind::Gaussian, HeadKind::SkewGaussian] {
        let mlp = Mlp::init(head, 5, 8, &mut rng);
        for _ in 0..200 {
            let z: Vec<f64> = (0..5).map(|_| rng.sample(StandardNormal)).collect();
            let theta = mlp.forward(&z).unwrap();
            let side = if rng.random() { Side::Bid } else { Side::Ask };
            let sc = SpoofScenario { spoof_notional: 0.0, ..random_scenario(&mut rng, side) };
            let g = gain_from_thetas(&theta, &theta, &random_top(&mut rng), &sc);
            max_q0 = max_q0.max(g.abs());
        }
    }
    ok &= max_q0 == 0.0;
    notes.push(format!("dC(Q=0) max={max_q0:e}"));

    // α = 0 reduces the skew law to the Gaussian
    let mut max_alpha0: f64 = 0.0;
    for _ in 0..1000 {
        let (mu, sigma) = (rng.random_range(-5.0..5.0), rng.random_range(0.1..10.0));
        let x = mu + sigma * rng.random_range(-6.0..6.0);
        let s = sn_tail_moments(&SkewNormalParams { mu, sigma, alpha: 0.0 }, x);
        let g = gaussian_tail_moments(mu, sigma, x);
        let n = Normal::new(mu, sigma).unwrap();
        for (a, b) in [
            (s.prob_le, g.prob_le),
            (s.prob_gt, g.prob_gt),
            (s.mean_le, g.mean_le),
            (s.mean_gt, g.mean_gt),
            (sn_logpdf(&SkewNormalParams { mu, sigma, alpha: 0.0 }, x), n.ln_pdf(x)),
            (sn_mean_var(&SkewNormalParams { mu, sigma, alpha: 0.0 }).1, sigma * sigma),
        ] {
            max_alpha0 = max_alpha0.max((a - b).abs() / b.abs().max(1.0));
        }
    }
    ok &= max_alpha0 < 1e-12;
    notes.push(format!("alpha=0 max={max_alpha0:.2e}"));

    // ρ = 0 factorizes the bivariate density
    let mut max_rho0: f64 = 0.0;
    for _ in 0..1000 {
        let p = BivariateNormalParams::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(0.1..10.0), rng.random_range(0.1..10.0), 0.0).unwrap();
        let (y1, y2) = (rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0));
        let f = bvn_logpdf(&p, y1, y2);
        let g = Normal::new(p.mu1, p.sigma1).unwrap().ln_pdf(y1) + Normal::new(p.mu2, p.sigma2).unwrap().ln_pdf(y2);
        max_rho0 = max_rho0.max((f - g).abs() / g.abs().max(1.0));
    }
    ok &= max_rho0 < 1e-12;
    notes.push(format!("rho=0 max={max_rho0:.2e}"));

    // P(≤x)E[X|≤x] + P(>x)E[X|>x] = E[X]
    let mut max_lte: f64 = 0.0;
    for i in 0..1000 {
        let p = SkewNormalParams { mu: rng.random_range(-5.0..5.0), sigma: rng.random_range(0.1..10.0), alpha: if i % 2 == 0 { 0.0 } else { rng.random_range(-8.0..8.0) } };
        let (m, v) = sn_mean_var(&p);
        let x = m + v.sqrt() * rng.random_range(-5.0..5.0);
        for (t, mean) in [(sn_tail_moments(&p, x), m), (gaussian_tail_moments(p.mu, p.sigma, x), p.mu)] {
            let total = t.prob_le * t.mean_le + t.prob_gt * t.mean_gt;
            max_lte = max_lte.max((total - mean).abs());
        }
    }
    ok &= max_lte < 1e-9;
    notes.push(format!("total expectation max={max_lte:.2e}"));

    let secs = t0.elapsed().as_secs_f64();
    ok &= secs < 60.0;
    report(9, ok, format!("{} time={secs:.1}s (exact, 1e-12, 1e-12, 1e-9)", notes.join(" ")));
    assert!(ok);
}
