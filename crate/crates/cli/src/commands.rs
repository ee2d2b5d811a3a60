//! Subcommand implementations. Each writes its outputs under the run's
//! output directory and returns a short human summary.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use lobguard::analytics::{default_edges, partial_dependence, price_response, PdVariable};
use lobguard::econ::AlertLog;
use lobguard::engine::{build_observations, LabeledObservation};
use lobguard::net::{HeadKind, Model};
use lobguard::par::Parallelism;
use lobguard::pipeline::{fit_model, run_detection, DetectSummary, GroundTruth};
use lobguard::sim::{inject_spoofs, read_labels, simulate, write_labels};
use lobguard::stream::{read_events, save_events, EventReader, LobEvent, Side};

use crate::config::Config;

pub struct Ctx {
    pub cfg: Config,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Ctx {
    fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn load_events(path: &Path) -> Result<Vec<LobEvent>> {
    read_events(path).with_context(|| format!("reading events from {}", path.display()))
}

/// Assets in order of first appearance.
fn stream_assets(events: &[LobEvent]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for e in events {
        if !out.contains(&e.asset) {
            out.push(e.asset.clone());
        }
    }
    out
}

pub fn simulate_cmd(ctx: &Ctx, duration_s: f64, output: &str) -> Result<String> {
    let out = simulate(&ctx.cfg.sim, duration_s)?;
    save_events(ctx.out(output), &out.events)?;
    let mut truth = String::from("start_ns,mid_start,mid_end,move_bps,mean_imbalance\n");
    for b in &out.truth {
        truth.push_str(&format!("{},{},{},{},{}\n", b.start_ns, b.mid_start, b.mid_end, b.move_bps(), b.mean_imbalance));
    }
    write_text(&ctx.out("truth.csv"), &truth)?;
    let [lb, la, tb, ta] = out.counts;
    Ok(format!("{} events over {duration_s}s (limit bid {lb}, limit ask {la}, trade bid {tb}, trade ask {ta}) -> {output}", out.events.len()))
}

pub fn inject_cmd(ctx: &Ctx, events: &Path, output: &str, labels: &str) -> Result<String> {
    let evs = load_events(events)?;
    let (Some(first), Some(last)) = (evs.first(), evs.last()) else { bail!("{} holds no events", events.display()) };
    let episodes = ctx.cfg.episodes.generate(first.ts_ns, last.ts_ns, ctx.seed)?;
    let (stream, lbls) = inject_spoofs(&evs, &episodes)?;
    save_events(ctx.out(output), &stream)?;
    let mut w = create(&ctx.out(labels))?;
    write_labels(&mut w, &lbls)?;
    w.flush()?;
    Ok(format!("{} episodes, {} labeled orders -> {output}, {labels}", episodes.len(), lbls.len()))
}

pub fn train_cmd(ctx: &Ctx, events: &[PathBuf], head: HeadKind, assets: Option<Vec<String>>, model_name: &str) -> Result<String> {
    let mut evs = Vec::new();
    for p in events {
        evs.extend(load_events(p)?);
    }
    // merge multi-file input by time; stable so same-timestamp order holds
    evs.sort_by_key(|e| e.ts_ns);
    let assets = assets.unwrap_or_else(|| stream_assets(&evs));
    if head == HeadKind::BivariateGaussian && assets.len() < 2 {
        bail!("the bivariate head needs two assets, stream has {:?}", assets);
    }
    let obs = build_observations(&evs, &assets, &ctx.cfg.kernel, &ctx.cfg.observation)?;
    log::info!("{} observations from {} events", obs.len(), evs.len());
    let (model, report) = fit_model(&obs, &ctx.cfg.kernel, &assets, ctx.cfg.observation.horizon_s, head, &ctx.cfg.train)?;
    model.save(ctx.out(model_name))?;
    let mut csv = String::from("epoch,train_nll,val_nll\n");
    for e in &report.epochs {
        csv.push_str(&format!("{},{},{}\n", e.epoch, e.train_nll, e.val_nll));
    }
    write_text(&ctx.out("train_report.csv"), &csv)?;
    Ok(format!(
        "{} observations ({} train / {} val), best epoch {} val NLL {:.5} -> {model_name}",
        obs.len(),
        report.n_train,
        report.n_val,
        report.best_epoch,
        report.best_val_nll
    ))
}

fn format_summary(s: &DetectSummary) -> String {
    let share = s.suspicious_share_of_large.map(|v| format!("{:.1}%", 100.0 * v)).unwrap_or_else(|| "n/a".into());
    format!(
        "{} events, {} orders scored ({} unscored), {} large, {} suspicious ({share} of large); latency p50 {:.1}us p95 {:.1}us p99 {:.1}us; {:.0} orders/s",
        s.events,
        s.orders_scored,
        s.unscored,
        s.large_orders,
        s.suspicious,
        s.latency.p50_ns as f64 / 1e3,
        s.latency.p95_ns as f64 / 1e3,
        s.latency.p99_ns as f64 / 1e3,
        s.throughput_per_s
    )
}

pub fn detect_cmd(ctx: &Ctx, model: &Path, events: &Path, labels: Option<&Path>, alerts: &str) -> Result<String> {
    let model = Model::load(model)?;
    model.check_kernel(&ctx.cfg.kernel).context("model does not match the configured kernel")?;
    let mut truth = match labels {
        Some(p) => Some(GroundTruth::new(&read_labels(BufReader::new(File::open(p)?))?, ctx.cfg.detect.threshold_notional)),
        None => None,
    };
    let mut log = AlertLog::new(create(&ctx.out(alerts))?);
    let summary = run_detection(&model, EventReader::open(events)?, ctx.cfg.detect, 0, |v| {
        if let Some(t) = truth.as_mut() {
            t.observe(v);
        }
        log.append(v)
    })?;
    log.into_inner()?.flush()?;
    write_json(&ctx.out("detect_summary.json"), &summary)?;
    let mut msg = format_summary(&summary);
    if let Some(t) = truth {
        let score = t.finish();
        write_json(&ctx.out("detect_score.json"), &score)?;
        msg.push_str(&format!(
            "\nrecall {:.3} ({}/{}), precision {:.3}, small-order false positive rate {:.4}",
            score.recall, score.labeled_flagged, score.labeled, score.precision, score.false_positive_rate_small
        ));
    }
    Ok(msg)
}

pub fn bench_cmd(ctx: &Ctx, model: &Path, events: &Path, warmup: usize, min_orders: usize) -> Result<String> {
    let model = Model::load(model)?;
    model.check_kernel(&ctx.cfg.kernel).context("model does not match the configured kernel")?;
    // preload so disk and parsing stay out of the timed path
    let evs = load_events(events)?;
    let summary = run_detection(&model, evs.into_iter().map(Ok), ctx.cfg.detect, warmup, |_| Ok(()))?;
    if summary.latency.n < min_orders {
        log::warn!("only {} timed orders, fewer than the {min_orders} requested; percentiles are less reliable", summary.latency.n);
    }
    write_json(&ctx.out("bench.json"), &summary)?;
    Ok(format_summary(&summary))
}

fn analysis_rows(ctx: &Ctx, model: &Model, events: &Path) -> Result<Vec<LabeledObservation>> {
    let evs = load_events(events)?;
    let cfg = lobguard::engine::ObservationConfig { horizon_s: model.horizon_s, ..ctx.cfg.observation };
    let obs = build_observations(&evs, &model.assets, &model.kernel, &cfg)?;
    if obs.is_empty() {
        bail!("no scorable states in {}", events.display());
    }
    Ok(obs)
}

pub fn pd_cmd(ctx: &Ctx, model: &Path, events: &Path, variable: PdVariable, bins: usize) -> Result<String> {
    let model = Model::load(model)?;
    let obs = analysis_rows(ctx, &model, events)?;
    let rows: Vec<&[f64]> = obs.iter().map(|o| o.x.as_slice()).collect();
    let layout = model.kernel.layout();
    let values: Vec<f64> = rows.iter().map(|r| variable.value(&layout, r)).collect();
    let edges = default_edges(variable, &values, bins);
    let report = partial_dependence(&model, &rows, variable, &edges, Parallelism::default())?;
    let name = format!("pd_{}.csv", variable.as_str());
    write_text(&ctx.out(&name), &report.to_csv())?;
    let occupied = report.bins.iter().filter(|b| b.count > 0).count();
    Ok(format!("{} states, {occupied}/{} bins occupied, {} outside the edges -> {name}", rows.len(), report.bins.len(), report.excluded))
}

pub fn response_cmd(ctx: &Ctx, model: &Path, events: &Path, sides: &[Side], n: usize) -> Result<String> {
    let model = Model::load(model)?;
    let obs = analysis_rows(ctx, &model, events)?;
    let rows: Vec<&[f64]> = obs.iter().map(|o| o.x.as_slice()).collect();
    let mut written = Vec::new();
    for &side in sides {
        let r = price_response(&model, &rows, side, &ctx.cfg.response, n, ctx.seed, 0, Parallelism::default())?;
        let name = format!("response_{}.csv", side.as_str().to_lowercase());
        write_text(&ctx.out(&name), &r.to_csv())?;
        written.push(name);
    }
    Ok(format!("N = {n} states from {} -> {}", rows.len(), written.join(", ")))
}
