//! Drives the `lobguard` binary through a full short run.

use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = "[train]\nmax_epochs = 3\npatience = 2\n[episodes]\ncount = 4\nmargin_s = 2.0\n";

fn lobguard(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lobguard"))
        .arg("--out-dir")
        .arg(dir)
        .arg("--config")
        .arg(dir.join("run.toml"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = lobguard(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn full_pipeline_writes_every_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("run.toml"), CONFIG).unwrap();
    let p = |name: &str| d.join(name).to_str().unwrap().to_string();

    ok(d, &["--seed", "11", "simulate", "--duration", "60"]);
    assert!(d.join("events.csv.gz").exists());
    assert_eq!(header(&d.join("truth.csv")), "start_ns,mid_start,mid_end,move_bps,mean_imbalance");

    let msg = ok(d, &["--seed", "11", "inject", "--events", &p("events.csv.gz")]);
    assert!(msg.starts_with("4 episodes"), "{msg}");
    assert!(header(&d.join("labels.csv")).starts_with("ts_ns,asset,side,notional"));

    ok(d, &["--seed", "11", "train", "--events", &p("events.csv.gz")]);
    let report = std::fs::read_to_string(d.join("train_report.csv")).unwrap();
    assert!(report.starts_with("epoch,train_nll,val_nll"));
    assert!((2..=4).contains(&report.lines().count()));

    let msg = ok(d, &["detect", "--model", &p("model.json"), "--events", &p("spoofed.csv.gz"), "--labels", &p("labels.csv")]);
    assert!(msg.contains("recall"), "{msg}");
    let score: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("detect_score.json")).unwrap()).unwrap();
    assert_eq!(score["labeled"], 12);
    let alerts = std::fs::read_to_string(d.join("alerts.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(alerts.lines().next().unwrap()).unwrap();
    for key in ["ts_ns", "side", "notional", "delta_c", "suspicious", "theta_plus", "theta_zero"] {
        assert!(first.get(key).is_some(), "alert lacks {key}");
    }

    ok(d, &["analyze", "pd", "--model", &p("model.json"), "--events", &p("events.csv.gz"), "--variable", "imbalance-lo", "--bins", "8"]);
    let pd = std::fs::read_to_string(d.join("pd_imbalance_lo.csv")).unwrap();
    assert_eq!(pd.lines().count(), 9);

    ok(d, &["analyze", "response", "--model", &p("model.json"), "--events", &p("events.csv.gz"), "--side", "bid", "--n", "3"]);
    assert_eq!(header(&d.join("response_bid.csv")), "side,size_usd,distance_bps,n,mean_delta_sharpe,var_delta_sharpe,t_stat,p_value");
    assert!(!d.join("response_ask.csv").exists());

    ok(d, &["bench", "--model", &p("model.json"), "--events", &p("spoofed.csv.gz"), "--warmup", "10", "--min-orders", "10"]);
    let bench: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("bench.json")).unwrap()).unwrap();
    assert!(bench["latency"]["p99_ns"].as_u64().unwrap() > 0);
}

#[test]
fn same_seed_reproduces_the_stream() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("run.toml"), CONFIG).unwrap();
    ok(d, &["--seed", "5", "simulate", "--duration", "20", "--output", "a.csv"]);
    ok(d, &["--seed", "5", "simulate", "--duration", "20", "--output", "b.csv"]);
    ok(d, &["--seed", "6", "simulate", "--duration", "20", "--output", "c.csv"]);
    let read = |n: &str| std::fs::read(d.join(n)).unwrap();
    assert_eq!(read("a.csv"), read("b.csv"));
    assert_ne!(read("a.csv"), read("c.csv"));
}

#[test]
fn bad_config_fails_with_message() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("run.toml"), "[simulation]\nkappa = 1.0\n").unwrap();
    let out = lobguard(d, &["simulate", "--duration", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("error: parsing") && err.contains("simulation"), "{err}");
}

#[test]
fn bivariate_head_needs_two_assets() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("run.toml"), CONFIG).unwrap();
    ok(d, &["simulate", "--duration", "5"]);
    let ev = d.join("events.csv.gz");
    let out = lobguard(d, &["train", "--events", ev.to_str().unwrap(), "--head", "bivariate"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("two assets"));
}

#[test]
fn config_prints_merged_toml() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("run.toml"), CONFIG).unwrap();
    let text = ok(d, &["--seed", "9", "config"]);
    assert!(text.contains("max_epochs = 3"), "{text}");
    assert!(text.contains("[sim]") && text.contains("seed = 9"), "{text}");
    // the printed file is itself a valid config
    std::fs::write(d.join("run.toml"), &text).unwrap();
    assert_eq!(ok(d, &["--seed", "9", "config"]), text);
}
