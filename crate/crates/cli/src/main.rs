//! `lobguard`: simulate, train, detect and analyze from the command line.

mod commands;
mod config;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use lobguard::analytics::PdVariable;
use lobguard::net::HeadKind;
use lobguard::stream::Side;

use commands::Ctx;
use config::Config;

#[derive(Parser)]
#[command(name = "lobguard", version, about = "Order-flow features, probabilistic price-move model and spoofing-gain detector")]
struct Cli {
    /// TOML file with [sim], [episodes], [kernel], [observation], [train], [detect] and [response] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for simulation, training, episode placement and response sampling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory receiving every output file.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum HeadArg {
    Gaussian,
    Skew,
    Bivariate,
}

impl From<HeadArg> for HeadKind {
    fn from(h: HeadArg) -> Self {
        match h {
            HeadArg::Gaussian => HeadKind::Gaussian,
            HeadArg::Skew => HeadKind::SkewGaussian,
            HeadArg::Bivariate => HeadKind::BivariateGaussian,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    Bid,
    Ask,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum VarArg {
    Spread,
    ImbalanceLo,
    ImbalanceMo,
}

impl From<VarArg> for PdVariable {
    fn from(v: VarArg) -> Self {
        match v {
            VarArg::Spread => PdVariable::Spread,
            VarArg::ImbalanceLo => PdVariable::ImbalanceLo,
            VarArg::ImbalanceMo => PdVariable::ImbalanceMo,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic Hawkes order-book stream.
    Simulate {
        #[arg(long, default_value_t = 600.0)]
        duration: f64,
        #[arg(long, default_value = "events.csv.gz")]
        output: String,
    },
    /// Insert layered spoofing episodes and write ground-truth labels.
    Inject {
        #[arg(long)]
        events: PathBuf,
        #[arg(long, default_value = "spoofed.csv.gz")]
        output: String,
        #[arg(long, default_value = "labels.csv")]
        labels: String,
    },
    /// Fit the feature transform and the network.
    Train {
        /// One or more event files; merged by timestamp.
        #[arg(long, required = true, num_args = 1..)]
        events: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "skew")]
        head: HeadArg,
        /// Comma-separated assets, primary first. Defaults to order of appearance.
        #[arg(long, value_delimiter = ',')]
        assets: Option<Vec<String>>,
        #[arg(long, default_value = "model.json")]
        model: String,
    },
    /// Score every filter-passing insert and write the alert log.
    Detect {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        events: PathBuf,
        /// Labels file from `inject`; adds recall and precision.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long, default_value = "alerts.jsonl")]
        alerts: String,
    },
    /// Analysis suite.
    Analyze {
        #[command(subcommand)]
        what: Analyze,
    },
    /// Print the effective configuration (defaults, file and `--seed` merged) as TOML.
    Config,
    /// Per-order scoring latency percentiles and throughput.
    Bench {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        events: PathBuf,
        /// Leading verdicts excluded from the percentiles.
        #[arg(long, default_value_t = 1000)]
        warmup: usize,
        #[arg(long, default_value_t = 100_000)]
        min_orders: usize,
    },
}

#[derive(Subcommand)]
enum Analyze {
    /// Partial dependence of the predicted moments on one variable.
    Pd {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        events: PathBuf,
        #[arg(long, value_enum, default_value = "spread")]
        variable: VarArg,
        #[arg(long, default_value_t = 20)]
        bins: usize,
    },
    /// Change in standardized average after a hypothetical insert, with t-tests.
    Response {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        events: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        side: SideArg,
        #[arg(long, default_value_t = 10)]
        n: usize,
    },
}

fn run(cli: Cli) -> Result<String> {
    let mut cfg = Config::load(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.reseed(s);
    }
    std::fs::create_dir_all(&cli.out_dir).with_context(|| format!("creating {}", cli.out_dir.display()))?;
    let ctx = Ctx { seed: cli.seed.unwrap_or(cfg.sim.seed), cfg, out_dir: cli.out_dir };
    match cli.cmd {
        Cmd::Config => Ok(toml::to_string(&ctx.cfg)?.trim_end().to_string()),
        Cmd::Simulate { duration, output } => commands::simulate_cmd(&ctx, duration, &output),
        Cmd::Inject { events, output, labels } => commands::inject_cmd(&ctx, &events, &output, &labels),
        Cmd::Train { events, head, assets, model } => commands::train_cmd(&ctx, &events, head.into(), assets, &model),
        Cmd::Detect { model, events, labels, alerts } => commands::detect_cmd(&ctx, &model, &events, labels.as_deref(), &alerts),
        Cmd::Bench { model, events, warmup, min_orders } => commands::bench_cmd(&ctx, &model, &events, warmup, min_orders),
        Cmd::Analyze { what: Analyze::Pd { model, events, variable, bins } } => commands::pd_cmd(&ctx, &model, &events, variable.into(), bins),
        Cmd::Analyze { what: Analyze::Response { model, events, side, n } } => {
            let sides: &[Side] = match side {
                SideArg::Bid => &[Side::Bid],
                SideArg::Ask => &[Side::Ask],
                SideArg::Both => &[Side::Bid, Side::Ask],
            };
            commands::response_cmd(&ctx, &model, &events, sides, n)
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(msg) => println!("{msg}"),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}
