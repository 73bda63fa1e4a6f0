//! Provisioning-time experiment runner.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};
use mlso::bootstrap::Stack;
use mlso::client::NbiClient;
use mlso::harness::{self, ExperimentConfig, Scenario};
use mlso_core::config::{load_config, Config};
use mlso_core::config::Endpoints;

#[derive(Debug, Parser)]
#[command(name = "harness", version, about = "Measure intent install and delete times")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    Run(RunArgs),
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    scenario: Scenario,
    #[arg(long, default_value_t = 595)]
    trials: usize,
    #[arg(long, default_value_t = 100.0)]
    time_scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Delay jitter fraction for the in-process network.
    #[arg(long)]
    jitter: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    /// Config file for the in-process stack.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Measure a running orchestrator instead of starting one. Its time
    /// scale must match --time-scale.
    #[arg(long)]
    url: Option<String>,
    /// Trials in flight at once.
    #[arg(long, default_value_t = 1)]
    parallel: usize,
}

async fn run(args: RunArgs) -> Result<(), String> {
    let cfg = ExperimentConfig {
        scenario: args.scenario,
        trials: args.trials,
        time_scale: args.time_scale,
        step_timeout: Duration::from_secs(120),
    };
    let mut stack = None;
    let client = match &args.url {
        Some(url) => NbiClient::new(url),
        None => {
            let mut config = match &args.config {
                Some(p) => load_config(p).map_err(|e| e.to_string())?,
                None => Config::default(),
            };
            config.endpoints = Endpoints::ephemeral();
            config.simnet.time_scale = args.time_scale;
            config.simnet.seed = args.seed;
            if let Some(j) = args.jitter {
                config.simnet.jitter = j;
            }
            config.validate().map_err(|e| e.to_string())?;
            let s = Stack::start(config).await.map_err(|e| e.to_string())?;
            let c = NbiClient::new(s.nbi_url());
            stack = Some(s);
            c
        }
    };
    let records = if args.parallel > 1 {
        harness::run_parallel(&client, &cfg, args.parallel).await
    } else {
        harness::run(&client, &cfg).await
    }
    .map_err(|e| e.to_string())?;
    harness::write_csv_file(&records, &args.out).map_err(|e| e.to_string())?;
    let summary = harness::summary(&records);
    println!("{}", serde_json::to_string_pretty(&summary).expect("serializable"));
    if let Some(s) = stack {
        let left = s.simnet.controller.service_count();
        s.stop().await;
        if left != 0 {
            return Err(format!("{left} connectivity services left on the controller"));
        }
    }
    Ok(())
}

#[tokio::main(flavor = "current_thread")]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()))
        .with_writer(std::io::stderr)
        .init();
    let Cmd::Run(args) = Cli::parse().command;
    match run(args).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("harness: {e}");
            ExitCode::FAILURE
        }
    }
}
