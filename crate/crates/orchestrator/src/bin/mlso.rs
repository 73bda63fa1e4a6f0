//! Operator command line: bring the stack up and drive the northbound API.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};
use mlso::bootstrap::Stack;
use mlso::client::{ClientError, NbiClient, DEFAULT_URL};
use mlso_core::config::{load_config, Config};
use mlso_core::lifecycle::IntentState;

#[derive(Debug, Parser)]
#[command(name = "mlso", version, about = "Multilayer secure-service orchestrator")]
struct Cli {
    /// Northbound API base URL.
    #[arg(long, global = true, env = "MLSO_URL", default_value = DEFAULT_URL)]
    url: String,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Start orchestrator and simulated network in the foreground.
    Up {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Ask a running orchestrator to shut down.
    Down,
    /// Submit an intent document ("-" reads stdin).
    Submit { file: PathBuf },
    List,
    Show {
        id: String,
        /// Block until the intent reaches this state (or a terminal one).
        #[arg(long)]
        wait: Option<String>,
        #[arg(long, default_value_t = 30_000)]
        timeout_ms: u64,
    },
    Withdraw { id: String },
    Topology,
    /// Layer decision trace of an intent.
    Trace { id: String },
}

fn print_json<T: serde::Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

async fn run(cli: Cli) -> Result<(), ClientError> {
    let client = NbiClient::new(&cli.url);
    match cli.command {
        Cmd::Up { .. } => unreachable!("handled in main"),
        Cmd::Down => client.shutdown().await?,
        Cmd::Submit { file } => {
            let doc = if file.as_os_str() == "-" {
                std::io::read_to_string(std::io::stdin())
            } else {
                std::fs::read_to_string(&file)
            }
            .map_err(|e| ClientError::Format(format!("{}: {e}", file.display())))?;
            let s = client.submit(&doc).await?;
            println!("{}", s.id);
        }
        Cmd::List => {
            let list = client.list().await?;
            println!("{:<6} {:<12} {:<10} REASON", "ID", "STATE", "LAYER");
            for i in list {
                let layer = i.layer.map_or("-", |l| l.name());
                println!("{:<6} {:<12} {:<10} {}", i.id, i.state.name(), layer, i.failure_reason.unwrap_or_default());
            }
        }
        Cmd::Show { id, wait: None, .. } => print_json(&client.show(&id).await?),
        Cmd::Show { id, wait: Some(state), timeout_ms } => {
            let target = IntentState::ALL
                .into_iter()
                .find(|s| s.name().eq_ignore_ascii_case(&state))
                .ok_or_else(|| ClientError::Format(format!("unknown state {state}")))?;
            let id = id.parse().map_err(|_| ClientError::Format(format!("bad intent id {id}")))?;
            print_json(&client.wait(id, target, Duration::from_millis(timeout_ms)).await?);
        }
        Cmd::Withdraw { id } => print_json(&client.withdraw(&id).await?),
        Cmd::Topology => print_json(&client.topology().await?),
        Cmd::Trace { id } => print_json(&client.trace(&id).await?),
    }
    Ok(())
}

async fn up(config: Option<PathBuf>) -> Result<(), String> {
    let mut config = match config {
        Some(p) => load_config(&p).map_err(|e| e.to_string())?,
        None => Config::default(),
    };
    config.endpoints.apply_env(|k| std::env::var(k).ok());
    let stack = Stack::start(config).await.map_err(|e| e.to_string())?;
    println!("listening on {}", stack.nbi_url());
    tokio::select! {
        _ = stack.shutdown_requested() => {}
        _ = tokio::signal::ctrl_c() => {}
    }
    stack.stop().await;
    Ok(())
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    if let Cmd::Up { config } = cli.command {
        return match up(config).await {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("mlso: {e}");
                ExitCode::FAILURE
            }
        };
    }
    match run(cli).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mlso: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
