//! Brings up the simulated network, discovers the optical domain, and
//! starts the engine and the northbound API.

use std::sync::Arc;
use std::time::Duration;

use mlso_core::config::Config;
use mlso_core::testbed::{attachment_links, default_testbed, packet_slice, OPTICAL_DOMAIN};
use mlso_core::topology::Topology;
use thiserror::Error;
use tokio::sync::Notify;

use crate::drivers::{DiscoveryError, DriverError, TapiClient};
use crate::engine::{Engine, EngineConfig, TimeoutPolicy};
use crate::nbi::{self, NbiState};
use crate::server::{ServerHandle, StartupError};
use crate::simnet::{SimClock, SimNetwork, SimnetSpec};

#[derive(Debug, Error)]
pub enum BootstrapError {
    #[error(transparent)]
    Startup(#[from] StartupError),
    #[error("discovery failed: {0}")]
    Discovery(#[from] DiscoveryError),
    #[error("agent of {0} unreachable: {1}")]
    Agent(String, DriverError),
    #[error("topology inconsistent after discovery: {}", .0.join("; "))]
    Integrity(Vec<String>),
}

pub struct Stack {
    pub config: Config,
    pub simnet: SimNetwork,
    pub engine: Engine,
    nbi: ServerHandle,
    shutdown: Arc<Notify>,
}

impl Stack {
    pub async fn start(config: Config) -> Result<Self, BootstrapError> {
        let clock = SimClock::wall(config.simnet.time_scale);
        Self::start_with_clock(config, clock).await
    }

    /// Same as `start`, with an explicit simulation clock (a manual clock
    /// lets tests step key rotation time).
    pub async fn start_with_clock(config: Config, clock: SimClock) -> Result<Self, BootstrapError> {
        let profiles = config.timing_profiles();
        let simnet = SimNetwork::start(SimnetSpec {
            controller_addr: config.endpoints.controller.clone(),
            optical: default_testbed().domain_slice(OPTICAL_DOMAIN),
            domain: OPTICAL_DOMAIN.to_string(),
            agents: config.endpoints.agents.clone(),
            profiles: profiles.clone(),
            seed: config.simnet.seed,
            faults: config.simnet.faults.clone(),
            rekey_interval_s: config.simnet.rekey_interval_s,
            clock,
        })
        .await?;

        let topology = discover_topology(&simnet.controller_url()).await?;
        let engine = Engine::new(
            topology,
            EngineConfig {
                compiler: config.compiler_config(),
                timeouts: TimeoutPolicy {
                    factor: config.policy.driver_timeout_factor,
                    floor: Duration::from_secs_f64(config.policy.driver_timeout_floor_s),
                    profiles,
                },
                agents: simnet.agent_urls(),
            },
        );
        // both also open the connections the first intent will reuse
        engine.probe_agents().await.map_err(|(d, e)| BootstrapError::Agent(d, e))?;
        let changed = engine.discover().await?;
        if changed != 0 {
            tracing::warn!("second discovery changed {changed} entities");
        }
        let shutdown = Arc::new(Notify::new());
        let nbi = ServerHandle::spawn(
            &config.endpoints.nbi,
            nbi::router(NbiState { engine: engine.clone(), shutdown: shutdown.clone() }),
        )
        .await?;
        tracing::info!("northbound API on {}", nbi.url());
        Ok(Self { config, simnet, engine, nbi, shutdown })
    }

    pub fn nbi_url(&self) -> String {
        self.nbi.url()
    }

    /// Resolves once `POST /admin/shutdown` was called.
    pub async fn shutdown_requested(&self) {
        self.shutdown.notified().await;
    }

    pub async fn stop(mut self) {
        self.nbi.stop().await;
        self.simnet.stop().await;
    }
}

/// Packet-side inventory plus whatever the optical controller reports,
/// joined by the attachment patch links.
pub async fn discover_topology(controller_url: &str) -> Result<Topology, BootstrapError> {
    let mut topology = packet_slice(controller_url);
    let fragment = TapiClient::new(controller_url).discover().await?;
    fragment.apply(&mut topology).map_err(|e| BootstrapError::Integrity(vec![e.to_string()]))?;
    for l in attachment_links() {
        topology.upsert_link(l).map_err(|e| BootstrapError::Integrity(vec![e.to_string()]))?;
    }
    let problems = topology.check_integrity();
    if !problems.is_empty() {
        return Err(BootstrapError::Integrity(problems));
    }
    Ok(topology)
}
