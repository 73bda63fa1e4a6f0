//! Runs the intent lifecycle against the southbound drivers.
//!
//! The `IntentBook` stays behind one mutex. Driver calls run as separate
//! tasks and report back through `on_driver_result`; every state change
//! bumps a watch channel so callers can wait for a state.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use mlso_core::compiler::{CompilerConfig, IntentId};
use mlso_core::lifecycle::{Action, Command, IntentBook, IntentRecord, IntentState, LifecycleError, Outcome};
use mlso_core::model::IntentRequest;
use mlso_core::sbi::{edge_point_uuid, ConnectivityServiceRequest};
use mlso_core::timing::{Operation, Technology, TimingProfile};
use mlso_core::topology::{PortKey, Topology};
use tokio::sync::watch;

use crate::drivers::{DiscoveryError, DriverError, SwitchClient, TapiClient};

/// Per-call driver timeout: `factor` times the expected (scaled) duration of
/// the operation, never below `floor`.
#[derive(Debug, Clone)]
pub struct TimeoutPolicy {
    pub factor: f64,
    pub floor: Duration,
    pub profiles: BTreeMap<Technology, TimingProfile>,
}

impl TimeoutPolicy {
    pub fn for_action(&self, action: &Action) -> Duration {
        let expected = |t: Technology, op: Operation| self.profiles.get(&t).map_or(0.0, |p| p.scaled_mean(op));
        let secs = match action {
            Action::CreateService { domain } => expected(Technology::optical(domain.encryption), Operation::Install),
            // the delete does not say whether the service encrypts; take the slower
            Action::DeleteService { .. } => expected(Technology::EncryptedWdm, Operation::Delete)
                .max(expected(Technology::UnencryptedWdm, Operation::Delete)),
            Action::InstallRules { .. } => expected(Technology::MacsecEthernet, Operation::Install),
            Action::RemoveRules { .. } => expected(Technology::MacsecEthernet, Operation::Delete),
        };
        Duration::from_secs_f64(secs * self.factor).max(self.floor)
    }
}

pub struct EngineConfig {
    pub compiler: CompilerConfig,
    pub timeouts: TimeoutPolicy,
    /// Agent base URL per packet device.
    pub agents: BTreeMap<String, String>,
}

#[derive(Clone)]
pub struct Engine {
    inner: Arc<Inner>,
}

struct Inner {
    book: Mutex<IntentBook>,
    epoch: Instant,
    timeouts: TimeoutPolicy,
    switches: BTreeMap<String, SwitchClient>,
    controllers: Mutex<BTreeMap<String, TapiClient>>,
    changed: watch::Sender<u64>,
}

impl Engine {
    pub fn new(topology: Topology, config: EngineConfig) -> Self {
        let epoch = Instant::now();
        let clock = Box::new(move || epoch.elapsed().as_micros() as u64);
        let switches = config.agents.into_iter().map(|(d, url)| (d, SwitchClient::new(url))).collect();
        let (changed, _) = watch::channel(0);
        Self {
            inner: Arc::new(Inner {
                book: Mutex::new(IntentBook::new(topology, config.compiler, clock)),
                epoch,
                timeouts: config.timeouts,
                switches,
                controllers: Mutex::new(BTreeMap::new()),
                changed,
            }),
        }
    }

    /// Microseconds since the engine started, the time base of every record
    /// timestamp.
    pub fn micros_since_start(&self, at: Instant) -> u64 {
        at.saturating_duration_since(self.inner.epoch).as_micros() as u64
    }

    /// Registers the intent as received at `received` and starts compiling
    /// it in the background.
    pub fn submit(&self, request: IntentRequest, received: Instant) -> Result<IntentId, LifecycleError> {
        let id = self.inner.book.lock().unwrap().submit_at(request, self.micros_since_start(received))?;
        self.notify();
        let engine = self.clone();
        tokio::spawn(async move {
            let commands = engine.inner.book.lock().unwrap().compile(id);
            engine.notify();
            match commands {
                Ok(c) => engine.run(c),
                Err(e) => tracing::error!("compile {id}: {e}"),
            }
        });
        Ok(id)
    }

    pub fn withdraw(&self, id: IntentId) -> Result<(), LifecycleError> {
        let commands = self.inner.book.lock().unwrap().withdraw(id)?;
        self.notify();
        self.run(commands);
        Ok(())
    }

    pub fn record(&self, id: IntentId) -> Option<IntentRecord> {
        self.inner.book.lock().unwrap().record(id).cloned()
    }

    pub fn records(&self) -> Vec<IntentRecord> {
        self.inner.book.lock().unwrap().records().cloned().collect()
    }

    pub fn topology(&self) -> Topology {
        self.inner.book.lock().unwrap().topology().clone()
    }

    pub fn check_accounting(&self) -> Result<(), String> {
        self.inner.book.lock().unwrap().check_accounting()
    }

    /// Waits until the intent is in one of `states` (or in a terminal state)
    /// and returns it. `None` when the intent does not exist or the time ran
    /// out.
    pub async fn wait_for(&self, id: IntentId, states: &[IntentState], timeout: Duration) -> Option<IntentRecord> {
        let mut rx = self.inner.changed.subscribe();
        let deadline = tokio::time::Instant::now() + timeout;
        loop {
            let state = self.inner.book.lock().unwrap().record(id)?.state;
            if states.contains(&state) || state.is_terminal() {
                return self.record(id);
            }
            if tokio::time::timeout_at(deadline, rx.changed()).await.is_err() {
                return self.record(id).filter(|r| states.contains(&r.state));
            }
        }
    }

    /// Pulls the topology of every registered domain controller into the
    /// store. Returns the number of entities added or changed.
    pub async fn discover(&self) -> Result<usize, DiscoveryError> {
        let domains: Vec<String> =
            self.inner.book.lock().unwrap().topology().domains().map(|d| d.id.clone()).collect();
        let mut mutations = 0;
        for d in domains {
            let Some(client) = self.controller(&d) else { continue };
            let fragment = client.discover().await?;
            let mut book = self.inner.book.lock().unwrap();
            mutations += fragment
                .apply(book.topology_mut())
                .map_err(|e| DiscoveryError::Driver(DriverError::Format(e.to_string())))?;
        }
        Ok(mutations)
    }

    /// Lists the rules of every configured agent; the first unreachable
    /// one is reported.
    pub async fn probe_agents(&self) -> Result<(), (String, DriverError)> {
        for (device, client) in &self.inner.switches {
            client.list().await.map_err(|e| (device.clone(), e))?;
        }
        Ok(())
    }

    fn controller(&self, domain: &str) -> Option<TapiClient> {
        let mut cache = self.inner.controllers.lock().unwrap();
        if let Some(c) = cache.get(domain) {
            return Some(c.clone());
        }
        let url = self.inner.book.lock().unwrap().topology().domain(domain)?.controller_endpoint.clone();
        let client = TapiClient::new(url);
        cache.insert(domain.to_string(), client.clone());
        Some(client)
    }

    fn notify(&self) {
        self.inner.changed.send_modify(|n| *n += 1);
    }

    fn run(&self, commands: Vec<Command>) {
        for c in commands {
            let engine = self.clone();
            tokio::spawn(async move {
                let limit = engine.inner.timeouts.for_action(&c.action);
                let outcome = match tokio::time::timeout(limit, engine.execute(&c.action)).await {
                    Ok(Ok(handle)) => Outcome::Done { handle },
                    Ok(Err(e)) => Outcome::failed(e.to_string()),
                    Err(_) => Outcome::failed(DriverError::Timeout(limit).to_string()),
                };
                if let Outcome::Failed { reason } = &outcome {
                    tracing::warn!("intent {} {}: {reason}", c.intent, c.element);
                }
                let follow_up = engine.inner.book.lock().unwrap().on_driver_result(c.intent, &c.element, outcome);
                engine.notify();
                engine.run(follow_up);
            });
        }
    }

    async fn execute(&self, action: &Action) -> Result<Option<String>, DriverError> {
        match action {
            Action::CreateService { domain } => {
                let client = self.controller(&domain.domain_id).ok_or_else(|| unknown_domain(&domain.domain_id))?;
                let nep = |cp: &mlso_core::model::ConnectPoint| {
                    PortKey::from_connect_point(cp)
                        .map(|k| edge_point_uuid(&k.device_id, k.port_no))
                        .ok_or_else(|| DriverError::Format(format!("{cp} is not a concrete port")))
                };
                let mut req = ConnectivityServiceRequest::new(
                    nep(&domain.ingress)?,
                    nep(&domain.egress)?,
                    domain.encryption,
                    domain.bandwidth,
                );
                req.suggested_path = domain.suggested_path.clone();
                Ok(Some(client.create_service(&req).await?.uuid))
            }
            Action::DeleteService { domain_id, uuid } => {
                let client = self.controller(domain_id).ok_or_else(|| unknown_domain(domain_id))?;
                client.delete_service(uuid).await?;
                Ok(None)
            }
            Action::InstallRules { rules } => {
                let uuid = self.switch(&rules.device_id)?.install(rules).await?.uuid;
                Ok(Some(uuid))
            }
            Action::RemoveRules { device_id, cookie } => {
                self.switch(device_id)?.remove(*cookie).await?;
                Ok(None)
            }
        }
    }

    fn switch(&self, device: &str) -> Result<&SwitchClient, DriverError> {
        self.inner.switches.get(device).ok_or_else(|| DriverError::Unreachable {
            url: format!("agent of {device}"),
            reason: "no agent configured".into(),
        })
    }
}

fn unknown_domain(id: &str) -> DriverError {
    DriverError::NotFound(format!("domain {id} has no controller"))
}
