//! Simulated data plane: one optical domain controller and one rule agent
//! per packet device, all answering after technology-specific delays.

mod agent;
mod controller;

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use mlso_core::faults::{FaultInjector, FaultKind, FaultPlan};
use mlso_core::sbi::{SbiErrorBody, DISPATCHED_HEADER};
use mlso_core::timing::{DelayModel, Operation, Technology, TimingProfile};
use mlso_core::topology::Topology;
use serde::Deserialize;

use crate::server::{ServerHandle, StartupError};

pub use agent::AgentState;
pub use controller::ControllerState;

/// Simulated time in seconds. Either wall-clock time multiplied by the time
/// scale, or a manual clock advanced explicitly.
#[derive(Debug, Clone)]
pub struct SimClock(Arc<ClockInner>);

#[derive(Debug)]
enum ClockInner {
    Wall { start: Instant, time_scale: f64 },
    Manual(Mutex<f64>),
}

impl SimClock {
    pub fn wall(time_scale: f64) -> Self {
        SimClock(Arc::new(ClockInner::Wall { start: Instant::now(), time_scale }))
    }

    pub fn manual() -> Self {
        SimClock(Arc::new(ClockInner::Manual(Mutex::new(0.0))))
    }

    pub fn now_s(&self) -> f64 {
        match &*self.0 {
            ClockInner::Wall { start, time_scale } => start.elapsed().as_secs_f64() * time_scale,
            ClockInner::Manual(t) => *t.lock().unwrap(),
        }
    }

    pub fn advance(&self, seconds: f64) -> Result<f64, &'static str> {
        match &*self.0 {
            ClockInner::Wall { .. } => Err("clock follows wall time"),
            ClockInner::Manual(t) => {
                let mut t = t.lock().unwrap();
                *t += seconds.max(0.0);
                Ok(*t)
            }
        }
    }
}

/// Sleeps until `deadline` with sub-millisecond accuracy. Tokio timers
/// have millisecond granularity, so deadlines go to one timer thread that
/// sleeps natively (and spins the last stretch when another core is free).
pub async fn sleep_until_precise(deadline: Instant) {
    if deadline <= Instant::now() {
        return;
    }
    let (tx, rx) = tokio::sync::oneshot::channel();
    if timer().send((deadline, tx)).is_ok() {
        let _ = rx.await;
    }
}

type TimerEntry = (Instant, tokio::sync::oneshot::Sender<()>);

fn timer() -> std::sync::mpsc::Sender<TimerEntry> {
    static TIMER: std::sync::OnceLock<Mutex<std::sync::mpsc::Sender<TimerEntry>>> = std::sync::OnceLock::new();
    TIMER
        .get_or_init(|| {
            let (tx, rx) = std::sync::mpsc::channel();
            std::thread::Builder::new()
                .name("simnet-timer".into())
                .spawn(move || timer_loop(rx))
                .expect("spawn timer thread");
            Mutex::new(tx)
        })
        .lock()
        .unwrap()
        .clone()
}

fn timer_loop(rx: std::sync::mpsc::Receiver<TimerEntry>) {
    use std::cmp::Reverse;
    use std::sync::mpsc::RecvTimeoutError;
    let mut pending: std::collections::BinaryHeap<Reverse<(Instant, u64)>> = Default::default();
    let mut waiters: BTreeMap<u64, tokio::sync::oneshot::Sender<()>> = BTreeMap::new();
    let mut seq = 0u64;
    let margin = spin_margin();
    loop {
        let now = Instant::now();
        while let Some(Reverse((at, id))) = pending.peek().copied() {
            if at > now {
                break;
            }
            pending.pop();
            if let Some(w) = waiters.remove(&id) {
                let _ = w.send(());
            }
        }
        let incoming = match pending.peek() {
            None => rx.recv().map_err(|_| RecvTimeoutError::Disconnected),
            Some(Reverse((at, _))) => {
                let wait = at.saturating_duration_since(Instant::now());
                if wait <= margin {
                    std::thread::yield_now();
                    continue;
                }
                rx.recv_timeout(wait - margin)
            }
        };
        match incoming {
            Ok((at, w)) => {
                seq += 1;
                pending.push(Reverse((at, seq)));
                waiters.insert(seq, w);
            }
            Err(RecvTimeoutError::Timeout) => {}
            Err(RecvTimeoutError::Disconnected) => return,
        }
    }
}

fn spin_margin() -> Duration {
    // wake-ups from a timed wait land late by up to a few hundred us
    Duration::from_micros(500)
}

/// Oldest dispatch stamp honoured; anything older is treated as skew.
const MAX_DISPATCH_AGE: Duration = Duration::from_millis(100);

/// Instant from which a request's simulated delay runs: the sender's
/// dispatch time when stamped, else now.
pub fn request_start(headers: &HeaderMap) -> Instant {
    let now = Instant::now();
    let Some(sent) = headers
        .get(DISPATCHED_HEADER)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.parse::<u64>().ok())
    else {
        return now;
    };
    let age = Duration::from_micros(unix_micros().saturating_sub(sent)).min(MAX_DISPATCH_AGE);
    now.checked_sub(age).unwrap_or(now)
}

pub fn unix_micros() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_micros() as u64)
}

/// Delay draws and fault decisions shared by one simulated element.
#[derive(Debug)]
pub struct Pacer {
    delays: Mutex<DelayModel>,
    faults: Arc<Mutex<FaultInjector>>,
}

pub enum Paced {
    Proceed { applied: Duration },
    Reject { applied: Duration },
}

impl Pacer {
    pub fn new(profiles: BTreeMap<Technology, TimingProfile>, seed: u64, faults: Arc<Mutex<FaultInjector>>) -> Self {
        Self { delays: Mutex::new(DelayModel::new(profiles, seed)), faults }
    }

    /// Waits out the drawn delay for one request that arrived at `start`.
    /// A dropped request never returns; the caller's timeout ends it.
    pub async fn pace(&self, start: Instant, target: &str, tech: Technology, op: Operation) -> Paced {
        let mut delay = self.delays.lock().unwrap().draw(tech, op);
        let fault = self.faults.lock().unwrap().next(target, op);
        match fault {
            Some(FaultKind::Drop) => {
                tracing::info!("{target}: dropping {op:?} request");
                std::future::pending::<()>().await;
            }
            Some(FaultKind::DelaySpike { factor }) => delay = delay.mul_f64(factor),
            _ => {}
        }
        sleep_until_precise(start + delay).await;
        let applied = start.elapsed();
        if matches!(fault, Some(FaultKind::Reject)) {
            Paced::Reject { applied }
        } else {
            Paced::Proceed { applied }
        }
    }

    pub fn key_exchange_failures(&self) -> std::collections::BTreeSet<u64> {
        self.faults.lock().unwrap().plan().failed_key_exchanges.clone()
    }
}

pub fn error_response(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(SbiErrorBody { error: message.into() })).into_response()
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct AdvanceClock {
    pub seconds: f64,
}

/// Everything needed to bring up the simulated network.
#[derive(Debug, Clone)]
pub struct SimnetSpec {
    pub controller_addr: String,
    /// Optical slice served by the controller.
    pub optical: Topology,
    pub domain: String,
    pub agents: BTreeMap<String, String>,
    pub profiles: BTreeMap<Technology, TimingProfile>,
    pub seed: u64,
    pub faults: FaultPlan,
    pub rekey_interval_s: f64,
    pub clock: SimClock,
}

pub struct SimNetwork {
    pub controller: Arc<ControllerState>,
    pub agents: BTreeMap<String, Arc<AgentState>>,
    pub clock: SimClock,
    controller_server: ServerHandle,
    agent_servers: BTreeMap<String, ServerHandle>,
}

impl SimNetwork {
    pub async fn start(spec: SimnetSpec) -> Result<Self, StartupError> {
        let faults = Arc::new(Mutex::new(FaultInjector::new(spec.faults.clone())));
        let controller = Arc::new(ControllerState::new(
            spec.optical.clone(),
            spec.domain.clone(),
            Pacer::new(spec.profiles.clone(), spec.seed, faults.clone()),
            spec.clock.clone(),
            spec.rekey_interval_s,
        ));
        let controller_server = ServerHandle::spawn(&spec.controller_addr, controller::router(controller.clone())).await?;
        let mut agents = BTreeMap::new();
        let mut agent_servers = BTreeMap::new();
        for (i, (device, addr)) in spec.agents.iter().enumerate() {
            let state = Arc::new(AgentState::new(
                device.clone(),
                Pacer::new(spec.profiles.clone(), spec.seed.wrapping_add(1 + i as u64), faults.clone()),
                spec.clock.clone(),
            ));
            let server = ServerHandle::spawn(addr, agent::router(state.clone())).await?;
            agents.insert(device.clone(), state);
            agent_servers.insert(device.clone(), server);
        }
        Ok(Self { controller, agents, clock: spec.clock, controller_server, agent_servers })
    }

    pub fn controller_url(&self) -> String {
        self.controller_server.url()
    }

    pub fn agent_urls(&self) -> BTreeMap<String, String> {
        self.agent_servers.iter().map(|(d, s)| (d.clone(), s.url())).collect()
    }

    /// Stops one agent, for failure tests.
    pub async fn stop_agent(&mut self, device: &str) {
        if let Some(s) = self.agent_servers.get_mut(device) {
            s.stop().await;
        }
    }

    pub async fn stop(&mut self) {
        self.controller_server.stop().await;
        for s in self.agent_servers.values_mut() {
            s.stop().await;
        }
    }
}
