//! Simulated optical domain controller.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use axum::extract::{Path, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use mlso_core::faults::OPTICAL_TARGET;
use mlso_core::oam::KeySession;
use mlso_core::sbi::{ConnectivityServiceRequest, SbiAck, TapiTopology};
use mlso_core::timing::{Operation, Technology};
use mlso_core::topology::{PortKey, Topology};
use serde::Serialize;

use super::{error_response, request_start, AdvanceClock, Paced, Pacer, SimClock};

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ServiceEntry {
    pub uuid: String,
    pub request: ConnectivityServiceRequest,
    pub created_at_s: f64,
}

#[derive(Debug, Default)]
struct Table {
    services: BTreeMap<String, ServiceEntry>,
    sessions: BTreeMap<String, KeySession>,
    /// Capacity booked per edge point.
    booked: BTreeMap<String, u64>,
    next: u64,
    creates: u64,
    deletes: u64,
}

#[derive(Debug)]
pub struct ControllerState {
    topology: Topology,
    domain: String,
    pacer: Pacer,
    clock: SimClock,
    rekey_interval_s: f64,
    table: Mutex<Table>,
}

impl ControllerState {
    pub fn new(topology: Topology, domain: String, pacer: Pacer, clock: SimClock, rekey_interval_s: f64) -> Self {
        Self { topology, domain, pacer, clock, rekey_interval_s, table: Mutex::new(Table::default()) }
    }

    pub fn service_count(&self) -> usize {
        self.table.lock().unwrap().services.len()
    }

    /// Successful creates and deletes so far.
    pub fn counters(&self) -> (u64, u64) {
        let t = self.table.lock().unwrap();
        (t.creates, t.deletes)
    }

    fn edge_point(&self, uuid: &str) -> Option<PortKey> {
        let (dev, port) = uuid.rsplit_once(':')?;
        let key = PortKey::new(dev, port.parse().ok()?);
        self.topology.port(&key).map(|_| key)
    }

    fn check(&self, req: &ConnectivityServiceRequest, table: &Table) -> Result<(), String> {
        req.validate()?;
        for nep in [&req.ingress, &req.egress] {
            let key = self.edge_point(nep).ok_or_else(|| format!("unknown edge point {nep}"))?;
            let port = self.topology.port(&key).expect("resolved above");
            if req.encryption() && port.encryption_capability.is_none() {
                return Err(format!("edge point {nep} cannot encrypt"));
            }
            let booked = table.booked.get(nep.as_str()).copied().unwrap_or(0);
            if booked + req.capacity_bps > port.capacity {
                return Err(format!("edge point {nep} has {} b/s left", port.capacity - booked));
            }
        }
        if let Some(path) = &req.suggested_path {
            for l in path {
                if self.topology.link(l).is_none() {
                    return Err(format!("suggested path names unknown link {l}"));
                }
            }
        }
        Ok(())
    }
}

pub fn router(state: Arc<ControllerState>) -> Router {
    Router::new()
        .route("/tapi/topology", get(topology))
        .route("/tapi/connectivity-services", post(create).get(list))
        .route("/tapi/connectivity-services/{uuid}", get(show).delete(delete))
        .route("/oam/{uuid}", get(oam))
        .route("/sim/clock", post(advance_clock))
        .with_state(state)
}

async fn topology(State(s): State<Arc<ControllerState>>) -> Json<TapiTopology> {
    Json(TapiTopology::from_topology(&s.topology, &s.domain))
}

async fn list(State(s): State<Arc<ControllerState>>) -> Json<Vec<ServiceEntry>> {
    Json(s.table.lock().unwrap().services.values().cloned().collect())
}

async fn show(State(s): State<Arc<ControllerState>>, Path(uuid): Path<String>) -> Response {
    match s.table.lock().unwrap().services.get(&uuid) {
        Some(e) => Json(e.clone()).into_response(),
        None => error_response(StatusCode::NOT_FOUND, format!("no service {uuid}")),
    }
}

async fn create(State(s): State<Arc<ControllerState>>, headers: HeaderMap, Json(req): Json<ConnectivityServiceRequest>) -> Response {
    let start = request_start(&headers);
    if let Err(reason) = s.check(&req, &s.table.lock().unwrap()) {
        return error_response(StatusCode::UNPROCESSABLE_ENTITY, reason);
    }
    let tech = Technology::optical(req.encryption());
    let applied = match s.pacer.pace(start, OPTICAL_TARGET, tech, Operation::Install).await {
        Paced::Reject { .. } => return error_response(StatusCode::CONFLICT, "service setup rejected by controller"),
        Paced::Proceed { applied } => applied,
    };
    let mut t = s.table.lock().unwrap();
    // re-check: a concurrent create may have taken the capacity meanwhile
    if let Err(reason) = s.check(&req, &t) {
        return error_response(StatusCode::UNPROCESSABLE_ENTITY, reason);
    }
    t.next += 1;
    t.creates += 1;
    let uuid = format!("cs-{:06}", t.next);
    let now = s.clock.now_s();
    for nep in [&req.ingress, &req.egress] {
        *t.booked.entry(nep.clone()).or_default() += req.capacity_bps;
    }
    let failing = s.pacer.key_exchange_failures();
    t.sessions.insert(
        uuid.clone(),
        KeySession::start(format!("{uuid}-key"), req.encryption(), now, s.rekey_interval_s, failing),
    );
    t.services.insert(uuid.clone(), ServiceEntry { uuid: uuid.clone(), request: req, created_at_s: now });
    let ack = SbiAck { uuid, applied_delay_ms: applied.as_secs_f64() * 1e3 };
    (StatusCode::CREATED, Json(ack)).into_response()
}

async fn delete(State(s): State<Arc<ControllerState>>, headers: HeaderMap, Path(uuid): Path<String>) -> Response {
    let start = request_start(&headers);
    let Some(encryption) = s.table.lock().unwrap().services.get(&uuid).map(|e| e.request.encryption()) else {
        return error_response(StatusCode::NOT_FOUND, format!("no service {uuid}"));
    };
    let tech = Technology::optical(encryption);
    let applied = match s.pacer.pace(start, OPTICAL_TARGET, tech, Operation::Delete).await {
        Paced::Reject { .. } => return error_response(StatusCode::CONFLICT, "service deletion rejected by controller"),
        Paced::Proceed { applied } => applied,
    };
    let mut t = s.table.lock().unwrap();
    let Some(entry) = t.services.remove(&uuid) else {
        // deleted concurrently
        return error_response(StatusCode::NOT_FOUND, format!("no service {uuid}"));
    };
    t.deletes += 1;
    t.sessions.remove(&uuid);
    for nep in [&entry.request.ingress, &entry.request.egress] {
        if let Some(b) = t.booked.get_mut(nep.as_str()) {
            *b -= entry.request.capacity_bps;
        }
    }
    Json(SbiAck { uuid, applied_delay_ms: applied.as_secs_f64() * 1e3 }).into_response()
}

async fn oam(State(s): State<Arc<ControllerState>>, Path(uuid): Path<String>) -> Response {
    let now = s.clock.now_s();
    let mut t = s.table.lock().unwrap();
    match t.sessions.get_mut(&uuid) {
        Some(session) => {
            session.advance_to(now);
            Json(session.metrics(now)).into_response()
        }
        None => error_response(StatusCode::NOT_FOUND, format!("no service {uuid}")),
    }
}

async fn advance_clock(State(s): State<Arc<ControllerState>>, Json(a): Json<AdvanceClock>) -> Response {
    match s.clock.advance(a.seconds) {
        Ok(now) => Json(serde_json::json!({ "now-s": now })).into_response(),
        Err(e) => error_response(StatusCode::CONFLICT, e),
    }
}
