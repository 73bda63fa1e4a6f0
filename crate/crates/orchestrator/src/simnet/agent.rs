//! Simulated rule agent of one packet device (virtual switch or MACsec
//! demarcation device).

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use mlso_core::oam::KeySession;
use mlso_core::sbi::{DeviceRuleSet, SbiAck};
use mlso_core::timing::{Operation, Technology};
use serde::Deserialize;

use super::{error_response, request_start, Paced, Pacer, SimClock};

#[derive(Debug, Default)]
struct Rules {
    sets: BTreeMap<u64, DeviceRuleSet>,
    sessions: BTreeMap<u64, KeySession>,
}

#[derive(Debug)]
pub struct AgentState {
    device: String,
    pacer: Pacer,
    clock: SimClock,
    rules: Mutex<Rules>,
}

impl AgentState {
    pub fn new(device: String, pacer: Pacer, clock: SimClock) -> Self {
        Self { device, pacer, clock, rules: Mutex::new(Rules::default()) }
    }

    pub fn cookies(&self) -> Vec<u64> {
        self.rules.lock().unwrap().sets.keys().copied().collect()
    }
}

pub fn router(state: Arc<AgentState>) -> Router {
    Router::new()
        .route("/rules", post(install).get(list).delete(remove))
        .route("/oam/{cookie}", get(oam))
        .with_state(state)
}

async fn list(State(s): State<Arc<AgentState>>) -> Json<Vec<DeviceRuleSet>> {
    Json(s.rules.lock().unwrap().sets.values().cloned().collect())
}

async fn install(State(s): State<Arc<AgentState>>, headers: HeaderMap, Json(set): Json<DeviceRuleSet>) -> Response {
    let start = request_start(&headers);
    if set.device_id != s.device {
        return error_response(
            StatusCode::UNPROCESSABLE_ENTITY,
            format!("rules for {} sent to {}", set.device_id, s.device),
        );
    }
    if let Err(e) = set.validate() {
        return error_response(StatusCode::UNPROCESSABLE_ENTITY, e);
    }
    let applied = match s.pacer.pace(start, &s.device, Technology::MacsecEthernet, Operation::Install).await {
        Paced::Reject { .. } => return error_response(StatusCode::CONFLICT, format!("{} rejected the rules", s.device)),
        Paced::Proceed { applied } => applied,
    };
    let now = s.clock.now_s();
    let mut r = s.rules.lock().unwrap();
    let cookie = set.cookie;
    match &set.key {
        Some(k) => {
            let session = KeySession::start(k.key_id.clone(), true, now, k.rekey_interval, s.pacer.key_exchange_failures());
            r.sessions.insert(cookie, session);
        }
        None => {
            r.sessions.remove(&cookie);
        }
    }
    r.sets.insert(cookie, set);
    let ack = SbiAck { uuid: format!("{}/{cookie}", s.device), applied_delay_ms: applied.as_secs_f64() * 1e3 };
    (StatusCode::CREATED, Json(ack)).into_response()
}

#[derive(Debug, Deserialize)]
struct CookieQuery {
    cookie: u64,
}

async fn remove(State(s): State<Arc<AgentState>>, headers: HeaderMap, Query(q): Query<CookieQuery>) -> Response {
    let start = request_start(&headers);
    if !s.rules.lock().unwrap().sets.contains_key(&q.cookie) {
        return error_response(StatusCode::NOT_FOUND, format!("no rules with cookie {}", q.cookie));
    }
    let applied = match s.pacer.pace(start, &s.device, Technology::MacsecEthernet, Operation::Delete).await {
        Paced::Reject { .. } => return error_response(StatusCode::CONFLICT, format!("{} refused removal", s.device)),
        Paced::Proceed { applied } => applied,
    };
    let mut r = s.rules.lock().unwrap();
    if r.sets.remove(&q.cookie).is_none() {
        return error_response(StatusCode::NOT_FOUND, format!("no rules with cookie {}", q.cookie));
    }
    r.sessions.remove(&q.cookie);
    Json(SbiAck { uuid: format!("{}/{}", s.device, q.cookie), applied_delay_ms: applied.as_secs_f64() * 1e3 })
        .into_response()
}

async fn oam(State(s): State<Arc<AgentState>>, Path(cookie): Path<u64>) -> Response {
    let now = s.clock.now_s();
    let mut r = s.rules.lock().unwrap();
    match r.sessions.get_mut(&cookie) {
        Some(session) => {
            session.advance_to(now);
            Json(session.metrics(now)).into_response()
        }
        None => error_response(StatusCode::NOT_FOUND, format!("no keyed rules with cookie {cookie}")),
    }
}
