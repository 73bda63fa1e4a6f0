//! Northbound REST API.

use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use mlso_core::compiler::IntentId;
use mlso_core::lifecycle::{IntentRecord, IntentState, LifecycleError};
use mlso_core::model::{parse_intent_request, EncryptionLayer};
use serde::{Deserialize, Serialize};
use tokio::sync::Notify;

use crate::engine::Engine;

/// Longest a `?wait=` request may block.
pub const MAX_WAIT: Duration = Duration::from_secs(300);

#[derive(Clone)]
pub struct NbiState {
    pub engine: Engine,
    pub shutdown: Arc<Notify>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submitted {
    pub id: IntentId,
    pub state: IntentState,
    pub trace: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentSummary {
    pub id: IntentId,
    pub state: IntentState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer: Option<EncryptionLayer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_reason: Option<String>,
}

impl From<&IntentRecord> for IntentSummary {
    fn from(r: &IntentRecord) -> Self {
        Self {
            id: r.id,
            state: r.state,
            layer: r.plan.as_ref().map(|p| p.layer),
            failure_reason: r.failure_reason.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(ErrorBody { error: message.into() })).into_response()
}

pub fn router(state: NbiState) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/intents", post(submit).get(list))
        .route("/intents/{id}", get(show).delete(withdraw))
        .route("/intents/{id}/trace", get(trace))
        .route("/topology", get(topology))
        .route("/admin/shutdown", post(shutdown))
        .with_state(state)
}

async fn submit(State(s): State<NbiState>, body: String) -> Response {
    let received = Instant::now();
    let request = match parse_intent_request(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, e.to_string()),
    };
    match s.engine.submit(request, received) {
        Ok(id) => {
            // let compile and the first driver calls start before the reply
            tokio::task::yield_now().await;
            let body = Submitted { id, state: IntentState::Submitted, trace: format!("/intents/{id}/trace") };
            (StatusCode::CREATED, Json(body)).into_response()
        }
        Err(e) => error(StatusCode::BAD_REQUEST, e.to_string()),
    }
}

async fn list(State(s): State<NbiState>) -> Json<Vec<IntentSummary>> {
    Json(s.engine.records().iter().map(IntentSummary::from).collect())
}

#[derive(Debug, Deserialize)]
struct WaitQuery {
    wait: Option<String>,
    timeout_ms: Option<u64>,
}

fn parse_id(raw: &str) -> Result<IntentId, Response> {
    raw.parse().map_err(|_| error(StatusCode::BAD_REQUEST, format!("bad intent id {raw:?}")))
}

fn parse_state(raw: &str) -> Option<IntentState> {
    IntentState::ALL.into_iter().find(|s| s.name().eq_ignore_ascii_case(raw))
}

/// `GET /intents/{id}`; with `?wait=STATE` the call returns once the intent
/// reaches that state or a terminal one, or 408 after `timeout_ms`.
async fn show(State(s): State<NbiState>, Path(id): Path<String>, Query(q): Query<WaitQuery>) -> Response {
    let id = match parse_id(&id) {
        Ok(id) => id,
        Err(r) => return r,
    };
    let Some(wait) = q.wait else {
        return match s.engine.record(id) {
            Some(r) => Json(r).into_response(),
            None => error(StatusCode::NOT_FOUND, format!("intent {id} not found")),
        };
    };
    let Some(target) = parse_state(&wait) else {
        return error(StatusCode::BAD_REQUEST, format!("unknown state {wait:?}"));
    };
    if s.engine.record(id).is_none() {
        return error(StatusCode::NOT_FOUND, format!("intent {id} not found"));
    }
    let timeout = Duration::from_millis(q.timeout_ms.unwrap_or(30_000)).min(MAX_WAIT);
    match s.engine.wait_for(id, &[target], timeout).await {
        Some(r) => Json(r).into_response(),
        None => error(StatusCode::REQUEST_TIMEOUT, format!("intent {id} did not reach {target}")),
    }
}

async fn withdraw(State(s): State<NbiState>, Path(id): Path<String>) -> Response {
    let id = match parse_id(&id) {
        Ok(id) => id,
        Err(r) => return r,
    };
    match s.engine.withdraw(id) {
        Ok(()) => {
            tokio::task::yield_now().await;
            let state = s.engine.record(id).map_or(IntentState::Withdrawing, |r| r.state);
            (StatusCode::ACCEPTED, Json(serde_json::json!({ "id": id, "state": state }))).into_response()
        }
        Err(LifecycleError::NotFound(_)) => error(StatusCode::NOT_FOUND, format!("intent {id} not found")),
        Err(e) => error(StatusCode::CONFLICT, e.to_string()),
    }
}

async fn trace(State(s): State<NbiState>, Path(id): Path<String>) -> Response {
    let id = match parse_id(&id) {
        Ok(id) => id,
        Err(r) => return r,
    };
    match s.engine.record(id) {
        None => error(StatusCode::NOT_FOUND, format!("intent {id} not found")),
        Some(r) => match r.trace() {
            Some(t) => Json(t.clone()).into_response(),
            None => error(StatusCode::CONFLICT, format!("intent {id} is {}, no trace yet", r.state)),
        },
    }
}

async fn topology(State(s): State<NbiState>) -> Response {
    Json(s.engine.topology().to_document()).into_response()
}

async fn shutdown(State(s): State<NbiState>) -> StatusCode {
    s.shutdown.notify_one();
    StatusCode::ACCEPTED
}
