//! HTTP client for the northbound API, shared by the CLI and the harness.

use std::time::Duration;

use mlso_core::compiler::{DecisionTrace, IntentId};
use mlso_core::lifecycle::{IntentRecord, IntentState};
use mlso_core::topology::TopologyDocument;
use reqwest::StatusCode;
use serde::de::DeserializeOwned;
use thiserror::Error;

use crate::nbi::{ErrorBody, IntentSummary, Submitted};

pub const DEFAULT_URL: &str = "http://127.0.0.1:8181";

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("cannot reach {url}: {reason}")]
    Connect { url: String, reason: String },
    #[error("server answered {status}: {message}")]
    Server { status: u16, message: String },
    #[error("unexpected response: {0}")]
    Format(String),
}

impl ClientError {
    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            ClientError::Connect { .. } => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NbiClient {
    base: String,
    http: reqwest::Client,
}

impl NbiClient {
    pub fn new(base: impl Into<String>) -> Self {
        Self { base: base.into().trim_end_matches('/').to_string(), http: reqwest::Client::new() }
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    async fn call<T: DeserializeOwned>(&self, req: reqwest::RequestBuilder) -> Result<T, ClientError> {
        let resp = req
            .send()
            .await
            .map_err(|e| ClientError::Connect { url: self.base.clone(), reason: e.to_string() })?;
        let status = resp.status();
        let text = resp.text().await.map_err(|e| ClientError::Format(e.to_string()))?;
        if !status.is_success() {
            let message = serde_json::from_str::<ErrorBody>(&text).map(|b| b.error).unwrap_or(text);
            return Err(ClientError::Server { status: status.as_u16(), message });
        }
        serde_json::from_str(&text).map_err(|e| ClientError::Format(e.to_string()))
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    /// Posts an intent document verbatim.
    pub async fn submit(&self, document: &str) -> Result<Submitted, ClientError> {
        let req = self
            .http
            .post(self.url("/intents"))
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(document.to_string());
        self.call(req).await
    }

    pub async fn list(&self) -> Result<Vec<IntentSummary>, ClientError> {
        self.call(self.http.get(self.url("/intents"))).await
    }

    pub async fn show(&self, id: &str) -> Result<IntentRecord, ClientError> {
        self.call(self.http.get(self.url(&format!("/intents/{id}")))).await
    }

    /// Long-polls until the intent reaches `state` or a terminal state.
    pub async fn wait(&self, id: IntentId, state: IntentState, timeout: Duration) -> Result<IntentRecord, ClientError> {
        let req = self
            .http
            .get(self.url(&format!("/intents/{id}")))
            .query(&[("wait", state.name().to_string()), ("timeout_ms", timeout.as_millis().to_string())]);
        self.call(req).await
    }

    pub async fn withdraw(&self, id: &str) -> Result<serde_json::Value, ClientError> {
        self.call(self.http.delete(self.url(&format!("/intents/{id}")))).await
    }

    pub async fn topology(&self) -> Result<TopologyDocument, ClientError> {
        self.call(self.http.get(self.url("/topology"))).await
    }

    pub async fn trace(&self, id: &str) -> Result<DecisionTrace, ClientError> {
        self.call(self.http.get(self.url(&format!("/intents/{id}/trace")))).await
    }

    pub async fn shutdown(&self) -> Result<(), ClientError> {
        let resp = self
            .http
            .post(self.url("/admin/shutdown"))
            .send()
            .await
            .map_err(|e| ClientError::Connect { url: self.base.clone(), reason: e.to_string() })?;
        match resp.status() {
            StatusCode::ACCEPTED | StatusCode::OK => Ok(()),
            s => Err(ClientError::Server { status: s.as_u16(), message: s.to_string() }),
        }
    }
}
