//! Southbound drivers: a REST client for the optical domain controller and
//! one for the packet device agents.

use std::time::{Duration, Instant};

use mlso_core::sbi::{ConnectivityServiceRequest, DISPATCHED_HEADER, DeviceRuleSet, SbiAck, SbiErrorBody, SbiFormatError, TapiTopology, TopologyFragment};
use reqwest::StatusCode;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DriverError {
    #[error("{url} unreachable: {reason}")]
    Unreachable { url: String, reason: String },
    #[error("rejected ({status}): {reason}")]
    Service { status: u16, reason: String },
    #[error("timeout after {0:?}")]
    Timeout(Duration),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("malformed response: {0}")]
    Format(String),
}

#[derive(Debug, Error)]
pub enum DiscoveryError {
    #[error(transparent)]
    Driver(#[from] DriverError),
    #[error(transparent)]
    Format(#[from] SbiFormatError),
}

/// Result of a successful southbound call.
#[derive(Debug, Clone)]
pub struct Applied {
    pub uuid: String,
    pub elapsed: Duration,
}

fn http_client() -> reqwest::Client {
    reqwest::Client::builder().pool_max_idle_per_host(8).build().expect("static client config")
}

async fn send(url: &str, req: reqwest::RequestBuilder) -> Result<reqwest::Response, DriverError> {
    let resp = req
        .header(DISPATCHED_HEADER, crate::simnet::unix_micros())
        .send().await.map_err(|e| DriverError::Unreachable { url: url.to_string(), reason: e.to_string() })?;
    let status = resp.status();
    if status.is_success() {
        return Ok(resp);
    }
    let reason = match resp.json::<SbiErrorBody>().await {
        Ok(b) => b.error,
        Err(_) => status.to_string(),
    };
    if status == StatusCode::NOT_FOUND {
        Err(DriverError::NotFound(reason))
    } else {
        Err(DriverError::Service { status: status.as_u16(), reason })
    }
}

async fn ack(resp: reqwest::Response, start: Instant) -> Result<Applied, DriverError> {
    let a: SbiAck = resp.json().await.map_err(|e| DriverError::Format(e.to_string()))?;
    Ok(Applied { uuid: a.uuid, elapsed: start.elapsed() })
}

#[derive(Debug, Clone)]
pub struct TapiClient {
    base: String,
    http: reqwest::Client,
}

impl TapiClient {
    pub fn new(base: impl Into<String>) -> Self {
        Self { base: base.into().trim_end_matches('/').to_string(), http: http_client() }
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub async fn topology(&self) -> Result<TapiTopology, DriverError> {
        let url = format!("{}/tapi/topology", self.base);
        let resp = send(&url, self.http.get(&url)).await?;
        resp.json().await.map_err(|e| DriverError::Format(e.to_string()))
    }

    /// Fetches and converts the controller's topology.
    pub async fn discover(&self) -> Result<TopologyFragment, DiscoveryError> {
        Ok(self.topology().await?.to_fragment()?)
    }

    pub async fn create_service(&self, req: &ConnectivityServiceRequest) -> Result<Applied, DriverError> {
        let start = Instant::now();
        let url = format!("{}/tapi/connectivity-services", self.base);
        ack(send(&url, self.http.post(&url).json(req)).await?, start).await
    }

    pub async fn delete_service(&self, uuid: &str) -> Result<Applied, DriverError> {
        let start = Instant::now();
        let url = format!("{}/tapi/connectivity-services/{uuid}", self.base);
        ack(send(&url, self.http.delete(&url)).await?, start).await
    }
}

#[derive(Debug, Clone)]
pub struct SwitchClient {
    base: String,
    http: reqwest::Client,
}

impl SwitchClient {
    pub fn new(base: impl Into<String>) -> Self {
        Self { base: base.into().trim_end_matches('/').to_string(), http: http_client() }
    }

    pub async fn install(&self, rules: &DeviceRuleSet) -> Result<Applied, DriverError> {
        let start = Instant::now();
        let url = format!("{}/rules", self.base);
        ack(send(&url, self.http.post(&url).json(rules)).await?, start).await
    }

    pub async fn remove(&self, cookie: u64) -> Result<Applied, DriverError> {
        let start = Instant::now();
        let url = format!("{}/rules", self.base);
        ack(send(&url, self.http.delete(&url).query(&[("cookie", cookie)])).await?, start).await
    }

    pub async fn list(&self) -> Result<Vec<DeviceRuleSet>, DriverError> {
        let url = format!("{}/rules", self.base);
        send(&url, self.http.get(&url)).await?.json().await.map_err(|e| DriverError::Format(e.to_string()))
    }
}
