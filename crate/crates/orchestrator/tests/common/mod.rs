#![allow(dead_code)]

use std::time::Duration;

use mlso::bootstrap::Stack;
use mlso::client::NbiClient;
use mlso::simnet::SimClock;
use mlso_core::config::{Config, Endpoints};
use mlso_core::lifecycle::{IntentRecord, IntentState};
use mlso_core::model::{parse_intent_request, Constraint, IntentRequest, GBPS, SAMPLE_INTENT};

/// Fast defaults: ephemeral ports, no jitter, delays divided by 10 000.
pub fn test_config() -> Config {
    let mut c = Config::default();
    c.endpoints = Endpoints::ephemeral();
    c.simnet.time_scale = 10_000.0;
    c.simnet.jitter = 0.0;
    c
}

pub async fn start(config: Config) -> (Stack, NbiClient) {
    let stack = Stack::start(config).await.expect("stack starts");
    let client = NbiClient::new(stack.nbi_url());
    (stack, client)
}

pub async fn start_manual(config: Config) -> (Stack, NbiClient, SimClock) {
    let clock = SimClock::manual();
    let stack = Stack::start_with_clock(config, clock.clone()).await.expect("stack starts");
    let client = NbiClient::new(stack.nbi_url());
    (stack, client, clock)
}

pub fn sample() -> IntentRequest {
    parse_intent_request(SAMPLE_INTENT).unwrap()
}

pub fn with_bandwidth(mut r: IntentRequest, gbps: u64) -> IntentRequest {
    for c in &mut r.constraints {
        if let Constraint::Bandwidth { bandwidth } = c {
            *bandwidth = gbps * GBPS;
        }
    }
    r
}

pub fn unencrypted(mut r: IntentRequest) -> IntentRequest {
    r.constraints.retain(|c| !matches!(c, Constraint::Encryption));
    r
}

pub const WAIT: Duration = Duration::from_secs(20);

/// Submits and waits for INSTALLED or a terminal state.
pub async fn install(client: &NbiClient, r: &IntentRequest) -> IntentRecord {
    let s = client.submit(&r.to_json()).await.expect("submit accepted");
    client.wait(s.id, IntentState::Installed, WAIT).await.expect("intent settles")
}

pub async fn withdraw(client: &NbiClient, rec: &IntentRecord) -> IntentRecord {
    client.withdraw(&rec.id.to_string()).await.expect("withdraw accepted");
    client.wait(rec.id, IntentState::Withdrawn, WAIT).await.expect("intent settles")
}
