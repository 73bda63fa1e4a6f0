mod common;

use common::*;
use mlso_core::compiler::PlanElement;
use mlso_core::lifecycle::{ElementStatus, IntentState};
use mlso_core::oam::{OamEventKind, OamMetrics};
use mlso_core::testbed::MACSEC1;

async fn metrics(url: String) -> OamMetrics {
    reqwest::get(url).await.unwrap().error_for_status().unwrap().json().await.unwrap()
}

fn service_uuid(rec: &mlso_core::lifecycle::IntentRecord) -> String {
    match &rec.elements[&PlanElement::Domain(0)] {
        ElementStatus::Installed { handle: Some(h) } => h.clone(),
        other => panic!("{other:?}"),
    }
}

#[tokio::test]
async fn encrypted_service_rekeys_five_times_in_300_seconds() {
    let mut config = test_config();
    config.simnet.rekey_interval_s = 60.0;
    let (stack, client, clock) = start_manual(config).await;
    let rec = install(&client, &with_bandwidth(sample(), 10)).await;
    assert_eq!(rec.state, IntentState::Installed);
    clock.advance(300.0).unwrap();
    let m = metrics(format!("{}/oam/{}", stack.simnet.controller_url(), service_uuid(&rec))).await;
    assert_eq!(m.count(OamEventKind::KeyExchange), 5);
    assert_eq!(m.failed_key_exchange_count, 0);
    assert_eq!(m.transparent_mode_seconds, 0.0);
    stack.stop().await;
}

#[tokio::test]
async fn failed_exchange_is_counted_with_transparent_time() {
    let mut config = test_config();
    config.simnet.rekey_interval_s = 60.0;
    config.simnet.faults.failed_key_exchanges.insert(2);
    let (stack, client, clock) = start_manual(config).await;
    let rec = install(&client, &with_bandwidth(sample(), 10)).await;
    clock.advance(300.0).unwrap();
    let m = metrics(format!("{}/oam/{}", stack.simnet.controller_url(), service_uuid(&rec))).await;
    assert_eq!(m.count(OamEventKind::KeyExchange), 5);
    assert_eq!(m.failed_key_exchange_count, 1);
    assert!(m.transparent_mode_seconds > 0.0);
    stack.stop().await;
}

#[tokio::test]
async fn macsec_device_reports_its_key_session() {
    let mut config = test_config();
    config.simnet.rekey_interval_s = 60.0;
    let (stack, client, clock) = start_manual(config).await;
    let rec = install(&client, &sample()).await;
    assert_eq!(rec.state, IntentState::Installed);
    clock.advance(120.0).unwrap();
    let agent = &stack.simnet.agent_urls()[MACSEC1];
    let m = metrics(format!("{agent}/oam/{}", rec.id.0)).await;
    assert_eq!(m.count(OamEventKind::KeyExchange), 2);
    // clock advance through the controller endpoint
    let r = reqwest::Client::new()
        .post(format!("{}/sim/clock", stack.simnet.controller_url()))
        .json(&serde_json::json!({ "seconds": 60.0 }))
        .send()
        .await
        .unwrap();
    assert!(r.status().is_success());
    let m = metrics(format!("{agent}/oam/{}", rec.id.0)).await;
    assert_eq!(m.count(OamEventKind::KeyExchange), 3);
    stack.stop().await;
}
