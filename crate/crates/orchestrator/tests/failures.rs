mod common;

use std::time::Duration;

use common::*;
use mlso_core::faults::{FaultPlan, OPTICAL_TARGET};
use mlso_core::lifecycle::IntentState;
use mlso_core::testbed::OVS2;

fn residuals(stack: &mlso::bootstrap::Stack) -> Vec<(String, u64)> {
    stack.engine.topology().links().map(|l| (l.id.clone(), l.residual_capacity)).collect()
}

#[tokio::test]
async fn unreachable_agent_fails_the_intent_and_frees_everything() {
    let mut config = test_config();
    config.policy.driver_timeout_floor_s = 0.5;
    let (mut stack, client) = start(config).await;
    let before = residuals(&stack);
    stack.simnet.stop_agent(OVS2).await;
    let rec = install(&client, &sample()).await;
    assert_eq!(rec.state, IntentState::Failed);
    let reason = rec.failure_reason.unwrap();
    assert!(reason.contains(OVS2), "{reason}");
    assert_eq!(residuals(&stack), before);
    // the rules that did go in were rolled back
    for (device, agent) in &stack.simnet.agents {
        assert!(agent.cookies().is_empty(), "{device}");
    }
    stack.engine.check_accounting().unwrap();
    stack.stop().await;
}

#[tokio::test]
async fn rejected_service_create_fails_only_that_intent() {
    let mut config = test_config();
    config.simnet.faults = FaultPlan::reject(OPTICAL_TARGET, 3);
    let (stack, client) = start(config).await;
    let request = unencrypted(with_bandwidth(sample(), 10));
    let mut states = Vec::new();
    for _ in 0..4 {
        let rec = install(&client, &request).await;
        states.push(rec.state);
        if rec.state == IntentState::Installed {
            withdraw(&client, &rec).await;
        } else {
            assert!(rec.failure_reason.unwrap().contains("rejected"));
        }
    }
    use IntentState::*;
    assert_eq!(states, [Installed, Installed, Failed, Installed]);
    assert_eq!(stack.simnet.controller.service_count(), 0);
    stack.stop().await;
}

#[tokio::test]
async fn second_physical_intent_fails_while_the_aes_pair_is_taken() {
    let (stack, client) = start(test_config()).await;
    let first = install(&client, &with_bandwidth(sample(), 10)).await;
    assert_eq!(first.state, IntentState::Installed);
    let before = residuals(&stack);
    // a latency bound below the MACsec budget leaves Physical as the only layer
    let mut needs_physical = with_bandwidth(sample(), 10);
    needs_physical.constraints.push(mlso_core::model::Constraint::Latency { latency: 9 });
    let second = install(&client, &needs_physical).await;
    assert_eq!(second.state, IntentState::Failed);
    assert_eq!(second.failure_reason.as_deref(), Some("no compliant layer"));
    assert!(second.trace().is_some());
    assert_eq!(residuals(&stack), before);
    assert_eq!(stack.simnet.controller.service_count(), 1);
    stack.stop().await;
}

#[tokio::test]
async fn dropped_request_runs_into_the_driver_timeout() {
    let mut config = test_config();
    config.policy.driver_timeout_floor_s = 0.3;
    config.simnet.faults.rules.push(mlso_core::faults::FaultRule {
        target: OPTICAL_TARGET.into(),
        op: mlso_core::timing::Operation::Install,
        nth: 1,
        kind: mlso_core::faults::FaultKind::Drop,
    });
    let (stack, client) = start(config).await;
    let started = std::time::Instant::now();
    let rec = install(&client, &with_bandwidth(sample(), 10)).await;
    assert_eq!(rec.state, IntentState::Failed);
    assert!(rec.failure_reason.unwrap().contains("timeout"));
    assert!(started.elapsed() >= Duration::from_millis(300));
    stack.stop().await;
}
