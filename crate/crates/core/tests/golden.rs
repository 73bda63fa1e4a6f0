//! Frozen wire documents. Regenerate with `UPDATE_GOLDEN=1 cargo test`.

use std::path::PathBuf;

use mlso_core::compiler::{compile, CompilerConfig, IntentId, ValidatedIntent};
use mlso_core::model::{parse_intent_request, SAMPLE_INTENT};
use mlso_core::sbi::{ConnectivityServiceRequest, DeviceRuleSet, TapiTopology};
use mlso_core::testbed::{aes_port_a, aes_port_b, default_testbed, OPTICAL_DOMAIN};
use serde::de::DeserializeOwned;
use serde::Serialize;

fn check<T: Serialize + DeserializeOwned + PartialEq + std::fmt::Debug>(name: &str, value: &T) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    let text = serde_json::to_string_pretty(value).unwrap() + "\n";
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &text).unwrap();
    }
    let frozen = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(text, frozen, "{name} drifted from the frozen schema");
    let parsed: T = serde_json::from_str(&frozen).unwrap();
    assert_eq!(&parsed, value);
}

#[test]
fn tapi_topology_document() {
    check("tapi_topology.json", &TapiTopology::from_topology(&default_testbed(), OPTICAL_DOMAIN));
}

#[test]
fn connectivity_service_request() {
    let mut r = ConnectivityServiceRequest::new(
        format!("{}:{}", aes_port_a().device_id, aes_port_a().port_no),
        format!("{}:{}", aes_port_b().device_id, aes_port_b().port_no),
        true,
        10_000_000_000,
    );
    r.suggested_path = Some(vec!["ring-AB".into()]);
    check("connectivity_service_request.json", &r);
}

#[test]
fn device_rule_set() {
    let mut t = default_testbed();
    let v = ValidatedIntent::new(IntentId(1), parse_intent_request(SAMPLE_INTENT).unwrap()).unwrap();
    let plan = compile(&v, &mut t, &CompilerConfig::default()).unwrap();
    let keyed: Vec<DeviceRuleSet> = plan.device_rules.into_iter().filter(|r| r.key.is_some()).collect();
    check("device_rule_set.json", &keyed[0]);
}
