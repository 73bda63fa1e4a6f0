//! Application-centric intent compiler: picks the encryption layer, computes
//! the path, splits it into domain intents and per-device rules, and books
//! the bandwidth.

mod path;
mod select;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use path::{compute_path, ComputedPath, PathQuery};
pub use select::{evaluate_fallback, evaluate_layers, select_encryption_layer, LayerVerdict, Selection, SelectionPolicy};

use crate::error::{LayerSelectionError, PathError, ReservationError};
use crate::model::{ConnectPoint, ConstraintKind, EncryptionLayer, IntentRequest, KeyConfig};
use crate::sbi::{DeviceRuleSet, FlowRule};
use crate::topology::{PortKey, ReservationId, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IntentId(pub u64);

impl fmt::Display for IntentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::str::FromStr for IntentId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(IntentId)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidatedIntent {
    pub id: IntentId,
    pub request: IntentRequest,
    pub wants_encryption: bool,
    pub wants_domain_processing: bool,
    /// Bits per second, 0 when unconstrained.
    pub bandwidth: u64,
    /// Microseconds.
    pub max_latency: Option<u64>,
}

impl ValidatedIntent {
    pub fn new(id: IntentId, request: IntentRequest) -> Result<Self, crate::error::SchemaError> {
        request.validate()?;
        Ok(Self {
            id,
            wants_encryption: request.has(ConstraintKind::Encryption),
            wants_domain_processing: request.has(ConstraintKind::Domain),
            bandwidth: request.bandwidth(),
            max_latency: request.max_latency(),
            request,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainIntent {
    pub domain_id: String,
    pub ingress: ConnectPoint,
    pub egress: ConnectPoint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suggested_path: Option<Vec<String>>,
    pub encryption: bool,
    pub bandwidth: u64,
}

/// One unit the drivers install and remove independently.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "ref", rename_all = "snake_case")]
pub enum PlanElement {
    /// Index into `InstallPlan::domain_intents`.
    Domain(usize),
    /// Device id of a rule set in `InstallPlan::device_rules`.
    Device(String),
}

impl fmt::Display for PlanElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanElement::Domain(i) => write!(f, "domain-intent#{i}"),
            PlanElement::Device(d) => write!(f, "device:{d}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstallPlan {
    pub intent_id: IntentId,
    pub layer: EncryptionLayer,
    pub bandwidth: u64,
    pub path: Vec<ConnectPoint>,
    pub links: Vec<String>,
    pub devices: Vec<String>,
    pub latency_us: u64,
    pub domain_intents: Vec<DomainIntent>,
    pub device_rules: Vec<DeviceRuleSet>,
    pub reservation: ReservationId,
    pub trace: DecisionTrace,
}

impl InstallPlan {
    pub fn elements(&self) -> Vec<PlanElement> {
        (0..self.domain_intents.len())
            .map(PlanElement::Domain)
            .chain(self.device_rules.iter().map(|r| PlanElement::Device(r.device_id.clone())))
            .collect()
    }

    pub fn cost(&self) -> usize {
        self.links.len()
    }

    /// Every transit device of the path must be handled by exactly one
    /// domain intent or rule set, and nothing else may be configured.
    pub fn check_coverage(&self) -> Result<(), String> {
        let transit: Vec<&String> = self
            .devices
            .iter()
            .skip(1)
            .take(self.devices.len().saturating_sub(2))
            .collect();
        let mut covered: Vec<String> = self.device_rules.iter().map(|r| r.device_id.clone()).collect();
        for di in &self.domain_intents {
            let mut devs: BTreeSet<String> = BTreeSet::from([di.ingress.element_id.clone(), di.egress.element_id.clone()]);
            let pos = |d: &str| self.devices.iter().position(|x| x == d);
            let (Some(i), Some(j)) = (pos(&di.ingress.element_id), pos(&di.egress.element_id)) else {
                return Err(format!("domain intent {} borders devices off the path", di.domain_id));
            };
            for d in &self.devices[i.min(j)..=i.max(j)] {
                devs.insert(d.clone());
            }
            covered.extend(devs);
        }
        for d in &transit {
            let n = covered.iter().filter(|c| c == d).count();
            if n != 1 {
                return Err(format!("transit device {d} covered {n} times"));
            }
        }
        if covered.len() != transit.len() {
            return Err(format!(
                "{} configured elements for {} transit devices",
                covered.len(),
                transit.len()
            ));
        }
        Ok(())
    }
}

/// Human-readable record of how a plan (or a failure) came about.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DecisionTrace {
    pub intent_id: Option<IntentId>,
    pub encryption_requested: bool,
    pub bandwidth: u64,
    pub max_latency: Option<u64>,
    pub physical_threshold: u64,
    pub offered: Vec<EncryptionLayer>,
    pub verdicts: Vec<LayerVerdict>,
    pub notes: Vec<String>,
    pub chosen: Option<EncryptionLayer>,
    pub path_cost: Option<usize>,
    pub path_latency_us: Option<u64>,
}

impl DecisionTrace {
    pub fn lines(&self) -> Vec<String> {
        let mut out = Vec::new();
        let id = self.intent_id.map_or_else(|| "?".to_string(), |i| i.to_string());
        out.push(format!(
            "intent {id}: bandwidth {} b/s, max latency {}, encryption {}",
            self.bandwidth,
            self.max_latency.map_or_else(|| "none".to_string(), |l| format!("{l} us")),
            if self.encryption_requested { "requested" } else { "not requested" },
        ));
        if self.encryption_requested {
            out.push(format!("physical threshold {} b/s", self.physical_threshold));
            let offered: Vec<&str> = self.offered.iter().map(|l| l.name()).collect();
            out.push(format!(
                "offered by topology: {}",
                if offered.is_empty() { "nothing".to_string() } else { offered.join(", ") }
            ));
        }
        out.extend(self.verdicts.iter().map(ToString::to_string));
        out.extend(self.notes.iter().cloned());
        match (self.chosen, self.path_cost) {
            (Some(layer), Some(cost)) => out.push(format!(
                "chosen {layer}: path cost {cost} hops, {} us",
                self.path_latency_us.unwrap_or_default()
            )),
            _ => out.push("no plan".into()),
        }
        out
    }
}

impl fmt::Display for DecisionTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in self.lines() {
            writeln!(f, "{l}")?;
        }
        Ok(())
    }
}

pub fn explain(plan: &InstallPlan) -> String {
    plan.trace.to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileErrorKind {
    #[error(transparent)]
    LayerSelection(#[from] LayerSelectionError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Reservation(#[from] ReservationError),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind}")]
pub struct CompileError {
    pub kind: CompileErrorKind,
    pub trace: DecisionTrace,
}

impl CompileError {
    /// Short reason recorded on failed intents.
    pub fn reason(&self) -> String {
        match &self.kind {
            CompileErrorKind::LayerSelection(_) => "no compliant layer".into(),
            CompileErrorKind::Path(PathError::NoPath { .. }) => "no path".into(),
            CompileErrorKind::Path(PathError::LatencyViolation { .. }) => "latency violation".into(),
            CompileErrorKind::Reservation(_) => "insufficient capacity".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompilerConfig {
    pub policy: SelectionPolicy,
    /// Rekey interval handed to encrypting devices, seconds.
    pub rekey_interval: f64,
}

impl Default for CompilerConfig {
    fn default() -> Self {
        Self { policy: SelectionPolicy::default(), rekey_interval: 60.0 }
    }
}

/// Compiles `intent` against `topo`, reserving bandwidth on success. On any
/// error the topology is left untouched.
pub fn compile(
    intent: &ValidatedIntent,
    topo: &mut Topology,
    config: &CompilerConfig,
) -> Result<InstallPlan, CompileError> {
    let policy = &config.policy;
    let src = &intent.request.one;
    let dst = &intent.request.two;
    let mut trace = DecisionTrace {
        intent_id: Some(intent.id),
        encryption_requested: intent.wants_encryption,
        bandwidth: intent.bandwidth,
        max_latency: intent.max_latency,
        physical_threshold: policy.physical_threshold,
        ..Default::default()
    };
    let fail = |kind: CompileErrorKind, trace: DecisionTrace| CompileError { kind, trace };

    let query = |layer: EncryptionLayer| PathQuery {
        src,
        dst,
        layer,
        bandwidth: intent.bandwidth,
        max_latency: intent.max_latency,
        hop_penalty_us: policy.macsec_hop_penalty_us,
        per_hop_crypto: policy.per_hop_crypto(layer),
    };

    let path = if intent.wants_encryption {
        let mut available = topo.available_layers(&src.element_id, &dst.element_id);
        trace.offered = available.iter().copied().collect();
        let mut first_path_error: Option<PathError> = None;
        loop {
            let selection = if first_path_error.is_none() {
                evaluate_layers(intent.bandwidth, intent.max_latency, &available, policy)
            } else {
                evaluate_fallback(intent.bandwidth, &available, policy)
            };
            let verdicts = selection.verdicts.clone();
            let Some(layer) = selection.chosen else {
                trace.verdicts.extend(verdicts);
                let kind = match first_path_error {
                    Some(e) => CompileErrorKind::Path(e),
                    None => CompileErrorKind::LayerSelection(LayerSelectionError {
                        reason: trace.verdicts.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "),
                    }),
                };
                return Err(fail(kind, trace));
            };
            match compute_path(topo, &query(layer)) {
                Ok(p) => {
                    trace.verdicts.extend(verdicts);
                    break p;
                }
                Err(e) => {
                    trace.notes.push(format!("{layer} path failed: {e}; trying next layer"));
                    available.remove(&layer);
                    first_path_error.get_or_insert(e);
                }
            }
        }
    } else {
        trace.notes.push("no encryption flag: unencrypted handling".into());
        compute_path(topo, &query(EncryptionLayer::None)).map_err(|e| fail(e.into(), trace.clone()))?
    };

    let layer = path.layer;
    let (domain_intents, device_rules) = split_path(intent, topo, &path, config, &mut trace);

    let reservation = topo
        .reserve_bandwidth(&path.links, intent.bandwidth)
        .map_err(|e| fail(e.into(), trace.clone()))?;

    trace.chosen = Some(layer);
    trace.path_cost = Some(path.cost());
    trace.path_latency_us = Some(path.latency_us);

    Ok(InstallPlan {
        intent_id: intent.id,
        layer,
        bandwidth: intent.bandwidth,
        path: path.ports,
        links: path.links,
        devices: path.devices,
        latency_us: path.latency_us,
        domain_intents,
        device_rules,
        reservation,
        trace,
    })
}

fn looks_like_mac(id: &str) -> bool {
    let parts: Vec<&str> = id.split(':').collect();
    parts.len() == 6 && parts.iter().all(|p| p.len() == 2 && p.chars().all(|c| c.is_ascii_hexdigit()))
}

/// One transit hop: a device entered on one port and left on another.
struct Hop {
    device: String,
    domain: Option<String>,
    ingress: PortKey,
    egress: PortKey,
    /// Link that leaves this device.
    out_link: String,
}

fn split_path(
    intent: &ValidatedIntent,
    topo: &Topology,
    path: &ComputedPath,
    config: &CompilerConfig,
    trace: &mut DecisionTrace,
) -> (Vec<DomainIntent>, Vec<DeviceRuleSet>) {
    let to_key = |cp: &ConnectPoint| PortKey::from_connect_point(cp).expect("path ports are concrete");
    let hops: Vec<Hop> = (1..path.devices.len() - 1)
        .map(|i| {
            let device = path.devices[i].clone();
            Hop {
                domain: topo.device(&device).and_then(|d| d.domain_id.clone()),
                ingress: to_key(&path.ports[2 * i - 1]),
                egress: to_key(&path.ports[2 * i]),
                out_link: path.links[i].clone(),
                device,
            }
        })
        .collect();

    let src_mac = looks_like_mac(&intent.request.one.element_id).then(|| intent.request.one.element_id.clone());
    let dst_mac = looks_like_mac(&intent.request.two.element_id).then(|| intent.request.two.element_id.clone());

    let mut domain_intents = Vec::new();
    let mut device_rules = Vec::new();
    let mut i = 0;
    while i < hops.len() {
        let hop = &hops[i];
        if let Some(domain) = &hop.domain {
            let mut j = i;
            while j + 1 < hops.len() && hops[j + 1].domain.as_ref() == Some(domain) {
                j += 1;
            }
            let suggested: Vec<String> = hops[i..j].iter().map(|h| h.out_link.clone()).collect();
            if !intent.wants_domain_processing {
                trace.notes.push(format!(
                    "path crosses domain {domain} without a domain flag; domain intent emitted anyway"
                ));
            }
            domain_intents.push(DomainIntent {
                domain_id: domain.clone(),
                ingress: hop.ingress.connect_point(),
                egress: hops[j].egress.connect_point(),
                suggested_path: Some(suggested),
                encryption: path.layer == EncryptionLayer::Physical,
                bandwidth: intent.bandwidth,
            });
            i = j + 1;
        } else {
            let crypto = path.layer != EncryptionLayer::None
                && [&hop.ingress, &hop.egress]
                    .iter()
                    .any(|k| topo.port(k).and_then(|p| p.encryption_capability) == Some(path.layer));
            let key = crypto.then(|| {
                KeyConfig::pre_shared(format!("psk-{}", hop.device), config.rekey_interval)
                    .expect("rekey interval validated by config")
            });
            device_rules.push(DeviceRuleSet {
                device_id: hop.device.clone(),
                cookie: intent.id.0,
                rules: vec![
                    FlowRule { in_port: hop.ingress.port_no, eth_dst: dst_mac.clone(), output: hop.egress.port_no },
                    FlowRule { in_port: hop.egress.port_no, eth_dst: src_mac.clone(), output: hop.ingress.port_no },
                ],
                key,
            });
            i += 1;
        }
    }
    (domain_intents, device_rules)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_intent_request, Constraint, SAMPLE_INTENT, GBPS};
    use crate::testbed::*;

    fn sample(id: u64) -> ValidatedIntent {
        ValidatedIntent::new(IntentId(id), parse_intent_request(SAMPLE_INTENT).unwrap()).unwrap()
    }

    fn with_bandwidth(mut v: ValidatedIntent, bw: u64) -> ValidatedIntent {
        for c in &mut v.request.constraints {
            if let Constraint::Bandwidth { bandwidth } = c {
                *bandwidth = bw;
            }
        }
        ValidatedIntent::new(v.id, v.request).unwrap()
    }

    #[test]
    fn sample_compiles_to_macsec() {
        let mut t = default_testbed();
        let plan = compile(&sample(1), &mut t, &CompilerConfig::default()).unwrap();
        assert_eq!(plan.layer, EncryptionLayer::Macsec);
        assert!(plan.domain_intents.iter().all(|d| !d.encryption));
        assert!(plan.domain_intents.is_empty());
        let devices: Vec<&str> = plan.device_rules.iter().map(|r| r.device_id.as_str()).collect();
        assert_eq!(devices, [OVS1, MACSEC1, MACSEC2, OVS2]);
        let ovs1 = &plan.device_rules[0];
        assert_eq!(ovs1.rules[0], FlowRule { in_port: 1, eth_dst: Some(HOST2.into()), output: 2 });
        assert!(ovs1.key.is_none());
        assert!(plan.device_rules[1].key.is_some());
        plan.check_coverage().unwrap();
        assert_eq!(t.reservation(plan.reservation).unwrap().amount, 10_000_000);
        let trace = explain(&plan);
        assert!(trace.contains("Physical rejected: bandwidth below threshold"), "{trace}");
    }

    #[test]
    fn ten_gig_compiles_to_physical() {
        let mut t = default_testbed();
        let plan = compile(&with_bandwidth(sample(2), 10 * GBPS), &mut t, &CompilerConfig::default()).unwrap();
        assert_eq!(plan.layer, EncryptionLayer::Physical);
        assert_eq!(plan.domain_intents.len(), 1);
        let di = &plan.domain_intents[0];
        assert!(di.encryption);
        assert_eq!(di.domain_id, OPTICAL_DOMAIN);
        assert_eq!(PortKey::from_connect_point(&di.ingress).unwrap(), aes_port_a());
        assert_eq!(PortKey::from_connect_point(&di.egress).unwrap(), aes_port_b());
        assert_eq!(di.suggested_path.as_deref(), Some(&["ring-AB".to_string()][..]));
        assert_eq!(plan.device_rules.len(), 2);
        plan.check_coverage().unwrap();
        let trace = explain(&plan);
        assert!(trace.contains("10000000000 >= 1000000000"), "{trace}");
    }

    #[test]
    fn no_encryption_flag_uses_mux_path() {
        let mut t = default_testbed();
        let mut v = sample(3);
        v.request.constraints.retain(|c| *c != Constraint::Encryption);
        let v = ValidatedIntent::new(v.id, v.request).unwrap();
        let plan = compile(&v, &mut t, &CompilerConfig::default()).unwrap();
        assert_eq!(plan.layer, EncryptionLayer::None);
        assert!(plan.links.contains(&"ovs1-muxA".to_string()));
        assert_eq!(plan.domain_intents.len(), 1);
        assert!(!plan.domain_intents[0].encryption);
        plan.check_coverage().unwrap();
    }

    #[test]
    fn failure_leaves_topology_untouched() {
        let mut t = default_testbed();
        compile(&with_bandwidth(sample(1), 10 * GBPS), &mut t, &CompilerConfig::default()).unwrap();
        let before = t.clone();
        let mut tight = with_bandwidth(sample(2), 10 * GBPS);
        tight.request.constraints.push(Constraint::Latency { latency: 9 });
        let tight = ValidatedIntent::new(tight.id, tight.request).unwrap();
        let err = compile(&tight, &mut t, &CompilerConfig::default()).unwrap_err();
        assert_eq!(err.reason(), "no compliant layer");
        assert_eq!(t, before);
        let lines = err.trace.lines().join("\n");
        for layer in ["Physical", "MACsec", "IPsec"] {
            assert!(lines.contains(&format!("{layer} rejected")), "{lines}");
        }
    }

    #[test]
    fn latency_forced_physical_below_threshold() {
        let mut t = default_testbed();
        let mut v = sample(5);
        v.request.constraints.push(Constraint::Latency { latency: 9 });
        let v = ValidatedIntent::new(v.id, v.request).unwrap();
        let plan = compile(&v, &mut t, &CompilerConfig::default()).unwrap();
        assert_eq!(plan.layer, EncryptionLayer::Physical);
        assert!(plan.latency_us <= 9);
    }

    #[test]
    fn macsec_path_too_slow_falls_back_to_physical() {
        // MACsec passes selection (12 >= 10 us budget) but its path needs 15 us.
        let mut t = default_testbed();
        let mut v = sample(6);
        v.request.constraints.push(Constraint::Latency { latency: 12 });
        let v = ValidatedIntent::new(v.id, v.request).unwrap();
        let plan = compile(&v, &mut t, &CompilerConfig::default()).unwrap();
        assert_eq!(plan.layer, EncryptionLayer::Physical);
        assert!(explain(&plan).contains("MACsec path failed"));
    }

    #[test]
    fn missing_domain_flag_is_noted() {
        let mut t = default_testbed();
        let mut v = with_bandwidth(sample(7), 10 * GBPS);
        v.request.constraints.retain(|c| *c != Constraint::Domain);
        let v = ValidatedIntent::new(v.id, v.request).unwrap();
        let plan = compile(&v, &mut t, &CompilerConfig::default()).unwrap();
        assert_eq!(plan.domain_intents.len(), 1);
        assert!(explain(&plan).contains("without a domain flag"));
    }
}
