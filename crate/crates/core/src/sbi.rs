//! Southbound wire documents.
//!
//! The optical domain controller speaks a small subset of a transport-API
//! style model: a topology of nodes, owned node edge points and links, plus
//! connectivity services between two edge points. Capabilities and the
//! encryption request ride in free-form `labels`. Switch agents take rule
//! sets tagged with a cookie (the intent id).
//!
//! Field names are frozen; `tests/golden/` holds reference documents.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{EncryptionLayer, KeyConfig};
use crate::topology::{Device, DeviceKind, Link, LinkLayer, Port, PortKey, Topology, Upsert};

pub const TAPI_SCHEMA_VERSION: &str = "tapi-subset/1";
pub const LABEL_ENCRYPTION_LAYER: &str = "encryption-layer";
pub const LABEL_ENCRYPTION: &str = "encryption";
pub const ENCRYPTION_ENABLED: &str = "enabled";
pub const LABEL_DOMAIN: &str = "domain";

/// Request header carrying the sender's wall-clock dispatch time in
/// microseconds since the Unix epoch.
pub const DISPATCHED_HEADER: &str = "x-dispatched-at-us";

pub const LAYER_PHOTONIC: &str = "PHOTONIC_MEDIA";
pub const LAYER_DSR: &str = "DSR";
pub const LAYER_ETH: &str = "ETH";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct TapiEdgePoint {
    pub uuid: String,
    pub port: u32,
    pub capacity_bps: u64,
    pub layer_protocol_name: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub labels: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct TapiNode {
    pub uuid: String,
    pub layer_protocol_name: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub labels: BTreeMap<String, String>,
    pub owned_node_edge_point: Vec<TapiEdgePoint>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct TapiLink {
    pub uuid: String,
    /// Edge point uuids at both ends.
    pub node_edge_point: [String; 2],
    pub layer_protocol_name: String,
    pub latency_us: u64,
    pub capacity_bps: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct TapiTopology {
    pub schema_version: String,
    pub domain: String,
    pub nodes: Vec<TapiNode>,
    pub links: Vec<TapiLink>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SbiFormatError {
    #[error("schema version `{0}` not supported")]
    Version(String),
    #[error("duplicate uuid `{0}`")]
    DuplicateUuid(String),
    #[error("link `{link}` references unknown edge point `{nep}`")]
    DanglingEndpoint { link: String, nep: String },
    #[error("edge point `{0}` carries unknown encryption label `{1}`")]
    BadLabel(String, String),
    #[error("{0}")]
    Integrity(String),
}

pub fn edge_point_uuid(device: &str, port: u32) -> String {
    format!("{device}:{port}")
}

fn link_layer_name(layer: LinkLayer) -> &'static str {
    match layer {
        LinkLayer::L1Optical => LAYER_PHOTONIC,
        LinkLayer::L2Ethernet => LAYER_ETH,
        LinkLayer::L3Ip => "IP",
    }
}

fn link_layer_from(name: &str) -> LinkLayer {
    match name {
        LAYER_ETH | LAYER_DSR => LinkLayer::L2Ethernet,
        "IP" => LinkLayer::L3Ip,
        _ => LinkLayer::L1Optical,
    }
}

/// Devices, ports and links extracted from a controller topology.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TopologyFragment {
    pub devices: Vec<Device>,
    pub ports: Vec<Port>,
    pub links: Vec<Link>,
}

impl TopologyFragment {
    /// Upserts everything into `topo`; returns the number of mutations.
    pub fn apply(&self, topo: &mut Topology) -> Result<usize, crate::error::IntegrityError> {
        let mut mutations = 0;
        for d in &self.devices {
            mutations += usize::from(topo.upsert_device(d.clone())?.mutated());
        }
        for p in &self.ports {
            mutations += usize::from(topo.upsert_port(p.clone())?.mutated());
        }
        for l in &self.links {
            mutations += usize::from(topo.upsert_link(l.clone())? != Upsert::Unchanged);
        }
        Ok(mutations)
    }
}

impl TapiTopology {
    /// Exposes the slice of `topo` that belongs to `domain`.
    pub fn from_topology(topo: &Topology, domain: &str) -> Self {
        let slice = topo.domain_slice(domain);
        let nodes = slice
            .devices()
            .map(|d| TapiNode {
                uuid: d.id.clone(),
                layer_protocol_name: vec![LAYER_PHOTONIC.into(), LAYER_DSR.into()],
                labels: BTreeMap::from([(LABEL_DOMAIN.to_string(), domain.to_string())]),
                owned_node_edge_point: slice
                    .device_ports(&d.id)
                    .map(|p| {
                        let mut labels = p.annotations.clone();
                        if let Some(l) = p.encryption_capability {
                            labels.insert(LABEL_ENCRYPTION_LAYER.into(), l.label().into());
                        }
                        let on_ring = slice.links_at_port(&p.key()).any(|l| l.layer == LinkLayer::L1Optical);
                        TapiEdgePoint {
                            uuid: edge_point_uuid(&p.device_id, p.port_no),
                            port: p.port_no,
                            capacity_bps: p.capacity,
                            layer_protocol_name: if on_ring { LAYER_PHOTONIC } else { LAYER_DSR }.into(),
                            labels,
                        }
                    })
                    .collect(),
            })
            .collect();
        let links = slice
            .links()
            .map(|l| TapiLink {
                uuid: l.id.clone(),
                node_edge_point: [
                    edge_point_uuid(&l.src.element_id, l.src.port as u32),
                    edge_point_uuid(&l.dst.element_id, l.dst.port as u32),
                ],
                layer_protocol_name: link_layer_name(l.layer).into(),
                latency_us: l.latency,
                capacity_bps: l.capacity,
            })
            .collect();
        Self { schema_version: TAPI_SCHEMA_VERSION.into(), domain: domain.into(), nodes, links }
    }

    /// Maps the document into store entities. Labels other than the
    /// encryption capability are kept as port annotations.
    pub fn to_fragment(&self) -> Result<TopologyFragment, SbiFormatError> {
        if self.schema_version != TAPI_SCHEMA_VERSION {
            return Err(SbiFormatError::Version(self.schema_version.clone()));
        }
        let mut uuids = BTreeSet::new();
        let mut neps: BTreeMap<&str, PortKey> = BTreeMap::new();
        let mut frag = TopologyFragment::default();
        for n in &self.nodes {
            if !uuids.insert(n.uuid.as_str()) {
                return Err(SbiFormatError::DuplicateUuid(n.uuid.clone()));
            }
            frag.devices.push(Device::new(n.uuid.clone(), DeviceKind::Roadm).in_domain(self.domain.clone()));
            for e in &n.owned_node_edge_point {
                if !uuids.insert(e.uuid.as_str()) {
                    return Err(SbiFormatError::DuplicateUuid(e.uuid.clone()));
                }
                let mut annotations = e.labels.clone();
                let capability = match annotations.remove(LABEL_ENCRYPTION_LAYER) {
                    None => None,
                    Some(v) => match EncryptionLayer::from_label(&v) {
                        Some(EncryptionLayer::None) => None,
                        Some(l) => Some(l),
                        None => return Err(SbiFormatError::BadLabel(e.uuid.clone(), v)),
                    },
                };
                neps.insert(e.uuid.as_str(), PortKey::new(n.uuid.clone(), e.port));
                frag.ports.push(Port {
                    device_id: n.uuid.clone(),
                    port_no: e.port,
                    capacity: e.capacity_bps,
                    encryption_capability: capability,
                    annotations,
                });
            }
        }
        for l in &self.links {
            if !uuids.insert(l.uuid.as_str()) {
                return Err(SbiFormatError::DuplicateUuid(l.uuid.clone()));
            }
            let mut ends = Vec::with_capacity(2);
            for nep in &l.node_edge_point {
                let key = neps.get(nep.as_str()).ok_or_else(|| SbiFormatError::DanglingEndpoint {
                    link: l.uuid.clone(),
                    nep: nep.clone(),
                })?;
                ends.push(key.clone());
            }
            let dst = ends.pop().expect("two ends");
            let src = ends.pop().expect("two ends");
            frag.links.push(Link::new(
                l.uuid.clone(),
                src,
                dst,
                link_layer_from(&l.layer_protocol_name),
                l.latency_us,
                l.capacity_bps,
            ));
        }
        Ok(frag)
    }
}

/// `POST /tapi/connectivity-services` body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ConnectivityServiceRequest {
    pub ingress: String,
    pub egress: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub labels: BTreeMap<String, String>,
    pub capacity_bps: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suggested_path: Option<Vec<String>>,
}

impl ConnectivityServiceRequest {
    pub fn new(ingress: String, egress: String, encryption: bool, capacity_bps: u64) -> Self {
        let mut labels = BTreeMap::new();
        if encryption {
            labels.insert(LABEL_ENCRYPTION.into(), ENCRYPTION_ENABLED.into());
        }
        Self { ingress, egress, labels, capacity_bps, suggested_path: None }
    }

    pub fn encryption(&self) -> bool {
        self.labels.get(LABEL_ENCRYPTION).map(String::as_str) == Some(ENCRYPTION_ENABLED)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.ingress == self.egress {
            return Err(format!("ingress and egress are both {}", self.ingress));
        }
        Ok(())
    }
}

/// Returned by every successful create/delete on the simulated network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SbiAck {
    pub uuid: String,
    /// Delay the simulator applied before answering, wall-clock ms.
    pub applied_delay_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SbiErrorBody {
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FlowRule {
    pub in_port: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eth_dst: Option<String>,
    pub output: u32,
}

/// `POST /rules` body for a switch agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct DeviceRuleSet {
    pub device_id: String,
    pub cookie: u64,
    pub rules: Vec<FlowRule>,
    /// Present when the device encrypts on this path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<KeyConfig>,
}

impl DeviceRuleSet {
    pub fn validate(&self) -> Result<(), String> {
        let mut seen = BTreeSet::new();
        for r in &self.rules {
            if !seen.insert((r.in_port, r.eth_dst.clone())) {
                return Err(format!("duplicate match in_port={} eth_dst={:?}", r.in_port, r.eth_dst));
            }
        }
        if let Some(k) = &self.key {
            k.validate().map_err(|e| e.to_string())?;
        }
        Ok(())
    }
}
