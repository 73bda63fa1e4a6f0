//! Intent requests, constraints, encryption layers and their trade-off profiles.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{ParseError, SchemaError};

/// Wildcard port: "any port on this element".
pub const ANY_PORT: i64 = -1;

/// A device/port pair in the textual form `<element>/<port>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConnectPoint {
    pub element_id: String,
    pub port: i64,
}

impl ConnectPoint {
    pub fn new(element_id: impl Into<String>, port: i64) -> Result<Self, ParseError> {
        let element_id = element_id.into();
        if element_id.is_empty() {
            return Err(ParseError::EmptyElement);
        }
        if port < ANY_PORT {
            return Err(ParseError::PortOutOfRange(port));
        }
        Ok(Self { element_id, port })
    }

    pub fn is_wildcard(&self) -> bool {
        self.port == ANY_PORT
    }
}

impl fmt::Display for ConnectPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.element_id, self.port)
    }
}

impl FromStr for ConnectPoint {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_connect_point(s)
    }
}

/// Splits on the last `/`: everything left of it is the element id (MAC
/// addresses contain `:` but never `/`), the right part is the port.
pub fn parse_connect_point(text: &str) -> Result<ConnectPoint, ParseError> {
    if text.is_empty() {
        return Err(ParseError::Empty);
    }
    let (element, port) = text
        .rsplit_once('/')
        .ok_or_else(|| ParseError::MissingSeparator(text.to_string()))?;
    let port: i64 = port
        .parse()
        .map_err(|_| ParseError::BadPort(port.to_string()))?;
    ConnectPoint::new(element, port)
}

impl Serialize for ConnectPoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ConnectPoint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse_connect_point(&text).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstraintKind {
    Domain,
    Encryption,
    Bandwidth,
    Latency,
    Availability,
}

/// One entry of the intent's `constraints` list, tagged by its `type` field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum Constraint {
    #[serde(rename = "DomainConstraint")]
    Domain,
    #[serde(rename = "EncryptionConstraint")]
    Encryption,
    /// Bits per second.
    #[serde(rename = "BandwidthConstraint")]
    Bandwidth { bandwidth: u64 },
    /// Microseconds.
    #[serde(rename = "LatencyConstraint")]
    Latency { latency: u64 },
    /// Fraction in (0, 1].
    #[serde(rename = "AvailabilityConstraint")]
    Availability { availability: f64 },
}

impl Constraint {
    pub fn kind(&self) -> ConstraintKind {
        match self {
            Constraint::Domain => ConstraintKind::Domain,
            Constraint::Encryption => ConstraintKind::Encryption,
            Constraint::Bandwidth { .. } => ConstraintKind::Bandwidth,
            Constraint::Latency { .. } => ConstraintKind::Latency,
            Constraint::Availability { .. } => ConstraintKind::Availability,
        }
    }

    fn check(&self) -> Result<(), SchemaError> {
        match *self {
            Constraint::Bandwidth { bandwidth: 0 } => {
                Err(SchemaError::InvalidConstraint("bandwidth must be > 0".into()))
            }
            Constraint::Latency { latency: 0 } => {
                Err(SchemaError::InvalidConstraint("latency must be > 0".into()))
            }
            Constraint::Availability { availability }
                if !(availability > 0.0 && availability <= 1.0) =>
            {
                Err(SchemaError::InvalidConstraint(format!(
                    "availability {availability} outside (0, 1]"
                )))
            }
            _ => Ok(()),
        }
    }
}

pub const INTENT_TYPE_TAG: &str = "AciIntent";

/// Application-centric intent as submitted on the northbound interface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntentRequest {
    #[serde(rename = "type")]
    pub type_tag: String,
    #[serde(rename = "appId")]
    pub app_id: String,
    pub priority: i64,
    #[serde(default)]
    pub constraints: Vec<Constraint>,
    pub one: ConnectPoint,
    pub two: ConnectPoint,
}

impl IntentRequest {
    pub fn validate(&self) -> Result<(), SchemaError> {
        if self.type_tag != INTENT_TYPE_TAG {
            return Err(SchemaError::UnknownType(self.type_tag.clone()));
        }
        if self.priority < 0 {
            return Err(SchemaError::NegativePriority(self.priority));
        }
        if self.one == self.two {
            return Err(SchemaError::SameEndpoints(self.one.to_string()));
        }
        let mut seen = Vec::with_capacity(self.constraints.len());
        for c in &self.constraints {
            c.check()?;
            if seen.contains(&c.kind()) {
                return Err(SchemaError::DuplicateConstraint(c.kind()));
            }
            seen.push(c.kind());
        }
        Ok(())
    }

    pub fn constraint(&self, kind: ConstraintKind) -> Option<&Constraint> {
        self.constraints.iter().find(|c| c.kind() == kind)
    }

    pub fn has(&self, kind: ConstraintKind) -> bool {
        self.constraint(kind).is_some()
    }

    pub fn bandwidth(&self) -> u64 {
        match self.constraint(ConstraintKind::Bandwidth) {
            Some(Constraint::Bandwidth { bandwidth }) => *bandwidth,
            _ => 0,
        }
    }

    pub fn max_latency(&self) -> Option<u64> {
        match self.constraint(ConstraintKind::Latency) {
            Some(Constraint::Latency { latency }) => Some(*latency),
            _ => None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("intent request always serializes")
    }
}

/// Parses and validates an intent document.
pub fn parse_intent_request(document: &str) -> Result<IntentRequest, SchemaError> {
    let request: IntentRequest =
        serde_json::from_str(document).map_err(|e| SchemaError::Malformed(e.to_string()))?;
    request.validate()?;
    Ok(request)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncryptionLayer {
    None,
    Physical,
    Macsec,
    Ipsec,
}

impl EncryptionLayer {
    pub const ALL: [EncryptionLayer; 4] = [
        EncryptionLayer::None,
        EncryptionLayer::Physical,
        EncryptionLayer::Macsec,
        EncryptionLayer::Ipsec,
    ];

    pub const ENCRYPTING: [EncryptionLayer; 3] = [
        EncryptionLayer::Physical,
        EncryptionLayer::Macsec,
        EncryptionLayer::Ipsec,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EncryptionLayer::None => "None",
            EncryptionLayer::Physical => "Physical",
            EncryptionLayer::Macsec => "MACsec",
            EncryptionLayer::Ipsec => "IPsec",
        }
    }

    /// Value used in capability labels on the southbound interface.
    pub fn label(self) -> &'static str {
        match self {
            EncryptionLayer::None => "none",
            EncryptionLayer::Physical => "physical",
            EncryptionLayer::Macsec => "macsec",
            EncryptionLayer::Ipsec => "ipsec",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        EncryptionLayer::ALL.into_iter().find(|l| l.label() == label)
    }
}

impl fmt::Display for EncryptionLayer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ordinal {
    Low,
    Medium,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndToEndScope {
    IpOnly,
    L2Only,
    FiberOtn,
    /// Only used by the unencrypted pseudo-profile.
    Any,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayloadRange {
    pub min_bps: u64,
    pub max_bps: u64,
}

impl PayloadRange {
    pub fn contains(&self, bps: u64) -> bool {
        bps >= self.min_bps && bps <= self.max_bps
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncryptionLayerProfile {
    pub layer: EncryptionLayer,
    pub latency_class: Ordinal,
    pub throughput_class: Ordinal,
    pub transparency_class: Ordinal,
    pub payload_range: PayloadRange,
    pub end_to_end_scope: EndToEndScope,
    pub mesh_flexibility: Ordinal,
    pub per_hop_crypto: bool,
}

pub const GBPS: u64 = 1_000_000_000;
pub const MBPS: u64 = 1_000_000;

/// Default MACsec payload bound: a 10G Ethernet port.
pub const MACSEC_DEFAULT_MAX_BPS: u64 = 10 * GBPS;
/// Default router rate capping IPsec payload.
pub const IPSEC_DEFAULT_MAX_BPS: u64 = 10 * GBPS;

/// Layer trade-offs, ordered by [`EncryptionLayer`].
pub fn default_layer_profiles() -> Vec<EncryptionLayerProfile> {
    use Ordinal::*;
    vec![
        EncryptionLayerProfile {
            layer: EncryptionLayer::None,
            latency_class: Low,
            throughput_class: High,
            transparency_class: High,
            payload_range: PayloadRange { min_bps: 0, max_bps: u64::MAX },
            end_to_end_scope: EndToEndScope::Any,
            mesh_flexibility: High,
            per_hop_crypto: false,
        },
        EncryptionLayerProfile {
            layer: EncryptionLayer::Physical,
            latency_class: Low,
            // line speed, no overhead
            throughput_class: High,
            transparency_class: High,
            payload_range: PayloadRange { min_bps: GBPS, max_bps: 100 * GBPS },
            end_to_end_scope: EndToEndScope::FiberOtn,
            mesh_flexibility: Medium,
            per_hop_crypto: false,
        },
        EncryptionLayerProfile {
            layer: EncryptionLayer::Macsec,
            latency_class: Medium,
            throughput_class: Medium,
            transparency_class: Medium,
            payload_range: PayloadRange { min_bps: 0, max_bps: MACSEC_DEFAULT_MAX_BPS },
            end_to_end_scope: EndToEndScope::L2Only,
            mesh_flexibility: Low,
            per_hop_crypto: true,
        },
        EncryptionLayerProfile {
            layer: EncryptionLayer::Ipsec,
            latency_class: High,
            throughput_class: Low,
            transparency_class: Low,
            payload_range: PayloadRange { min_bps: 0, max_bps: IPSEC_DEFAULT_MAX_BPS },
            end_to_end_scope: EndToEndScope::IpOnly,
            mesh_flexibility: High,
            per_hop_crypto: false,
        },
    ]
}

pub fn profile_for(profiles: &[EncryptionLayerProfile], layer: EncryptionLayer) -> Option<&EncryptionLayerProfile> {
    profiles.iter().find(|p| p.layer == layer)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyMechanism {
    PreSharedKey,
}

/// Key material reference. Identifiers only; no secrets are ever held.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyConfig {
    pub mechanism: KeyMechanism,
    pub key_id: String,
    /// Seconds of simulated time between key refreshes.
    pub rekey_interval: f64,
}

impl KeyConfig {
    pub fn pre_shared(key_id: impl Into<String>, rekey_interval: f64) -> Result<Self, SchemaError> {
        let cfg = Self {
            mechanism: KeyMechanism::PreSharedKey,
            key_id: key_id.into(),
            rekey_interval,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SchemaError> {
        if !(self.rekey_interval > 0.0) || !self.rekey_interval.is_finite() {
            return Err(SchemaError::InvalidConstraint(format!(
                "rekey_interval must be > 0, got {}",
                self.rekey_interval
            )));
        }
        Ok(())
    }
}

/// Encrypted 10 Mb/s service between the two lab hosts, as an operator
/// would submit it.
pub const SAMPLE_INTENT: &str = r#"{
    "type": "AciIntent",
    "appId": "org.onosproject.cli",
    "priority": 100,
    "constraints": [
      {"type": "DomainConstraint"},
      {"type": "EncryptionConstraint"},
      {
        "type": "BandwidthConstraint",
        "bandwidth": 10000000
      }
    ],
    "one": "7E:1D:D7:77:7E:06/-1",
    "two": "CA:B8:53:D4:2A:84/-1"
  }"#;
