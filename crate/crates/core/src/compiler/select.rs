//! Encryption layer selection.
//!
//! Preference order is Physical, then MACsec, then IPsec. Physical is taken
//! for high-bandwidth demands (at or above the threshold) or when the
//! latency bound is tighter than what per-hop MACsec crypto is expected to
//! add. Everything else lands on MACsec while it fits a standard Ethernet
//! port, and IPsec is only a fallback when the policy enables it.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::LayerSelectionError;
use crate::model::{default_layer_profiles, profile_for, EncryptionLayer, EncryptionLayerProfile, GBPS};

use super::ValidatedIntent;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionPolicy {
    /// Demands at or above this rate (b/s) go to physical-layer encryption.
    pub physical_threshold: u64,
    pub allow_ipsec: bool,
    /// Latency added by each device doing MACsec crypto, microseconds.
    pub macsec_hop_penalty_us: u64,
    /// Crypto devices assumed on a MACsec path when estimating its latency
    /// budget before any path is known.
    pub macsec_budget_devices: u64,
    pub profiles: Vec<EncryptionLayerProfile>,
}

impl Default for SelectionPolicy {
    fn default() -> Self {
        Self {
            physical_threshold: GBPS,
            allow_ipsec: false,
            macsec_hop_penalty_us: 5,
            macsec_budget_devices: 2,
            profiles: default_layer_profiles(),
        }
    }
}

impl SelectionPolicy {
    pub fn macsec_latency_budget(&self) -> u64 {
        self.macsec_hop_penalty_us * self.macsec_budget_devices
    }

    pub fn max_payload(&self, layer: EncryptionLayer) -> u64 {
        profile_for(&self.profiles, layer).map_or(u64::MAX, |p| p.payload_range.max_bps)
    }

    pub fn per_hop_crypto(&self, layer: EncryptionLayer) -> bool {
        profile_for(&self.profiles, layer).is_some_and(|p| p.per_hop_crypto)
    }

    pub fn with_macsec_max(mut self, max_bps: u64) -> Self {
        if let Some(p) = self.profiles.iter_mut().find(|p| p.layer == EncryptionLayer::Macsec) {
            p.payload_range.max_bps = max_bps;
        }
        self
    }

    pub fn with_ipsec_max(mut self, max_bps: u64) -> Self {
        if let Some(p) = self.profiles.iter_mut().find(|p| p.layer == EncryptionLayer::Ipsec) {
            p.payload_range.max_bps = max_bps;
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerVerdict {
    pub layer: EncryptionLayer,
    pub accepted: bool,
    pub reason: String,
}

impl std::fmt::Display for LayerVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let word = if self.accepted { "selected" } else { "rejected" };
        write!(f, "{} {word}: {}", self.layer, self.reason)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub chosen: Option<EncryptionLayer>,
    pub verdicts: Vec<LayerVerdict>,
}

impl Selection {
    fn record(&mut self, layer: EncryptionLayer, accepted: bool, reason: String) {
        self.verdicts.push(LayerVerdict { layer, accepted, reason });
        if accepted {
            self.chosen = Some(layer);
        }
    }
}

/// Walks the preference chain and records why each layer was taken or not.
pub fn evaluate_layers(
    bandwidth: u64,
    max_latency: Option<u64>,
    available: &BTreeSet<EncryptionLayer>,
    policy: &SelectionPolicy,
) -> Selection {
    let budget = policy.macsec_latency_budget();
    let latency_forced = max_latency.is_some_and(|l| l < budget);
    let mut s = Selection { chosen: None, verdicts: Vec::with_capacity(3) };

    let phys_max = policy.max_payload(EncryptionLayer::Physical);
    let thr = policy.physical_threshold;
    if !available.contains(&EncryptionLayer::Physical) {
        s.record(EncryptionLayer::Physical, false, "not offered by topology".into());
    } else if bandwidth > phys_max {
        s.record(
            EncryptionLayer::Physical,
            false,
            format!("bandwidth above payload range ({bandwidth} > {phys_max} b/s)"),
        );
    } else if latency_forced {
        s.record(
            EncryptionLayer::Physical,
            true,
            format!(
                "latency bound {} us below MACsec budget {budget} us",
                max_latency.unwrap_or_default()
            ),
        );
    } else if bandwidth >= thr {
        s.record(
            EncryptionLayer::Physical,
            true,
            format!("bandwidth at or above threshold ({bandwidth} >= {thr} b/s)"),
        );
    } else {
        s.record(
            EncryptionLayer::Physical,
            false,
            format!("bandwidth below threshold ({bandwidth} < {thr} b/s)"),
        );
    }

    let macsec_max = policy.max_payload(EncryptionLayer::Macsec);
    if let Some(c) = s.chosen {
        s.record(EncryptionLayer::Macsec, false, format!("{c} preferred"));
    } else if latency_forced {
        s.record(
            EncryptionLayer::Macsec,
            false,
            format!(
                "latency bound {} us below MACsec budget {budget} us",
                max_latency.unwrap_or_default()
            ),
        );
    } else if !available.contains(&EncryptionLayer::Macsec) {
        s.record(EncryptionLayer::Macsec, false, "not offered by topology".into());
    } else if bandwidth > macsec_max {
        s.record(
            EncryptionLayer::Macsec,
            false,
            format!("bandwidth above payload bound ({bandwidth} > {macsec_max} b/s)"),
        );
    } else {
        s.record(
            EncryptionLayer::Macsec,
            true,
            format!("bandwidth within payload bound ({bandwidth} <= {macsec_max} b/s)"),
        );
    }

    let ipsec_max = policy.max_payload(EncryptionLayer::Ipsec);
    if let Some(c) = s.chosen {
        s.record(EncryptionLayer::Ipsec, false, format!("{c} preferred"));
    } else if !policy.allow_ipsec {
        s.record(EncryptionLayer::Ipsec, false, "disabled by policy".into());
    } else if latency_forced {
        s.record(
            EncryptionLayer::Ipsec,
            false,
            format!("latency bound {} us too tight for IPsec", max_latency.unwrap_or_default()),
        );
    } else if !available.contains(&EncryptionLayer::Ipsec) {
        s.record(EncryptionLayer::Ipsec, false, "not offered by topology".into());
    } else if bandwidth > ipsec_max {
        s.record(
            EncryptionLayer::Ipsec,
            false,
            format!("bandwidth above router rate ({bandwidth} > {ipsec_max} b/s)"),
        );
    } else {
        s.record(EncryptionLayer::Ipsec, true, "fallback layer enabled by policy".into());
    }

    s
}

/// Used after the preferred layer's path computation failed: the threshold
/// preference no longer applies and the first remaining layer that can carry
/// the payload is taken.
pub fn evaluate_fallback(
    bandwidth: u64,
    available: &BTreeSet<EncryptionLayer>,
    policy: &SelectionPolicy,
) -> Selection {
    let mut s = Selection { chosen: None, verdicts: Vec::with_capacity(3) };
    for layer in EncryptionLayer::ENCRYPTING {
        let max = policy.max_payload(layer);
        if let Some(c) = s.chosen {
            s.record(layer, false, format!("{c} preferred"));
        } else if !available.contains(&layer) {
            s.record(layer, false, "not offered or already tried".into());
        } else if layer == EncryptionLayer::Ipsec && !policy.allow_ipsec {
            s.record(layer, false, "disabled by policy".into());
        } else if bandwidth > max {
            s.record(layer, false, format!("bandwidth above payload bound ({bandwidth} > {max} b/s)"));
        } else {
            s.record(layer, true, "fallback after path failure".into());
        }
    }
    s
}

pub fn select_encryption_layer(
    intent: &ValidatedIntent,
    available: &BTreeSet<EncryptionLayer>,
    policy: &SelectionPolicy,
) -> Result<EncryptionLayer, LayerSelectionError> {
    let selection = evaluate_layers(intent.bandwidth, intent.max_latency, available, policy);
    selection.chosen.ok_or_else(|| LayerSelectionError {
        reason: selection
            .verdicts
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; "),
    })
}
