//! Capable port pairs by fixed-point closure over port keys.

use std::collections::BTreeSet;

use mlso_core::model::EncryptionLayer;
use mlso_core::topology::{PortKey, Topology};

fn neighbours(t: &Topology, k: &PortKey) -> Vec<PortKey> {
    let mut out: Vec<PortKey> = t.device_ports(&k.device_id).map(|p| p.key()).filter(|p| p != k).collect();
    for l in t.links().filter(|l| l.residual_capacity > 0) {
        if &l.src_key() == k {
            out.push(l.dst_key());
        } else if &l.dst_key() == k {
            out.push(l.src_key());
        }
    }
    out
}

fn plain(t: &Topology, k: &PortKey) -> bool {
    t.port(k).is_some_and(|p| p.encryption_capability.is_none())
}

/// Ports reachable from `starts`, passing only through unencrypted ports.
/// The starts themselves are not part of the result.
pub fn closure(t: &Topology, starts: &BTreeSet<PortKey>) -> BTreeSet<PortKey> {
    let mut expanded = starts.clone();
    let mut reached = BTreeSet::new();
    loop {
        let mut grew = false;
        for k in expanded.clone() {
            for n in neighbours(t, &k) {
                if starts.contains(&n) || t.port(&n).is_none() {
                    continue;
                }
                grew |= reached.insert(n.clone());
                if plain(t, &n) {
                    grew |= expanded.insert(n);
                }
            }
        }
        if !grew {
            return reached;
        }
    }
}

pub fn region(t: &Topology, device: &str) -> BTreeSet<PortKey> {
    let own: BTreeSet<PortKey> = t.device_ports(device).map(|p| p.key()).collect();
    let starts: BTreeSet<PortKey> = own.iter().filter(|k| plain(t, k)).cloned().collect();
    let mut r = closure(t, &starts);
    r.extend(own);
    r
}

pub fn pairs(t: &Topology, layer: EncryptionLayer, src: &str, dst: &str) -> Vec<(PortKey, PortKey)> {
    if layer == EncryptionLayer::None {
        return Vec::new();
    }
    let (rs, rd) = (region(t, src), region(t, dst));
    let capable: Vec<PortKey> = t
        .ports()
        .filter(|p| p.encryption_capability == Some(layer))
        .map(|p| p.key())
        .filter(|k| t.links().filter(|l| &l.src_key() == k || &l.dst_key() == k).all(|l| l.residual_capacity > 0))
        .collect();
    let mut out = Vec::new();
    for (i, a) in capable.iter().enumerate() {
        for b in &capable[i + 1..] {
            if a.device_id == b.device_id {
                continue;
            }
            let spans = (rs.contains(a) && rd.contains(b)) || (rs.contains(b) && rd.contains(a));
            if spans && closure(t, &BTreeSet::from([a.clone()])).contains(b) {
                out.push((a.clone(), b.clone()));
            }
        }
    }
    out
}
