//! Exhaustive shortest-path oracle: enumerate every simple device path,
//! keep the valid ones and take the minimum by (hops, link ids).

use std::collections::BTreeSet;

use mlso_core::model::{ConnectPoint, EncryptionLayer};
use mlso_core::topology::{DeviceKind, Link, PortKey, Topology};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expected {
    Path { links: Vec<String>, latency_us: u64 },
    LatencyViolation { needed_us: u64 },
    NoPath,
}

pub struct Query<'a> {
    pub src: &'a ConnectPoint,
    pub dst: &'a ConnectPoint,
    pub layer: EncryptionLayer,
    pub bandwidth: u64,
    pub max_latency: Option<u64>,
    pub hop_penalty_us: u64,
    pub per_hop_crypto: bool,
}

struct Candidate {
    links: Vec<String>,
    latency: u64,
}

fn capability(t: &Topology, k: &PortKey) -> Option<EncryptionLayer> {
    t.port(k).and_then(|p| p.encryption_capability)
}

fn walk(
    t: &Topology,
    q: &Query<'_>,
    at: &str,
    visited: &mut Vec<String>,
    path: &mut Vec<(Link, PortKey, PortKey)>,
    out: &mut Vec<Candidate>,
) {
    if at == q.dst.element_id {
        if let Some(c) = evaluate(t, q, path) {
            out.push(c);
        }
        return;
    }
    if !path.is_empty() && t.device(at).map(|d| d.kind) == Some(DeviceKind::Host) {
        return;
    }
    let links: Vec<Link> = t.links().cloned().collect();
    for l in links {
        let Some((local, remote)) = l.oriented_from(at) else { continue };
        if visited.contains(&remote.device_id) {
            continue;
        }
        visited.push(remote.device_id.clone());
        path.push((l.clone(), local, remote.clone()));
        walk(t, q, &remote.device_id, visited, path, out);
        path.pop();
        visited.pop();
    }
}

fn evaluate(t: &Topology, q: &Query<'_>, path: &[(Link, PortKey, PortKey)]) -> Option<Candidate> {
    let (first, last) = (path.first()?, path.last()?);
    if q.src.port >= 0 && i64::from(first.1.port_no) != q.src.port {
        return None;
    }
    if q.dst.port >= 0 && i64::from(last.2.port_no) != q.dst.port {
        return None;
    }
    let mut capable = 0;
    let mut crypto_devices = BTreeSet::new();
    for (link, a, b) in path {
        if link.residual_capacity < q.bandwidth.max(1) {
            return None;
        }
        for k in [a, b] {
            match capability(t, k) {
                None => {}
                Some(l) if q.layer != EncryptionLayer::None && l == q.layer => {
                    capable += 1;
                    crypto_devices.insert(k.device_id.clone());
                }
                Some(_) => return None,
            }
        }
    }
    if q.layer != EncryptionLayer::None && (capable == 0 || capable % 2 != 0) {
        return None;
    }
    let links_latency: u64 = path.iter().map(|(l, _, _)| l.latency).sum();
    let penalty = if q.per_hop_crypto { q.hop_penalty_us * crypto_devices.len() as u64 } else { 0 };
    Some(Candidate { links: path.iter().map(|(l, _, _)| l.id.clone()).collect(), latency: links_latency + penalty })
}

pub fn expected(t: &Topology, q: &Query<'_>) -> Expected {
    if q.src.element_id == q.dst.element_id {
        return Expected::NoPath;
    }
    let mut all = Vec::new();
    let mut visited = vec![q.src.element_id.clone()];
    walk(t, q, &q.src.element_id, &mut visited, &mut Vec::new(), &mut all);
    let best = |cands: &mut dyn Iterator<Item = &Candidate>| {
        cands.min_by(|a, b| (a.links.len(), &a.links).cmp(&(b.links.len(), &b.links))).map(|c| (c.links.clone(), c.latency))
    };
    let within = best(&mut all.iter().filter(|c| q.max_latency.is_none_or(|m| c.latency <= m)));
    match within {
        Some((links, latency_us)) => Expected::Path { links, latency_us },
        None => match best(&mut all.iter()) {
            Some((_, needed_us)) => Expected::LatencyViolation { needed_us },
            None => Expected::NoPath,
        },
    }
}
