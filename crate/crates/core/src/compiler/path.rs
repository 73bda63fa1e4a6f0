//! Constrained minimum-hop path search over the multilayer topology.
//!
//! A path is a sequence of links between two devices that visits no device
//! twice and never transits a host. It is valid at a layer when:
//!
//! * every link has residual capacity of at least `max(bandwidth, 1)`;
//! * every port it touches is either plain or capable of that layer (for
//!   the unencrypted layer: plain only);
//! * for an encrypting layer, the capable ports it touches come in
//!   entry/exit pairs: their count is even and non-zero;
//! * a concrete source (destination) port pins the first (last) link;
//! * total latency stays within the bound, where latency is the sum of link
//!   latencies plus, for per-hop crypto layers, a fixed penalty for every
//!   device doing crypto on the path.
//!
//! Cost is hop count. Among equal-cost paths the one whose link-id sequence
//! is lexicographically smallest wins.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::PathError;
use crate::model::{ConnectPoint, EncryptionLayer};
use crate::topology::{DeviceKind, Link, PortKey, Topology};

/// Upper bound on partial paths expanded before giving up.
const EXPANSION_LIMIT: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComputedPath {
    pub layer: EncryptionLayer,
    /// Link ids in traversal order.
    pub links: Vec<String>,
    /// Ports touched in traversal order, two per link.
    pub ports: Vec<ConnectPoint>,
    /// Devices in traversal order, endpoints included.
    pub devices: Vec<String>,
    pub latency_us: u64,
}

impl ComputedPath {
    pub fn cost(&self) -> usize {
        self.links.len()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PathQuery<'a> {
    pub src: &'a ConnectPoint,
    pub dst: &'a ConnectPoint,
    pub layer: EncryptionLayer,
    pub bandwidth: u64,
    pub max_latency: Option<u64>,
    /// Per crypto device; only applied when the layer does per-hop crypto.
    pub hop_penalty_us: u64,
    pub per_hop_crypto: bool,
}

pub fn compute_path(topo: &Topology, q: &PathQuery<'_>) -> Result<ComputedPath, PathError> {
    let no_path = || PathError::NoPath {
        src: q.src.to_string(),
        dst: q.dst.to_string(),
        layer: q.layer,
    };
    if q.src.element_id == q.dst.element_id
        || topo.device(&q.src.element_id).is_none()
        || topo.device(&q.dst.element_id).is_none()
    {
        return Err(no_path());
    }
    let view = View::new(topo, q);
    match view.search(q.max_latency)? {
        Some(p) => Ok(p),
        None => match q.max_latency {
            Some(limit) => match view.search(None)? {
                Some(p) => Err(PathError::LatencyViolation {
                    layer: q.layer,
                    needed_us: p.latency_us,
                    limit_us: limit,
                }),
                None => Err(no_path()),
            },
            None => Err(no_path()),
        },
    }
}

struct Edge<'t> {
    rank: usize,
    link: &'t Link,
    local_port: u32,
    remote: usize,
    remote_port: u32,
    /// Capable ports of this link at the query layer, by device index.
    capable: [Option<usize>; 2],
}

struct View<'t, 'q> {
    topo: &'t Topology,
    q: &'q PathQuery<'q>,
    /// Device ids in index order.
    devices: Vec<&'t str>,
    src: usize,
    dst: usize,
    transit_ok: Vec<bool>,
    adjacency: Vec<Vec<Edge<'t>>>,
    hops_to_dst: Vec<Option<usize>>,
    latency_to_dst: Vec<Option<u64>>,
}

/// Device set as a bitset over device indices.
#[derive(Clone, PartialEq, Eq)]
struct DeviceSet(Vec<u64>);

impl DeviceSet {
    fn new(n: usize) -> Self {
        DeviceSet(vec![0; n.div_ceil(64)])
    }

    fn contains(&self, i: usize) -> bool {
        self.0[i / 64] & (1 << (i % 64)) != 0
    }

    /// Returns whether `i` was absent.
    fn insert(&mut self, i: usize) -> bool {
        let absent = !self.contains(i);
        self.0[i / 64] |= 1 << (i % 64);
        absent
    }
}

#[derive(Clone)]
struct Partial {
    device: usize,
    ranks: Vec<usize>,
    visited: DeviceSet,
    capable_ports: usize,
    crypto_devices: DeviceSet,
    crypto_count: usize,
    link_latency: u64,
}

impl<'t, 'q> View<'t, 'q> {
    fn new(topo: &'t Topology, q: &'q PathQuery<'q>) -> Self {
        let devices: Vec<&str> = topo.devices().map(|d| d.id.as_str()).collect();
        let index = |id: &str| devices.binary_search(&id).ok();
        let src = index(&q.src.element_id).expect("checked by caller");
        let dst = index(&q.dst.element_id).expect("checked by caller");
        let transit_ok = topo.devices().enumerate().map(|(i, d)| i == dst || d.kind != DeviceKind::Host).collect();
        let need = q.bandwidth.max(1);
        let capability = |k: &PortKey| topo.port(k).map(|p| p.encryption_capability);
        let port_ok = |c: Option<EncryptionLayer>| match c {
            None => true,
            Some(l) => l == q.layer && q.layer != EncryptionLayer::None,
        };
        let mut adjacency: Vec<Vec<Edge<'t>>> = devices.iter().map(|_| Vec::new()).collect();
        for (rank, link) in topo.links().enumerate() {
            if link.residual_capacity < need {
                continue;
            }
            let (a, b) = (link.src_key(), link.dst_key());
            let (Some(ca), Some(cb)) = (capability(&a), capability(&b)) else {
                continue;
            };
            if !port_ok(ca) || !port_ok(cb) {
                continue;
            }
            let (Some(da), Some(db)) = (index(&a.device_id), index(&b.device_id)) else {
                continue;
            };
            let layer_capable = |c: Option<EncryptionLayer>| q.layer != EncryptionLayer::None && c == Some(q.layer);
            let capable = [layer_capable(ca).then_some(da), layer_capable(cb).then_some(db)];
            adjacency[da].push(Edge { rank, link, local_port: a.port_no, remote: db, remote_port: b.port_no, capable });
            adjacency[db].push(Edge { rank, link, local_port: b.port_no, remote: da, remote_port: a.port_no, capable });
        }
        let mut view = Self {
            topo,
            q,
            src,
            dst,
            transit_ok,
            adjacency,
            hops_to_dst: Vec::new(),
            latency_to_dst: Vec::new(),
            devices,
        };
        view.hops_to_dst = view.bfs_from_dst();
        view.latency_to_dst = view.dijkstra_from_dst();
        view
    }

    fn bfs_from_dst(&self) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.devices.len()];
        dist[self.dst] = Some(0);
        let mut queue = VecDeque::from([self.dst]);
        while let Some(at) = queue.pop_front() {
            let d = dist[at].expect("queued devices have a distance");
            for e in &self.adjacency[at] {
                if dist[e.remote].is_none() {
                    dist[e.remote] = Some(d + 1);
                    if self.transit_ok[e.remote] {
                        queue.push_back(e.remote);
                    }
                }
            }
        }
        dist
    }

    fn dijkstra_from_dst(&self) -> Vec<Option<u64>> {
        let mut dist = vec![None; self.devices.len()];
        let mut heap = BinaryHeap::from([Reverse((0u64, self.dst))]);
        while let Some(Reverse((d, at))) = heap.pop() {
            if dist[at].is_some() {
                continue;
            }
            dist[at] = Some(d);
            if !self.transit_ok[at] {
                continue;
            }
            for e in &self.adjacency[at] {
                if dist[e.remote].is_none() {
                    heap.push(Reverse((d + e.link.latency, e.remote)));
                }
            }
        }
        dist
    }

    fn penalty(&self, crypto_devices: usize) -> u64 {
        if self.q.per_hop_crypto {
            self.q.hop_penalty_us * crypto_devices as u64
        } else {
            0
        }
    }

    fn latency(&self, p: &Partial) -> u64 {
        p.link_latency + self.penalty(p.crypto_count)
    }

    fn complete(&self, p: &Partial) -> bool {
        p.device == self.dst
            && (self.q.layer == EncryptionLayer::None
                || (p.capable_ports > 0 && p.capable_ports % 2 == 0))
    }

    /// A* over simple partial paths keyed by (estimated hops, link ranks).
    fn search(&self, max_latency: Option<u64>) -> Result<Option<ComputedPath>, PathError> {
        let Some(h0) = self.hops_to_dst[self.src] else {
            return Ok(None);
        };
        let mut visited = DeviceSet::new(self.devices.len());
        visited.insert(self.src);
        let start = Partial {
            device: self.src,
            ranks: Vec::new(),
            visited,
            capable_ports: 0,
            crypto_devices: DeviceSet::new(self.devices.len()),
            crypto_count: 0,
            link_latency: 0,
        };
        let mut arena = vec![start];
        let mut heap = BinaryHeap::from([Reverse((h0, Vec::<usize>::new(), 0usize))]);
        let mut expanded = 0usize;
        let mut children = Vec::new();
        while let Some(Reverse((_, _, idx))) = heap.pop() {
            let p = &arena[idx];
            if p.device == self.dst {
                if self.complete(p) {
                    return Ok(Some(self.materialize(p)));
                }
                continue;
            }
            expanded += 1;
            if expanded > EXPANSION_LIMIT {
                return Err(PathError::NoPath {
                    src: self.q.src.to_string(),
                    dst: self.q.dst.to_string(),
                    layer: self.q.layer,
                });
            }
            for e in &self.adjacency[p.device] {
                let next = e.remote;
                if p.visited.contains(next) || !self.transit_ok[next] {
                    continue;
                }
                if p.ranks.is_empty() && self.q.src.port >= 0 && i64::from(e.local_port) != self.q.src.port {
                    continue;
                }
                if next == self.dst && self.q.dst.port >= 0 && i64::from(e.remote_port) != self.q.dst.port {
                    continue;
                }
                let Some(h) = self.hops_to_dst[next] else {
                    continue;
                };
                let mut n = p.clone();
                n.device = next;
                n.ranks.push(e.rank);
                n.visited.insert(next);
                n.link_latency += e.link.latency;
                for d in e.capable.into_iter().flatten() {
                    n.capable_ports += 1;
                    if n.crypto_devices.insert(d) {
                        n.crypto_count += 1;
                    }
                }
                if let Some(limit) = max_latency {
                    let lb = self.latency_to_dst[next].unwrap_or(0);
                    if self.latency(&n) + lb > limit {
                        continue;
                    }
                }
                children.push((n.ranks.len() + h, n));
            }
            for (f, n) in children.drain(..) {
                heap.push(Reverse((f, n.ranks.clone(), arena.len())));
                arena.push(n);
            }
        }
        Ok(None)
    }

    fn materialize(&self, p: &Partial) -> ComputedPath {
        let all: Vec<&Link> = self.topo.links().collect();
        let mut device = self.q.src.element_id.clone();
        let mut devices = vec![device.clone()];
        let mut ports = Vec::new();
        let mut links = Vec::new();
        for &r in &p.ranks {
            let link = all[r];
            let (local, remote) = link.oriented_from(&device).expect("path links are contiguous");
            ports.push(local.connect_point());
            ports.push(remote.connect_point());
            device = remote.device_id.clone();
            devices.push(device.clone());
            links.push(link.id.clone());
        }
        ComputedPath {
            layer: self.q.layer,
            links,
            ports,
            devices,
            latency_us: self.latency(p),
        }
    }
}
