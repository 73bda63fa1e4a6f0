//! Multilayer topology store: devices, ports, links and domains, plus the
//! residual-capacity ledger that all compilations contend on.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{FormatError, IntegrityError, ReservationError};
use crate::model::{ConnectPoint, EncryptionLayer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceKind {
    Roadm,
    EthernetDemarcation,
    Router,
    VirtualSwitch,
    Host,
}

impl DeviceKind {
    /// The only encryption layer a port on this kind of device may offer.
    pub fn native_capability(self) -> Option<EncryptionLayer> {
        match self {
            DeviceKind::Roadm => Some(EncryptionLayer::Physical),
            DeviceKind::EthernetDemarcation => Some(EncryptionLayer::Macsec),
            DeviceKind::Router => Some(EncryptionLayer::Ipsec),
            DeviceKind::VirtualSwitch | DeviceKind::Host => None,
        }
    }
}

impl fmt::Display for DeviceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DeviceKind::Roadm => "roadm",
            DeviceKind::EthernetDemarcation => "ethernet_demarcation",
            DeviceKind::Router => "router",
            DeviceKind::VirtualSwitch => "virtual_switch",
            DeviceKind::Host => "host",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Device {
    pub id: String,
    pub kind: DeviceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain_id: Option<String>,
}

impl Device {
    pub fn new(id: impl Into<String>, kind: DeviceKind) -> Self {
        Self { id: id.into(), kind, domain_id: None }
    }

    pub fn in_domain(mut self, domain: impl Into<String>) -> Self {
        self.domain_id = Some(domain.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PortKey {
    pub device_id: String,
    pub port_no: u32,
}

impl PortKey {
    pub fn new(device_id: impl Into<String>, port_no: u32) -> Self {
        Self { device_id: device_id.into(), port_no }
    }

    pub fn connect_point(&self) -> ConnectPoint {
        ConnectPoint { element_id: self.device_id.clone(), port: i64::from(self.port_no) }
    }

    pub fn from_connect_point(cp: &ConnectPoint) -> Option<Self> {
        u32::try_from(cp.port).ok().map(|p| Self::new(cp.element_id.clone(), p))
    }
}

impl fmt::Display for PortKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.device_id, self.port_no)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Port {
    pub device_id: String,
    pub port_no: u32,
    /// Bits per second.
    pub capacity: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encryption_capability: Option<EncryptionLayer>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub annotations: BTreeMap<String, String>,
}

impl Port {
    pub fn new(device_id: impl Into<String>, port_no: u32, capacity: u64) -> Self {
        Self {
            device_id: device_id.into(),
            port_no,
            capacity,
            encryption_capability: None,
            annotations: BTreeMap::new(),
        }
    }

    pub fn capable(mut self, layer: EncryptionLayer) -> Self {
        self.encryption_capability = Some(layer);
        self
    }

    pub fn annotate(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.annotations.insert(key.into(), value.into());
        self
    }

    pub fn key(&self) -> PortKey {
        PortKey::new(self.device_id.clone(), self.port_no)
    }

    /// Capability as seen by path computation: `None` for plain ports.
    pub fn layer(&self) -> EncryptionLayer {
        self.encryption_capability.unwrap_or(EncryptionLayer::None)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkLayer {
    L1Optical,
    L2Ethernet,
    L3Ip,
}

/// Dense index of the port graph: links with spare capacity plus
/// intra-device cross-connects. Ports are numbered in key order, so the
/// ports of one device form a contiguous range.
struct PortGraph<'a> {
    keys: Vec<(&'a str, u32)>,
    plain: Vec<bool>,
    /// Port index range of the owning device, per port.
    device_range: Vec<(usize, usize)>,
    links: Vec<Vec<usize>>,
}

impl<'a> PortGraph<'a> {
    fn new(t: &'a Topology) -> Self {
        let keys: Vec<(&str, u32)> = t.ports.values().map(|p| (p.device_id.as_str(), p.port_no)).collect();
        let plain = t.ports.values().map(|p| p.encryption_capability.is_none()).collect();
        let mut device_range = vec![(0, 0); keys.len()];
        let mut start = 0;
        for i in 1..=keys.len() {
            if i == keys.len() || keys[i].0 != keys[start].0 {
                device_range[start..i].fill((start, i));
                start = i;
            }
        }
        let mut g = Self { keys, plain, device_range, links: Vec::new() };
        g.links = vec![Vec::new(); g.keys.len()];
        for l in t.links.values().filter(|l| l.residual_capacity > 0) {
            if let (Some(a), Some(b)) = (g.index(&l.src.element_id, l.src.port), g.index(&l.dst.element_id, l.dst.port)) {
                g.links[a].push(b);
                g.links[b].push(a);
            }
        }
        g
    }

    fn index(&self, device: &str, port: i64) -> Option<usize> {
        let port = u32::try_from(port).ok()?;
        self.keys.binary_search_by(|(d, p)| (*d, *p).cmp(&(device, port))).ok()
    }

    fn device_ports(&self, device: &str) -> std::ops::Range<usize> {
        let from = self.keys.partition_point(|(d, _)| *d < device);
        let to = self.keys.partition_point(|(d, _)| *d <= device);
        from..to
    }

    /// Ports reachable from `starts` without crossing a port that offers
    /// any encryption. The starts are expanded whatever their capability.
    fn reach(&self, starts: impl IntoIterator<Item = usize>) -> Vec<bool> {
        let mut seen = vec![false; self.keys.len()];
        let mut reached = vec![false; self.keys.len()];
        let mut queue: VecDeque<usize> = starts.into_iter().collect();
        for &s in &queue {
            seen[s] = true;
        }
        while let Some(at) = queue.pop_front() {
            let (from, to) = self.device_range[at];
            for k in (from..to).filter(|k| *k != at).chain(self.links[at].iter().copied()) {
                if !seen[k] {
                    seen[k] = true;
                    reached[k] = true;
                    if self.plain[k] {
                        queue.push_back(k);
                    }
                }
            }
        }
        reached
    }

    /// The device's own ports plus everything reachable from its plain ports.
    fn region_reach(&self, device: &str) -> Vec<bool> {
        let own = self.device_ports(device);
        let mut reach = self.reach(own.clone().filter(|k| self.plain[*k]));
        for k in own {
            reach[k] = true;
        }
        reach
    }
}

/// Bidirectional link between two stored ports. Capacity is shared by both
/// directions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub id: String,
    pub src: ConnectPoint,
    pub dst: ConnectPoint,
    pub layer: LinkLayer,
    /// Microseconds.
    pub latency: u64,
    pub capacity: u64,
    pub residual_capacity: u64,
}

impl Link {
    pub fn new(
        id: impl Into<String>,
        src: PortKey,
        dst: PortKey,
        layer: LinkLayer,
        latency: u64,
        capacity: u64,
    ) -> Self {
        Self {
            id: id.into(),
            src: src.connect_point(),
            dst: dst.connect_point(),
            layer,
            latency,
            capacity,
            residual_capacity: capacity,
        }
    }

    pub fn src_key(&self) -> PortKey {
        PortKey::from_connect_point(&self.src).expect("stored links have concrete ports")
    }

    pub fn dst_key(&self) -> PortKey {
        PortKey::from_connect_point(&self.dst).expect("stored links have concrete ports")
    }

    /// Given one endpoint device, the (local, remote) port keys.
    pub fn oriented_from(&self, device: &str) -> Option<(PortKey, PortKey)> {
        if self.src.element_id == device {
            Some((self.src_key(), self.dst_key()))
        } else if self.dst.element_id == device {
            Some((self.dst_key(), self.src_key()))
        } else {
            None
        }
    }

    fn same_static(&self, other: &Link) -> bool {
        self.id == other.id
            && self.src == other.src
            && self.dst == other.dst
            && self.layer == other.layer
            && self.latency == other.latency
            && self.capacity == other.capacity
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainTechnology {
    OpticalTapi,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Domain {
    pub id: String,
    pub controller_endpoint: String,
    pub technology: DomainTechnology,
}

pub type ReservationId = u64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reservation {
    pub id: ReservationId,
    pub links: Vec<String>,
    pub amount: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Upsert {
    Inserted,
    Updated,
    Unchanged,
}

impl Upsert {
    pub fn mutated(self) -> bool {
        self != Upsert::Unchanged
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Topology {
    domains: BTreeMap<String, Domain>,
    devices: BTreeMap<String, Device>,
    ports: BTreeMap<PortKey, Port>,
    links: BTreeMap<String, Link>,
    reservations: BTreeMap<ReservationId, Reservation>,
    next_reservation: ReservationId,
    offered: OfferedCache,
}

/// `available_layers` results per region pair and set of full links.
/// Cleared when devices, ports or links change.
#[derive(Debug, Default)]
struct OfferedCache(Mutex<BTreeMap<(String, String, Vec<String>), BTreeSet<EncryptionLayer>>>);

impl Clone for OfferedCache {
    fn clone(&self) -> Self {
        Self(Mutex::new(self.0.lock().unwrap().clone()))
    }
}

impl PartialEq for OfferedCache {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Topology {
    pub fn new() -> Self {
        Self { next_reservation: 1, ..Default::default() }
    }

    pub fn domains(&self) -> impl Iterator<Item = &Domain> {
        self.domains.values()
    }

    pub fn devices(&self) -> impl Iterator<Item = &Device> {
        self.devices.values()
    }

    pub fn ports(&self) -> impl Iterator<Item = &Port> {
        self.ports.values()
    }

    pub fn links(&self) -> impl Iterator<Item = &Link> {
        self.links.values()
    }

    pub fn reservations(&self) -> impl Iterator<Item = &Reservation> {
        self.reservations.values()
    }

    pub fn domain(&self, id: &str) -> Option<&Domain> {
        self.domains.get(id)
    }

    pub fn device(&self, id: &str) -> Option<&Device> {
        self.devices.get(id)
    }

    pub fn port(&self, key: &PortKey) -> Option<&Port> {
        self.ports.get(key)
    }

    pub fn link(&self, id: &str) -> Option<&Link> {
        self.links.get(id)
    }

    pub fn device_ports<'a>(&'a self, device: &'a str) -> impl Iterator<Item = &'a Port> + 'a {
        self.ports
            .range(PortKey::new(device, 0)..=PortKey::new(device, u32::MAX))
            .map(|(_, p)| p)
    }

    /// Links touching `device`, in link-id order.
    pub fn device_links<'a>(&'a self, device: &'a str) -> impl Iterator<Item = &'a Link> + 'a {
        self.links
            .values()
            .filter(move |l| l.src.element_id == device || l.dst.element_id == device)
    }

    pub fn links_at_port<'a>(&'a self, key: &'a PortKey) -> impl Iterator<Item = &'a Link> + 'a {
        let cp = key.connect_point();
        self.links.values().filter(move |l| l.src == cp || l.dst == cp)
    }

    pub fn upsert_domain(&mut self, domain: Domain) -> Result<Upsert, IntegrityError> {
        if domain.id.is_empty() {
            return Err(IntegrityError::Invalid("domain id is empty".into()));
        }
        if domain.controller_endpoint.is_empty() {
            return Err(IntegrityError::Invalid(format!(
                "domain `{}` has no controller endpoint",
                domain.id
            )));
        }
        Ok(upsert_into(&mut self.domains, domain.id.clone(), domain))
    }

    pub fn upsert_device(&mut self, device: Device) -> Result<Upsert, IntegrityError> {
        if device.id.is_empty() {
            return Err(IntegrityError::Invalid("device id is empty".into()));
        }
        match &device.domain_id {
            Some(d) if !self.domains.contains_key(d) => {
                return Err(IntegrityError::UnknownDomain(d.clone()))
            }
            None if device.kind == DeviceKind::Roadm => {
                return Err(IntegrityError::Invalid(format!(
                    "roadm `{}` must belong to a domain",
                    device.id
                )))
            }
            _ => {}
        }
        if self.devices.get(&device.id).is_some_and(|old| old.kind != device.kind) {
            for p in self.device_ports(&device.id) {
                if let Some(layer) = p.encryption_capability {
                    if device.kind.native_capability() != Some(layer) {
                        return Err(IntegrityError::CapabilityMismatch {
                            port: p.key().to_string(),
                            kind: device.kind.to_string(),
                            layer,
                        });
                    }
                }
            }
        }
        let r = upsert_into(&mut self.devices, device.id.clone(), device);
        self.invalidate(r);
        Ok(r)
    }

    pub fn upsert_port(&mut self, port: Port) -> Result<Upsert, IntegrityError> {
        let device = self
            .devices
            .get(&port.device_id)
            .ok_or_else(|| IntegrityError::UnknownDevice(port.device_id.clone()))?;
        if port.capacity == 0 {
            return Err(IntegrityError::Invalid(format!("port {} has zero capacity", port.key())));
        }
        if let Some(layer) = port.encryption_capability {
            if device.kind.native_capability() != Some(layer) {
                return Err(IntegrityError::CapabilityMismatch {
                    port: port.key().to_string(),
                    kind: device.kind.to_string(),
                    layer,
                });
            }
        }
        let r = upsert_into(&mut self.ports, port.key(), port);
        self.invalidate(r);
        Ok(r)
    }

    /// Inserts or updates a link. The residual capacity is owned by the
    /// reservation ledger: the incoming value is ignored and recomputed.
    pub fn upsert_link(&mut self, mut link: Link) -> Result<Upsert, IntegrityError> {
        if link.id.is_empty() {
            return Err(IntegrityError::Invalid("link id is empty".into()));
        }
        if link.capacity == 0 {
            return Err(IntegrityError::Invalid(format!("link `{}` has zero capacity", link.id)));
        }
        for cp in [&link.src, &link.dst] {
            if !self.devices.contains_key(&cp.element_id) {
                return Err(IntegrityError::UnknownDevice(cp.element_id.clone()));
            }
            let key = PortKey::from_connect_point(cp)
                .ok_or_else(|| IntegrityError::UnknownPort(cp.to_string()))?;
            if !self.ports.contains_key(&key) {
                return Err(IntegrityError::UnknownPort(cp.to_string()));
            }
        }
        if link.src == link.dst {
            return Err(IntegrityError::Invalid(format!("link `{}` is a self-loop", link.id)));
        }
        let reserved = self.reserved_on(&link.id);
        if reserved > link.capacity {
            return Err(IntegrityError::Invalid(format!(
                "link `{}` capacity {} below reserved {}",
                link.id, link.capacity, reserved
            )));
        }
        link.residual_capacity = link.capacity - reserved;
        let r = match self.links.get(&link.id) {
            Some(old) if old.same_static(&link) => Upsert::Unchanged,
            Some(_) => Upsert::Updated,
            None => Upsert::Inserted,
        };
        if r.mutated() {
            self.links.insert(link.id.clone(), link);
        }
        self.invalidate(r);
        Ok(r)
    }

    fn invalidate(&mut self, change: Upsert) {
        if change.mutated() {
            self.offered.0.get_mut().unwrap().clear();
        }
    }

    fn reserved_on(&self, link: &str) -> u64 {
        self.reservations
            .values()
            .filter(|r| r.links.iter().any(|l| l == link))
            .map(|r| r.amount)
            .sum()
    }

    /// Reserves `amount` on every link of `path`, all or nothing.
    pub fn reserve_bandwidth(
        &mut self,
        path: &[String],
        amount: u64,
    ) -> Result<ReservationId, ReservationError> {
        let unique: BTreeSet<&String> = path.iter().collect();
        for id in &unique {
            let link = self
                .links
                .get(id.as_str())
                .ok_or_else(|| ReservationError::UnknownLink((*id).clone()))?;
            if link.residual_capacity < amount {
                return Err(ReservationError::Insufficient {
                    link: link.id.clone(),
                    residual: link.residual_capacity,
                    requested: amount,
                });
            }
        }
        for id in &unique {
            let link = self.links.get_mut(id.as_str()).expect("checked above");
            link.residual_capacity -= amount;
        }
        let id = self.next_reservation.max(1);
        self.next_reservation = id + 1;
        self.reservations.insert(
            id,
            Reservation { id, links: unique.into_iter().cloned().collect(), amount },
        );
        Ok(id)
    }

    pub fn release(&mut self, id: ReservationId) -> Result<(), ReservationError> {
        let r = self
            .reservations
            .remove(&id)
            .ok_or(ReservationError::UnknownReservation(id))?;
        for l in &r.links {
            if let Some(link) = self.links.get_mut(l) {
                link.residual_capacity += r.amount;
            }
        }
        Ok(())
    }

    pub fn reservation(&self, id: ReservationId) -> Option<&Reservation> {
        self.reservations.get(&id)
    }

    /// Checks referential closure and the capacity ledger. Returns every
    /// violation found.
    pub fn check_integrity(&self) -> Vec<String> {
        let mut problems = Vec::new();
        for d in self.devices.values() {
            if let Some(dom) = &d.domain_id {
                if !self.domains.contains_key(dom) {
                    problems.push(format!("device {} references unknown domain {dom}", d.id));
                }
            } else if d.kind == DeviceKind::Roadm {
                problems.push(format!("roadm {} has no domain", d.id));
            }
        }
        for p in self.ports.values() {
            match self.devices.get(&p.device_id) {
                None => problems.push(format!("port {} on unknown device", p.key())),
                Some(d) => {
                    if let Some(l) = p.encryption_capability {
                        if d.kind.native_capability() != Some(l) {
                            problems.push(format!("port {} capability {l} on {}", p.key(), d.kind));
                        }
                    }
                }
            }
        }
        for l in self.links.values() {
            for cp in [&l.src, &l.dst] {
                let ok = PortKey::from_connect_point(cp).is_some_and(|k| self.ports.contains_key(&k));
                if !ok {
                    problems.push(format!("link {} endpoint {cp} not stored", l.id));
                }
            }
            let reserved = self.reserved_on(&l.id);
            if reserved > l.capacity {
                problems.push(format!("link {} over-reserved: {reserved} > {}", l.id, l.capacity));
            } else if l.residual_capacity != l.capacity - reserved {
                problems.push(format!(
                    "link {} residual {} != capacity {} - reserved {reserved}",
                    l.id, l.residual_capacity, l.capacity
                ));
            }
        }
        problems
    }

    fn port_usable(&self, key: &PortKey) -> bool {
        self.links_at_port(key).all(|l| l.residual_capacity > 0)
    }

    /// Port pairs able to terminate an encrypted segment at `layer` between
    /// the two regions. Pairs are unordered and returned lowest key first.
    pub fn encryption_capable_pairs(
        &self,
        layer: EncryptionLayer,
        src_region: &str,
        dst_region: &str,
    ) -> Vec<(Port, Port)> {
        let g = PortGraph::new(self);
        let (src, dst) = (g.region_reach(src_region), g.region_reach(dst_region));
        self.capable_pairs(&g, layer, &src, &dst)
    }

    fn capable_pairs(&self, g: &PortGraph<'_>, layer: EncryptionLayer, src: &[bool], dst: &[bool]) -> Vec<(Port, Port)> {
        if layer == EncryptionLayer::None {
            return Vec::new();
        }
        // port indices follow the key order of `self.ports`
        let capable: Vec<(usize, &Port)> = self
            .ports
            .values()
            .enumerate()
            .filter(|(_, p)| p.encryption_capability == Some(layer) && self.port_usable(&p.key()))
            .collect();
        let mut pairs = Vec::new();
        for (i, (na, a)) in capable.iter().enumerate() {
            let mut reach = None;
            for (nb, b) in &capable[i + 1..] {
                let forward = src[*na] && dst[*nb];
                let backward = src[*nb] && dst[*na];
                if a.device_id == b.device_id || !(forward || backward) {
                    continue;
                }
                if reach.get_or_insert_with(|| g.reach([*na]))[*nb] {
                    pairs.push(((*a).clone(), (*b).clone()));
                }
            }
        }
        pairs
    }

    /// Layers for which at least one capable pair exists between the regions.
    pub fn available_layers(&self, src_region: &str, dst_region: &str) -> BTreeSet<EncryptionLayer> {
        let full = self.links.values().filter(|l| l.residual_capacity == 0).map(|l| l.id.clone()).collect();
        let key = (src_region.to_string(), dst_region.to_string(), full);
        if let Some(hit) = self.offered.0.lock().unwrap().get(&key) {
            return hit.clone();
        }
        let layers = self.compute_available_layers(src_region, dst_region);
        self.offered.0.lock().unwrap().insert(key, layers.clone());
        layers
    }

    fn compute_available_layers(&self, src_region: &str, dst_region: &str) -> BTreeSet<EncryptionLayer> {
        let g = PortGraph::new(self);
        let (src, dst) = (g.region_reach(src_region), g.region_reach(dst_region));
        EncryptionLayer::ENCRYPTING
            .into_iter()
            .filter(|l| !self.capable_pairs(&g, *l, &src, &dst).is_empty())
            .collect()
    }

    /// Subset of this topology managed by `domain`: its devices, their ports
    /// and the links between them.
    pub fn domain_slice(&self, domain: &str) -> Topology {
        let mut slice = Topology::new();
        if let Some(d) = self.domains.get(domain) {
            slice.domains.insert(d.id.clone(), d.clone());
        }
        for d in self.devices.values().filter(|d| d.domain_id.as_deref() == Some(domain)) {
            slice.devices.insert(d.id.clone(), d.clone());
            for p in self.device_ports(&d.id) {
                slice.ports.insert(p.key(), p.clone());
            }
        }
        for l in self.links.values() {
            if slice.devices.contains_key(&l.src.element_id) && slice.devices.contains_key(&l.dst.element_id) {
                let mut l = l.clone();
                l.residual_capacity = l.capacity;
                slice.links.insert(l.id.clone(), l);
            }
        }
        slice
    }

    pub fn to_document(&self) -> TopologyDocument {
        TopologyDocument {
            format: FORMAT_NAME.into(),
            version: FORMAT_VERSION,
            domains: self.domains.values().cloned().collect(),
            devices: self.devices.values().cloned().collect(),
            ports: self.ports.values().cloned().collect(),
            links: self.links.values().cloned().collect(),
            reservations: self.reservations.values().cloned().collect(),
            next_reservation: self.next_reservation,
        }
    }

    pub fn from_document(doc: TopologyDocument) -> Result<Self, FormatError> {
        if doc.version != FORMAT_VERSION {
            return Err(FormatError::Version { found: doc.version, expected: FORMAT_VERSION });
        }
        if doc.format != FORMAT_NAME {
            return Err(FormatError::Syntax(format!("unexpected format name `{}`", doc.format)));
        }
        let mut t = Topology::new();
        for d in doc.domains {
            t.upsert_domain(d)?;
        }
        for d in doc.devices {
            t.upsert_device(d)?;
        }
        for p in doc.ports {
            t.upsert_port(p)?;
        }
        let mut stored_residuals = Vec::new();
        for l in doc.links {
            stored_residuals.push((l.id.clone(), l.residual_capacity));
            t.upsert_link(l)?;
        }
        for r in doc.reservations {
            for l in &r.links {
                let link = t
                    .links
                    .get_mut(l)
                    .ok_or_else(|| IntegrityError::Invalid(format!("reservation {} on unknown link {l}", r.id)))?;
                link.residual_capacity = link.residual_capacity.checked_sub(r.amount).ok_or_else(|| {
                    IntegrityError::Invalid(format!("reservation {} overbooks link {l}", r.id))
                })?;
            }
            t.reservations.insert(r.id, r);
        }
        for (id, residual) in stored_residuals {
            if t.links[&id].residual_capacity != residual {
                return Err(FormatError::Syntax(format!(
                    "link {id} residual {residual} disagrees with reservations"
                )));
            }
        }
        t.next_reservation = doc.next_reservation.max(t.reservations.keys().max().map_or(1, |m| m + 1));
        Ok(t)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("topology serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, FormatError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| FormatError::Syntax(e.to_string()))?;
        match value.get("version").and_then(serde_json::Value::as_u64) {
            Some(v) if v != u64::from(FORMAT_VERSION) => {
                return Err(FormatError::Version { found: v as u32, expected: FORMAT_VERSION })
            }
            None => return Err(FormatError::Syntax("missing `version`".into())),
            _ => {}
        }
        let doc: TopologyDocument =
            serde_json::from_value(value).map_err(|e| FormatError::Syntax(e.to_string()))?;
        Self::from_document(doc)
    }

    pub fn snapshot(&self, path: impl AsRef<Path>) -> Result<(), FormatError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FormatError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn upsert_into<K: Ord, V: PartialEq>(map: &mut BTreeMap<K, V>, key: K, value: V) -> Upsert {
    match map.get(&key) {
        Some(old) if *old == value => Upsert::Unchanged,
        Some(_) => {
            map.insert(key, value);
            Upsert::Updated
        }
        None => {
            map.insert(key, value);
            Upsert::Inserted
        }
    }
}

pub const FORMAT_NAME: &str = "mlso-topology";
pub const FORMAT_VERSION: u32 = 1;

/// On-disk snapshot document (JSON). Field names are stable; `format` and
/// `version` are checked on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyDocument {
    pub format: String,
    pub version: u32,
    pub domains: Vec<Domain>,
    pub devices: Vec<Device>,
    pub ports: Vec<Port>,
    pub links: Vec<Link>,
    #[serde(default)]
    pub reservations: Vec<Reservation>,
    #[serde(default)]
    pub next_reservation: ReservationId,
}
