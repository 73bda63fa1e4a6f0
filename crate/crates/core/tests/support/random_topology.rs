//! Small random multilayer topologies.

use mlso_core::model::{ConnectPoint, EncryptionLayer, GBPS};
use mlso_core::topology::{Device, DeviceKind, Domain, DomainTechnology, Link, LinkLayer, Port, PortKey, Topology};
use rand::seq::SliceRandom;
use rand::Rng;

pub const KINDS: [DeviceKind; 5] = [
    DeviceKind::Roadm,
    DeviceKind::EthernetDemarcation,
    DeviceKind::Router,
    DeviceKind::VirtualSwitch,
    DeviceKind::Host,
];

pub struct Generated {
    pub topology: Topology,
    pub devices: Vec<String>,
}

/// Up to `max_nodes` devices, random kinds, n-1..=3n links with fresh ports
/// on both ends, some of them capable of the device's native layer, and a
/// few random reservations eating into residual capacity.
pub fn generate(rng: &mut impl Rng, max_nodes: usize) -> Generated {
    let mut t = Topology::new();
    t.upsert_domain(Domain {
        id: "dom".into(),
        controller_endpoint: "http://127.0.0.1:0".into(),
        technology: DomainTechnology::OpticalTapi,
    })
    .unwrap();
    let n = rng.gen_range(2..=max_nodes);
    let mut devices = Vec::new();
    for i in 0..n {
        // hosts only terminate paths, keep them rare
        let kind = *KINDS.choose_weighted(rng, |k| if *k == DeviceKind::Host { 1 } else { 3 }).unwrap();
        let id = format!("d{i}");
        let mut d = Device::new(id.clone(), kind);
        if kind == DeviceKind::Roadm {
            d = d.in_domain("dom");
        }
        t.upsert_device(d).unwrap();
        devices.push((id, kind));
    }
    let mut next_port = vec![1u32; n];
    let mut new_port = |t: &mut Topology, rng: &mut dyn rand::RngCore, i: usize| {
        let (id, kind) = &devices[i];
        let no = next_port[i];
        next_port[i] += 1;
        let mut p = Port::new(id.clone(), no, 100 * GBPS);
        if let Some(layer) = kind.native_capability() {
            if rng.gen_bool(0.3) {
                p = p.capable(layer);
            }
        }
        t.upsert_port(p).unwrap();
        PortKey::new(id.clone(), no)
    };
    let links = rng.gen_range(n - 1..=3 * n);
    for l in 0..links {
        let a = rng.gen_range(0..n);
        let mut b = rng.gen_range(0..n);
        while b == a {
            b = rng.gen_range(0..n);
        }
        let pa = new_port(&mut t, rng, a);
        let pb = new_port(&mut t, rng, b);
        let cap = *[GBPS, 10 * GBPS, 100 * GBPS].choose(rng).unwrap();
        let latency = rng.gen_range(1..=20);
        t.upsert_link(Link::new(format!("l{l:02}"), pa, pb, LinkLayer::L2Ethernet, latency, cap)).unwrap();
    }
    let ids: Vec<String> = t.links().map(|l| l.id.clone()).collect();
    for _ in 0..rng.gen_range(0..3) {
        if ids.is_empty() {
            break;
        }
        let k = rng.gen_range(1..=ids.len().min(3));
        let chosen: Vec<String> = ids.choose_multiple(rng, k).cloned().collect();
        let _ = t.reserve_bandwidth(&chosen, rng.gen_range(1..=10) * GBPS);
    }
    Generated { topology: t, devices: devices.into_iter().map(|(id, _)| id).collect() }
}

/// Random endpoint on `device`: either a wildcard or one of its ports.
pub fn endpoint(rng: &mut impl Rng, t: &Topology, device: &str) -> ConnectPoint {
    let ports: Vec<u32> = t.device_ports(device).map(|p| p.port_no).collect();
    if ports.is_empty() || rng.gen_bool(0.85) {
        ConnectPoint { element_id: device.to_string(), port: -1 }
    } else {
        ConnectPoint { element_id: device.to_string(), port: i64::from(*ports.choose(rng).unwrap()) }
    }
}

/// Unencrypted 40% of the time, otherwise a layer some port offers.
pub fn random_layer(rng: &mut impl Rng, t: &Topology) -> EncryptionLayer {
    let offered: Vec<EncryptionLayer> = t.ports().filter_map(|p| p.encryption_capability).collect();
    if offered.is_empty() || rng.gen_bool(0.4) {
        *EncryptionLayer::ALL.choose(rng).unwrap()
    } else {
        *offered.choose(rng).unwrap()
    }
}
