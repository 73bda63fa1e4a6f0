//! The default lab topology: a three-node ROADM ring managed by one optical
//! domain controller, two AES-capable 10G client ports, two 100G muxponder
//! client ports, two directly connected MACsec demarcation devices and two
//! hosts each behind a virtual switch.
//!
//! ```text
//!                       +--- xg210-1 ===== xg210-2 ---+
//!                       |     (MACsec line ports)     |
//!   host1 --- ovs-1 ----+                             +---- ovs-2 --- host2
//!                       |  AES /1    ring    AES /1   |
//!                       +-- roadm-A ---- roadm-B -----+
//!                       |   mux /2    \  /   mux /2   |
//!                       +----------- roadm-C ---------+
//! ```

use crate::model::{EncryptionLayer, GBPS};
use crate::topology::{Device, DeviceKind, Domain, DomainTechnology, Link, LinkLayer, Port, PortKey, Topology};

pub const HOST1: &str = "7E:1D:D7:77:7E:06";
pub const HOST2: &str = "CA:B8:53:D4:2A:84";
pub const OVS1: &str = "ovs-1";
pub const OVS2: &str = "ovs-2";
pub const ROADM_A: &str = "roadm-A";
pub const ROADM_B: &str = "roadm-B";
pub const ROADM_C: &str = "roadm-C";
pub const MACSEC1: &str = "xg210-1";
pub const MACSEC2: &str = "xg210-2";
pub const OPTICAL_DOMAIN: &str = "optical-1";

/// Placeholder until bootstrap knows where the simulated controller listens.
pub const UNBOUND_CONTROLLER: &str = "http://127.0.0.1:0";

pub const AES_PORT: u32 = 1;
pub const MUX_PORT: u32 = 2;
pub const RING_EAST: u32 = 101;
pub const RING_WEST: u32 = 102;

/// Patch-cord latency inside the lab, microseconds.
pub const PATCH_LATENCY_US: u64 = 1;
/// Ring span latency (about 1 km of fibre), microseconds.
pub const SPAN_LATENCY_US: u64 = 5;

pub fn aes_port_a() -> PortKey {
    PortKey::new(ROADM_A, AES_PORT)
}

pub fn aes_port_b() -> PortKey {
    PortKey::new(ROADM_B, AES_PORT)
}

pub fn default_testbed() -> Topology {
    build(UNBOUND_CONTROLLER, true)
}

/// Everything except the optical slice; the optical nodes are expected to
/// arrive through discovery from the domain controller.
pub fn packet_slice(controller_endpoint: &str) -> Topology {
    build(controller_endpoint, false)
}

fn build(controller_endpoint: &str, with_optical: bool) -> Topology {
    let mut t = Topology::new();
    let ok = "default testbed is consistent";
    t.upsert_domain(Domain {
        id: OPTICAL_DOMAIN.into(),
        controller_endpoint: controller_endpoint.into(),
        technology: DomainTechnology::OpticalTapi,
    })
    .expect(ok);

    for (id, kind) in [
        (HOST1, DeviceKind::Host),
        (HOST2, DeviceKind::Host),
        (OVS1, DeviceKind::VirtualSwitch),
        (OVS2, DeviceKind::VirtualSwitch),
        (MACSEC1, DeviceKind::EthernetDemarcation),
        (MACSEC2, DeviceKind::EthernetDemarcation),
    ] {
        t.upsert_device(Device::new(id, kind)).expect(ok);
    }
    for host in [HOST1, HOST2] {
        t.upsert_port(Port::new(host, 1, 100 * GBPS)).expect(ok);
    }
    for ovs in [OVS1, OVS2] {
        t.upsert_port(Port::new(ovs, 1, 100 * GBPS)).expect(ok);
        t.upsert_port(Port::new(ovs, 2, 10 * GBPS)).expect(ok);
        t.upsert_port(Port::new(ovs, 3, 10 * GBPS)).expect(ok);
        t.upsert_port(Port::new(ovs, 4, 100 * GBPS)).expect(ok);
    }
    for xg in [MACSEC1, MACSEC2] {
        t.upsert_port(Port::new(xg, 1, 10 * GBPS).annotate("role", "client")).expect(ok);
        t.upsert_port(
            Port::new(xg, 2, 10 * GBPS)
                .capable(EncryptionLayer::Macsec)
                .annotate("role", "line")
                .annotate("key-mechanism", "pre_shared_key"),
        )
        .expect(ok);
    }

    if with_optical {
        add_optical_slice(&mut t);
    }

    let patch = |id: &str, a: PortKey, b: PortKey, cap: u64| {
        Link::new(id, a, b, LinkLayer::L2Ethernet, PATCH_LATENCY_US, cap)
    };
    let mut links = vec![
        patch("h1-ovs1", PortKey::new(HOST1, 1), PortKey::new(OVS1, 1), 100 * GBPS),
        patch("h2-ovs2", PortKey::new(HOST2, 1), PortKey::new(OVS2, 1), 100 * GBPS),
        patch("ovs1-xg1", PortKey::new(OVS1, 2), PortKey::new(MACSEC1, 1), 10 * GBPS),
        patch("ovs2-xg2", PortKey::new(OVS2, 2), PortKey::new(MACSEC2, 1), 10 * GBPS),
        patch("xg1-xg2", PortKey::new(MACSEC1, 2), PortKey::new(MACSEC2, 2), 10 * GBPS),
    ];
    if with_optical {
        links.extend([
            patch("ovs1-aesA", PortKey::new(OVS1, 3), aes_port_a(), 10 * GBPS),
            patch("ovs2-aesB", PortKey::new(OVS2, 3), aes_port_b(), 10 * GBPS),
            patch("ovs1-muxA", PortKey::new(OVS1, 4), PortKey::new(ROADM_A, MUX_PORT), 100 * GBPS),
            patch("ovs2-muxB", PortKey::new(OVS2, 4), PortKey::new(ROADM_B, MUX_PORT), 100 * GBPS),
        ]);
    }
    for l in links {
        t.upsert_link(l).expect(ok);
    }
    t
}

/// Client-side links between the switches and the optical domain. Added by
/// bootstrap once discovery has produced the ROADM ports.
pub fn attachment_links() -> Vec<Link> {
    let patch = |id: &str, a: PortKey, b: PortKey, cap: u64| {
        Link::new(id, a, b, LinkLayer::L2Ethernet, PATCH_LATENCY_US, cap)
    };
    vec![
        patch("ovs1-aesA", PortKey::new(OVS1, 3), aes_port_a(), 10 * GBPS),
        patch("ovs2-aesB", PortKey::new(OVS2, 3), aes_port_b(), 10 * GBPS),
        patch("ovs1-muxA", PortKey::new(OVS1, 4), PortKey::new(ROADM_A, MUX_PORT), 100 * GBPS),
        patch("ovs2-muxB", PortKey::new(OVS2, 4), PortKey::new(ROADM_B, MUX_PORT), 100 * GBPS),
    ]
}

fn add_optical_slice(t: &mut Topology) {
    let ok = "optical slice is consistent";
    for r in [ROADM_A, ROADM_B, ROADM_C] {
        t.upsert_device(Device::new(r, DeviceKind::Roadm).in_domain(OPTICAL_DOMAIN)).expect(ok);
        t.upsert_port(Port::new(r, RING_EAST, 400 * GBPS).annotate("role", "line")).expect(ok);
        t.upsert_port(Port::new(r, RING_WEST, 400 * GBPS).annotate("role", "line")).expect(ok);
    }
    for r in [ROADM_A, ROADM_B] {
        t.upsert_port(
            Port::new(r, AES_PORT, 10 * GBPS)
                .capable(EncryptionLayer::Physical)
                .annotate("card", "10G-AES")
                .annotate("detection", "direct"),
        )
        .expect(ok);
        t.upsert_port(
            Port::new(r, MUX_PORT, 100 * GBPS)
                .annotate("card", "100G-MUX")
                .annotate("detection", "coherent"),
        )
        .expect(ok);
    }
    let span = |id: &str, a: &str, b: &str| {
        Link::new(
            id,
            PortKey::new(a, RING_EAST),
            PortKey::new(b, RING_WEST),
            LinkLayer::L1Optical,
            SPAN_LATENCY_US,
            400 * GBPS,
        )
    };
    for l in [
        span("ring-AB", ROADM_A, ROADM_B),
        span("ring-BC", ROADM_B, ROADM_C),
        span("ring-CA", ROADM_C, ROADM_A),
    ] {
        t.upsert_link(l).expect(ok);
    }
}
