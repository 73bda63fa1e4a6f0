mod support;

use std::collections::BTreeSet;

use mlso_core::model::EncryptionLayer;
use mlso_core::testbed::default_testbed;
use mlso_core::topology::PortKey;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::pairs_oracle;
use support::random_topology::generate;

#[test]
fn capable_pairs_match_closure_oracle() {
    let mut non_empty = 0;
    for seed in 0..200 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = generate(&mut rng, 8);
        let t = &g.topology;
        for a in &g.devices {
            for b in &g.devices {
                let mut offered = BTreeSet::new();
                for layer in EncryptionLayer::ALL {
                    let got: Vec<(PortKey, PortKey)> =
                        t.encryption_capable_pairs(layer, a, b).iter().map(|(x, y)| (x.key(), y.key())).collect();
                    let want = pairs_oracle::pairs(t, layer, a, b);
                    assert_eq!(got, want, "seed {seed}, {a} -> {b} at {layer}");
                    if !want.is_empty() {
                        offered.insert(layer);
                        non_empty += 1;
                    }
                }
                assert_eq!(t.available_layers(a, b), offered, "seed {seed}, {a} -> {b}");
            }
        }
    }
    assert!(non_empty > 100, "{non_empty}");
}

#[test]
fn testbed_offers_physical_and_macsec_between_hosts() {
    let t = default_testbed();
    let hosts: Vec<String> = t.devices().filter(|d| d.kind == mlso_core::topology::DeviceKind::Host).map(|d| d.id.clone()).collect();
    let (a, b) = (&hosts[0], &hosts[hosts.len() - 1]);
    let want: BTreeSet<EncryptionLayer> = EncryptionLayer::ALL
        .into_iter()
        .filter(|l| !pairs_oracle::pairs(&t, *l, a, b).is_empty())
        .collect();
    assert_eq!(t.available_layers(a, b), want);
    assert!(want.contains(&EncryptionLayer::Physical) && want.contains(&EncryptionLayer::Macsec), "{want:?}");
}
