//! Filter-then-rank oracle for encryption layer selection.

use std::collections::BTreeSet;

use mlso_core::compiler::SelectionPolicy;
use mlso_core::model::EncryptionLayer;

pub fn rank(layer: EncryptionLayer) -> u8 {
    match layer {
        EncryptionLayer::Physical => 0,
        EncryptionLayer::Macsec => 1,
        EncryptionLayer::Ipsec => 2,
        EncryptionLayer::None => 3,
    }
}

pub fn expected(
    bandwidth: u64,
    max_latency: Option<u64>,
    available: &BTreeSet<EncryptionLayer>,
    policy: &SelectionPolicy,
) -> Option<EncryptionLayer> {
    let forced = max_latency.is_some_and(|l| l < policy.macsec_hop_penalty_us * policy.macsec_budget_devices);
    let admissible = |l: &EncryptionLayer| -> bool {
        let fits = bandwidth <= policy.max_payload(*l);
        let offered = available.contains(l);
        match l {
            EncryptionLayer::Physical => offered && fits && (forced || bandwidth >= policy.physical_threshold),
            EncryptionLayer::Macsec => offered && fits && !forced,
            EncryptionLayer::Ipsec => policy.allow_ipsec && offered && fits && !forced,
            EncryptionLayer::None => false,
        }
    };
    EncryptionLayer::ALL.into_iter().filter(admissible).min_by_key(|l| rank(*l))
}

/// 25 log-spaced rates from 1 Mb/s to 100 Gb/s, plus the exact decade
/// boundaries where the rules switch.
pub fn bandwidth_grid() -> Vec<u64> {
    let mut v: Vec<u64> = (0..25).map(|i| (1e6 * 10f64.powf(5.0 * i as f64 / 24.0)).round() as u64).collect();
    v.extend([1_000_000_000, 999_999_999, 10_000_000_000, 10_000_000_001, 100_000_000_000, 100_000_000_001]);
    v.sort_unstable();
    v.dedup();
    v
}

pub fn availability_subsets() -> Vec<BTreeSet<EncryptionLayer>> {
    (0u8..8)
        .map(|mask| {
            EncryptionLayer::ENCRYPTING
                .into_iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, l)| l)
                .collect()
        })
        .collect()
}
