mod support;

use mlso_core::compiler::{evaluate_layers, SelectionPolicy};
use support::select_oracle::{availability_subsets, bandwidth_grid, expected};

#[test]
fn selection_matches_filter_then_rank_oracle() {
    let mut cases = 0;
    for allow_ipsec in [false, true] {
        let policy = SelectionPolicy { allow_ipsec, ..SelectionPolicy::default() };
        for available in availability_subsets() {
            for &bw in &bandwidth_grid() {
                for latency in [None, Some(1), Some(9), Some(10), Some(1000)] {
                    let got = evaluate_layers(bw, latency, &available, &policy);
                    assert_eq!(
                        got.chosen,
                        expected(bw, latency, &available, &policy),
                        "bw {bw}, latency {latency:?}, available {available:?}, ipsec {allow_ipsec}"
                    );
                    assert_eq!(got.verdicts.len(), 3);
                    assert_eq!(got.verdicts.iter().filter(|v| v.accepted).count(), usize::from(got.chosen.is_some()));
                    cases += 1;
                }
            }
        }
    }
    assert!(cases >= 25 * 8 * 2);
}

#[test]
fn grid_shape() {
    let g = bandwidth_grid();
    assert_eq!(g.first(), Some(&1_000_000));
    assert!(g.contains(&100_000_000_000));
    assert!(g.len() >= 25);
    assert_eq!(availability_subsets().len(), 8);
}
