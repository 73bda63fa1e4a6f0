mod support;

#[test]
fn randomized_interleavings_stay_legal_and_conserve_capacity() {
    let (mut installed, mut failed, mut withdrawn) = (0, 0, 0);
    for seed in 0..1000 {
        let s = support::interleave::run(seed, 40).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        installed += s.installed;
        failed += s.failed;
        withdrawn += s.withdrawn;
    }
    // every terminal kind must actually occur
    assert!(installed > 100 && failed > 100 && withdrawn > 100, "{installed} {failed} {withdrawn}");
}
