use std::process::Command;

use mlso::harness::{read_csv, TrialOutcome};

#[test]
fn harness_writes_one_row_per_trial_and_leaves_no_services() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results.csv");
    let o = Command::new(env!("CARGO_BIN_EXE_harness"))
        .args(["run", "--scenario", "encrypted_wdm", "--trials", "4", "--time-scale", "2000", "--jitter", "0.05", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    // exits non-zero if services remain on the controller
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next(), Some("trial,compile_ms,install_s,delete_s,outcome"));
    let rows = read_csv(&text).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.outcome == TrialOutcome::Ok));
    for r in &rows {
        // 28.4 s with 5% jitter, plus loopback overhead at 1/2000
        let install = r.install_s.unwrap();
        assert!((26.9..33.0).contains(&install), "{r:?}");
    }
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["completed"], 4);
}
