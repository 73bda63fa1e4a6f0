//! Provisioning-time experiment: submit, wait for INSTALLED, withdraw, wait
//! for WITHDRAWN, repeated per scenario.

use std::io::Write;
use std::path::Path;
use std::time::Duration;

use mlso_core::compiler::IntentId;
use mlso_core::lifecycle::{IntentRecord, IntentState};
use mlso_core::model::{parse_intent_request, Constraint, IntentRequest, GBPS, SAMPLE_INTENT};
use mlso_core::stats::{summarize, SummaryStats};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::client::{ClientError, NbiClient};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Sample intent at 10 Mb/s, carried over the MACsec pair.
    Macsec,
    #[value(name = "encrypted_wdm")]
    /// Encrypted at 10 Gb/s, carried by the optical AES cards.
    EncryptedWdm,
    #[value(name = "unencrypted_wdm")]
    /// No encryption constraint at 100 Gb/s, carried by the mux ports.
    UnencryptedWdm,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Macsec, Scenario::EncryptedWdm, Scenario::UnencryptedWdm];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Macsec => "macsec",
            Scenario::EncryptedWdm => "encrypted_wdm",
            Scenario::UnencryptedWdm => "unencrypted_wdm",
        }
    }

    pub fn request(self) -> IntentRequest {
        let mut r = parse_intent_request(SAMPLE_INTENT).expect("sample intent parses");
        let set_bandwidth = |r: &mut IntentRequest, bps: u64| {
            for c in &mut r.constraints {
                if let Constraint::Bandwidth { bandwidth } = c {
                    *bandwidth = bps;
                }
            }
        };
        match self {
            Scenario::Macsec => {}
            Scenario::EncryptedWdm => set_bandwidth(&mut r, 10 * GBPS),
            Scenario::UnencryptedWdm => {
                r.constraints.retain(|c| !matches!(c, Constraint::Encryption));
                set_bandwidth(&mut r, 100 * GBPS);
            }
        }
        r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub trials: usize,
    /// Divisor between equipment time and wall time on the server side.
    pub time_scale: f64,
    /// Longest wait for one state change, wall time.
    pub step_timeout: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialOutcome {
    Ok,
    Failed,
}

/// One row of the CSV. Durations are in equipment time: compile time is
/// unscaled processing time, install and delete are wall time multiplied
/// by the time scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub compile_ms: Option<f64>,
    pub install_s: Option<f64>,
    pub delete_s: Option<f64>,
    pub outcome: TrialOutcome,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Client(#[from] ClientError),
    #[error("cannot write results: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot write results: {0}")]
    Csv(#[from] csv::Error),
    #[error("trials must be >= 1")]
    NoTrials,
}

pub async fn run_trial(client: &NbiClient, cfg: &ExperimentConfig, trial: usize) -> Result<TrialRecord, ClientError> {
    let body = cfg.scenario.request().to_json();
    let submitted = client.submit(&body).await?;
    let installed = client.wait(submitted.id, IntentState::Installed, cfg.step_timeout).await?;
    let compile_ms = installed.compile_duration_us().map(|us| us as f64 / 1e3);
    if installed.state != IntentState::Installed {
        tracing::warn!("trial {trial}: intent {} ended {}: {:?}", submitted.id, installed.state, installed.failure_reason);
        return Ok(TrialRecord { trial, compile_ms, install_s: None, delete_s: None, outcome: TrialOutcome::Failed });
    }
    let withdrawn = withdraw_and_wait(client, submitted.id, cfg.step_timeout).await?;
    let scaled = |us: Option<u64>| us.map(|us| us as f64 / 1e6 * cfg.time_scale);
    let ok = withdrawn.state == IntentState::Withdrawn && withdrawn.warnings.is_empty();
    Ok(TrialRecord {
        trial,
        compile_ms,
        install_s: scaled(installed.install_duration_us()),
        delete_s: if ok { scaled(withdrawn.withdraw_duration_us()) } else { None },
        outcome: if ok { TrialOutcome::Ok } else { TrialOutcome::Failed },
    })
}

async fn withdraw_and_wait(client: &NbiClient, id: IntentId, timeout: Duration) -> Result<IntentRecord, ClientError> {
    client.withdraw(&id.to_string()).await?;
    client.wait(id, IntentState::Withdrawn, timeout).await
}

/// Runs the trials one after another.
pub async fn run(client: &NbiClient, cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>, HarnessError> {
    if cfg.trials == 0 {
        return Err(HarnessError::NoTrials);
    }
    let mut out = Vec::with_capacity(cfg.trials);
    for trial in 1..=cfg.trials {
        out.push(run_trial(client, cfg, trial).await?);
    }
    Ok(out)
}

/// Runs up to `parallel` trials at a time. Not used for the reference
/// numbers: concurrent services compete for the same ports.
pub async fn run_parallel(client: &NbiClient, cfg: &ExperimentConfig, parallel: usize) -> Result<Vec<TrialRecord>, HarnessError> {
    if cfg.trials == 0 {
        return Err(HarnessError::NoTrials);
    }
    let mut out = Vec::with_capacity(cfg.trials);
    let mut next = 1;
    while next <= cfg.trials {
        let batch: Vec<usize> = (next..=cfg.trials).take(parallel.max(1)).collect();
        next += batch.len();
        let mut set = tokio::task::JoinSet::new();
        for trial in batch {
            let (client, cfg) = (client.clone(), cfg.clone());
            set.spawn(async move { run_trial(&client, &cfg, trial).await });
        }
        while let Some(r) = set.join_next().await {
            out.push(r.expect("trial task panicked")?);
        }
    }
    out.sort_by_key(|r| r.trial);
    Ok(out)
}

pub fn write_csv(records: &[TrialRecord], out: impl Write) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(records: &[TrialRecord], path: &Path) -> Result<(), HarnessError> {
    write_csv(records, std::fs::File::create(path)?)
}

pub fn read_csv(text: &str) -> Result<Vec<TrialRecord>, csv::Error> {
    csv::Reader::from_reader(text.as_bytes()).deserialize().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub completed: usize,
    pub failed: usize,
    pub compile_ms: Option<SummaryStats>,
    pub install_s: Option<SummaryStats>,
    pub delete_s: Option<SummaryStats>,
}

/// Statistics over successful trials only.
pub fn summary(records: &[TrialRecord]) -> Summary {
    let ok: Vec<&TrialRecord> = records.iter().filter(|r| r.outcome == TrialOutcome::Ok).collect();
    let column = |f: fn(&TrialRecord) -> Option<f64>| {
        let v: Vec<f64> = ok.iter().filter_map(|r| f(r)).collect();
        summarize(&v).ok()
    };
    Summary {
        completed: ok.len(),
        failed: records.len() - ok.len(),
        compile_ms: column(|r| r.compile_ms),
        install_s: column(|r| r.install_s),
        delete_s: column(|r| r.delete_s),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mlso_core::model::ConstraintKind;

    #[test]
    fn scenario_requests() {
        let m = Scenario::Macsec.request();
        assert_eq!(m.bandwidth(), 10_000_000);
        assert!(m.has(ConstraintKind::Encryption));
        assert_eq!(Scenario::EncryptedWdm.request().bandwidth(), 10 * GBPS);
        let u = Scenario::UnencryptedWdm.request();
        assert!(!u.has(ConstraintKind::Encryption));
        assert_eq!(u.bandwidth(), 100 * GBPS);
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            TrialRecord { trial: 1, compile_ms: Some(1.5), install_s: Some(1.3), delete_s: Some(0.4), outcome: TrialOutcome::Ok },
            TrialRecord { trial: 2, compile_ms: Some(1.2), install_s: None, delete_s: None, outcome: TrialOutcome::Failed },
        ];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next(), Some("trial,compile_ms,install_s,delete_s,outcome"));
        assert_eq!(text.lines().count(), 3);
        assert_eq!(read_csv(&text).unwrap(), rows);
    }

    #[test]
    fn summary_skips_failures() {
        let rows = vec![
            TrialRecord { trial: 1, compile_ms: Some(1.0), install_s: Some(1.0), delete_s: Some(0.5), outcome: TrialOutcome::Ok },
            TrialRecord { trial: 2, compile_ms: Some(3.0), install_s: Some(3.0), delete_s: Some(0.5), outcome: TrialOutcome::Ok },
            TrialRecord { trial: 3, compile_ms: Some(99.0), install_s: None, delete_s: None, outcome: TrialOutcome::Failed },
        ];
        let s = summary(&rows);
        assert_eq!((s.completed, s.failed), (2, 1));
        assert_eq!(s.compile_ms.unwrap().mean, 2.0);
        assert_eq!(s.install_s.unwrap().n, 2);
    }
}
