//! Key lifecycle and OAM counters of one running service.
//!
//! Times are simulated seconds since an arbitrary epoch. Key material is
//! never generated: a session only tracks key identifiers and events.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OamEventKind {
    AuthSuccess,
    AuthFailure,
    KeyExchange,
    ConfigChange,
    ModuleFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OamEvent {
    pub at_s: f64,
    pub kind: OamEventKind,
    pub ok: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OamMetrics {
    pub last_successful_key_exchange: Option<f64>,
    pub last_failed_key_exchange: Option<f64>,
    pub failed_key_exchange_count: u64,
    /// Seconds spent forwarding unencrypted although encryption was asked for.
    pub transparent_mode_seconds: f64,
    pub events: Vec<OamEvent>,
}

impl OamMetrics {
    pub fn count(&self, kind: OamEventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeySession {
    key_id: String,
    encryption: bool,
    started_s: f64,
    interval_s: f64,
    exchanges: u64,
    failing: BTreeSet<u64>,
    transparent_since: Option<f64>,
    metrics: OamMetrics,
}

impl KeySession {
    /// `failing` lists 1-based exchange numbers that fail.
    pub fn start(
        key_id: impl Into<String>,
        encryption: bool,
        started_s: f64,
        interval_s: f64,
        failing: BTreeSet<u64>,
    ) -> Self {
        let key_id = key_id.into();
        let mut metrics = OamMetrics::default();
        metrics.events.push(OamEvent {
            at_s: started_s,
            kind: OamEventKind::ConfigChange,
            ok: true,
            detail: format!("service configured, encryption {}", if encryption { "on" } else { "off" }),
        });
        if encryption {
            metrics.events.push(OamEvent {
                at_s: started_s,
                kind: OamEventKind::AuthSuccess,
                ok: true,
                detail: format!("peers authenticated with {key_id}"),
            });
        }
        Self { key_id, encryption, started_s, interval_s, exchanges: 0, failing, transparent_since: None, metrics }
    }

    pub fn encryption(&self) -> bool {
        self.encryption
    }

    /// Time of the next scheduled exchange, if the session rekeys at all.
    pub fn next_exchange_at(&self) -> Option<f64> {
        self.encryption.then(|| self.started_s + (self.exchanges + 1) as f64 * self.interval_s)
    }

    /// Performs the next scheduled exchange regardless of the current time.
    pub fn rekey_tick(&mut self) {
        let Some(at) = self.next_exchange_at() else {
            return;
        };
        self.exchanges += 1;
        let n = self.exchanges;
        let ok = !self.failing.contains(&n);
        let m = &mut self.metrics;
        if ok {
            m.last_successful_key_exchange = Some(at);
            if let Some(since) = self.transparent_since.take() {
                m.transparent_mode_seconds += at - since;
            }
        } else {
            m.failed_key_exchange_count += 1;
            m.last_failed_key_exchange = Some(at);
            self.transparent_since.get_or_insert(at);
        }
        m.events.push(OamEvent {
            at_s: at,
            kind: OamEventKind::KeyExchange,
            ok,
            detail: if ok {
                format!("{}#{n} active", self.key_id)
            } else {
                format!("{}#{n} failed, forwarding transparently", self.key_id)
            },
        });
    }

    /// Runs every exchange due at or before `now_s`.
    pub fn advance_to(&mut self, now_s: f64) {
        while self.next_exchange_at().is_some_and(|t| t <= now_s) {
            self.rekey_tick();
        }
    }

    /// Snapshot at `now_s`, counting an ongoing transparent period.
    pub fn metrics(&self, now_s: f64) -> OamMetrics {
        let mut m = self.metrics.clone();
        if let Some(since) = self.transparent_since {
            m.transparent_mode_seconds += (now_s - since).max(0.0);
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_exchanges_in_300s() {
        let mut s = KeySession::start("psk", true, 0.0, 60.0, BTreeSet::new());
        s.advance_to(300.0);
        let m = s.metrics(300.0);
        assert_eq!(m.count(OamEventKind::KeyExchange), 5);
        assert_eq!(m.failed_key_exchange_count, 0);
        assert_eq!(m.last_successful_key_exchange, Some(300.0));
        assert_eq!(m.transparent_mode_seconds, 0.0);
    }

    #[test]
    fn failed_second_exchange() {
        let mut s = KeySession::start("psk", true, 10.0, 60.0, BTreeSet::from([2]));
        s.advance_to(310.0);
        let m = s.metrics(310.0);
        assert_eq!(m.failed_key_exchange_count, 1);
        assert_eq!(m.last_failed_key_exchange, Some(130.0));
        // failed at 130, recovered at 190
        assert_eq!(m.transparent_mode_seconds, 60.0);
    }

    #[test]
    fn ongoing_transparent_period_counts() {
        let mut s = KeySession::start("psk", true, 0.0, 60.0, BTreeSet::from([1]));
        s.advance_to(90.0);
        assert_eq!(s.metrics(90.0).transparent_mode_seconds, 30.0);
    }

    #[test]
    fn unencrypted_has_no_key_events() {
        let mut s = KeySession::start("none", false, 0.0, 60.0, BTreeSet::new());
        s.advance_to(1000.0);
        s.rekey_tick();
        assert_eq!(s.metrics(1000.0).count(OamEventKind::KeyExchange), 0);
    }

    #[test]
    fn counters_monotone() {
        let mut s = KeySession::start("psk", true, 0.0, 7.0, BTreeSet::from([3, 4, 9]));
        let mut prev = s.metrics(0.0);
        for t in 1..200 {
            s.advance_to(t as f64);
            let m = s.metrics(t as f64);
            assert!(m.failed_key_exchange_count >= prev.failed_key_exchange_count);
            assert!(m.transparent_mode_seconds >= prev.transparent_mode_seconds);
            assert!(m.events.len() >= prev.events.len());
            prev = m;
        }
    }
}
