//! Process configuration.
//!
//! One TOML file with three tables; every key is optional:
//!
//! ```toml
//! [policy]
//! physical_threshold_bps = 1000000000
//! allow_ipsec = false
//! macsec_hop_penalty_us = 5
//! macsec_budget_devices = 2
//! macsec_max_bps = 10000000000
//! ipsec_max_bps = 10000000000
//! driver_timeout_factor = 4.0
//! driver_timeout_floor_s = 1.0
//!
//! [simnet]
//! time_scale = 100.0
//! jitter = 0.05
//! seed = 0
//! rekey_interval_s = 60.0
//! [simnet.profiles.macsec_ethernet]
//! install_mean = 1.3
//! delete_mean = 0.401
//! [simnet.faults]
//! failed_key_exchanges = [2]
//!
//! [endpoints]
//! nbi = "127.0.0.1:8181"
//! controller = "127.0.0.1:8182"
//! [endpoints.agents]
//! "ovs-1" = "127.0.0.1:8183"
//! ```
//!
//! Environment variables override endpoints only: `MLSO_NBI_ADDR`,
//! `MLSO_CONTROLLER_ADDR` and `MLSO_AGENT_<DEVICE>_ADDR` with the device id
//! upper-cased and dashes turned into underscores.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compiler::{CompilerConfig, SelectionPolicy};
use crate::faults::FaultPlan;
use crate::model::{GBPS, IPSEC_DEFAULT_MAX_BPS, MACSEC_DEFAULT_MAX_BPS};
use crate::testbed::{MACSEC1, MACSEC2, OVS1, OVS2};
use crate::timing::{Technology, TimingProfile, DEFAULT_JITTER, DEFAULT_TIME_SCALE};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

impl ConfigError {
    pub fn fields(&self) -> &[String] {
        match self {
            ConfigError::Invalid(v) => v,
            ConfigError::Io { .. } => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyConfig {
    pub physical_threshold_bps: u64,
    pub allow_ipsec: bool,
    pub macsec_hop_penalty_us: u64,
    pub macsec_budget_devices: u64,
    pub macsec_max_bps: u64,
    pub ipsec_max_bps: u64,
    /// Driver timeout as a multiple of the technology's expected time.
    pub driver_timeout_factor: f64,
    /// Lower bound on any driver timeout, wall-clock seconds.
    pub driver_timeout_floor_s: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        let p = SelectionPolicy::default();
        Self {
            physical_threshold_bps: p.physical_threshold,
            allow_ipsec: p.allow_ipsec,
            macsec_hop_penalty_us: p.macsec_hop_penalty_us,
            macsec_budget_devices: p.macsec_budget_devices,
            macsec_max_bps: MACSEC_DEFAULT_MAX_BPS,
            ipsec_max_bps: IPSEC_DEFAULT_MAX_BPS,
            driver_timeout_factor: 4.0,
            driver_timeout_floor_s: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileOverride {
    pub install_mean: Option<f64>,
    pub delete_mean: Option<f64>,
    pub jitter_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimnetConfig {
    pub time_scale: f64,
    pub jitter: f64,
    pub seed: u64,
    pub rekey_interval_s: f64,
    pub profiles: BTreeMap<Technology, ProfileOverride>,
    pub faults: FaultPlan,
}

impl Default for SimnetConfig {
    fn default() -> Self {
        Self {
            time_scale: DEFAULT_TIME_SCALE,
            jitter: DEFAULT_JITTER,
            seed: 0,
            rekey_interval_s: 60.0,
            profiles: BTreeMap::new(),
            faults: FaultPlan::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Endpoints {
    pub nbi: String,
    pub controller: String,
    pub agents: BTreeMap<String, String>,
}

impl Default for Endpoints {
    fn default() -> Self {
        Self {
            nbi: "127.0.0.1:8181".into(),
            controller: "127.0.0.1:8182".into(),
            agents: [(OVS1, 8183), (OVS2, 8184), (MACSEC1, 8185), (MACSEC2, 8186)]
                .into_iter()
                .map(|(d, p)| (d.to_string(), format!("127.0.0.1:{p}")))
                .collect(),
        }
    }
}

impl Endpoints {
    /// All endpoints on ephemeral ports, for tests.
    pub fn ephemeral() -> Self {
        let mut e = Self::default();
        e.nbi = "127.0.0.1:0".into();
        e.controller = "127.0.0.1:0".into();
        for a in e.agents.values_mut() {
            *a = "127.0.0.1:0".into();
        }
        e
    }

    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) {
        if let Some(v) = var("MLSO_NBI_ADDR") {
            self.nbi = v;
        }
        if let Some(v) = var("MLSO_CONTROLLER_ADDR") {
            self.controller = v;
        }
        for (device, addr) in self.agents.iter_mut() {
            if let Some(v) = var(&agent_env_var(device)) {
                *addr = v;
            }
        }
    }
}

pub fn agent_env_var(device: &str) -> String {
    format!("MLSO_AGENT_{}_ADDR", device.to_uppercase().replace(['-', '.', ':'], "_"))
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Config {
    pub policy: PolicyConfig,
    pub simnet: SimnetConfig,
    pub endpoints: Endpoints,
}

impl Config {
    pub fn selection_policy(&self) -> SelectionPolicy {
        let p = &self.policy;
        SelectionPolicy {
            physical_threshold: p.physical_threshold_bps,
            allow_ipsec: p.allow_ipsec,
            macsec_hop_penalty_us: p.macsec_hop_penalty_us,
            macsec_budget_devices: p.macsec_budget_devices,
            ..SelectionPolicy::default()
        }
        .with_macsec_max(p.macsec_max_bps)
        .with_ipsec_max(p.ipsec_max_bps)
    }

    pub fn compiler_config(&self) -> CompilerConfig {
        CompilerConfig { policy: self.selection_policy(), rekey_interval: self.simnet.rekey_interval_s }
    }

    pub fn timing_profiles(&self) -> BTreeMap<Technology, TimingProfile> {
        Technology::ALL
            .into_iter()
            .map(|t| {
                let mut p = TimingProfile::default_for(t);
                p.time_scale = self.simnet.time_scale;
                p.jitter_fraction = self.simnet.jitter;
                if let Some(o) = self.simnet.profiles.get(&t) {
                    p.install_mean = o.install_mean.unwrap_or(p.install_mean);
                    p.delete_mean = o.delete_mean.unwrap_or(p.delete_mean);
                    p.jitter_fraction = o.jitter_fraction.unwrap_or(p.jitter_fraction);
                }
                (t, p)
            })
            .collect()
    }

    /// Re-checks invariants after programmatic edits.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        let p = &self.policy;
        if p.macsec_budget_devices == 0 {
            errs.push("policy.macsec_budget_devices: must be >= 1".to_string());
        }
        if !(p.driver_timeout_factor >= 1.0 && p.driver_timeout_factor.is_finite()) {
            errs.push("policy.driver_timeout_factor: must be >= 1".into());
        }
        if !(p.driver_timeout_floor_s >= 0.0 && p.driver_timeout_floor_s.is_finite()) {
            errs.push("policy.driver_timeout_floor_s: must be >= 0".into());
        }
        let s = &self.simnet;
        if !(s.time_scale > 0.0 && s.time_scale.is_finite()) {
            errs.push("simnet.time_scale: must be > 0".into());
        }
        if !(0.0..1.0).contains(&s.jitter) {
            errs.push("simnet.jitter: must be in [0, 1)".into());
        }
        if !(s.rekey_interval_s > 0.0 && s.rekey_interval_s.is_finite()) {
            errs.push("simnet.rekey_interval_s: must be > 0".into());
        }
        if errs.is_empty() {
            for (t, prof) in self.timing_profiles() {
                if let Err(e) = prof.validate() {
                    errs.push(format!("simnet.profiles.{t}: {}", e.split_once(": ").map_or(e.as_str(), |x| x.1)));
                }
            }
        }
        errs.extend(s.faults.validate().into_iter().map(|e| format!("simnet.faults.{e}")));
        let e = &self.endpoints;
        for (name, addr) in
            [("endpoints.nbi".to_string(), &e.nbi), ("endpoints.controller".to_string(), &e.controller)]
                .into_iter()
                .chain(e.agents.iter().map(|(d, a)| (format!("endpoints.agents.{d}"), a)))
        {
            if addr.parse::<SocketAddr>().is_err() {
                errs.push(format!("{name}: `{addr}` is not a socket address"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }
}

// Raw file shape: integers are signed so that negative values reach
// validation and get reported with their field path.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    policy: RawPolicy,
    #[serde(default)]
    simnet: RawSimnet,
    #[serde(default)]
    endpoints: RawEndpoints,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolicy {
    physical_threshold_bps: Option<i64>,
    allow_ipsec: Option<bool>,
    macsec_hop_penalty_us: Option<i64>,
    macsec_budget_devices: Option<i64>,
    macsec_max_bps: Option<i64>,
    ipsec_max_bps: Option<i64>,
    driver_timeout_factor: Option<f64>,
    driver_timeout_floor_s: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimnet {
    time_scale: Option<f64>,
    jitter: Option<f64>,
    seed: Option<i64>,
    rekey_interval_s: Option<f64>,
    #[serde(default)]
    profiles: BTreeMap<Technology, ProfileOverride>,
    #[serde(default)]
    faults: FaultPlan,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEndpoints {
    nbi: Option<String>,
    controller: Option<String>,
    #[serde(default)]
    agents: BTreeMap<String, String>,
}

fn unsigned(errs: &mut Vec<String>, path: &str, v: Option<i64>, default: u64) -> u64 {
    match v {
        None => default,
        Some(x) if x >= 0 => x as u64,
        Some(x) => {
            errs.push(format!("{path}: must be >= 0, got {x}"));
            default
        }
    }
}

pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Invalid(vec![e.to_string()]))?;
    let mut errs = Vec::new();
    let d = Config::default();
    let rp = raw.policy;
    let policy = PolicyConfig {
        physical_threshold_bps: unsigned(
            &mut errs,
            "policy.physical_threshold_bps",
            rp.physical_threshold_bps,
            d.policy.physical_threshold_bps,
        ),
        allow_ipsec: rp.allow_ipsec.unwrap_or(d.policy.allow_ipsec),
        macsec_hop_penalty_us: unsigned(
            &mut errs,
            "policy.macsec_hop_penalty_us",
            rp.macsec_hop_penalty_us,
            d.policy.macsec_hop_penalty_us,
        ),
        macsec_budget_devices: unsigned(
            &mut errs,
            "policy.macsec_budget_devices",
            rp.macsec_budget_devices,
            d.policy.macsec_budget_devices,
        ),
        macsec_max_bps: unsigned(&mut errs, "policy.macsec_max_bps", rp.macsec_max_bps, d.policy.macsec_max_bps),
        ipsec_max_bps: unsigned(&mut errs, "policy.ipsec_max_bps", rp.ipsec_max_bps, d.policy.ipsec_max_bps),
        driver_timeout_factor: rp.driver_timeout_factor.unwrap_or(d.policy.driver_timeout_factor),
        driver_timeout_floor_s: rp.driver_timeout_floor_s.unwrap_or(d.policy.driver_timeout_floor_s),
    };
    if policy.macsec_max_bps > 100 * GBPS {
        errs.push("policy.macsec_max_bps: above any Ethernet port rate".into());
    }
    let rs = raw.simnet;
    let simnet = SimnetConfig {
        time_scale: rs.time_scale.unwrap_or(d.simnet.time_scale),
        jitter: rs.jitter.unwrap_or(d.simnet.jitter),
        seed: unsigned(&mut errs, "simnet.seed", rs.seed, d.simnet.seed),
        rekey_interval_s: rs.rekey_interval_s.unwrap_or(d.simnet.rekey_interval_s),
        profiles: rs.profiles,
        faults: rs.faults,
    };
    let re = raw.endpoints;
    let mut endpoints = d.endpoints;
    endpoints.nbi = re.nbi.unwrap_or(endpoints.nbi);
    endpoints.controller = re.controller.unwrap_or(endpoints.controller);
    endpoints.agents.extend(re.agents);
    let config = Config { policy, simnet, endpoints };
    match config.validate() {
        Ok(()) if errs.is_empty() => Ok(config),
        Ok(()) => Err(ConfigError::Invalid(errs)),
        Err(ConfigError::Invalid(more)) => {
            errs.extend(more);
            Err(ConfigError::Invalid(errs))
        }
        Err(e) => Err(e),
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<Config, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = parse_config("").unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.policy.physical_threshold_bps, GBPS);
        assert_eq!(c.simnet.time_scale, 100.0);
        assert_eq!(c.simnet.jitter, 0.05);
        assert_eq!(c.compiler_config(), CompilerConfig::default());
    }

    #[test]
    fn negative_threshold_named() {
        let err = parse_config("[policy]\nphysical_threshold_bps = -5\n").unwrap_err();
        assert_eq!(err.fields().len(), 1);
        assert!(err.fields()[0].starts_with("policy.physical_threshold_bps"));
    }

    #[test]
    fn all_violations_reported() {
        let err = parse_config(
            "[policy]\nmacsec_hop_penalty_us = -1\n[simnet]\ntime_scale = 0\njitter = 1.5\n[endpoints]\nnbi = \"nowhere\"\n",
        )
        .unwrap_err();
        let f = err.fields().join("\n");
        for key in ["policy.macsec_hop_penalty_us", "simnet.time_scale", "simnet.jitter", "endpoints.nbi"] {
            assert!(f.contains(key), "{f}");
        }
    }

    #[test]
    fn profile_override_applied() {
        let c = parse_config("[simnet]\njitter = 0\n[simnet.profiles.macsec_ethernet]\ninstall_mean = 2.6\n").unwrap();
        let p = c.timing_profiles()[&Technology::MacsecEthernet];
        assert!((p.scaled_mean(crate::timing::Operation::Install) - 0.026).abs() < 1e-12);
        assert_eq!(p.delete_mean, 0.401);
        let err = parse_config("[simnet.profiles.encrypted_wdm]\ndelete_mean = -1.0\n").unwrap_err();
        assert!(err.fields()[0].starts_with("simnet.profiles.encrypted_wdm"), "{:?}", err.fields());
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(parse_config("[policy]\nthreshold = 1\n").is_err());
    }

    #[test]
    fn env_overrides_endpoints_only() {
        let mut e = Endpoints::default();
        e.apply_env(|k| match k {
            "MLSO_NBI_ADDR" => Some("0.0.0.0:9000".into()),
            "MLSO_AGENT_OVS_1_ADDR" => Some("127.0.0.1:9001".into()),
            _ => None,
        });
        assert_eq!(e.nbi, "0.0.0.0:9000");
        assert_eq!(e.agents[OVS1], "127.0.0.1:9001");
        assert_eq!(e.agents[OVS2], "127.0.0.1:8184");
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(load_config("/nonexistent/mlso.toml"), Err(ConfigError::Io { .. })));
    }
}
