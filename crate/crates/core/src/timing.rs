//! Provisioning delay profiles of the simulated network.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Technology {
    MacsecEthernet,
    EncryptedWdm,
    UnencryptedWdm,
}

impl Technology {
    pub const ALL: [Technology; 3] = [Technology::MacsecEthernet, Technology::EncryptedWdm, Technology::UnencryptedWdm];

    pub fn name(self) -> &'static str {
        match self {
            Technology::MacsecEthernet => "macsec_ethernet",
            Technology::EncryptedWdm => "encrypted_wdm",
            Technology::UnencryptedWdm => "unencrypted_wdm",
        }
    }

    pub fn optical(encryption: bool) -> Self {
        if encryption {
            Technology::EncryptedWdm
        } else {
            Technology::UnencryptedWdm
        }
    }
}

impl fmt::Display for Technology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operation {
    Install,
    Delete,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingProfile {
    pub technology: Technology,
    /// Seconds of real equipment time.
    pub install_mean: f64,
    pub delete_mean: f64,
    pub jitter_fraction: f64,
    /// Every delay is divided by this.
    pub time_scale: f64,
}

pub const DEFAULT_JITTER: f64 = 0.05;
pub const DEFAULT_TIME_SCALE: f64 = 100.0;

impl TimingProfile {
    pub fn default_for(technology: Technology) -> Self {
        let (install_mean, delete_mean) = match technology {
            Technology::MacsecEthernet => (1.3, 0.401),
            Technology::EncryptedWdm => (28.4, 11.8),
            Technology::UnencryptedWdm => (99.1, 12.6),
        };
        Self { technology, install_mean, delete_mean, jitter_fraction: DEFAULT_JITTER, time_scale: DEFAULT_TIME_SCALE }
    }

    pub fn defaults() -> BTreeMap<Technology, TimingProfile> {
        Technology::ALL.into_iter().map(|t| (t, Self::default_for(t))).collect()
    }

    pub fn mean(&self, op: Operation) -> f64 {
        match op {
            Operation::Install => self.install_mean,
            Operation::Delete => self.delete_mean,
        }
    }

    /// Wall-clock seconds before jitter.
    pub fn scaled_mean(&self, op: Operation) -> f64 {
        self.mean(op) / self.time_scale
    }

    pub fn validate(&self) -> Result<(), String> {
        let t = self.technology;
        if !(self.install_mean > 0.0 && self.install_mean.is_finite()) {
            return Err(format!("{t}: install_mean must be > 0"));
        }
        if !(self.delete_mean > 0.0 && self.delete_mean.is_finite()) {
            return Err(format!("{t}: delete_mean must be > 0"));
        }
        if !(0.0..1.0).contains(&self.jitter_fraction) {
            return Err(format!("{t}: jitter_fraction must be in [0, 1)"));
        }
        if !(self.time_scale > 0.0 && self.time_scale.is_finite()) {
            return Err(format!("{t}: time_scale must be > 0"));
        }
        Ok(())
    }
}

/// Draws scaled delays: mean / time_scale × (1 ± uniform jitter).
#[derive(Debug, Clone)]
pub struct DelayModel {
    profiles: BTreeMap<Technology, TimingProfile>,
    rng: ChaCha8Rng,
}

impl DelayModel {
    pub fn new(profiles: BTreeMap<Technology, TimingProfile>, seed: u64) -> Self {
        Self { profiles, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn profile(&self, t: Technology) -> TimingProfile {
        self.profiles.get(&t).copied().unwrap_or_else(|| TimingProfile::default_for(t))
    }

    pub fn draw(&mut self, t: Technology, op: Operation) -> Duration {
        let p = self.profile(t);
        let factor = if p.jitter_fraction > 0.0 {
            1.0 + self.rng.gen_range(-p.jitter_fraction..=p.jitter_fraction)
        } else {
            1.0
        };
        Duration::from_secs_f64(p.scaled_mean(op) * factor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_scaled() {
        let p = TimingProfile::default_for(Technology::EncryptedWdm);
        assert!((p.scaled_mean(Operation::Install) - 0.284).abs() < 1e-12);
        assert!((p.scaled_mean(Operation::Delete) - 0.118).abs() < 1e-12);
        for p in TimingProfile::defaults().values() {
            p.validate().unwrap();
        }
    }

    #[test]
    fn zero_jitter_is_exact() {
        let mut profiles = TimingProfile::defaults();
        for p in profiles.values_mut() {
            p.jitter_fraction = 0.0;
        }
        let mut m = DelayModel::new(profiles, 7);
        for _ in 0..5 {
            assert_eq!(m.draw(Technology::UnencryptedWdm, Operation::Install), Duration::from_secs_f64(0.991));
        }
    }

    #[test]
    fn jitter_bounded_and_seeded() {
        let mut a = DelayModel::new(TimingProfile::defaults(), 3);
        let mut b = DelayModel::new(TimingProfile::defaults(), 3);
        for _ in 0..1000 {
            let d = a.draw(Technology::MacsecEthernet, Operation::Install);
            assert_eq!(d, b.draw(Technology::MacsecEthernet, Operation::Install));
            let ratio = d.as_secs_f64() / 0.013;
            assert!((0.95 - 1e-9..=1.05 + 1e-9).contains(&ratio), "{ratio}");
        }
    }

    #[test]
    fn invalid_profiles() {
        let mut p = TimingProfile::default_for(Technology::MacsecEthernet);
        p.jitter_fraction = 1.0;
        assert!(p.validate().is_err());
        p.jitter_fraction = 0.0;
        p.install_mean = 0.0;
        assert!(p.validate().is_err());
    }
}
