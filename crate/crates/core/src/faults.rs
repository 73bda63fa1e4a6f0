//! Scripted faults for the simulated network.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::timing::Operation;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FaultKind {
    /// Answer with an error after the normal delay.
    Reject,
    /// Never answer; the caller runs into its timeout.
    Drop,
    /// Multiply the drawn delay.
    DelaySpike { factor: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultRule {
    /// `optical`, a device id, or `*`.
    pub target: String,
    #[serde(default = "default_op")]
    pub op: Operation,
    /// 1-based request number per target and operation.
    pub nth: u64,
    #[serde(flatten)]
    pub kind: FaultKind,
}

fn default_op() -> Operation {
    Operation::Install
}

pub const OPTICAL_TARGET: &str = "optical";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultPlan {
    #[serde(default)]
    pub rules: Vec<FaultRule>,
    /// 1-based key exchange numbers that fail, for every encrypted service.
    #[serde(default)]
    pub failed_key_exchanges: BTreeSet<u64>,
}

impl FaultPlan {
    pub fn is_empty(&self) -> bool {
        self.rules.is_empty() && self.failed_key_exchanges.is_empty()
    }

    pub fn reject(target: impl Into<String>, nth: u64) -> Self {
        Self {
            rules: vec![FaultRule { target: target.into(), op: Operation::Install, nth, kind: FaultKind::Reject }],
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        for (i, r) in self.rules.iter().enumerate() {
            if r.nth == 0 {
                errs.push(format!("rules[{i}].nth: must be >= 1"));
            }
            if let FaultKind::DelaySpike { factor } = r.kind {
                if !(factor >= 1.0 && factor.is_finite()) {
                    errs.push(format!("rules[{i}].factor: must be >= 1"));
                }
            }
        }
        if self.failed_key_exchanges.contains(&0) {
            errs.push("failed_key_exchanges: exchange numbers start at 1".into());
        }
        errs
    }
}

/// Counts requests per target and operation and reports the fault, if any,
/// scheduled for each one.
#[derive(Debug, Clone, Default)]
pub struct FaultInjector {
    plan: FaultPlan,
    counters: BTreeMap<(String, Operation), u64>,
}

impl FaultInjector {
    pub fn new(plan: FaultPlan) -> Self {
        Self { plan, counters: BTreeMap::new() }
    }

    pub fn plan(&self) -> &FaultPlan {
        &self.plan
    }

    pub fn next(&mut self, target: &str, op: Operation) -> Option<FaultKind> {
        let n = self.counters.entry((target.to_string(), op)).or_default();
        *n += 1;
        let n = *n;
        self.plan
            .rules
            .iter()
            .find(|r| r.op == op && r.nth == n && (r.target == target || r.target == "*"))
            .map(|r| r.kind)
    }

    pub fn key_exchange_fails(&self, exchange: u64) -> bool {
        self.plan.failed_key_exchanges.contains(&exchange)
    }
}
