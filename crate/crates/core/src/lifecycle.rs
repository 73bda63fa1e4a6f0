//! Intent records and their state machine.
//!
//! `IntentBook` owns the topology and every record. It never talks to the
//! network: each step returns the driver [`Command`]s the caller has to run,
//! and driver outcomes are fed back through [`IntentBook::on_driver_result`].
//! Time comes from a caller-supplied monotonic microsecond clock.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compiler::{compile, CompilerConfig, DecisionTrace, DomainIntent, InstallPlan, IntentId, PlanElement, ValidatedIntent};
use crate::error::SchemaError;
use crate::model::IntentRequest;
use crate::sbi::DeviceRuleSet;
use crate::topology::Topology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IntentState {
    Submitted,
    Compiling,
    Installing,
    Installed,
    Withdrawing,
    Withdrawn,
    Failed,
}

impl IntentState {
    pub const ALL: [IntentState; 7] = [
        IntentState::Submitted,
        IntentState::Compiling,
        IntentState::Installing,
        IntentState::Installed,
        IntentState::Withdrawing,
        IntentState::Withdrawn,
        IntentState::Failed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IntentState::Submitted => "SUBMITTED",
            IntentState::Compiling => "COMPILING",
            IntentState::Installing => "INSTALLING",
            IntentState::Installed => "INSTALLED",
            IntentState::Withdrawing => "WITHDRAWING",
            IntentState::Withdrawn => "WITHDRAWN",
            IntentState::Failed => "FAILED",
        }
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, IntentState::Withdrawn | IntentState::Failed)
    }

    /// States in which the record's bandwidth is booked on the topology.
    pub fn holds_reservation(self) -> bool {
        matches!(self, IntentState::Installing | IntentState::Installed | IntentState::Withdrawing)
    }
}

impl fmt::Display for IntentState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn is_legal_transition(from: IntentState, to: IntentState) -> bool {
    use IntentState::*;
    matches!(
        (from, to),
        (Submitted, Compiling)
            | (Compiling, Installing)
            | (Compiling, Failed)
            | (Installing, Installed)
            | (Installing, Failed)
            | (Installed, Withdrawing)
            | (Withdrawing, Withdrawn)
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ElementStatus {
    Pending,
    Installed { handle: Option<String> },
    Failed { reason: String },
    Removing,
    Removed,
    RemoveFailed { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentRecord {
    pub id: IntentId,
    pub request: IntentRequest,
    pub state: IntentState,
    pub plan: Option<InstallPlan>,
    /// Monotonic microseconds at which each state was entered.
    pub timestamps: BTreeMap<IntentState, u64>,
    pub failure_reason: Option<String>,
    /// Set when compilation failed; successful plans carry their own.
    pub failure_trace: Option<DecisionTrace>,
    #[serde(with = "element_list")]
    pub elements: BTreeMap<PlanElement, ElementStatus>,
    pub history: Vec<IntentState>,
    pub warnings: Vec<String>,
}

impl IntentRecord {
    pub fn trace(&self) -> Option<&DecisionTrace> {
        self.plan.as_ref().map(|p| &p.trace).or(self.failure_trace.as_ref())
    }

    /// Submission until compilation finished.
    pub fn compile_duration_us(&self) -> Option<u64> {
        let start = self.timestamps.get(&IntentState::Submitted)?;
        Some(self.timestamps.get(&IntentState::Installing)? - start)
    }

    pub fn install_duration_us(&self) -> Option<u64> {
        Some(self.timestamps.get(&IntentState::Installed)? - self.timestamps.get(&IntentState::Installing)?)
    }

    pub fn withdraw_duration_us(&self) -> Option<u64> {
        Some(self.timestamps.get(&IntentState::Withdrawn)? - self.timestamps.get(&IntentState::Withdrawing)?)
    }

    fn transition(&mut self, to: IntentState, now: u64) {
        assert!(
            is_legal_transition(self.state, to),
            "illegal transition {} -> {to} for intent {}",
            self.state,
            self.id
        );
        let last = self.timestamps.values().copied().max().unwrap_or(0);
        self.timestamps.insert(to, now.max(last));
        self.state = to;
        self.history.push(to);
    }

    fn outstanding(&self, status: impl Fn(&ElementStatus) -> bool) -> bool {
        self.elements.values().any(status)
    }
}

/// Element keys are not strings, so the map travels as a list.
mod element_list {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::{ElementStatus, PlanElement};

    #[derive(Serialize, Deserialize)]
    struct Entry {
        element: PlanElement,
        #[serde(flatten)]
        status: ElementStatus,
    }

    pub fn serialize<S: Serializer>(map: &BTreeMap<PlanElement, ElementStatus>, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<Entry> = map.iter().map(|(e, st)| Entry { element: e.clone(), status: st.clone() }).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<PlanElement, ElementStatus>, D::Error> {
        Ok(Vec::<Entry>::deserialize(d)?.into_iter().map(|e| (e.element, e.status)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Action {
    CreateService { domain: DomainIntent },
    DeleteService { domain_id: String, uuid: String },
    InstallRules { rules: DeviceRuleSet },
    RemoveRules { device_id: String, cookie: u64 },
}

impl Action {
    pub fn is_install(&self) -> bool {
        matches!(self, Action::CreateService { .. } | Action::InstallRules { .. })
    }
}

/// Work for a driver. Its result goes back to `on_driver_result` with the
/// same intent and element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Command {
    pub intent: IntentId,
    pub element: PlanElement,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    /// Install or removal succeeded. Installs of domain intents carry the
    /// controller's service uuid.
    Done { handle: Option<String> },
    Failed { reason: String },
}

impl Outcome {
    pub fn ok() -> Self {
        Outcome::Done { handle: None }
    }

    pub fn with_handle(handle: impl Into<String>) -> Self {
        Outcome::Done { handle: Some(handle.into()) }
    }

    pub fn failed(reason: impl Into<String>) -> Self {
        Outcome::Failed { reason: reason.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LifecycleError {
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("intent {0} not found")]
    NotFound(IntentId),
    #[error("intent {id} is {state}, cannot {op}")]
    State { id: IntentId, state: IntentState, op: &'static str },
}

pub type Clock = Box<dyn FnMut() -> u64 + Send>;

pub struct IntentBook {
    topology: Topology,
    config: CompilerConfig,
    records: BTreeMap<IntentId, IntentRecord>,
    next_id: u64,
    clock: Clock,
}

impl fmt::Debug for IntentBook {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IntentBook").field("records", &self.records.len()).finish()
    }
}

impl IntentBook {
    pub fn new(topology: Topology, config: CompilerConfig, clock: Clock) -> Self {
        Self { topology, config, records: BTreeMap::new(), next_id: 1, clock }
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    /// For bootstrap and discovery only; intents must not be in flight.
    pub fn topology_mut(&mut self) -> &mut Topology {
        &mut self.topology
    }

    pub fn config(&self) -> &CompilerConfig {
        &self.config
    }

    pub fn records(&self) -> impl Iterator<Item = &IntentRecord> {
        self.records.values()
    }

    pub fn record(&self, id: IntentId) -> Option<&IntentRecord> {
        self.records.get(&id)
    }

    pub fn now(&mut self) -> u64 {
        (self.clock)()
    }

    pub fn submit(&mut self, request: IntentRequest) -> Result<IntentId, LifecycleError> {
        let now = self.now();
        self.submit_at(request, now)
    }

    /// `received_us` is when the request arrived, before parsing.
    pub fn submit_at(&mut self, request: IntentRequest, received_us: u64) -> Result<IntentId, LifecycleError> {
        request.validate()?;
        let id = IntentId(self.next_id);
        self.next_id += 1;
        let record = IntentRecord {
            id,
            request,
            state: IntentState::Submitted,
            plan: None,
            timestamps: BTreeMap::from([(IntentState::Submitted, received_us)]),
            failure_reason: None,
            failure_trace: None,
            elements: BTreeMap::new(),
            history: vec![IntentState::Submitted],
            warnings: Vec::new(),
        };
        self.records.insert(id, record);
        Ok(id)
    }

    fn get_mut(&mut self, id: IntentId) -> Result<&mut IntentRecord, LifecycleError> {
        self.records.get_mut(&id).ok_or(LifecycleError::NotFound(id))
    }

    /// SUBMITTED → COMPILING → INSTALLING (or FAILED). Returns the install
    /// commands for every plan element; they may run concurrently.
    pub fn compile(&mut self, id: IntentId) -> Result<Vec<Command>, LifecycleError> {
        let now = self.now();
        let rec = self.records.get_mut(&id).ok_or(LifecycleError::NotFound(id))?;
        if rec.state != IntentState::Submitted {
            return Err(LifecycleError::State { id, state: rec.state, op: "compile" });
        }
        rec.transition(IntentState::Compiling, now);
        let result = ValidatedIntent::new(id, rec.request.clone())
            .map_err(|e| (e.to_string(), None))
            .and_then(|v| compile(&v, &mut self.topology, &self.config).map_err(|e| (e.reason(), Some(e.trace))));
        let now = (self.clock)();
        let rec = self.records.get_mut(&id).expect("present");
        match result {
            Err((reason, trace)) => {
                rec.failure_reason = Some(reason);
                rec.failure_trace = trace;
                rec.transition(IntentState::Failed, now);
                Ok(Vec::new())
            }
            Ok(plan) => {
                let commands = install_commands(&plan);
                rec.elements = plan.elements().into_iter().map(|e| (e, ElementStatus::Pending)).collect();
                rec.plan = Some(plan);
                rec.transition(IntentState::Installing, now);
                if commands.is_empty() {
                    rec.transition(IntentState::Installed, now);
                }
                Ok(commands)
            }
        }
    }

    /// Feeds back one driver outcome. Returns follow-up commands (rollback
    /// removals). Results for unknown elements or repeated results are
    /// ignored.
    pub fn on_driver_result(&mut self, id: IntentId, element: &PlanElement, outcome: Outcome) -> Vec<Command> {
        let now = self.now();
        let Some(rec) = self.records.get_mut(&id) else {
            return Vec::new();
        };
        let Some(status) = rec.elements.get(element).cloned() else {
            return Vec::new();
        };
        let mut follow_up = Vec::new();
        match (rec.state, status, outcome) {
            (IntentState::Installing, ElementStatus::Pending, Outcome::Done { handle }) => {
                rec.elements.insert(element.clone(), ElementStatus::Installed { handle });
                if !rec.outstanding(|s| *s == ElementStatus::Pending) {
                    rec.transition(IntentState::Installed, now);
                }
            }
            (IntentState::Installing, ElementStatus::Pending, Outcome::Failed { reason }) => {
                rec.failure_reason = Some(format!("{element} failed: {reason}"));
                rec.elements.insert(element.clone(), ElementStatus::Failed { reason });
                rec.transition(IntentState::Failed, now);
                let plan = rec.plan.as_ref().expect("installing records have a plan");
                let installed: Vec<(PlanElement, Option<String>)> = rec
                    .elements
                    .iter()
                    .filter_map(|(e, s)| match s {
                        ElementStatus::Installed { handle } => Some((e.clone(), handle.clone())),
                        _ => None,
                    })
                    .collect();
                for (e, handle) in installed {
                    follow_up.extend(remove_command(plan, &e, handle.as_deref()));
                    rec.elements.insert(e, ElementStatus::Removing);
                }
                let reservation = plan.reservation;
                if let Err(e) = self.topology.release(reservation) {
                    rec.warnings.push(format!("release after failure: {e}"));
                }
            }
            // A success that arrives after the rollback started is undone.
            (IntentState::Failed, ElementStatus::Pending, Outcome::Done { handle }) => {
                let plan = rec.plan.as_ref().expect("failed during install implies a plan");
                follow_up.extend(remove_command(plan, element, handle.as_deref()));
                rec.elements.insert(element.clone(), ElementStatus::Removing);
            }
            (IntentState::Failed, ElementStatus::Pending, Outcome::Failed { reason }) => {
                rec.elements.insert(element.clone(), ElementStatus::Failed { reason });
            }
            (IntentState::Failed | IntentState::Withdrawing, ElementStatus::Removing, outcome) => {
                let status = match outcome {
                    Outcome::Done { .. } => ElementStatus::Removed,
                    Outcome::Failed { reason } => {
                        rec.warnings.push(format!("removing {element}: {reason}"));
                        ElementStatus::RemoveFailed { reason }
                    }
                };
                rec.elements.insert(element.clone(), status);
                if rec.state == IntentState::Withdrawing && !rec.outstanding(|s| *s == ElementStatus::Removing) {
                    self.finish_withdraw(id, now);
                }
            }
            _ => {}
        }
        follow_up
    }

    /// INSTALLED → WITHDRAWING. Returns removal commands for every element.
    pub fn withdraw(&mut self, id: IntentId) -> Result<Vec<Command>, LifecycleError> {
        let now = self.now();
        let rec = self.get_mut(id)?;
        if rec.state != IntentState::Installed {
            return Err(LifecycleError::State { id, state: rec.state, op: "withdraw" });
        }
        rec.transition(IntentState::Withdrawing, now);
        let plan = rec.plan.as_ref().expect("installed records have a plan");
        let mut commands = Vec::new();
        for (e, s) in &rec.elements {
            if let ElementStatus::Installed { handle } = s {
                commands.extend(remove_command(plan, e, handle.as_deref()));
            }
        }
        for c in &commands {
            rec.elements.insert(c.element.clone(), ElementStatus::Removing);
        }
        if commands.is_empty() {
            self.finish_withdraw(id, now);
        }
        Ok(commands)
    }

    fn finish_withdraw(&mut self, id: IntentId, now: u64) {
        let rec = self.records.get_mut(&id).expect("present");
        let reservation = rec.plan.as_ref().expect("withdrawn records have a plan").reservation;
        if let Err(e) = self.topology.release(reservation) {
            rec.warnings.push(format!("release on withdraw: {e}"));
        }
        rec.transition(IntentState::Withdrawn, now);
    }

    /// Checks that link residuals equal capacity minus the bandwidth of
    /// records currently holding a reservation, and that the topology holds
    /// no other reservations.
    pub fn check_accounting(&self) -> Result<(), String> {
        let mut used: BTreeMap<&str, u64> = BTreeMap::new();
        let mut expected_reservations = Vec::new();
        for r in self.records.values().filter(|r| r.state.holds_reservation()) {
            let plan = r.plan.as_ref().ok_or_else(|| format!("intent {} holds no plan", r.id))?;
            expected_reservations.push(plan.reservation);
            for l in &plan.links {
                *used.entry(l.as_str()).or_default() += plan.bandwidth;
            }
        }
        let mut held: Vec<_> = self.topology.reservations().map(|r| r.id).collect();
        expected_reservations.sort();
        held.sort();
        if held != expected_reservations {
            return Err(format!("reservations {held:?}, expected {expected_reservations:?}"));
        }
        for l in self.topology.links() {
            let want = l.capacity - used.get(l.id.as_str()).copied().unwrap_or(0);
            if l.residual_capacity != want {
                return Err(format!("link {} residual {} expected {want}", l.id, l.residual_capacity));
            }
        }
        Ok(())
    }
}

fn install_commands(plan: &InstallPlan) -> Vec<Command> {
    let domains = plan.domain_intents.iter().enumerate().map(|(i, d)| Command {
        intent: plan.intent_id,
        element: PlanElement::Domain(i),
        action: Action::CreateService { domain: d.clone() },
    });
    let devices = plan.device_rules.iter().map(|r| Command {
        intent: plan.intent_id,
        element: PlanElement::Device(r.device_id.clone()),
        action: Action::InstallRules { rules: r.clone() },
    });
    domains.chain(devices).collect()
}

fn remove_command(plan: &InstallPlan, element: &PlanElement, handle: Option<&str>) -> Option<Command> {
    let action = match element {
        PlanElement::Domain(i) => Action::DeleteService {
            domain_id: plan.domain_intents.get(*i)?.domain_id.clone(),
            // without a handle there is nothing the controller could delete
            uuid: handle?.to_string(),
        },
        PlanElement::Device(d) => Action::RemoveRules { device_id: d.clone(), cookie: plan.intent_id.0 },
    };
    Some(Command { intent: plan.intent_id, element: element.clone(), action })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GBPS;
    use crate::testbed::default_testbed;
    use std::sync::atomic::{AtomicU64, Ordering};
    use std::sync::Arc;

    fn book() -> IntentBook {
        let t = Arc::new(AtomicU64::new(0));
        IntentBook::new(
            default_testbed(),
            CompilerConfig::default(),
            Box::new(move || t.fetch_add(10, Ordering::SeqCst)),
        )
    }

    fn links(t: &Topology) -> Vec<crate::topology::Link> {
        t.links().cloned().collect()
    }

    fn sample() -> IntentRequest {
        crate::model::parse_intent_request(crate::model::SAMPLE_INTENT).unwrap()
    }

    fn ten_gig() -> IntentRequest {
        let mut r = sample();
        for c in &mut r.constraints {
            if let crate::model::Constraint::Bandwidth { bandwidth } = c {
                *bandwidth = 10 * GBPS;
            }
        }
        r
    }

    fn succeed_all(b: &mut IntentBook, cmds: Vec<Command>) {
        for c in cmds {
            let handle = match &c.action {
                Action::CreateService { .. } => Some(format!("svc-{}", c.intent)),
                _ => None,
            };
            assert!(b.on_driver_result(c.intent, &c.element, Outcome::Done { handle }).is_empty());
        }
    }

    #[test]
    fn record_json_round_trip() {
        let mut b = book();
        let id = b.submit(ten_gig()).unwrap();
        let cmds = b.compile(id).unwrap();
        succeed_all(&mut b, cmds);
        let r = b.record(id).unwrap();
        let text = serde_json::to_string(r).unwrap();
        assert!(text.contains(r#""timestamps":{"SUBMITTED":0"#), "{text}");
        let back: IntentRecord = serde_json::from_str(&text).unwrap();
        assert_eq!(&back, r);
    }

    #[test]
    fn transition_table() {
        let legal = IntentState::ALL
            .iter()
            .flat_map(|a| IntentState::ALL.iter().map(move |b| (*a, *b)))
            .filter(|(a, b)| is_legal_transition(*a, *b))
            .count();
        assert_eq!(legal, 7);
        assert!(!is_legal_transition(IntentState::Installed, IntentState::Failed));
    }

    #[test]
    fn sample_installs_and_withdraws() {
        let mut b = book();
        let id = b.submit(sample()).unwrap();
        let cmds = b.compile(id).unwrap();
        // two switches and two MACsec devices; only the latter get keys
        assert_eq!(cmds.len(), 4, "{cmds:?}");
        let keyed = cmds
            .iter()
            .filter(|c| matches!(&c.action, Action::InstallRules { rules } if rules.key.is_some()))
            .count();
        assert_eq!(keyed, 2);
        succeed_all(&mut b, cmds);
        let r = b.record(id).unwrap();
        assert_eq!(r.state, IntentState::Installed);
        assert!(r.compile_duration_us().unwrap() > 0);
        b.check_accounting().unwrap();

        let rm = b.withdraw(id).unwrap();
        assert_eq!(rm.len(), 4);
        assert!(rm.iter().all(|c| matches!(c.action, Action::RemoveRules { cookie, .. } if cookie == id.0)));
        succeed_all(&mut b, rm);
        let r = b.record(id).unwrap();
        assert_eq!(r.state, IntentState::Withdrawn);
        assert_eq!(r.history.len(), 6);
        assert_eq!(links(b.topology()), links(&default_testbed()));
    }

    #[test]
    fn schema_error_is_synchronous() {
        let mut b = book();
        let mut r = sample();
        r.two = r.one.clone();
        assert!(matches!(b.submit(r), Err(LifecycleError::Schema(_))));
        assert_eq!(b.records().count(), 0);
    }

    #[test]
    fn exhausted_aes_pair_fails_without_commands() {
        let mut b = book();
        let first = b.submit(ten_gig()).unwrap();
        let cmds = b.compile(first).unwrap();
        succeed_all(&mut b, cmds);
        let mut r = ten_gig();
        r.constraints.push(crate::model::Constraint::Latency { latency: 9 });
        let second = b.submit(r).unwrap();
        let before = b.topology().clone();
        assert!(b.compile(second).unwrap().is_empty());
        let rec = b.record(second).unwrap();
        assert_eq!(rec.state, IntentState::Failed);
        assert_eq!(rec.failure_reason.as_deref(), Some("no compliant layer"));
        assert!(rec.trace().is_some());
        assert_eq!(b.topology(), &before);
    }

    #[test]
    fn element_failure_rolls_back() {
        let mut b = book();
        let id = b.submit(ten_gig()).unwrap();
        let cmds = b.compile(id).unwrap();
        assert_eq!(cmds.len(), 3, "{cmds:?}");
        let domain = cmds.iter().find(|c| matches!(c.action, Action::CreateService { .. })).unwrap().clone();
        let switches: Vec<Command> = cmds.iter().filter(|c| c.element != domain.element).cloned().collect();
        // first switch succeeds, controller rejects, second switch succeeds late
        assert!(b.on_driver_result(id, &switches[0].element, Outcome::ok()).is_empty());
        let rollback = b.on_driver_result(id, &domain.element, Outcome::failed("rejected"));
        assert_eq!(rollback.len(), 1);
        assert_eq!(rollback[0].element, switches[0].element);
        assert_eq!(b.record(id).unwrap().state, IntentState::Failed);
        assert_eq!(links(b.topology()), links(&default_testbed()));
        let late = b.on_driver_result(id, &switches[1].element, Outcome::ok());
        assert_eq!(late.len(), 1);
        assert!(matches!(late[0].action, Action::RemoveRules { .. }));
        // duplicates are ignored
        assert!(b.on_driver_result(id, &switches[1].element, Outcome::ok()).is_empty());
        succeed_all(&mut b, rollback.into_iter().chain(late).collect());
        let r = b.record(id).unwrap();
        assert!(r.elements.values().all(|s| matches!(s, ElementStatus::Removed | ElementStatus::Failed { .. })));
        assert!(r.failure_reason.as_deref().unwrap().contains("rejected"));
        b.check_accounting().unwrap();
    }

    #[test]
    fn withdraw_errors() {
        let mut b = book();
        assert!(matches!(b.withdraw(IntentId(99)), Err(LifecycleError::NotFound(_))));
        let id = b.submit(sample()).unwrap();
        assert!(matches!(b.withdraw(id), Err(LifecycleError::State { .. })));
    }

    #[test]
    fn resubmit_after_withdraw() {
        let mut b = book();
        for _ in 0..2 {
            let id = b.submit(ten_gig()).unwrap();
            let cmds = b.compile(id).unwrap();
            succeed_all(&mut b, cmds);
            assert_eq!(b.record(id).unwrap().state, IntentState::Installed);
            let rm = b.withdraw(id).unwrap();
            succeed_all(&mut b, rm);
        }
    }

    #[test]
    fn removal_failure_still_withdraws() {
        let mut b = book();
        let id = b.submit(sample()).unwrap();
        let cmds = b.compile(id).unwrap();
        succeed_all(&mut b, cmds);
        let rm = b.withdraw(id).unwrap();
        b.on_driver_result(id, &rm[0].element, Outcome::failed("agent gone"));
        for c in &rm[1..] {
            b.on_driver_result(id, &c.element, Outcome::ok());
        }
        let r = b.record(id).unwrap();
        assert_eq!(r.state, IntentState::Withdrawn);
        assert_eq!(r.warnings.len(), 1);
        b.check_accounting().unwrap();
    }
}
