//! Random interleavings of submissions, driver results and withdrawals
//! against an `IntentBook`, checking state and accounting after every step.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use mlso_core::compiler::{CompilerConfig, IntentId};
use mlso_core::lifecycle::{is_legal_transition, Action, Command, IntentBook, IntentState, Outcome};
use mlso_core::model::{parse_intent_request, Constraint, IntentRequest, GBPS, MBPS, SAMPLE_INTENT};
use mlso_core::testbed::default_testbed;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn request(rng: &mut impl Rng) -> IntentRequest {
    let mut r = parse_intent_request(SAMPLE_INTENT).unwrap();
    let bw = *[10 * MBPS, 2 * GBPS, 10 * GBPS, 40 * GBPS].choose(rng).unwrap();
    for c in &mut r.constraints {
        if let Constraint::Bandwidth { bandwidth } = c {
            *bandwidth = bw;
        }
    }
    if rng.gen_bool(0.25) {
        r.constraints.retain(|c| *c != Constraint::Encryption);
    }
    if rng.gen_bool(0.15) {
        r.constraints.push(Constraint::Latency { latency: rng.gen_range(5..=30) });
    }
    r
}

pub fn check_histories(book: &IntentBook) -> Result<(), String> {
    for r in book.records() {
        if r.history.first() != Some(&IntentState::Submitted) {
            return Err(format!("intent {} history starts with {:?}", r.id, r.history.first()));
        }
        for w in r.history.windows(2) {
            if !is_legal_transition(w[0], w[1]) {
                return Err(format!("intent {}: illegal {} -> {}", r.id, w[0], w[1]));
            }
        }
        if r.history.last() != Some(&r.state) {
            return Err(format!("intent {} state {} disagrees with history", r.id, r.state));
        }
        let mut prev = 0;
        for s in &r.history {
            let t = r.timestamps[s];
            if t < prev {
                return Err(format!("intent {} timestamps not monotone", r.id));
            }
            prev = t;
        }
    }
    Ok(())
}

/// After everything settled: residual = capacity − Σ bandwidth of
/// INSTALLED intents on each link.
pub fn check_conservation(book: &IntentBook) -> Result<(), String> {
    let mut used: BTreeMap<String, u64> = BTreeMap::new();
    for r in book.records().filter(|r| r.state == IntentState::Installed) {
        let plan = r.plan.as_ref().unwrap();
        for l in &plan.links {
            *used.entry(l.clone()).or_default() += plan.bandwidth;
        }
    }
    for l in book.topology().links() {
        let want = l.capacity - used.get(&l.id).copied().unwrap_or(0);
        if l.residual_capacity != want {
            return Err(format!("link {}: residual {} expected {want}", l.id, l.residual_capacity));
        }
    }
    Ok(())
}

pub struct RunSummary {
    pub steps: usize,
    pub installed: usize,
    pub failed: usize,
    pub withdrawn: usize,
}

pub fn run(seed: u64, steps: usize) -> Result<RunSummary, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clock = Arc::new(AtomicU64::new(0));
    let c = clock.clone();
    let mut book = IntentBook::new(
        default_testbed(),
        CompilerConfig::default(),
        Box::new(move || c.fetch_add(1, Ordering::SeqCst)),
    );
    let mut submitted: Vec<IntentId> = Vec::new();
    let mut pending: Vec<Command> = Vec::new();
    let mut delivered: Vec<(Command, Outcome)> = Vec::new();
    let outcome_for = |rng: &mut ChaCha8Rng, c: &Command| {
        if rng.gen_bool(0.15) {
            Outcome::failed("injected")
        } else if let Action::CreateService { .. } = c.action {
            Outcome::with_handle(format!("svc-{}-{}", c.intent, rng.gen::<u32>()))
        } else {
            Outcome::ok()
        }
    };
    for _ in 0..steps {
        match rng.gen_range(0..10) {
            0 | 1 => {
                let id = book.submit(request(&mut rng)).map_err(|e| e.to_string())?;
                submitted.push(id);
            }
            2 => {
                let ready: Vec<IntentId> =
                    submitted.iter().copied().filter(|i| book.record(*i).unwrap().state == IntentState::Submitted).collect();
                if let Some(id) = ready.choose(&mut rng) {
                    pending.extend(book.compile(*id).map_err(|e| e.to_string())?);
                }
            }
            3 => {
                let installed: Vec<IntentId> =
                    submitted.iter().copied().filter(|i| book.record(*i).unwrap().state == IntentState::Installed).collect();
                if let Some(id) = installed.choose(&mut rng) {
                    pending.extend(book.withdraw(*id).map_err(|e| e.to_string())?);
                }
            }
            4 => {
                // stale or duplicate result
                if let Some((c, o)) = delivered.choose(&mut rng).cloned() {
                    pending.extend(book.on_driver_result(c.intent, &c.element, o));
                }
            }
            _ => {
                if !pending.is_empty() {
                    let c = pending.swap_remove(rng.gen_range(0..pending.len()));
                    let o = outcome_for(&mut rng, &c);
                    pending.extend(book.on_driver_result(c.intent, &c.element, o.clone()));
                    delivered.push((c, o));
                }
            }
        }
        check_histories(&book)?;
        book.check_accounting()?;
    }
    // settle: deliver everything still outstanding, successfully
    while let Some(c) = pending.pop() {
        let o = if let Action::CreateService { .. } = c.action { Outcome::with_handle("late") } else { Outcome::ok() };
        pending.extend(book.on_driver_result(c.intent, &c.element, o));
        check_histories(&book)?;
        book.check_accounting()?;
    }
    for r in book.records() {
        if matches!(r.state, IntentState::Installing | IntentState::Withdrawing | IntentState::Compiling) {
            return Err(format!("intent {} stuck in {}", r.id, r.state));
        }
    }
    check_conservation(&book)?;
    let count = |s| book.records().filter(|r| r.state == s).count();
    Ok(RunSummary {
        steps,
        installed: count(IntentState::Installed),
        failed: count(IntentState::Failed),
        withdrawn: count(IntentState::Withdrawn),
    })
}
