//! Browser demo over the pure orchestration logic. Every export takes plain
//! numbers and strings and returns a JSON document; the same functions are
//! callable natively.

use std::collections::BTreeSet;
use std::fmt::Write;

use mlso_core::compiler::{compile, evaluate_layers, CompilerConfig, InstallPlan, IntentId, LayerVerdict, ValidatedIntent};
use mlso_core::config::Config;
use mlso_core::model::{parse_intent_request, Constraint, EncryptionLayer, IntentRequest, MBPS, SAMPLE_INTENT};
use mlso_core::stats::{summarize, SummaryStats};
use mlso_core::testbed::*;
use mlso_core::timing::{DelayModel, Operation, Technology};
use mlso_core::topology::Topology;
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct SelectionView {
    pub chosen: Option<EncryptionLayer>,
    pub verdicts: Vec<LayerVerdict>,
}

/// Picks a layer for a request of `bandwidth_mbps` given the offered layers
/// (comma separated, e.g. "physical,macsec").
pub fn select(bandwidth_mbps: f64, max_latency_us: Option<u32>, offered: &str, allow_ipsec: bool) -> Result<SelectionView, String> {
    let available = parse_layers(offered)?;
    let mut policy = CompilerConfig::default().policy;
    policy.allow_ipsec = allow_ipsec;
    let s = evaluate_layers(to_bps(bandwidth_mbps)?, max_latency_us.map(u64::from), &available, &policy);
    Ok(SelectionView { chosen: s.chosen, verdicts: s.verdicts })
}

fn parse_layers(text: &str) -> Result<BTreeSet<EncryptionLayer>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            EncryptionLayer::ENCRYPTING
                .into_iter()
                .find(|l| l.name().eq_ignore_ascii_case(s))
                .ok_or_else(|| format!("unknown layer {s:?}"))
        })
        .collect()
}

fn to_bps(mbps: f64) -> Result<u64, String> {
    if mbps.is_finite() && mbps > 0.0 && mbps <= 1e6 {
        Ok((mbps * MBPS as f64).round() as u64)
    } else {
        Err(format!("bandwidth must be in (0, 1000000] Mb/s, got {mbps}"))
    }
}

/// The sample intent with the given bandwidth, encryption flag and bound.
pub fn request(bandwidth_mbps: f64, encrypted: bool, max_latency_us: Option<u32>) -> Result<IntentRequest, String> {
    let mut r = parse_intent_request(SAMPLE_INTENT).map_err(|e| e.to_string())?;
    let bps = to_bps(bandwidth_mbps)?;
    for c in &mut r.constraints {
        if let Constraint::Bandwidth { bandwidth } = c {
            *bandwidth = bps;
        }
    }
    if !encrypted {
        r.constraints.retain(|c| !matches!(c, Constraint::Encryption));
    }
    if let Some(l) = max_latency_us {
        r.constraints.push(Constraint::Latency { latency: u64::from(l) });
    }
    Ok(r)
}

#[derive(Debug, Serialize)]
pub struct CompileView {
    pub ok: bool,
    pub layer: Option<EncryptionLayer>,
    pub reason: Option<String>,
    pub devices: Vec<String>,
    pub links: Vec<String>,
    pub latency_us: Option<u64>,
    pub domain_intents: usize,
    pub encrypted_domain_intents: usize,
    pub keyed_devices: Vec<String>,
    pub trace: Vec<String>,
    pub svg: String,
}

fn compile_request(r: IntentRequest) -> Result<(Topology, Result<InstallPlan, mlso_core::compiler::CompileError>), String> {
    let v = ValidatedIntent::new(IntentId(1), r).map_err(|e| e.to_string())?;
    let mut t = default_testbed();
    let plan = compile(&v, &mut t, &CompilerConfig::default());
    Ok((t, plan))
}

/// Compiles the sample intent, varied as asked, against the testbed.
pub fn compile_on_testbed(bandwidth_mbps: f64, encrypted: bool, max_latency_us: Option<u32>) -> Result<CompileView, String> {
    let (t, plan) = compile_request(request(bandwidth_mbps, encrypted, max_latency_us)?)?;
    Ok(match plan {
        Ok(p) => CompileView {
            ok: true,
            layer: Some(p.layer),
            reason: None,
            svg: render_svg(&t, &p.links, Some(p.layer)),
            devices: p.devices.clone(),
            links: p.links.clone(),
            latency_us: Some(p.latency_us),
            domain_intents: p.domain_intents.len(),
            encrypted_domain_intents: p.domain_intents.iter().filter(|d| d.encryption).count(),
            keyed_devices: p.device_rules.iter().filter(|r| r.key.is_some()).map(|r| r.device_id.clone()).collect(),
            trace: p.trace.lines(),
        },
        Err(e) => CompileView {
            ok: false,
            layer: None,
            reason: Some(e.reason()),
            svg: render_svg(&t, &[], None),
            devices: Vec::new(),
            links: Vec::new(),
            latency_us: None,
            domain_intents: 0,
            encrypted_domain_intents: 0,
            keyed_devices: Vec::new(),
            trace: e.trace.lines(),
        },
    })
}

const LAYOUT: [(&str, f64, f64); 9] = [
    (HOST1, 40.0, 200.0),
    (OVS1, 160.0, 200.0),
    (MACSEC1, 300.0, 70.0),
    (MACSEC2, 540.0, 70.0),
    (ROADM_A, 300.0, 290.0),
    (ROADM_B, 540.0, 290.0),
    (ROADM_C, 420.0, 390.0),
    (OVS2, 680.0, 200.0),
    (HOST2, 800.0, 200.0),
];

fn position(device: &str) -> (f64, f64) {
    LAYOUT.iter().find(|(d, _, _)| *d == device).map_or((0.0, 0.0), |(_, x, y)| (*x, *y))
}

fn layer_colour(layer: Option<EncryptionLayer>) -> &'static str {
    match layer {
        Some(EncryptionLayer::Physical) => "#c0392b",
        Some(EncryptionLayer::Macsec) => "#2874a6",
        Some(EncryptionLayer::Ipsec) => "#7d3c98",
        _ => "#1e8449",
    }
}

/// Testbed drawing with `path` links highlighted.
pub fn render_svg(t: &Topology, path: &[String], layer: Option<EncryptionLayer>) -> String {
    let mut s = String::from(r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 840 430" font-family="sans-serif" font-size="11">"#);
    // parallel links between the same two devices are fanned out
    let mut seen: Vec<(String, String)> = Vec::new();
    for l in t.links() {
        let (a, b) = (l.src.element_id.clone(), l.dst.element_id.clone());
        let nth = seen.iter().filter(|p| **p == (a.clone(), b.clone())).count() as f64;
        seen.push((a.clone(), b.clone()));
        let ((x1, y1), (x2, y2)) = (position(&a), position(&b));
        let (dx, dy) = (x2 - x1, y2 - y1);
        let len = (dx * dx + dy * dy).sqrt().max(1.0);
        let (ox, oy) = (-dy / len * 8.0 * nth, dx / len * 8.0 * nth);
        let on_path = path.contains(&l.id);
        let (colour, width) = if on_path { (layer_colour(layer), 4) } else { ("#bbb", 1) };
        let _ = write!(
            s,
            r#"<line x1="{:.0}" y1="{:.0}" x2="{:.0}" y2="{:.0}" stroke="{colour}" stroke-width="{width}"><title>{}</title></line>"#,
            x1 + ox,
            y1 + oy,
            x2 + ox,
            y2 + oy,
            l.id
        );
    }
    for d in t.devices() {
        let (x, y) = position(&d.id);
        let fill = match d.kind.native_capability() {
            Some(EncryptionLayer::Physical) => "#fadbd8",
            Some(EncryptionLayer::Macsec) => "#d6eaf8",
            _ => "#f4f6f6",
        };
        let label = if d.id.len() > 10 { &d.id[..8] } else { d.id.as_str() };
        let _ = write!(
            s,
            r##"<circle cx="{x:.0}" cy="{y:.0}" r="22" fill="{fill}" stroke="#555"/><text x="{x:.0}" y="{:.0}" text-anchor="middle">{label}</text>"##,
            y + 38.0
        );
    }
    s.push_str("</svg>");
    s
}

#[derive(Debug, Serialize)]
pub struct TimingView {
    pub layer: EncryptionLayer,
    pub elements: usize,
    pub install_s: SummaryStats,
    pub delete_s: SummaryStats,
}

/// Equipment-time install and delete durations of the compiled plan. The
/// plan's elements are configured in parallel, so each trial takes the
/// slowest element.
pub fn simulate(bandwidth_mbps: f64, encrypted: bool, trials: u32, jitter: f64, seed: u32) -> Result<TimingView, String> {
    if trials == 0 || trials > 100_000 {
        return Err("trials must be in 1..=100000".into());
    }
    if !(0.0..1.0).contains(&jitter) {
        return Err("jitter must be in [0, 1)".into());
    }
    let (_, plan) = compile_request(request(bandwidth_mbps, encrypted, None)?)?;
    let plan = plan.map_err(|e| e.reason())?;
    let mut config = Config::default();
    config.simnet.time_scale = 1.0;
    config.simnet.jitter = jitter;
    let mut model = DelayModel::new(config.timing_profiles(), u64::from(seed));
    let techs: Vec<Technology> = plan
        .domain_intents
        .iter()
        .map(|d| Technology::optical(d.encryption))
        .chain(plan.device_rules.iter().map(|_| Technology::MacsecEthernet))
        .collect();
    let mut trial = |op: Operation| -> Vec<f64> {
        (0..trials)
            .map(|_| techs.iter().map(|t| model.draw(*t, op).as_secs_f64()).fold(0.0, f64::max))
            .collect()
    };
    let installs = trial(Operation::Install);
    let deletes = trial(Operation::Delete);
    Ok(TimingView {
        layer: plan.layer,
        elements: techs.len(),
        install_s: summarize(&installs).map_err(|e| e.to_string())?,
        delete_s: summarize(&deletes).map_err(|e| e.to_string())?,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn select_layer(bandwidth_mbps: f64, max_latency_us: Option<u32>, offered: &str, allow_ipsec: bool) -> Result<String, JsError> {
    to_js(select(bandwidth_mbps, max_latency_us, offered, allow_ipsec))
}

#[wasm_bindgen]
pub fn compile_testbed(bandwidth_mbps: f64, encrypted: bool, max_latency_us: Option<u32>) -> Result<String, JsError> {
    to_js(compile_on_testbed(bandwidth_mbps, encrypted, max_latency_us))
}

#[wasm_bindgen]
pub fn simulate_timing(bandwidth_mbps: f64, encrypted: bool, trials: u32, jitter: f64, seed: u32) -> Result<String, JsError> {
    to_js(simulate(bandwidth_mbps, encrypted, trials, jitter, seed))
}
