//! Report documents: a `#` header line carrying the timestamp, then pretty JSON.
//!
//! Everything after the header is a deterministic function of the resolved config.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use skrp_core::verify::{classify_model, Classification, SkrpSample};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::run::{Built, CheckResult};

pub const HEADER_PREFIX: &str = "# skrp report generated ";

#[derive(Debug, Clone, Serialize)]
pub struct ModelSummary {
    pub model: String,
    pub dim: Option<usize>,
    pub m: Option<usize>,
    pub a: Option<f64>,
    pub epsilon: Option<i32>,
    pub c: Option<f64>,
    pub kappa: Option<f64>,
    pub profile_family: Option<&'static str>,
    pub interval: Option<(f64, f64)>,
    pub endpoint_roots: Option<(bool, bool)>,
    pub r_range: Option<(f64, f64)>,
}

impl ModelSummary {
    pub fn of(cfg: &RunConfig, built: &Built) -> Self {
        let profile = built.profile();
        let mut s = ModelSummary {
            model: cfg.model.name().into(),
            dim: None,
            m: None,
            a: None,
            epsilon: None,
            c: None,
            kappa: None,
            profile_family: profile.map(|p| p.spec.family_name()),
            interval: profile.map(|p| p.interval),
            endpoint_roots: profile.map(|p| p.endpoint_roots),
            r_range: None,
        };
        if let Some(chart) = built.chart() {
            let meta = &chart.meta;
            s.dim = Some(chart.n);
            s.m = Some(meta.m);
            s.a = meta.a;
            s.epsilon = Some(meta.epsilon);
            s.c = meta.c;
            s.kappa = meta.kappa;
        }
        match built {
            Built::Chart(m) => s.r_range = m.r_range,
            Built::Ball(b) => s.a = Some(b.table.a),
            Built::Sphere(_) => {}
        }
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub total: usize,
    pub failed: usize,
    pub pass: bool,
}

impl Summary {
    pub fn of(checks: &[CheckResult]) -> Self {
        let failed = checks.iter().filter(|c| !c.pass).count();
        Summary { total: checks.len(), failed, pass: failed == 0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: RunConfig,
    pub model: ModelSummary,
    pub classification: Option<Classification>,
    pub checks: Vec<CheckResult>,
    pub samples: Vec<SkrpSample>,
    pub summary: Summary,
}

impl Report {
    pub fn new(config: RunConfig, built: &Built, checks: Vec<CheckResult>, samples: Vec<SkrpSample>) -> Self {
        let model = ModelSummary::of(&config, built);
        let classification = built.chart().and_then(|c| classify_model(&c.meta).ok());
        let summary = Summary::of(&checks);
        Report { tool: "skrp", version: env!("CARGO_PKG_VERSION"), config, model, classification, checks, samples, summary }
    }
}

fn header() -> String {
    format!("{HEADER_PREFIX}{}", chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true))
}

/// Serializes `body` behind the header line.
pub fn render<T: Serialize>(body: &T) -> Result<String, CliError> {
    let json = serde_json::to_string_pretty(body).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(format!("{}\n{json}\n", header()))
}

pub fn write_document<T: Serialize>(body: &T, path: Option<&Path>) -> Result<(), CliError> {
    let text = render(body)?;
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Parses a report file, skipping leading `#` lines.
pub fn read_report(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let body: String = text.lines().skip_while(|l| l.starts_with('#')).collect::<Vec<_>>().join("\n");
    serde_json::from_str(&body).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn fmt_num(v: &Value) -> String {
    match v.as_f64() {
        Some(x) => format!("{x:.3e}"),
        None => "-".into(),
    }
}

/// Plain-text table of the checks in a report.
pub fn summary_table(report: &Value) -> Result<String, CliError> {
    let checks = report
        .get("checks")
        .and_then(Value::as_array)
        .ok_or_else(|| CliError::Config("report has no `checks` array".into()))?;
    let name_w = checks.iter().filter_map(|c| c["name"].as_str()).map(str::len).max().unwrap_or(5).max(5);
    let mut out = String::new();
    let title = report.pointer("/config/name").and_then(Value::as_str).unwrap_or("run");
    let model = report.pointer("/model/model").and_then(Value::as_str).unwrap_or("?");
    writeln!(out, "{title} ({model})").unwrap();
    writeln!(out, "{:<name_w$}  {:>10}  {:>10}  {:<5}  status", "check", "residual", "tolerance", "bound").unwrap();
    for c in checks {
        let status = if c["pass"].as_bool() == Some(true) { "pass" } else { "FAIL" };
        write!(
            out,
            "{:<name_w$}  {:>10}  {:>10}  {:<5}  {status}",
            c["name"].as_str().unwrap_or("?"),
            fmt_num(&c["residual"]),
            fmt_num(&c["tolerance"]),
            c["bound"].as_str().unwrap_or("?"),
        )
        .unwrap();
        if let Some(note) = c.get("note").and_then(Value::as_str).filter(|n| !n.is_empty()) {
            write!(out, "  ({note})").unwrap();
        }
        out.push('\n');
    }
    let failed = report.pointer("/summary/failed").and_then(Value::as_u64).unwrap_or(0);
    writeln!(out, "{} checks, {failed} failed", checks.len()).unwrap();
    Ok(out)
}
