//! Check reports and their two renderings.
//!
//! Reports carry no timing information, so a fixed spec and seed always
//! produce the same bytes.

use std::fmt::Write as _;

use serde::Serialize;

use walkerlab_core::{CheckEntry, Residual};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    ReportText,
    ReportStructured,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub residual: Option<f64>,
    pub pass: bool,
    pub worst_point: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CheckRecord {
    pub fn from_residual(name: impl Into<String>, residual: &Residual, tolerance: f64) -> Self {
        let name = name.into();
        if !residual.value.is_finite() {
            return Self {
                name,
                residual: None,
                pass: false,
                worst_point: residual.worst_point.as_ref().map(|p| p.coords().to_vec()),
                error: Some("non-finite residual".into()),
            };
        }
        Self {
            name,
            residual: Some(residual.value),
            pass: residual.passes(tolerance),
            worst_point: residual.worst_point.as_ref().map(|p| p.coords().to_vec()),
            error: None,
        }
    }

    pub fn from_entry(prefix: &str, entry: &CheckEntry) -> Self {
        let residual = Residual { value: entry.residual, worst_point: entry.worst_point.clone() };
        let mut rec = Self::from_residual(format!("{prefix}: {}", entry.name), &residual, entry.tolerance);
        rec.pass &= entry.pass;
        rec
    }

    pub fn error(name: impl Into<String>, message: impl Into<String>) -> Self {
        Self { name: name.into(), residual: None, pass: false, worst_point: None, error: Some(message.into()) }
    }
}

/// The transported vector at the end of the curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportSummary {
    pub t_end: f64,
    pub w_end: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub spec: String,
    pub seed: u64,
    pub tolerance: f64,
    pub checks: Vec<CheckRecord>,
    pub verdict: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transport: Option<TransportSummary>,
}

impl Report {
    pub fn new(spec: String, seed: u64, tolerance: f64, checks: Vec<CheckRecord>) -> Self {
        let verdict = checks.iter().all(|c| c.pass);
        Self { spec, seed, tolerance, checks, verdict, transport: None }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::ReportStructured => {
                let mut s = serde_json::to_string_pretty(self).expect("report serializes");
                s.push('\n');
                s
            }
            Format::ReportText => self.to_text(),
        }
    }

    fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "spec       {}", self.spec);
        let _ = writeln!(out, "seed       {}", self.seed);
        let _ = writeln!(out, "tolerance  {:e}", self.tolerance);
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &self.checks {
            let tag = if c.pass { "PASS" } else { "FAIL" };
            let _ = write!(out, "[{tag}] {:width$}", c.name);
            match (&c.error, c.residual) {
                (Some(e), _) => {
                    let _ = write!(out, "  error: {e}");
                }
                (None, Some(r)) => {
                    let _ = write!(out, "  residual {r:.3e}");
                }
                (None, None) => {}
            }
            if let (false, Some(p)) = (c.pass, &c.worst_point) {
                let coords: Vec<String> = p.iter().map(|v| format!("{v:.6}")).collect();
                let _ = write!(out, "  at ({})", coords.join(", "));
            }
            out.push('\n');
        }
        if let Some(t) = &self.transport {
            let w: Vec<String> = t.w_end.iter().map(|v| format!("{v:.12e}")).collect();
            let _ = writeln!(out, "w({}) = [{}]", t.t_end, w.join(", "));
        }
        let _ = writeln!(out, "verdict    {}", if self.verdict { "PASS" } else { "FAIL" });
        out
    }
}
