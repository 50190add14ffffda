//! Spec-file front end for `walkerlab-core`: loads problem specs, runs
//! check suites and renders reports.

pub mod report;
pub mod runner;
pub mod spec;

use std::collections::BTreeMap;

use serde::Serialize;
use walkerlab_core::{ChartSplit, MetricField};

use report::Format;

#[derive(Serialize)]
struct MetricDocument {
    kind: &'static str,
    n: usize,
    r: usize,
    middle: usize,
    components: BTreeMap<String, String>,
}

/// The nonzero components of `g`. The structured form is itself a metric
/// spec that `check` accepts.
pub fn render_metric(g: &MetricField, format: Format) -> String {
    let n = g.dim();
    let r = g.chart().trailing_dim();
    let middle = match g.chart() {
        ChartSplit::Walker { .. } => g.chart().middle_dim(),
        ChartSplit::TwoBlock { .. } => n - 2 * r,
    };
    let mut nonzero: Vec<(usize, usize, String)> = g
        .components()
        .iter()
        .filter(|(_, _, f)| !f.is_zero())
        .map(|(i, j, f)| (i + 1, j + 1, f.to_string()))
        .collect();
    nonzero.sort_by_key(|&(i, j, _)| (i, j));
    match format {
        Format::ReportText => {
            let mut out = format!("# n = {n}, r = {r}, middle = {middle}\n");
            for (i, j, text) in &nonzero {
                out.push_str(&format!("g_{i}_{j} = {text}\n"));
            }
            out
        }
        Format::ReportStructured => {
            // zero-padded keys keep the map in index order
            let width = n.to_string().len();
            let components = nonzero
                .into_iter()
                .map(|(i, j, text)| (format!("g_{i:0width$}_{j:0width$}"), text))
                .collect();
            let doc = MetricDocument { kind: "metric", n, r, middle, components };
            let mut s = serde_json::to_string_pretty(&doc).expect("metric serializes");
            s.push('\n');
            s
        }
    }
}
