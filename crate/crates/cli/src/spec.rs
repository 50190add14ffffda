//! Problem spec files.
//!
//! A spec is a JSON object. Component keys use 1-based chart indices,
//! either separated (`g_1_4`, `D_1_1_2`) or packed when every index is a
//! single digit (`g_14`, `D_1_12`, `D_112`).

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Deserialize;
use thiserror::Error;

use walkerlab_core::chart::{ChartSplit, MetricField, SymMatrix};
use walkerlab_core::connection::ConnectionField;
use walkerlab_core::extension::{ExtensionSpec, OneFormSection};
use walkerlab_core::transport::CurveSpec;
use walkerlab_core::ScalarField;

pub const DEFAULT_SAMPLES: usize = 100;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("cannot read {path}")]
    Io { path: String, source: std::io::Error },

    #[error("malformed spec at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },

    #[error("unknown key `{0}`")]
    UnknownKey(String),

    #[error("index out of range in `{key}`: {detail}")]
    IndexOutOfRange { key: String, detail: String },

    #[error("`{key}` and `{other}` name the same component with different expressions")]
    AsymmetricDuplicate { key: String, other: String },

    #[error("in `{key}`")]
    Expression { key: String, source: walkerlab_core::Error },

    #[error("unknown check `{0}`")]
    UnknownCheck(String),

    #[error("invalid spec: {0}")]
    Invalid(String),
}

type Result<T, E = SpecError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    WalkerForm,
    Null,
    Parallel,
    WalkerProjectability,
    Projectable,
    CurvatureCondition,
    MetricCompatibility,
    Bianchi,
    ProjectedConnection,
    VerticalMetric,
    TransformationRule,
    Isometry,
    NormDrift,
    ProjectionCommutes,
}

impl Check {
    pub const ALL: [Check; 14] = [
        Check::WalkerForm,
        Check::Null,
        Check::Parallel,
        Check::WalkerProjectability,
        Check::Projectable,
        Check::CurvatureCondition,
        Check::MetricCompatibility,
        Check::Bianchi,
        Check::ProjectedConnection,
        Check::VerticalMetric,
        Check::TransformationRule,
        Check::Isometry,
        Check::NormDrift,
        Check::ProjectionCommutes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::WalkerForm => "walker_form",
            Check::Null => "null",
            Check::Parallel => "parallel",
            Check::WalkerProjectability => "walker_projectability",
            Check::Projectable => "projectable",
            Check::CurvatureCondition => "curvature_condition",
            Check::MetricCompatibility => "metric_compatibility",
            Check::Bianchi => "bianchi",
            Check::ProjectedConnection => "projected_connection",
            Check::VerticalMetric => "vertical_metric",
            Check::TransformationRule => "transformation_rule",
            Check::Isometry => "isometry",
            Check::NormDrift => "norm_drift",
            Check::ProjectionCommutes => "projection_commutes",
        }
    }

    pub fn from_name(name: &str) -> Option<Check> {
        Check::ALL.into_iter().find(|c| c.name() == name)
    }

    pub fn metric_defaults() -> Vec<Check> {
        vec![
            Check::WalkerForm,
            Check::Null,
            Check::Parallel,
            Check::WalkerProjectability,
            Check::Projectable,
            Check::CurvatureCondition,
        ]
    }

    pub fn extension_defaults() -> Vec<Check> {
        vec![
            Check::Null,
            Check::Parallel,
            Check::Projectable,
            Check::CurvatureCondition,
            Check::ProjectedConnection,
            Check::VerticalMetric,
            Check::TransformationRule,
        ]
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampling {
    pub count: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for Sampling {
    fn default() -> Self {
        Self { count: DEFAULT_SAMPLES, seed: DEFAULT_SEED, tolerance: DEFAULT_TOLERANCE }
    }
}

#[derive(Debug, Clone)]
pub struct Transport {
    pub curve: CurveSpec,
    pub w0: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum Problem {
    Metric(MetricField),
    Extension { spec: ExtensionSpec, omega: OneFormSection },
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub problem: Problem,
    pub checks: Vec<Check>,
    pub sampling: Sampling,
    pub transport: Option<Transport>,
}

impl ProblemSpec {
    pub fn dim(&self) -> usize {
        match &self.problem {
            Problem::Metric(g) => g.dim(),
            Problem::Extension { spec, .. } => spec.dim(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    kind: Kind,
    n: Option<usize>,
    r: usize,
    middle: Option<usize>,
    m: Option<usize>,
    #[serde(default)]
    components: BTreeMap<String, String>,
    g_ia: Option<Vec<Vec<f64>>>,
    omega: Option<Vec<String>>,
    checks: Option<Vec<String>>,
    #[serde(default)]
    sampling: RawSampling,
    transport: Option<RawTransport>,
}

#[derive(Debug, Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum Kind {
    Metric,
    Extension,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSampling {
    count: Option<usize>,
    seed: Option<u64>,
    tolerance: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTransport {
    curve: Vec<String>,
    #[serde(default = "default_parameter")]
    parameter: String,
    w0: Vec<f64>,
    t_span: [f64; 2],
    step: f64,
}

fn default_parameter() -> String {
    "t".into()
}

pub fn load_spec(path: &Path) -> Result<ProblemSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| SpecError::Io { path: path.display().to_string(), source })?;
    parse_spec(&text)
}

pub fn parse_spec(text: &str) -> Result<ProblemSpec> {
    let raw: RawSpec = serde_json::from_str(text).map_err(|e| {
        let message = e.to_string();
        // serde reports unknown fields as data errors; surface them by name
        if let Some(rest) = message.strip_prefix("unknown field `") {
            if let Some(end) = rest.find('`') {
                return SpecError::UnknownKey(rest[..end].to_string());
            }
        }
        SpecError::Syntax { line: e.line(), column: e.column(), message }
    })?;
    build(raw)
}

fn build(raw: RawSpec) -> Result<ProblemSpec> {
    let defaults = Sampling::default();
    let sampling = Sampling {
        count: raw.sampling.count.unwrap_or(defaults.count),
        seed: raw.sampling.seed.unwrap_or(defaults.seed),
        tolerance: raw.sampling.tolerance.unwrap_or(defaults.tolerance),
    };
    if sampling.count == 0 {
        return Err(SpecError::Invalid("sampling.count must be positive".into()));
    }
    if !(sampling.tolerance >= 0.0) {
        return Err(SpecError::Invalid("sampling.tolerance must be a non-negative number".into()));
    }
    let problem = match raw.kind {
        Kind::Metric => metric_problem(&raw)?,
        Kind::Extension => extension_problem(&raw)?,
    };
    let checks = match &raw.checks {
        Some(names) => names
            .iter()
            .map(|n| Check::from_name(n).ok_or_else(|| SpecError::UnknownCheck(n.clone())))
            .collect::<Result<Vec<_>>>()?,
        None => match raw.kind {
            Kind::Metric => Check::metric_defaults(),
            Kind::Extension => Check::extension_defaults(),
        },
    };
    let mut spec = ProblemSpec { problem, checks, sampling, transport: None };
    if let Some(t) = &raw.transport {
        spec.transport = Some(transport(t, spec.dim())?);
    }
    Ok(spec)
}

fn metric_problem(raw: &RawSpec) -> Result<Problem> {
    for (key, present) in [("m", raw.m.is_some()), ("g_ia", raw.g_ia.is_some()), ("omega", raw.omega.is_some())] {
        if present {
            return Err(SpecError::Invalid(format!("`{key}` only applies to extension specs")));
        }
    }
    let n = raw.n.ok_or_else(|| SpecError::Invalid("metric specs need `n`".into()))?;
    if let Some(mid) = raw.middle {
        if 2 * raw.r + mid != n {
            return Err(SpecError::Invalid(format!("n = {n} does not equal 2r + middle = {}", 2 * raw.r + mid)));
        }
    }
    let chart = ChartSplit::walker(n, raw.r).map_err(|e| SpecError::Invalid(e.to_string()))?;
    let mut entries = ComponentTable::new();
    for (key, text) in &raw.components {
        let (prefix, idx) = split_key(key)?;
        if prefix != "g" {
            return Err(SpecError::UnknownKey(key.clone()));
        }
        let idx = indices(key, idx, 2)?;
        check_range(key, &idx, 1..=n)?;
        let f = expression(key, text, n)?;
        entries.insert(key, normalize(&idx), f)?;
    }
    let g = MetricField::from_fn(chart, |i, j| entries.get(&[i + 1, j + 1]).unwrap_or_else(|| ScalarField::zero(n)))
        .map_err(|e| SpecError::Invalid(e.to_string()))?;
    Ok(Problem::Metric(g))
}

fn extension_problem(raw: &RawSpec) -> Result<Problem> {
    if raw.n.is_some() || raw.middle.is_some() {
        return Err(SpecError::Invalid("extension specs take `r` and `m`, not `n` or `middle`".into()));
    }
    let r = raw.r;
    let m = raw.m.unwrap_or(0);
    if r == 0 {
        return Err(SpecError::Invalid("r must be positive".into()));
    }
    let fiber = r + m;
    let mut d = ComponentTable::new();
    let mut lambda = ComponentTable::new();
    for (key, text) in &raw.components {
        let (prefix, idx) = split_key(key)?;
        match prefix {
            "D" => {
                let idx = indices(key, idx, 3)?;
                check_range(key, &idx, 1..=r)?;
                d.insert(key, normalize(&idx), expression(key, text, r)?)?;
            }
            "lambda" => {
                let idx = indices(key, idx, 2)?;
                check_range(key, &idx, 1..=fiber)?;
                if idx[0] > r && idx[1] > r {
                    return Err(SpecError::IndexOutOfRange {
                        key: key.clone(),
                        detail: format!("the block {}..={fiber} belongs to h", r + 1),
                    });
                }
                lambda.insert(key, normalize(&idx), expression(key, text, fiber)?)?;
            }
            "h" => {
                let idx = indices(key, idx, 2)?;
                check_range(key, &idx, r + 1..=fiber)?;
                lambda.insert(key, normalize(&idx), expression(key, text, fiber)?)?;
            }
            _ => return Err(SpecError::UnknownKey(key.clone())),
        }
    }
    let base = ConnectionField::from_fn(r, |l, j, k| d.get(&[l + 1, j + 1, k + 1]).unwrap_or_else(|| ScalarField::zero(r)))
    .map_err(|e| SpecError::Invalid(e.to_string()))?;
    let lam = SymMatrix::from_fn(fiber, |i, j| lambda.get(&[i + 1, j + 1]).unwrap_or_else(|| ScalarField::zero(fiber)));
    let g_ia = match &raw.g_ia {
        None => None,
        Some(rows) => {
            if rows.len() != r || rows.iter().any(|row| row.len() != r) {
                return Err(SpecError::Invalid(format!("g_ia must have {r} rows of {r} entries")));
            }
            Some(DMatrix::from_fn(r, r, |i, a| rows[i][a]))
        }
    };
    let spec = ExtensionSpec::new(r, m, base, lam, g_ia).map_err(|e| SpecError::Invalid(e.to_string()))?;
    let omega = match &raw.omega {
        None => default_omega(r, m),
        Some(texts) => {
            if texts.len() != r {
                return Err(SpecError::Invalid(format!("omega needs {r} components")));
            }
            let comps = texts
                .iter()
                .enumerate()
                .map(|(i, t)| expression(&format!("omega[{}]", i + 1), t, fiber))
                .collect::<Result<Vec<_>>>()?;
            OneFormSection::new(comps).map_err(|e| SpecError::Invalid(e.to_string()))?
        }
    };
    Ok(Problem::Extension { spec, omega })
}

/// `ω_i = x^i x^{r+m}`, which varies along both the base and the last
/// coordinate of the intermediate bundle.
pub fn default_omega(r: usize, m: usize) -> OneFormSection {
    let fiber = r + m;
    let last = ScalarField::coordinate(fiber - 1, fiber).expect("in range");
    let comps = (0..r).map(|i| &ScalarField::coordinate(i, fiber).expect("in range") * &last).collect();
    OneFormSection::new(comps).expect("consistent dimensions")
}

fn transport(raw: &RawTransport, n: usize) -> Result<Transport> {
    if raw.curve.len() != n {
        return Err(SpecError::Invalid(format!("transport.curve needs {n} components, found {}", raw.curve.len())));
    }
    if raw.w0.len() != n {
        return Err(SpecError::Invalid(format!("transport.w0 needs {n} components, found {}", raw.w0.len())));
    }
    let texts: Vec<&str> = raw.curve.iter().map(String::as_str).collect();
    let curve = CurveSpec::parse(&texts, &raw.parameter, raw.t_span[0], raw.t_span[1], raw.step)
        .map_err(|e| SpecError::Expression { key: "transport.curve".into(), source: e })?;
    Ok(Transport { curve, w0: raw.w0.clone() })
}

fn split_key(key: &str) -> Result<(&str, &str)> {
    key.split_once('_').ok_or_else(|| SpecError::UnknownKey(key.to_string()))
}

/// Parses the index part of a key into exactly `count` 1-based indices.
fn indices(key: &str, part: &str, count: usize) -> Result<Vec<usize>> {
    let tokens: Vec<&str> = part.split('_').collect();
    if tokens.iter().any(|t| t.is_empty() || !t.bytes().all(|b| b.is_ascii_digit())) {
        return Err(SpecError::UnknownKey(key.to_string()));
    }
    let parsed: Vec<usize> = if tokens.len() == count {
        tokens.iter().map(|t| t.parse::<usize>()).collect::<Result<_, _>>().map_err(|_| SpecError::UnknownKey(key.to_string()))?
    } else {
        // packed segments: one digit per index
        let digits: Vec<usize> = tokens.iter().flat_map(|t| t.bytes().map(|b| (b - b'0') as usize)).collect();
        if digits.len() != count {
            return Err(SpecError::UnknownKey(key.to_string()));
        }
        digits
    };
    Ok(parsed)
}

fn check_range(key: &str, idx: &[usize], range: std::ops::RangeInclusive<usize>) -> Result<()> {
    match idx.iter().find(|i| !range.contains(i)) {
        Some(i) => Err(SpecError::IndexOutOfRange {
            key: key.to_string(),
            detail: format!("{i} is outside {}..={}", range.start(), range.end()),
        }),
        None => Ok(()),
    }
}

fn expression(key: &str, text: &str, dim: usize) -> Result<ScalarField> {
    ScalarField::parse(text, dim).map_err(|e| SpecError::Expression { key: key.to_string(), source: e.into() })
}

/// Sorts the trailing symmetric pair of an index list.
fn normalize(idx: &[usize]) -> Vec<usize> {
    let mut v = idx.to_vec();
    let k = v.len();
    if v[k - 2] > v[k - 1] {
        v.swap(k - 2, k - 1);
    }
    v
}

/// Entries keyed by normalized indices, remembering the source key so
/// that conflicting duplicates can be reported.
struct ComponentTable {
    entries: BTreeMap<Vec<usize>, (String, ScalarField)>,
}

impl ComponentTable {
    fn new() -> Self {
        Self { entries: BTreeMap::new() }
    }

    fn insert(&mut self, key: &str, at: Vec<usize>, f: ScalarField) -> Result<()> {
        if let Some((other, prev)) = self.entries.get(&at) {
            if !prev.same_expression(&f) {
                return Err(SpecError::AsymmetricDuplicate { key: key.to_string(), other: other.clone() });
            }
            return Ok(());
        }
        self.entries.insert(at, (key.to_string(), f));
        Ok(())
    }

    fn get(&self, idx: &[usize]) -> Option<ScalarField> {
        self.entries.get(&normalize(idx)).map(|(_, f)| f.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_forms() {
        assert_eq!(indices("g_14", "14", 2).unwrap(), vec![1, 4]);
        assert_eq!(indices("g_1_4", "1_4", 2).unwrap(), vec![1, 4]);
        assert_eq!(indices("g_10_12", "10_12", 2).unwrap(), vec![10, 12]);
        assert_eq!(indices("D_1_12", "1_12", 3).unwrap(), vec![1, 1, 2]);
        assert_eq!(indices("D_112", "112", 3).unwrap(), vec![1, 1, 2]);
        assert!(indices("g_1", "1", 2).is_err());
        assert!(indices("g_1x", "1x", 2).is_err());
    }

    #[test]
    fn minimal_flat_metric() {
        let spec = parse_spec(r#"{"kind": "metric", "n": 2, "r": 1, "components": {"g_11": "1", "g_22": "1"}}"#).unwrap();
        assert_eq!(spec.sampling, Sampling::default());
        assert_eq!(spec.checks, Check::metric_defaults());
        let Problem::Metric(g) = spec.problem else { panic!("expected a metric") };
        assert_eq!(g.component(0, 0).as_constant(), Some(1.0));
        assert!(g.component(0, 1).is_zero());
    }

    #[test]
    fn zero_extension_defaults_to_identity_block() {
        let spec = parse_spec(r#"{"kind": "extension", "r": 1, "m": 1}"#).unwrap();
        let Problem::Extension { spec, .. } = spec.problem else { panic!("expected an extension") };
        assert_eq!(spec.g_ia(), &DMatrix::identity(1, 1));
        assert!(spec.lambda().iter().all(|(_, _, f)| f.is_zero()));
    }

    #[test]
    fn rejections() {
        let err = parse_spec(r#"{"kind": "metric", "n": 4, "r": 1, "components": {"g_1_5": "1"}}"#).unwrap_err();
        assert!(matches!(err, SpecError::IndexOutOfRange { .. }), "{err}");
        let err = parse_spec(r#"{"kind": "metric", "n": 2, "r": 1, "components": {"g_12": "x1", "g_21": "x2"}}"#)
            .unwrap_err();
        assert!(matches!(err, SpecError::AsymmetricDuplicate { .. }), "{err}");
        assert!(parse_spec(r#"{"kind": "metric", "n": 2, "r": 1, "components": {"g_12": "x1", "g_21": "x1"}}"#).is_ok());
        let err = parse_spec(r#"{"kind": "metric", "n": 2, "r": 1, "colour": 3}"#).unwrap_err();
        assert!(matches!(err, SpecError::UnknownKey(ref k) if k == "colour"), "{err}");
        let err = parse_spec(r#"{"kind": "metric", "n": 2, "r": 1, "components": {"k_11": "1"}}"#).unwrap_err();
        assert!(matches!(err, SpecError::UnknownKey(_)), "{err}");
        let err = parse_spec("{\"kind\": \"metric\",\n \"n\": }").unwrap_err();
        assert!(matches!(err, SpecError::Syntax { line: 2, .. }), "{err}");
        let err = parse_spec(r#"{"kind": "extension", "r": 1, "m": 1, "components": {"h_11": "1"}}"#).unwrap_err();
        assert!(matches!(err, SpecError::IndexOutOfRange { .. }), "{err}");
        let err = parse_spec(r#"{"kind": "metric", "n": 2, "r": 1, "checks": ["flatness"]}"#).unwrap_err();
        assert!(matches!(err, SpecError::UnknownCheck(_)), "{err}");
    }
}
