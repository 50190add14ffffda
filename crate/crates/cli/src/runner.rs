//! Check-suite orchestration.
//!
//! Every requested check yields at least one record. Failures to evaluate a
//! check become error records; the rest of the suite still runs.

use std::cell::OnceCell;

use walkerlab_core::connection::{christoffel, metric_compatibility_residual, ConnectionField};
use walkerlab_core::curvature::curvature;
use walkerlab_core::dist::{
    check_null, check_parallel, check_projectable, check_walker_form, curvature_condition, projected_connection,
    walker_projectability, DistributionSpec,
};
use walkerlab_core::extension::{
    build_pullback_extension, isometry_residual, recover_vertical_metric, transformation_rule_residual,
};
use walkerlab_core::point::sample_box;
use walkerlab_core::transport::{norm_drift, parallel_transport, projection_commutes_residual};
use walkerlab_core::{Error, MetricField, Point, Residual};

use crate::report::{CheckRecord, Report, TransportSummary};
use crate::spec::{Check, Problem, ProblemSpec, Sampling};

/// The Walker-form metric a spec describes; extensions are built first.
pub fn metric_of(spec: &ProblemSpec) -> walkerlab_core::Result<MetricField> {
    match &spec.problem {
        Problem::Metric(g) => Ok(g.clone()),
        Problem::Extension { spec, .. } => build_pullback_extension(spec),
    }
}

struct Context<'a> {
    spec: &'a ProblemSpec,
    sampling: Sampling,
    g: MetricField,
    gamma: ConnectionField,
    points: OnceCell<Result<Vec<Point>, Error>>,
}

enum Outcome {
    Residual(Residual),
    Records(Vec<CheckRecord>),
}

impl<'a> Context<'a> {
    fn new(spec: &'a ProblemSpec, g: MetricField) -> Self {
        let gamma = christoffel(&g);
        Self { spec, sampling: spec.sampling, g, gamma, points: OnceCell::new() }
    }

    fn points(&self) -> Result<&[Point], Error> {
        self.points
            .get_or_init(|| self.g.sample_points(self.sampling.count, self.sampling.seed))
            .as_deref()
            .map_err(Clone::clone)
    }

    fn null_dist(&self) -> DistributionSpec {
        DistributionSpec::trailing_of(self.g.chart())
    }

    fn orthogonal_dist(&self) -> DistributionSpec {
        DistributionSpec::orthogonal_of(self.g.chart())
    }

    fn records(&self, check: Check) -> Vec<CheckRecord> {
        match self.evaluate(check) {
            Ok(Outcome::Residual(r)) => vec![CheckRecord::from_residual(check.name(), &r, self.sampling.tolerance)],
            Ok(Outcome::Records(recs)) => recs,
            Err(e) => vec![CheckRecord::error(check.name(), e.to_string())],
        }
    }

    fn evaluate(&self, check: Check) -> Result<Outcome, Error> {
        let tol = self.sampling.tolerance;
        let res = match check {
            Check::WalkerForm => {
                let report = check_walker_form(&self.g, self.points()?, tol)?;
                return Ok(Outcome::Records(
                    report.entries.iter().map(|e| CheckRecord::from_entry(check.name(), e)).collect(),
                ));
            }
            Check::Null => check_null(&self.g, self.null_dist(), self.points()?)?,
            Check::Parallel => check_parallel(&self.g, self.null_dist(), self.points()?)?,
            Check::WalkerProjectability => walker_projectability(&self.g, self.points()?)?,
            Check::Projectable => {
                let pts = self.points()?;
                let p = check_projectable(&self.gamma, self.null_dist(), pts)?.total();
                p.merge(check_projectable(&self.gamma, self.orthogonal_dist(), pts)?.total())
            }
            Check::CurvatureCondition => curvature_condition(&self.g, self.orthogonal_dist(), self.points()?)?,
            Check::MetricCompatibility => metric_compatibility_residual(&self.g, &self.gamma, self.points()?)?,
            Check::Bianchi => {
                let mut r = Residual::zero();
                for x in self.points()? {
                    r.observe(curvature(&self.gamma, x)?.bianchi_residual(), x);
                }
                r
            }
            Check::ProjectedConnection => self.projected_connection()?,
            Check::VerticalMetric => self.vertical_metric()?,
            Check::TransformationRule => {
                let (ext, omega) = self.extension(check)?;
                transformation_rule_residual(&self.g, ext, omega, self.points()?)?
            }
            Check::Isometry => {
                let (ext, omega) = self.extension(check)?;
                isometry_residual(&self.g, omega, ext.g_ia(), self.points()?)?
            }
            Check::NormDrift => {
                let t = self.transport(check)?;
                let path = parallel_transport(&self.gamma, &t.curve, &t.w0)?;
                Residual { value: norm_drift(&self.g, &t.curve, &path)?, worst_point: None }
            }
            Check::ProjectionCommutes => {
                let t = self.transport(check)?;
                let dist = self.orthogonal_dist();
                let base = match &self.spec.problem {
                    Problem::Extension { spec, .. } => spec.base().clone(),
                    Problem::Metric(_) => projected_connection(&self.gamma, dist, self.points()?, tol)?,
                };
                let gap = projection_commutes_residual(&self.g, &base, dist, &t.curve, &t.w0, tol)?;
                Residual { value: gap, worst_point: None }
            }
        };
        Ok(Outcome::Residual(res))
    }

    fn extension(
        &self,
        check: Check,
    ) -> Result<(&walkerlab_core::ExtensionSpec, &walkerlab_core::OneFormSection), Error> {
        match &self.spec.problem {
            Problem::Extension { spec, omega } => Ok((spec, omega)),
            Problem::Metric(_) => Err(Error::InvalidExtension(format!("`{check}` needs an extension spec"))),
        }
    }

    fn transport(&self, check: Check) -> Result<&crate::spec::Transport, Error> {
        self.spec
            .transport
            .as_ref()
            .ok_or_else(|| Error::InvalidCurve(format!("`{check}` needs a transport section")))
    }

    /// `max |Γ̄ - D|` over seeded base points, where `Γ̄` is the connection
    /// induced on the leaf space of the orthogonal distribution.
    fn projected_connection(&self) -> Result<Residual, Error> {
        let (ext, _) = self.extension(Check::ProjectedConnection)?;
        let projected = projected_connection(&self.gamma, self.orthogonal_dist(), self.points()?, self.sampling.tolerance)?;
        let r = ext.r();
        let mut res = Residual::zero();
        for y in sample_box(r, self.sampling.count, self.sampling.seed) {
            let a = projected.values_at(&y)?;
            let b = ext.base().values_at(&y)?;
            let mut worst = 0.0f64;
            for l in 0..r {
                for i in 0..r {
                    for j in 0..r {
                        worst = worst.max((a.get(l, i, j) - b.get(l, i, j)).abs());
                    }
                }
            }
            res.observe(worst, &y);
        }
        Ok(res)
    }

    /// `max |g_pq(x) - h_pq(x^i, x^p)|` over the sample points.
    fn vertical_metric(&self) -> Result<Residual, Error> {
        let (ext, _) = self.extension(Check::VerticalMetric)?;
        let h = ext.h();
        let fiber = ext.r() + ext.m();
        let mut res = Residual::zero();
        for x in self.points()? {
            let got = recover_vertical_metric(&self.g, x)?;
            let z = x.truncate(fiber);
            let mut worst = 0.0f64;
            for (p, q, f) in h.iter() {
                worst = worst.max((got[(p, q)] - f.evaluate(&z)?).abs());
            }
            res.observe(worst, x);
        }
        Ok(res)
    }
}

fn suite(spec: &ProblemSpec, label: &str, checks: &[Check]) -> Report {
    let records = match metric_of(spec) {
        Ok(g) => {
            let ctx = Context::new(spec, g);
            checks.iter().flat_map(|&c| ctx.records(c)).collect()
        }
        Err(e) => checks
            .iter()
            .map(|c| CheckRecord::error(c.name(), format!("extension build failed: {e}")))
            .collect(),
    };
    Report::new(label.to_string(), spec.sampling.seed, spec.sampling.tolerance, records)
}

/// Runs the spec's check list in order.
pub fn run_checks(spec: &ProblemSpec, label: &str) -> Report {
    suite(spec, label, &spec.checks)
}

/// Runs the transport section: norm drift, projection commutation, and the
/// final transported vector.
pub fn run_transport(spec: &ProblemSpec, label: &str) -> Report {
    let mut report = suite(spec, label, &[Check::NormDrift, Check::ProjectionCommutes]);
    if let (Some(t), Ok(g)) = (&spec.transport, metric_of(spec)) {
        if let Ok(path) = parallel_transport(&christoffel(&g), &t.curve, &t.w0) {
            report.transport = Some(TransportSummary { t_end: t.curve.span().1, w_end: path.last().to_vec() });
        }
    }
    report
}
