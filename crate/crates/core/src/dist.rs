//! Residual checks for distributions spanned by trailing coordinate fields.
//!
//! Every check returns the largest raw deviation over the supplied points;
//! callers decide the tolerance.

use nalgebra::DMatrix;

use crate::chart::{ChartSplit, MetricField, DET_FLOOR};
use crate::connection::{christoffel, ConnectionField};
use crate::curvature::curvature;
use crate::error::{Error, Result};
use crate::expr::ScalarField;
use crate::point::Point;
use crate::residual::Residual;

/// The span of the last `s` coordinate fields of an `n`-dimensional chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DistributionSpec {
    n: usize,
    s: usize,
}

impl DistributionSpec {
    pub fn new(n: usize, s: usize) -> Result<Self> {
        if s == 0 || s >= n {
            return Err(Error::InvalidSplit(format!("distribution needs 0 < s < n (n = {n}, s = {s})")));
        }
        Ok(Self { n, s })
    }

    /// The trailing block of `chart` (the null distribution `P` of a Walker split).
    pub fn trailing_of(chart: ChartSplit) -> Self {
        Self { n: chart.dim(), s: chart.trailing_dim() }
    }

    /// Middle and trailing blocks together (`V = P^⊥` of a Walker split).
    pub fn orthogonal_of(chart: ChartSplit) -> Self {
        Self { n: chart.dim(), s: chart.dim() - chart.leading().len() }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> usize {
        self.s
    }

    /// Dimension of the leaf space.
    pub fn leaf_dim(&self) -> usize {
        self.n - self.s
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: n });
        }
        Ok(())
    }
}

/// `max |∂_a w^i|` with `a` trailing and `i` leading.
pub fn check_field_projectable(w: &[ScalarField], dist: DistributionSpec, points: &[Point]) -> Result<Residual> {
    dist.check_dim(w.len())?;
    let lead = dist.leaf_dim();
    let mut partials = Vec::new();
    for wi in &w[..lead] {
        for a in lead..dist.n {
            let d = wi.partial(a)?;
            if !d.is_zero() {
                partials.push(d);
            }
        }
    }
    let mut r = Residual::zero();
    for x in points {
        let mut worst: f64 = 0.0;
        for d in &partials {
            worst = worst.max(d.evaluate(x)?.abs());
        }
        r.observe(worst, x);
    }
    Ok(r)
}

/// `max |g_ab|` over trailing pairs.
pub fn check_null(g: &MetricField, dist: DistributionSpec, points: &[Point]) -> Result<Residual> {
    dist.check_dim(g.dim())?;
    let lead = dist.leaf_dim();
    let mut r = Residual::zero();
    for x in points {
        let mut worst: f64 = 0.0;
        for a in lead..dist.n {
            for b in a..dist.n {
                worst = worst.max(g.component(a, b).evaluate(x)?.abs());
            }
        }
        r.observe(worst, x);
    }
    Ok(r)
}

/// `max |Γ^i_{aμ}|` with `i` leading, `a` trailing and `μ` arbitrary.
pub fn parallel_residual(gamma: &ConnectionField, dist: DistributionSpec, points: &[Point]) -> Result<Residual> {
    dist.check_dim(gamma.dim())?;
    let lead = dist.leaf_dim();
    let mut r = Residual::zero();
    for x in points {
        let c = gamma.values_at(x)?;
        let mut worst: f64 = 0.0;
        for i in 0..lead {
            for a in lead..dist.n {
                for mu in 0..dist.n {
                    worst = worst.max(c.get(i, a, mu).abs());
                }
            }
        }
        r.observe(worst, x);
    }
    Ok(r)
}

/// Parallelism of the distribution for the Levi-Civita connection of `g`.
pub fn check_parallel(g: &MetricField, dist: DistributionSpec, points: &[Point]) -> Result<Residual> {
    parallel_residual(&christoffel(g), dist, points)
}

/// The two families of projectability conditions, kept apart.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectabilityResidual {
    /// `max |Γ^i_aj|, |Γ^i_ab|`.
    pub parallel: Residual,
    /// `max |∂_a Γ^i_jk|`.
    pub derivative: Residual,
}

impl ProjectabilityResidual {
    pub fn total(&self) -> Residual {
        self.parallel.clone().merge(self.derivative.clone())
    }
}

/// `Γ^i_aj = Γ^i_ab = ∂_a Γ^i_jk = 0` with `i, j, k` leading and `a, b` trailing.
pub fn check_projectable(
    gamma: &ConnectionField,
    dist: DistributionSpec,
    points: &[Point],
) -> Result<ProjectabilityResidual> {
    dist.check_dim(gamma.dim())?;
    let lead = dist.leaf_dim();
    let n = dist.n;
    let mut parallel = Residual::zero();
    let mut derivative = Residual::zero();
    for x in points {
        let (c, d) = gamma.jet_at(x)?;
        let mut p: f64 = 0.0;
        let mut q: f64 = 0.0;
        for i in 0..lead {
            for a in lead..n {
                for mu in 0..n {
                    p = p.max(c.get(i, a, mu).abs());
                }
                for j in 0..lead {
                    for k in 0..lead {
                        q = q.max(d.get(a, i, j, k).abs());
                    }
                }
            }
        }
        parallel.observe(p, x);
        derivative.observe(q, x);
    }
    Ok(ProjectabilityResidual { parallel, derivative })
}

/// `max |R_{aμν}^i|` with `a` trailing and `i` leading.
pub fn curvature_condition_residual(gamma: &ConnectionField, dist: DistributionSpec, points: &[Point]) -> Result<Residual> {
    dist.check_dim(gamma.dim())?;
    let lead = dist.leaf_dim();
    let n = dist.n;
    let mut r = Residual::zero();
    for x in points {
        let rv = curvature(gamma, x)?;
        let mut worst: f64 = 0.0;
        for a in lead..n {
            for mu in 0..n {
                for nu in 0..n {
                    for i in 0..lead {
                        worst = worst.max(rv.get(a, mu, nu, i).abs());
                    }
                }
            }
        }
        r.observe(worst, x);
    }
    Ok(r)
}

/// The curvature condition for the Levi-Civita connection of `g`.
pub fn curvature_condition(g: &MetricField, dist: DistributionSpec, points: &[Point]) -> Result<Residual> {
    curvature_condition_residual(&christoffel(g), dist, points)
}

fn walker_blocks(g: &MetricField) -> Result<ChartSplit> {
    match g.chart() {
        c @ ChartSplit::Walker { .. } => Ok(c),
        ChartSplit::TwoBlock { n, s } if n == 2 * s => ChartSplit::walker(n, s),
        c => Err(Error::InvalidSplit(format!("expected a Walker split, found {c:?}"))),
    }
}

/// `max |∂_a ∂_b g_jk|, |∂_a ∂_p g_jk|` for a metric in Walker form.
pub fn walker_projectability(g: &MetricField, points: &[Point]) -> Result<Residual> {
    let chart = walker_blocks(g)?;
    let lead = chart.leading();
    let trailing = chart.trailing();
    let mut fields = Vec::new();
    for j in lead.clone() {
        for k in j..lead.end {
            let f = g.component(j, k);
            for a in trailing.clone() {
                let fa = f.partial(a)?;
                if fa.is_zero() {
                    continue;
                }
                for mu in chart.middle().chain(a..trailing.end) {
                    let d = fa.partial(mu)?;
                    if !d.is_zero() {
                        fields.push(d);
                    }
                }
            }
        }
    }
    let mut r = Residual::zero();
    for x in points {
        let mut worst: f64 = 0.0;
        for f in &fields {
            worst = worst.max(f.evaluate(x)?.abs());
        }
        r.observe(worst, x);
    }
    Ok(r)
}

/// The connection induced on the leaf space: leading components of `gamma`
/// with trailing coordinates set to zero.
pub fn projected_connection(
    gamma: &ConnectionField,
    dist: DistributionSpec,
    points: &[Point],
    tolerance: f64,
) -> Result<ConnectionField> {
    let residual = check_projectable(gamma, dist, points)?.total();
    if !residual.passes(tolerance) {
        return Err(Error::NotProjectable { residual: residual.value, tolerance });
    }
    gamma.restrict_leading(dist.leaf_dim())
}

/// One named clause of a report.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckEntry {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub worst_point: Option<Point>,
}

impl CheckEntry {
    pub fn new(name: impl Into<String>, residual: Residual, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            pass: residual.passes(tolerance),
            residual: residual.value,
            tolerance,
            worst_point: residual.worst_point,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CheckReport {
    pub entries: Vec<CheckEntry>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn entry(&self, name: &str) -> Option<&CheckEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckEntry> {
        self.entries.iter().filter(|e| !e.pass)
    }
}

/// Names of the clauses reported by [`check_walker_form`].
pub mod clause {
    pub const NULL_TRAILING: &str = "g_ab = 0";
    pub const NULL_MIXED: &str = "g_ap = 0";
    pub const CONSTANT_BLOCK: &str = "g_ia constant";
    pub const MIDDLE_FIBER: &str = "d_a g_pq = 0";
    pub const MIXED_FIBER: &str = "d_a g_pi = 0";
    pub const DET_BLOCK: &str = "det g_ia != 0";
    pub const DET_MIDDLE: &str = "det g_pq != 0";
}

/// Walker-form clauses of `g` at `points`. Vanishing clauses pass when the
/// largest deviation is at most `tolerance`. The two determinant clauses
/// report `1 / min |det|` against `1 / DET_FLOOR`; an empty middle block
/// has determinant 1.
pub fn check_walker_form(g: &MetricField, points: &[Point], tolerance: f64) -> Result<CheckReport> {
    let chart = walker_blocks(g)?;
    let lead = chart.leading();
    let mid = chart.middle();
    let tr = chart.trailing();
    let n = chart.dim();

    let eval_max = |pairs: &[(usize, usize)]| -> Result<Residual> {
        let mut r = Residual::zero();
        for x in points {
            let mut worst: f64 = 0.0;
            for &(i, j) in pairs {
                worst = worst.max(g.component(i, j).evaluate(x)?.abs());
            }
            r.observe(worst, x);
        }
        Ok(r)
    };
    let partial_max = |pairs: &[(usize, usize)], dirs: &[usize]| -> Result<Residual> {
        let mut fields = Vec::new();
        for &(i, j) in pairs {
            for &d in dirs {
                let f = g.component(i, j).partial(d)?;
                if !f.is_zero() {
                    fields.push(f);
                }
            }
        }
        let mut r = Residual::zero();
        for x in points {
            let mut worst: f64 = 0.0;
            for f in &fields {
                worst = worst.max(f.evaluate(x)?.abs());
            }
            r.observe(worst, x);
        }
        Ok(r)
    };
    let det_residual = |rows: std::ops::Range<usize>, cols: std::ops::Range<usize>| -> Result<Residual> {
        let mut r = Residual::zero();
        for x in points {
            let mut m = DMatrix::zeros(rows.len(), cols.len());
            for (ri, i) in rows.clone().enumerate() {
                for (ci, j) in cols.clone().enumerate() {
                    m[(ri, ci)] = g.component(i, j).evaluate(x)?;
                }
            }
            r.observe(1.0 / m.determinant().abs(), x);
        }
        Ok(r)
    };

    let pairs = |a: std::ops::Range<usize>, b: std::ops::Range<usize>| -> Vec<(usize, usize)> {
        a.flat_map(|i| b.clone().map(move |j| (i, j))).collect()
    };
    let all: Vec<usize> = (0..n).collect();
    let trailing: Vec<usize> = tr.clone().collect();
    let det_tol = 1.0 / DET_FLOOR;

    let entries = vec![
        CheckEntry::new(clause::NULL_TRAILING, eval_max(&pairs(tr.clone(), tr.clone()))?, tolerance),
        CheckEntry::new(clause::NULL_MIXED, eval_max(&pairs(mid.clone(), tr.clone()))?, tolerance),
        CheckEntry::new(clause::CONSTANT_BLOCK, partial_max(&pairs(lead.clone(), tr.clone()), &all)?, tolerance),
        CheckEntry::new(clause::MIDDLE_FIBER, partial_max(&pairs(mid.clone(), mid.clone()), &trailing)?, tolerance),
        CheckEntry::new(clause::MIXED_FIBER, partial_max(&pairs(lead.clone(), mid.clone()), &trailing)?, tolerance),
        CheckEntry::new(clause::DET_BLOCK, det_residual(lead.clone(), tr.clone())?, det_tol),
        CheckEntry::new(clause::DET_MIDDLE, det_residual(mid.clone(), mid.clone())?, det_tol),
    ];
    Ok(CheckReport { entries })
}
