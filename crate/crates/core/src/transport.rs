//! Parallel transport along parametrized curves.
//!
//! Transport solves `ẇ^l + Γ^l_jk(x(t)) ẋ^j w^k = 0` with the classical
//! fixed-step fourth-order Runge-Kutta scheme.

use nalgebra::DMatrix;

use crate::chart::MetricField;
use crate::connection::{christoffel, ConnectionField};
use crate::dist::{check_projectable, DistributionSpec};
use crate::error::{Error, Result};
use crate::expr::ScalarField;
use crate::point::Point;

/// A curve `t -> x(t)` over `[t0, t1]` with a nominal integration step.
///
/// The number of steps is `round((t1 - t0) / step)` (at least one) and the
/// actual step divides the span evenly.
#[derive(Debug, Clone)]
pub struct CurveSpec {
    components: Vec<ScalarField>,
    velocity: Vec<ScalarField>,
    t0: f64,
    t1: f64,
    steps: usize,
}

impl CurveSpec {
    /// `components` are fields in one variable (the curve parameter).
    pub fn new(components: Vec<ScalarField>, t0: f64, t1: f64, step: f64) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidCurve("curve has no components".into()));
        }
        if let Some(c) = components.iter().find(|c| c.dim() != 1) {
            return Err(Error::InvalidCurve(format!("component `{c}` is not a function of one parameter")));
        }
        if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
            return Err(Error::InvalidCurve(format!("parameter span [{t0}, {t1}] is empty or not finite")));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidCurve(format!("step must be positive, got {step}")));
        }
        let ratio = ((t1 - t0) / step).round();
        if ratio > 1e9 {
            return Err(Error::InvalidCurve(format!("step {step} is too small for the span")));
        }
        let steps = (ratio as usize).max(1);
        let velocity = components.iter().map(|c| c.partial(0)).collect::<Result<_>>()?;
        Ok(Self { components, velocity, t0, t1, steps })
    }

    /// Parses one component per coordinate, written in the parameter `param`.
    pub fn parse(texts: &[&str], param: &str, t0: f64, t1: f64, step: f64) -> Result<Self> {
        let comps = texts
            .iter()
            .map(|t| ScalarField::parse_with_parameter(t, param).map_err(Error::from))
            .collect::<Result<_>>()?;
        Self::new(comps, t0, t1, step)
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn span(&self) -> (f64, f64) {
        (self.t0, self.t1)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Actual integration step.
    pub fn step(&self) -> f64 {
        (self.t1 - self.t0) / self.steps as f64
    }

    /// Grid times `t0 + i h`, `i = 0..=steps`.
    pub fn time(&self, i: usize) -> f64 {
        if i == self.steps {
            self.t1
        } else {
            self.t0 + i as f64 * self.step()
        }
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn point_at(&self, t: f64) -> Result<Point> {
        Ok(Point::new(self.components.iter().map(|c| c.evaluate_at(&[t])).collect::<Result<_>>()?))
    }

    pub fn velocity_at(&self, t: f64) -> Result<Vec<f64>> {
        self.velocity.iter().map(|c| c.evaluate_at(&[t])).collect()
    }

    /// The curve formed by the first `k` components, on the same grid.
    pub fn leading(&self, k: usize) -> Result<CurveSpec> {
        if k == 0 || k > self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: k });
        }
        Ok(CurveSpec {
            components: self.components[..k].to_vec(),
            velocity: self.velocity[..k].to_vec(),
            ..self.clone()
        })
    }

    /// Same curve with a different nominal step.
    pub fn with_step(&self, step: f64) -> Result<CurveSpec> {
        CurveSpec::new(self.components.clone(), self.t0, self.t1, step)
    }
}

/// Transported vectors at the grid times of a curve.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPath {
    pub times: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl TransportPath {
    pub fn last(&self) -> &[f64] {
        self.vectors.last().expect("a path has at least its initial vector")
    }
}

/// `A^l_k = Γ^l_jk(x(t)) ẋ^j(t)`, so that `ẇ = -A w`.
fn transport_matrix(gamma: &ConnectionField, curve: &CurveSpec, t: f64) -> Result<DMatrix<f64>> {
    let n = gamma.dim();
    let c = gamma.values_at(&curve.point_at(t)?)?;
    let v = curve.velocity_at(t)?;
    let mut a = DMatrix::zeros(n, n);
    for l in 0..n {
        for k in 0..n {
            let mut s = 0.0;
            for (j, vj) in v.iter().enumerate() {
                s += c.get(l, j, k) * vj;
            }
            a[(l, k)] = s;
        }
    }
    Ok(a)
}

fn rhs(a: &DMatrix<f64>, w: &[f64]) -> Vec<f64> {
    (0..w.len()).map(|l| -(0..w.len()).map(|k| a[(l, k)] * w[k]).sum::<f64>()).collect()
}

fn axpy(w: &[f64], h: f64, k: &[f64]) -> Vec<f64> {
    w.iter().zip(k).map(|(a, b)| a + h * b).collect()
}

/// Parallel transport of `w0` along `curve` under `gamma`.
pub fn parallel_transport(gamma: &ConnectionField, curve: &CurveSpec, w0: &[f64]) -> Result<TransportPath> {
    let n = gamma.dim();
    if curve.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: curve.dim() });
    }
    if w0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: w0.len() });
    }
    let h = curve.step();
    let mut times = Vec::with_capacity(curve.steps + 1);
    let mut vectors = Vec::with_capacity(curve.steps + 1);
    let mut w = w0.to_vec();
    times.push(curve.time(0));
    vectors.push(w.clone());
    let mut a_start = transport_matrix(gamma, curve, curve.time(0))?;
    for i in 0..curve.steps {
        let t = curve.time(i);
        let a_mid = transport_matrix(gamma, curve, t + 0.5 * h)?;
        let a_end = transport_matrix(gamma, curve, curve.time(i + 1))?;
        let k1 = rhs(&a_start, &w);
        let k2 = rhs(&a_mid, &axpy(&w, 0.5 * h, &k1));
        let k3 = rhs(&a_mid, &axpy(&w, 0.5 * h, &k2));
        let k4 = rhs(&a_end, &axpy(&w, h, &k3));
        for l in 0..n {
            w[l] += h / 6.0 * (k1[l] + 2.0 * k2[l] + 2.0 * k3[l] + k4[l]);
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { expression: format!("transported vector at t = {}", curve.time(i + 1)) });
        }
        times.push(curve.time(i + 1));
        vectors.push(w.clone());
        a_start = a_end;
    }
    Ok(TransportPath { times, vectors })
}

/// `max_t |g(w, w) - g(w0, w0)|` along a transport path.
pub fn norm_drift(g: &MetricField, curve: &CurveSpec, path: &TransportPath) -> Result<f64> {
    let quad = |t: f64, w: &[f64]| -> Result<f64> {
        let m = g.at(&curve.point_at(t)?)?;
        let v = nalgebra::DVector::from_column_slice(w);
        Ok(v.dot(&(&m * &v)))
    };
    let q0 = quad(path.times[0], &path.vectors[0])?;
    let mut worst: f64 = 0.0;
    for (t, w) in path.times.iter().zip(&path.vectors) {
        worst = worst.max((quad(*t, w)? - q0).abs());
    }
    Ok(worst)
}

/// Transports `w0` under `gamma` along `curve`, transports its leading
/// block under `base` along the leading part of the curve, and returns the
/// largest componentwise difference of leading blocks over the grid.
///
/// No projectability precondition is imposed; see
/// [`projection_commutes_residual`] for the checked form.
pub fn transport_projection_gap(
    gamma: &ConnectionField,
    base: &ConnectionField,
    curve: &CurveSpec,
    w0: &[f64],
) -> Result<f64> {
    let k = base.dim();
    let full = parallel_transport(gamma, curve, w0)?;
    let w0_lead = w0.get(..k).ok_or(Error::DimensionMismatch { expected: gamma.dim(), found: w0.len() })?;
    let projected = parallel_transport(base, &curve.leading(k)?, w0_lead)?;
    let mut worst: f64 = 0.0;
    for (a, b) in full.vectors.iter().zip(&projected.vectors) {
        for l in 0..k {
            worst = worst.max((a[l] - b[l]).abs());
        }
    }
    Ok(worst)
}

/// The commuting-projection residual for the Levi-Civita connection of `g`
/// and a base connection `base` on the leaf space of `dist`.
///
/// Projectability of the Levi-Civita connection along `dist` is verified
/// first at the grid points of the curve; a violation above `tolerance`
/// is reported as [`Error::NotProjectable`].
pub fn projection_commutes_residual(
    g: &MetricField,
    base: &ConnectionField,
    dist: DistributionSpec,
    curve: &CurveSpec,
    w0: &[f64],
    tolerance: f64,
) -> Result<f64> {
    if base.dim() != dist.leaf_dim() {
        return Err(Error::DimensionMismatch { expected: dist.leaf_dim(), found: base.dim() });
    }
    let gamma = christoffel(g);
    let points = (0..=curve.steps()).map(|i| curve.point_at(curve.time(i))).collect::<Result<Vec<_>>>()?;
    let residual = check_projectable(&gamma, dist, &points)?.total();
    if !residual.passes(tolerance) {
        return Err(Error::NotProjectable { residual: residual.value, tolerance });
    }
    transport_projection_gap(&gamma, base, curve, w0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::ChartSplit;

    #[test]
    fn flat_transport_is_constant() {
        let curve = CurveSpec::parse(&["t^2", "sin(t)"], "t", 0.0, 1.0, 0.1).unwrap();
        let path = parallel_transport(&ConnectionField::flat(2), &curve, &[1.0, -2.0]).unwrap();
        assert_eq!(path.times.len(), 11);
        assert!(path.vectors.iter().all(|w| w == &vec![1.0, -2.0]));
        assert_eq!(path.times[10], 1.0);
    }

    #[test]
    fn exponential_decay() {
        // Γ = 1 along x = t: ẇ + w = 0
        let gamma = ConnectionField::from_fn(1, |_, _, _| ScalarField::integer(1, 1)).unwrap();
        let curve = CurveSpec::parse(&["t"], "t", 0.0, 1.0, 1e-3).unwrap();
        let path = parallel_transport(&gamma, &curve, &[1.0]).unwrap();
        assert!((path.last()[0] - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn metric_transport_preserves_norm() {
        let g = MetricField::from_fn(ChartSplit::two_block(2, 1).unwrap(), |i, j| match (i, j) {
            (0, 0) => ScalarField::integer(1, 2),
            (1, 1) => ScalarField::parse("sin(x1)^2", 2).unwrap(),
            _ => ScalarField::zero(2),
        })
        .unwrap();
        let curve = CurveSpec::parse(&["1 + 0.2*t", "t"], "t", 0.0, 1.0, 1e-3).unwrap();
        let path = parallel_transport(&christoffel(&g), &curve, &[0.3, 0.8]).unwrap();
        assert!(norm_drift(&g, &curve, &path).unwrap() < 1e-12);
    }

    #[test]
    fn curve_validation() {
        assert!(CurveSpec::parse(&["t"], "t", 1.0, 0.0, 0.1).is_err());
        assert!(CurveSpec::parse(&["t"], "t", 0.0, 1.0, 0.0).is_err());
        assert!(CurveSpec::parse(&[], "t", 0.0, 1.0, 0.1).is_err());
        let c = CurveSpec::parse(&["t"], "t", 0.0, 1.0, 0.3).unwrap();
        assert_eq!(c.steps(), 3);
        assert_eq!(CurveSpec::parse(&["t"], "t", 0.0, 1.0, 5.0).unwrap().steps(), 1);
    }

    #[test]
    fn non_projectable_walker_metric_breaks_commutation() {
        let chart = ChartSplit::walker(4, 1).unwrap();
        let g = MetricField::from_fn(chart, |i, j| {
            let t = match (i, j) {
                (0, 0) => "x2*x4",
                (0, 3) | (1, 1) | (2, 2) => "1",
                _ => "0",
            };
            ScalarField::parse(t, 4).unwrap()
        })
        .unwrap();
        let curve = CurveSpec::parse(&["t", "0.5 + t", "0", "0"], "t", 0.0, 1.0, 1e-2).unwrap();
        let dist = DistributionSpec::orthogonal_of(chart);
        let gamma = christoffel(&g);
        let base = gamma.restrict_leading(1).unwrap();
        assert!(transport_projection_gap(&gamma, &base, &curve, &[1.0, 0.0, 0.0, 0.0]).unwrap() > 1e-3);
        assert!(matches!(
            projection_commutes_residual(&g, &base, dist, &curve, &[1.0, 0.0, 0.0, 0.0], 1e-8),
            Err(Error::NotProjectable { .. })
        ));
    }
}
