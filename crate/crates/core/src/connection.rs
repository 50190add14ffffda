//! Torsion-free connections and the Levi-Civita connection of a metric.
//!
//! A Levi-Civita connection keeps its metric's symbolic first and second
//! partials; the inverse metric is never formed symbolically. At each point
//! the Christoffel symbols come from an LU solve, and their partials from
//! `d(g^-1) = -g^-1 (dg) g^-1`, so both are exact up to rounding.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::chart::{packed_index, packed_len, ChartSplit, MetricField, SymMatrix};
use crate::error::{Error, Result};
use crate::expr::ScalarField;
use crate::point::Point;
use crate::residual::Residual;

/// Christoffel symbols `Γ^l_jk` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct ChristoffelValues {
    n: usize,
    data: Vec<f64>,
}

impl ChristoffelValues {
    fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `Γ^l_jk`.
    #[inline]
    pub fn get(&self, l: usize, j: usize, k: usize) -> f64 {
        self.data[(l * self.n + j) * self.n + k]
    }

    #[inline]
    fn set(&mut self, l: usize, j: usize, k: usize, v: f64) {
        let n = self.n;
        self.data[(l * n + j) * n + k] = v;
    }
}

/// Partial derivatives `∂_m Γ^l_jk` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct ChristoffelDerivatives {
    n: usize,
    data: Vec<f64>,
}

impl ChristoffelDerivatives {
    fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n * n * n] }
    }

    /// `∂_m Γ^l_jk`.
    #[inline]
    pub fn get(&self, m: usize, l: usize, j: usize, k: usize) -> f64 {
        let n = self.n;
        self.data[((m * n + l) * n + j) * n + k]
    }

    #[inline]
    fn set(&mut self, m: usize, l: usize, j: usize, k: usize, v: f64) {
        let n = self.n;
        self.data[((m * n + l) * n + j) * n + k] = v;
    }
}

/// Symbolic partials of a metric up to second order.
#[derive(Debug)]
struct MetricJet {
    metric: MetricField,
    /// `first[m]` holds `∂_m g`.
    first: Vec<SymMatrix<ScalarField>>,
    /// `second[packed(m, l)]` holds `∂_m ∂_l g`.
    second: Vec<SymMatrix<ScalarField>>,
}

impl MetricJet {
    fn new(metric: MetricField) -> Self {
        let n = metric.dim();
        let first: Vec<_> = (0..n)
            .map(|m| SymMatrix::from_fn(n, |i, j| metric.component(i, j).partial(m).expect("index in range")))
            .collect();
        let mut second = Vec::with_capacity(packed_len(n));
        for hi in 0..n {
            for lo in 0..=hi {
                second.push(SymMatrix::from_fn(n, |i, j| first[lo].get(i, j).partial(hi).expect("index in range")));
            }
        }
        Self { metric, first, second }
    }

    fn eval_sym(s: &SymMatrix<ScalarField>, x: &Point) -> Result<DMatrix<f64>> {
        let n = s.dim();
        let mut m = DMatrix::zeros(n, n);
        for (i, j, f) in s.iter() {
            let v = f.evaluate(x)?;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        Ok(m)
    }

    fn first_at(&self, x: &Point) -> Result<Vec<DMatrix<f64>>> {
        self.first.iter().map(|s| Self::eval_sym(s, x)).collect()
    }

    fn second_at(&self, x: &Point) -> Result<Vec<DMatrix<f64>>> {
        self.second.iter().map(|s| Self::eval_sym(s, x)).collect()
    }

    fn values(&self, x: &Point) -> Result<(ChristoffelValues, MetricAtPoint)> {
        let n = self.metric.dim();
        let g = self.metric.at(x)?;
        let dg = self.first_at(x)?;
        let lu = g.clone().lu();
        let det = lu.determinant();
        if !(det.abs() > f64::MIN_POSITIVE) {
            return Err(Error::SingularMetric { point: x.coords().to_vec(), det });
        }
        // Christoffel symbols of the first kind, one column per (j, k).
        let mut rhs = DMatrix::zeros(n, n * n);
        for j in 0..n {
            for k in 0..n {
                for m in 0..n {
                    rhs[(m, j * n + k)] = 0.5 * (dg[j][(m, k)] + dg[k][(j, m)] - dg[m][(j, k)]);
                }
            }
        }
        let sol = lu
            .solve(&rhs)
            .ok_or_else(|| Error::SingularMetric { point: x.coords().to_vec(), det })?;
        let mut gamma = ChristoffelValues::zeros(n);
        for l in 0..n {
            for j in 0..n {
                for k in j..n {
                    let v = sol[(l, j * n + k)];
                    gamma.set(l, j, k, v);
                    gamma.set(l, k, j, v);
                }
            }
        }
        Ok((gamma, MetricAtPoint { dg, lu, det }))
    }

    fn jet(&self, x: &Point) -> Result<(ChristoffelValues, ChristoffelDerivatives)> {
        let n = self.metric.dim();
        let (gamma, at) = self.values(x)?;
        let d2g = self.second_at(x)?;
        // ∂_i Γ^l_jk = g^{lm} (∂_i Γ_{m,jk} - (∂_i g)_{mp} Γ^p_jk)
        let mut rhs = DMatrix::zeros(n, n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let col = (i * n + j) * n + k;
                    for m in 0..n {
                        let d_first = 0.5
                            * (d2g[packed_index(i, j)][(m, k)] + d2g[packed_index(i, k)][(j, m)]
                                - d2g[packed_index(i, m)][(j, k)]);
                        let mut corr = 0.0;
                        for p in 0..n {
                            corr += at.dg[i][(m, p)] * gamma.get(p, j, k);
                        }
                        rhs[(m, col)] = d_first - corr;
                    }
                }
            }
        }
        let sol = at
            .lu
            .solve(&rhs)
            .ok_or_else(|| Error::SingularMetric { point: x.coords().to_vec(), det: at.det })?;
        let mut d = ChristoffelDerivatives::zeros(n);
        for i in 0..n {
            for l in 0..n {
                for j in 0..n {
                    for k in j..n {
                        let v = sol[(l, (i * n + j) * n + k)];
                        d.set(i, l, j, k, v);
                        d.set(i, l, k, j, v);
                    }
                }
            }
        }
        Ok((gamma, d))
    }
}

struct MetricAtPoint {
    dg: Vec<DMatrix<f64>>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    det: f64,
}

#[derive(Debug, Clone)]
enum Repr {
    /// `components[l]` holds `Γ^l` as a symmetric array; `partials[m][l]`
    /// holds `∂_m Γ^l`.
    Symbolic { components: Vec<SymMatrix<ScalarField>>, partials: Vec<Vec<SymMatrix<ScalarField>>> },
    LeviCivita(Arc<MetricJet>),
    /// Leading block of a connection of higher dimension, with the remaining
    /// coordinates set to zero.
    Restricted(Arc<ConnectionField>),
}

/// A torsion-free connection on an `n`-dimensional chart. Symmetry in the
/// lower index pair is structural.
#[derive(Debug, Clone)]
pub struct ConnectionField {
    dim: usize,
    repr: Repr,
}

impl ConnectionField {
    /// Connection with symbolic components; `components[l]` is the symmetric
    /// array `Γ^l_jk`.
    pub fn from_components(dim: usize, components: Vec<SymMatrix<ScalarField>>) -> Result<Self> {
        if components.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: components.len() });
        }
        for c in &components {
            if c.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: c.dim() });
            }
            if let Some((_, _, f)) = c.iter().find(|(_, _, f)| f.dim() != dim) {
                return Err(Error::DimensionMismatch { expected: dim, found: f.dim() });
            }
        }
        let partials = (0..dim)
            .map(|m| {
                components
                    .iter()
                    .map(|c| SymMatrix::from_fn(dim, |j, k| c.get(j, k).partial(m).expect("index in range")))
                    .collect()
            })
            .collect();
        Ok(Self { dim, repr: Repr::Symbolic { components, partials } })
    }

    /// Builds symbolic components from a closure over `(l, j, k)` with `j <= k`.
    pub fn from_fn<F: FnMut(usize, usize, usize) -> ScalarField>(dim: usize, mut f: F) -> Result<Self> {
        let comps = (0..dim).map(|l| SymMatrix::from_fn(dim, |j, k| f(l, j, k))).collect();
        Self::from_components(dim, comps)
    }

    pub fn flat(dim: usize) -> Self {
        Self::from_fn(dim, |_, _, _| ScalarField::zero(dim)).expect("consistent dimensions")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The metric, for Levi-Civita connections.
    pub fn metric(&self) -> Option<&MetricField> {
        match &self.repr {
            Repr::LeviCivita(jet) => Some(&jet.metric),
            _ => None,
        }
    }

    /// The component expression `Γ^l_jk`, for symbolic connections.
    pub fn symbolic_component(&self, l: usize, j: usize, k: usize) -> Option<&ScalarField> {
        match &self.repr {
            Repr::Symbolic { components, .. } => Some(components[l].get(j, k)),
            _ => None,
        }
    }

    fn check_point(&self, x: &Point) -> Result<()> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: x.dim() });
        }
        Ok(())
    }

    pub fn values_at(&self, x: &Point) -> Result<ChristoffelValues> {
        self.check_point(x)?;
        let n = self.dim;
        match &self.repr {
            Repr::Symbolic { components, .. } => {
                let mut out = ChristoffelValues::zeros(n);
                for (l, c) in components.iter().enumerate() {
                    for (j, k, f) in c.iter() {
                        let v = f.evaluate(x)?;
                        out.set(l, j, k, v);
                        out.set(l, k, j, v);
                    }
                }
                Ok(out)
            }
            Repr::LeviCivita(jet) => Ok(jet.values(x)?.0),
            Repr::Restricted(parent) => {
                let full = parent.values_at(&x.pad_zeros(parent.dim))?;
                let mut out = ChristoffelValues::zeros(n);
                for l in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            out.set(l, j, k, full.get(l, j, k));
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    /// Christoffel symbols together with their first partials.
    pub fn jet_at(&self, x: &Point) -> Result<(ChristoffelValues, ChristoffelDerivatives)> {
        self.check_point(x)?;
        let n = self.dim;
        match &self.repr {
            Repr::Symbolic { partials, .. } => {
                let gamma = self.values_at(x)?;
                let mut d = ChristoffelDerivatives::zeros(n);
                for (m, per_l) in partials.iter().enumerate() {
                    for (l, c) in per_l.iter().enumerate() {
                        for (j, k, f) in c.iter() {
                            let v = f.evaluate(x)?;
                            d.set(m, l, j, k, v);
                            d.set(m, l, k, j, v);
                        }
                    }
                }
                Ok((gamma, d))
            }
            Repr::LeviCivita(jet) => jet.jet(x),
            Repr::Restricted(parent) => {
                let (g, dg) = parent.jet_at(&x.pad_zeros(parent.dim))?;
                let mut gamma = ChristoffelValues::zeros(n);
                let mut d = ChristoffelDerivatives::zeros(n);
                for l in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            gamma.set(l, j, k, g.get(l, j, k));
                            for m in 0..n {
                                d.set(m, l, j, k, dg.get(m, l, j, k));
                            }
                        }
                    }
                }
                Ok((gamma, d))
            }
        }
    }

    /// The connection on the first `dim` coordinates obtained by dropping
    /// every component with an index outside `0..dim` and setting the
    /// remaining coordinates to zero.
    pub fn restrict_leading(&self, dim: usize) -> Result<ConnectionField> {
        if dim == 0 || dim > self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: dim });
        }
        match &self.repr {
            Repr::Symbolic { components, .. } => {
                let comps = components[..dim]
                    .iter()
                    .map(|c| SymMatrix::try_from_fn(dim, |j, k| c.get(j, k).restrict_leading(dim)))
                    .collect::<Result<Vec<_>>>()?;
                ConnectionField::from_components(dim, comps)
            }
            _ => Ok(ConnectionField { dim, repr: Repr::Restricted(Arc::new(self.clone())) }),
        }
    }
}

/// The Levi-Civita connection of `g`.
pub fn christoffel(g: &MetricField) -> ConnectionField {
    ConnectionField { dim: g.dim(), repr: Repr::LeviCivita(Arc::new(MetricJet::new(g.clone()))) }
}

/// `max |∂_μ g_νρ - Γ^σ_μν g_σρ - Γ^σ_μρ g_νσ|` at `x`.
pub fn covariant_derivative_metric_residual(g: &MetricField, gamma: &ConnectionField, x: &Point) -> Result<f64> {
    let n = g.dim();
    if gamma.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: gamma.dim() });
    }
    let gx = g.at(x)?;
    let c = gamma.values_at(x)?;
    let mut worst: f64 = 0.0;
    for mu in 0..n {
        for (nu, rho, f) in g.components().iter() {
            let d = f.partial(mu)?.evaluate(x)?;
            let mut s = 0.0;
            for sigma in 0..n {
                s += c.get(sigma, mu, nu) * gx[(sigma, rho)] + c.get(sigma, mu, rho) * gx[(nu, sigma)];
            }
            worst = worst.max((d - s).abs());
        }
    }
    Ok(worst)
}

/// Metric-compatibility residual over many points, each divided by
/// `1 + max |g_μν(x)|`.
pub fn metric_compatibility_residual(g: &MetricField, gamma: &ConnectionField, points: &[Point]) -> Result<Residual> {
    let mut r = Residual::zero();
    for x in points {
        let scale = 1.0 + g.at(x)?.amax();
        r.observe(covariant_derivative_metric_residual(g, gamma, x)? / scale, x);
    }
    Ok(r)
}

/// `∇_v w` at `x` for vector fields given by component expressions.
pub fn covariant_derivative(gamma: &ConnectionField, v: &[ScalarField], w: &[ScalarField], x: &Point) -> Result<Vec<f64>> {
    let n = gamma.dim();
    if v.len() != n || w.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: v.len().min(w.len()) });
    }
    let c = gamma.values_at(x)?;
    let vx: Vec<f64> = v.iter().map(|f| f.evaluate(x)).collect::<Result<_>>()?;
    let wx: Vec<f64> = w.iter().map(|f| f.evaluate(x)).collect::<Result<_>>()?;
    let mut out = vec![0.0; n];
    for (l, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for mu in 0..n {
            if vx[mu] == 0.0 {
                continue;
            }
            let mut inner = w[l].partial(mu)?.evaluate(x)?;
            for k in 0..n {
                inner += c.get(l, mu, k) * wx[k];
            }
            s += vx[mu] * inner;
        }
        *o = s;
    }
    Ok(out)
}

/// Leading-block Christoffel symbols of a metric in Walker form computed
/// from the shortcut `2Γ^i_jk = -g^{ai} ∂_a g_jk`, where `[g^{ai}]` is the
/// inverse of the constant block `[g_ia]`.
///
/// Valid whenever `g_ab = g_ap = 0` and `∂_j g_ia = 0`; the split must be a
/// Walker split, or a two-block split with `n = 2s`.
pub fn walker_leading_christoffel(g: &MetricField, x: &Point) -> Result<ChristoffelValues> {
    let chart = g.chart();
    let r = match chart {
        ChartSplit::Walker { r, .. } => r,
        ChartSplit::TwoBlock { n, s } if n == 2 * s => s,
        ChartSplit::TwoBlock { n, s } => {
            return Err(Error::InvalidSplit(format!("null-block shortcut needs n = 2s (n = {n}, s = {s})")))
        }
    };
    let trailing = chart.trailing();
    let mut gia = DMatrix::zeros(r, r);
    for i in 0..r {
        for a in 0..r {
            gia[(i, a)] = g.component(i, trailing.start + a).evaluate(x)?;
        }
    }
    let inv = gia.try_inverse().ok_or(Error::SingularMatrix { what: "g_ia" })?;
    let mut out = ChristoffelValues::zeros(r);
    for j in 0..r {
        for k in j..r {
            let f = g.component(j, k);
            let mut da = Vec::with_capacity(r);
            for a in 0..r {
                da.push(f.partial(trailing.start + a)?.evaluate(x)?);
            }
            for i in 0..r {
                // inv[(a, i)] is g^{ai}
                let s: f64 = (0..r).map(|a| inv[(a, i)] * da[a]).sum();
                out.set(i, j, k, -0.5 * s);
                out.set(i, k, j, -0.5 * s);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn metric(chart: ChartSplit, entries: &[((usize, usize), &str)]) -> MetricField {
        let n = chart.dim();
        MetricField::from_fn(chart, |i, j| {
            entries
                .iter()
                .find(|((a, b), _)| (*a, *b) == (i, j))
                .map(|(_, t)| ScalarField::parse(t, n).unwrap())
                .unwrap_or_else(|| ScalarField::zero(n))
        })
        .unwrap()
    }

    #[test]
    fn identity_metric_is_flat() {
        let g = MetricField::diagonal(ChartSplit::two_block(2, 1).unwrap(), &[1.0, 1.0]).unwrap();
        let c = christoffel(&g).values_at(&Point::new(vec![0.3, -0.2])).unwrap();
        assert!(c.data.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn walker_two_dimensional_example() {
        // g_11 = -2c x2, g_12 = 1: hand computation gives Γ^1_11 = c.
        let c = 0.75;
        let g = metric(
            ChartSplit::walker(2, 1).unwrap(),
            &[((0, 0), "-1.5*x2"), ((0, 1), "1")],
        );
        let x = Point::new(vec![0.4, -0.6]);
        let gamma = christoffel(&g).values_at(&x).unwrap();
        assert!((gamma.get(0, 0, 0) - c).abs() < 1e-15);
        let shortcut = walker_leading_christoffel(&g, &x).unwrap();
        assert!((shortcut.get(0, 0, 0) - c).abs() < 1e-15);
    }

    #[test]
    fn polar_metric() {
        let g = metric(ChartSplit::two_block(2, 1).unwrap(), &[((0, 0), "1"), ((1, 1), "x1^2")]);
        let gamma = christoffel(&g).values_at(&Point::new(vec![2.0, 0.1])).unwrap();
        assert!((gamma.get(0, 1, 1) + 2.0).abs() < 1e-15);
        assert!((gamma.get(1, 0, 1) - 0.5).abs() < 1e-15);
        assert!((gamma.get(1, 1, 0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn compatibility_residual_examples() {
        let chart = ChartSplit::two_block(2, 1).unwrap();
        let id = MetricField::diagonal(chart, &[1.0, 1.0]).unwrap();
        let x = Point::new(vec![0.1, 0.2]);
        assert_eq!(covariant_derivative_metric_residual(&id, &ConnectionField::flat(2), &x).unwrap(), 0.0);
        let g = metric(chart, &[((0, 0), "2 + x1*x2"), ((0, 1), "x2^2"), ((1, 1), "3 - x1")]);
        assert!(covariant_derivative_metric_residual(&g, &christoffel(&g), &x).unwrap() < 1e-14);
        assert!(covariant_derivative_metric_residual(&g, &ConnectionField::flat(2), &x).unwrap() > 0.1);
    }

    #[test]
    fn levi_civita_derivatives_match_finite_differences() {
        let g = metric(
            ChartSplit::two_block(3, 1).unwrap(),
            &[((0, 0), "2 + x1*x2"), ((0, 2), "x3^2*x1"), ((1, 1), "3 - x1 + sin(x3)"), ((2, 2), "-2 + x2^3")],
        );
        let lc = christoffel(&g);
        let x = Point::new(vec![0.2, -0.3, 0.5]);
        let (_, d) = lc.jet_at(&x).unwrap();
        let h = 1e-5;
        for m in 0..3 {
            let mut xp = x.coords().to_vec();
            let mut xm = x.coords().to_vec();
            xp[m] += h;
            xm[m] -= h;
            let gp = lc.values_at(&Point::new(xp)).unwrap();
            let gm = lc.values_at(&Point::new(xm)).unwrap();
            for l in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        let fd = (gp.get(l, j, k) - gm.get(l, j, k)) / (2.0 * h);
                        assert!((fd - d.get(m, l, j, k)).abs() < 1e-8, "m={m} l={l} j={j} k={k}");
                    }
                }
            }
        }
    }

    #[test]
    fn restriction_of_symbolic_connection() {
        let c = ConnectionField::from_fn(3, |l, j, k| {
            if (l, j, k) == (0, 0, 0) {
                ScalarField::parse("x1 + x3", 3).unwrap()
            } else {
                ScalarField::zero(3)
            }
        })
        .unwrap();
        let r = c.restrict_leading(2).unwrap();
        assert_eq!(r.symbolic_component(0, 0, 0).unwrap().to_string(), "x1");
        assert!(c.restrict_leading(4).is_err());
    }

    #[test]
    fn covariant_derivative_of_coordinate_fields() {
        let g = metric(ChartSplit::two_block(2, 1).unwrap(), &[((0, 0), "1"), ((1, 1), "x1^2")]);
        let lc = christoffel(&g);
        let e = |i: usize| -> Vec<ScalarField> {
            (0..2).map(|k| ScalarField::integer((k == i) as i64, 2)).collect()
        };
        // ∇_{∂2} ∂2 = Γ^l_22 ∂_l = -x1 ∂_1
        let v = covariant_derivative(&lc, &e(1), &e(1), &Point::new(vec![2.0, 0.0])).unwrap();
        assert!((v[0] + 2.0).abs() < 1e-15 && v[1].abs() < 1e-15);
    }
}
