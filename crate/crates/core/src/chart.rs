//! Chart index splits and metric fields.
//!
//! Indices are zero-based. In a Walker split of dimension `n` with null
//! block size `r` the three blocks are
//!
//! * leading `0..r` (the base coordinates),
//! * middle `r..n-r` (the vertical coordinates of the intermediate bundle),
//! * trailing `n-r..n` (the null block).
//!
//! The coordinate projections onto the intermediate bundle and the base are
//! plain truncations.

use std::ops::Range;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::expr::ScalarField;
use crate::point::{Point, Sampler};

/// Sample points with `|det g|` below this value are rejected.
pub const DET_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartSplit {
    /// Leading `0..r`, middle `r..n-r`, trailing `n-r..n`.
    Walker { n: usize, r: usize },
    /// Leading `0..n-s`, trailing `n-s..n`.
    TwoBlock { n: usize, s: usize },
}

impl ChartSplit {
    pub fn walker(n: usize, r: usize) -> Result<Self> {
        if r == 0 || 2 * r > n {
            return Err(Error::InvalidSplit(format!("Walker split needs 0 < r and 2r <= n (n = {n}, r = {r})")));
        }
        Ok(ChartSplit::Walker { n, r })
    }

    pub fn two_block(n: usize, s: usize) -> Result<Self> {
        if s == 0 || s >= n {
            return Err(Error::InvalidSplit(format!("two-block split needs 0 < s < n (n = {n}, s = {s})")));
        }
        Ok(ChartSplit::TwoBlock { n, s })
    }

    pub fn dim(&self) -> usize {
        match *self {
            ChartSplit::Walker { n, .. } | ChartSplit::TwoBlock { n, .. } => n,
        }
    }

    /// Size of the trailing block.
    pub fn trailing_dim(&self) -> usize {
        match *self {
            ChartSplit::Walker { r, .. } => r,
            ChartSplit::TwoBlock { s, .. } => s,
        }
    }

    pub fn leading(&self) -> Range<usize> {
        match *self {
            ChartSplit::Walker { r, .. } => 0..r,
            ChartSplit::TwoBlock { n, s } => 0..n - s,
        }
    }

    /// Middle block; empty for two-block splits.
    pub fn middle(&self) -> Range<usize> {
        match *self {
            ChartSplit::Walker { n, r } => r..n - r,
            ChartSplit::TwoBlock { n, s } => n - s..n - s,
        }
    }

    pub fn trailing(&self) -> Range<usize> {
        let n = self.dim();
        n - self.trailing_dim()..n
    }

    pub fn middle_dim(&self) -> usize {
        self.middle().len()
    }

    pub fn is_walker(&self) -> bool {
        matches!(self, ChartSplit::Walker { .. })
    }

    /// `(x^i, x^p, x^a) -> (x^i, x^p)`.
    pub fn project_p(&self, x: &Point) -> Point {
        x.truncate(self.dim() - self.trailing_dim())
    }

    /// `(x^i, x^p, x^a) -> (x^i)`.
    pub fn project_pi(&self, x: &Point) -> Point {
        x.truncate(self.leading().len())
    }

    /// `(x^i, x^p) -> (x^i)`.
    pub fn project_q(&self, z: &Point) -> Point {
        z.truncate(self.leading().len())
    }
}

/// Packed storage for a symmetric `n x n` array (only `i <= j` stored).
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<T> {
    n: usize,
    data: Vec<T>,
}

#[inline]
pub(crate) fn packed_index(i: usize, j: usize) -> usize {
    let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
    hi * (hi + 1) / 2 + lo
}

pub(crate) fn packed_len(n: usize) -> usize {
    n * (n + 1) / 2
}

impl<T> SymMatrix<T> {
    pub fn from_fn<F: FnMut(usize, usize) -> T>(n: usize, mut f: F) -> Self {
        let mut data = Vec::with_capacity(packed_len(n));
        for hi in 0..n {
            for lo in 0..=hi {
                data.push(f(lo, hi));
            }
        }
        Self { n, data }
    }

    pub fn try_from_fn<E, F: FnMut(usize, usize) -> Result<T, E>>(n: usize, mut f: F) -> Result<Self, E> {
        let mut data = Vec::with_capacity(packed_len(n));
        for hi in 0..n {
            for lo in 0..=hi {
                data.push(f(lo, hi)?);
            }
        }
        Ok(Self { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[packed_index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: T) {
        let k = packed_index(i, j);
        self.data[k] = value;
    }

    /// Entries `(i, j, value)` with `i <= j`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &T)> {
        (0..self.n).flat_map(move |hi| (0..=hi).map(move |lo| (lo, hi, &self.data[packed_index(lo, hi)])))
    }
}

/// A symmetric 2-tensor on a chart, given by component expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    chart: ChartSplit,
    components: SymMatrix<ScalarField>,
}

impl MetricField {
    pub fn new(chart: ChartSplit, components: SymMatrix<ScalarField>) -> Result<Self> {
        let n = chart.dim();
        if components.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: components.dim() });
        }
        if let Some((_, _, f)) = components.iter().find(|(_, _, f)| f.dim() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: f.dim() });
        }
        Ok(Self { chart, components })
    }

    /// Builds from a closure over `i <= j`.
    pub fn from_fn<F: FnMut(usize, usize) -> ScalarField>(chart: ChartSplit, f: F) -> Result<Self> {
        Self::new(chart, SymMatrix::from_fn(chart.dim(), f))
    }

    /// Constant diagonal metric.
    pub fn diagonal(chart: ChartSplit, diag: &[f64]) -> Result<Self> {
        let n = chart.dim();
        if diag.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: diag.len() });
        }
        Self::from_fn(chart, |i, j| if i == j { ScalarField::constant(diag[i], n) } else { ScalarField::zero(n) })
    }

    pub fn chart(&self) -> ChartSplit {
        self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn component(&self, i: usize, j: usize) -> &ScalarField {
        self.components.get(i, j)
    }

    pub fn components(&self) -> &SymMatrix<ScalarField> {
        &self.components
    }

    /// Same components under a different split of the same dimension.
    pub fn with_chart(&self, chart: ChartSplit) -> Result<Self> {
        Self::new(chart, self.components.clone())
    }

    pub fn at(&self, x: &Point) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (i, j, f) in self.components.iter() {
            let v = f.evaluate(x)?;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        Ok(m)
    }

    /// Seeded points of `[-1, 1]^n` where every component evaluates and
    /// `|det g| >= DET_FLOOR`.
    pub fn sample_points(&self, count: usize, seed: u64) -> Result<Vec<Point>> {
        let mut sampler = Sampler::new(self.dim(), seed);
        sampler.sample_where(count, |p| matches!(self.at(p), Ok(m) if m.determinant().abs() >= DET_FLOOR))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn walker_blocks() {
        let c = ChartSplit::walker(7, 2).unwrap();
        assert_eq!(c.leading(), 0..2);
        assert_eq!(c.middle(), 2..5);
        assert_eq!(c.trailing(), 5..7);
        let x = Point::new(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        assert_eq!(c.project_p(&x).coords(), &[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(c.project_pi(&x).coords(), &[1.0, 2.0]);
        // pi = q o p
        assert_eq!(c.project_q(&c.project_p(&x)), c.project_pi(&x));
    }

    #[test]
    fn split_validation() {
        assert!(ChartSplit::walker(4, 2).is_ok());
        assert!(ChartSplit::walker(3, 2).is_err());
        assert!(ChartSplit::walker(3, 0).is_err());
        assert!(ChartSplit::two_block(3, 3).is_err());
        assert!(ChartSplit::two_block(3, 0).is_err());
        let t = ChartSplit::two_block(5, 2).unwrap();
        assert_eq!(t.leading(), 0..3);
        assert!(t.middle().is_empty());
        assert_eq!(t.trailing(), 3..5);
    }

    #[test]
    fn packed_symmetry() {
        let m = SymMatrix::from_fn(4, |i, j| 10 * i + j);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(m.get(i, j), m.get(j, i));
            }
        }
        assert_eq!(*m.get(3, 1), 13);
        assert_eq!(m.iter().count(), 10);
    }

    #[test]
    fn metric_evaluation_and_sampling() {
        let chart = ChartSplit::two_block(2, 1).unwrap();
        let g = MetricField::from_fn(chart, |i, j| match (i, j) {
            (0, 0) => ScalarField::parse("x1", 2).unwrap(),
            (1, 1) => ScalarField::integer(1, 2),
            _ => ScalarField::zero(2),
        })
        .unwrap();
        let pts = g.sample_points(30, 3).unwrap();
        assert!(pts.iter().all(|p| p[0].abs() >= DET_FLOOR));
        assert_eq!(g.at(&Point::new(vec![0.5, 0.0])).unwrap()[(0, 0)], 0.5);
    }
}
