//! Seeded random test data: polynomial metrics, Walker metrics, extension
//! specs and 1-form sections.
//!
//! Metrics are kept nondegenerate on `[-1, 1]^n` by diagonal dominance:
//! diagonal entries start at `±[3, 4]` and every other contribution is a sum
//! of at most three monomials with coefficients of size at most 0.15.

use std::ops::Range;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chart::{ChartSplit, MetricField, SymMatrix};
use crate::connection::ConnectionField;
use crate::expr::ScalarField;
use crate::extension::{ExtensionSpec, OneFormSection};

const SMALL: f64 = 0.15;
const MAX_TERMS: usize = 3;

pub struct Corpus {
    rng: ChaCha8Rng,
}

/// Walker metric data `g_jk = x^a B_ajk + λ_jk`, `g_ip = λ_ip`,
/// `g_pq = λ_pq`, `g_ia` constant, with `B` depending on base coordinates
/// only and `λ` on base and middle coordinates.
#[derive(Debug, Clone)]
pub struct WalkerData {
    pub chart: ChartSplit,
    /// `b[a]` is the symmetric `r x r` array `B_ajk`.
    pub b: Vec<SymMatrix<ScalarField>>,
    /// Symmetric `(r+m) x (r+m)` array over the full chart.
    pub lambda: SymMatrix<ScalarField>,
    pub g_ia: DMatrix<f64>,
}

impl WalkerData {
    pub fn r(&self) -> usize {
        self.chart.trailing_dim()
    }

    pub fn metric(&self) -> MetricField {
        self.metric_with(None)
    }

    /// The metric with `extra` added to `g_11`.
    pub fn metric_with(&self, extra: Option<&ScalarField>) -> MetricField {
        let n = self.chart.dim();
        let r = self.r();
        let fiber = n - r;
        MetricField::from_fn(self.chart, |i, j| {
            if j >= fiber {
                return if i < r { ScalarField::constant(self.g_ia[(i, j - fiber)], n) } else { ScalarField::zero(n) };
            }
            let mut terms = vec![self.lambda.get(i, j).clone()];
            if j < r {
                for (a, b) in self.b.iter().enumerate() {
                    let bjk = b.get(i, j);
                    if !bjk.is_zero() {
                        terms.push(ScalarField::coordinate(fiber + a, n).expect("in range") * bjk.clone());
                    }
                }
                if (i, j) == (0, 0) {
                    terms.extend(extra.cloned());
                }
            }
            ScalarField::sum(n, terms)
        })
        .expect("consistent dimensions")
    }
}

impl Corpus {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..=hi)
    }

    pub fn index(&mut self, bound: usize) -> usize {
        self.rng.random_range(0..bound)
    }

    fn sign(&mut self) -> f64 {
        if self.rng.random_bool(0.5) {
            1.0
        } else {
            -1.0
        }
    }

    /// A random polynomial over the coordinates in `vars` of total degree at
    /// most `max_degree`, with up to `max_terms` monomials and coefficients
    /// in `[-coef, coef]`.
    pub fn polynomial(
        &mut self,
        dim: usize,
        vars: Range<usize>,
        max_degree: u32,
        max_terms: usize,
        coef: f64,
    ) -> ScalarField {
        let count = self.rng.random_range(1..=max_terms);
        let mut terms = Vec::with_capacity(count);
        for _ in 0..count {
            let c = (self.uniform(-coef, coef) * 1000.0).round() / 1000.0;
            let degree = if vars.is_empty() { 0 } else { self.rng.random_range(0..=max_degree) };
            let mut factors = vec![ScalarField::constant(c, dim)];
            for _ in 0..degree {
                let v = self.rng.random_range(vars.clone());
                factors.push(ScalarField::coordinate(v, dim).expect("in range"));
            }
            terms.push(ScalarField::product(dim, factors));
        }
        ScalarField::sum(dim, terms)
    }

    fn small(&mut self, dim: usize, vars: Range<usize>) -> ScalarField {
        self.polynomial(dim, vars, 3, MAX_TERMS, SMALL)
    }

    fn dominant_diagonal(&mut self, dim: usize, vars: Range<usize>) -> ScalarField {
        let d = self.sign() * self.uniform(3.0, 4.0);
        ScalarField::constant(d, dim) + self.small(dim, vars)
    }

    /// A nondegenerate polynomial metric of degree at most 3 on `chart`.
    pub fn polynomial_metric(&mut self, chart: ChartSplit) -> MetricField {
        let n = chart.dim();
        MetricField::from_fn(chart, |i, j| {
            if i == j {
                self.dominant_diagonal(n, 0..n)
            } else {
                self.small(n, 0..n)
            }
        })
        .expect("consistent dimensions")
    }

    /// A random constant `r x r` block with dominant diagonal `±[1, 2]`.
    pub fn constant_block(&mut self, r: usize) -> DMatrix<f64> {
        let off = 0.4 / r as f64;
        DMatrix::from_fn(r, r, |i, a| {
            if i == a {
                self.sign() * self.uniform(1.0, 2.0)
            } else {
                self.uniform(-off, off)
            }
        })
    }

    /// A random metric in Walker form on `ChartSplit::walker(n, r)`. The
    /// base block `g_jk` may depend on every coordinate, so the result is in
    /// general not projectable.
    pub fn walker_metric(&mut self, n: usize, r: usize) -> MetricField {
        let chart = ChartSplit::walker(n, r).expect("valid Walker split");
        let g_ia = self.constant_block(r);
        let fiber = n - r;
        MetricField::from_fn(chart, |i, j| {
            if j >= fiber {
                if i < r {
                    ScalarField::constant(g_ia[(i, j - fiber)], n)
                } else {
                    ScalarField::zero(n)
                }
            } else if j < r {
                self.polynomial(n, 0..n, 3, MAX_TERMS, 1.0)
            } else if i < r {
                self.small(n, 0..fiber)
            } else if i == j {
                self.dominant_diagonal(n, 0..fiber)
            } else {
                self.small(n, 0..fiber)
            }
        })
        .expect("consistent dimensions")
    }

    /// Random data of the projectable Walker form `g_jk = x^a B_ajk + λ_jk`.
    pub fn walker_data(&mut self, n: usize, r: usize) -> WalkerData {
        let chart = ChartSplit::walker(n, r).expect("valid Walker split");
        let fiber = n - r;
        let g_ia = self.constant_block(r);
        let b = (0..r).map(|_| SymMatrix::from_fn(r, |_, _| self.polynomial(n, 0..r, 3, MAX_TERMS, 1.0))).collect();
        let lambda = SymMatrix::from_fn(fiber, |i, j| {
            if j < r {
                self.polynomial(n, 0..fiber, 3, MAX_TERMS, 1.0)
            } else if i < r {
                self.small(n, 0..fiber)
            } else if i == j {
                self.dominant_diagonal(n, 0..fiber)
            } else {
                self.small(n, 0..fiber)
            }
        });
        WalkerData { chart, b, lambda, g_ia }
    }

    /// A term `c x^a y` with `y` a middle or trailing coordinate and
    /// `|c| ∈ [0.5, 1]`; adding it to `g_11` of a [`WalkerData`] metric
    /// violates the projectability criterion.
    pub fn projectability_violation(&mut self, data: &WalkerData) -> ScalarField {
        let n = data.chart.dim();
        let r = data.r();
        let a = n - r + self.index(r);
        let y = if data.chart.middle_dim() > 0 && self.rng.random_bool(0.5) {
            r + self.index(data.chart.middle_dim())
        } else {
            n - r + self.index(r)
        };
        let c = self.sign() * self.uniform(0.5, 1.0);
        ScalarField::product(
            n,
            [
                ScalarField::constant((c * 1000.0).round() / 1000.0, n),
                ScalarField::coordinate(a, n).expect("in range"),
                ScalarField::coordinate(y, n).expect("in range"),
            ],
        )
    }

    /// A torsion-free connection on `r` coordinates with polynomial
    /// components of degree at most 3.
    pub fn base_connection(&mut self, r: usize) -> ConnectionField {
        ConnectionField::from_fn(r, |_, _, _| self.polynomial(r, 0..r, 3, MAX_TERMS, 1.0)).expect("consistent dimensions")
    }

    /// A random pullback-extension spec; `g_ia` is the identity half of the time.
    pub fn extension_spec(&mut self, r: usize, m: usize) -> ExtensionSpec {
        let fiber = r + m;
        let base = self.base_connection(r);
        let lambda = SymMatrix::from_fn(fiber, |i, j| {
            if j < r {
                self.polynomial(fiber, 0..fiber, 3, MAX_TERMS, 1.0)
            } else if i < r {
                self.small(fiber, 0..fiber)
            } else if i == j {
                self.dominant_diagonal(fiber, 0..fiber)
            } else {
                self.small(fiber, 0..fiber)
            }
        });
        let g_ia = if self.rng.random_bool(0.5) { None } else { Some(self.constant_block(r)) };
        ExtensionSpec::new(r, m, base, lambda, g_ia).expect("consistent extension data")
    }

    /// A random polynomial 1-form section over `(x^i, x^p)`.
    pub fn one_form(&mut self, r: usize, dim: usize) -> OneFormSection {
        OneFormSection::new((0..r).map(|_| self.polynomial(dim, 0..dim, 3, MAX_TERMS, 1.0)).collect())
            .expect("consistent dimensions")
    }

    /// A spec together with a nonzero 1-form whose Killing operator vanishes.
    ///
    /// Three families are used: a flat base with `ω_i = c_i + A_ij x^j`,
    /// `A` antisymmetric; `r = 1`, `Γ = c` with `ω = k exp(c x^1)`; and
    /// `r = 1`, `Γ = x^1` with `ω = k exp((x^1)^2 / 2)`.
    pub fn isometry_case(&mut self, m: usize) -> (ExtensionSpec, OneFormSection) {
        let family = self.index(3);
        let r = if family == 0 { 1 + self.index(2) } else { 1 };
        let template = self.extension_spec(r, m);
        let fiber = r + m;
        let k = (self.uniform(0.2, 1.0) * 1000.0).round() / 1000.0;
        let (base, omega) = match family {
            0 => {
                let a = self.uniform(-1.0, 1.0);
                let comps = (0..r)
                    .map(|i| {
                        let mut terms = vec![ScalarField::constant(k * (i + 1) as f64, fiber)];
                        if r == 2 {
                            let (j, s) = if i == 0 { (1, a) } else { (0, -a) };
                            terms.push(ScalarField::coordinate(j, fiber).expect("in range").scale(s));
                        }
                        ScalarField::sum(fiber, terms)
                    })
                    .collect();
                (ConnectionField::flat(r), OneFormSection::new(comps).expect("consistent"))
            }
            1 => {
                let c = (self.uniform(-1.0, 1.0) * 1000.0).round() / 1000.0;
                let base = ConnectionField::from_fn(1, |_, _, _| ScalarField::constant(c, 1)).expect("consistent");
                let x1 = ScalarField::coordinate(0, fiber).expect("in range");
                let w = x1.scale(c).exp().scale(k);
                (base, OneFormSection::new(vec![w]).expect("consistent"))
            }
            _ => {
                let base = ConnectionField::from_fn(1, |_, _, _| ScalarField::coordinate(0, 1).expect("in range"))
                    .expect("consistent");
                let x1 = ScalarField::coordinate(0, fiber).expect("in range");
                let w = x1.powi(2).scale(0.5).exp().scale(k);
                (base, OneFormSection::new(vec![w]).expect("consistent"))
            }
        };
        let spec = ExtensionSpec::new(r, m, base, template.lambda().clone(), Some(template.g_ia().clone()))
            .expect("consistent extension data");
        (spec, omega)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::DET_FLOOR;
    use crate::extension::{build_pullback_extension, killing_operator};
    use crate::point::sample_box;

    #[test]
    fn seeded() {
        let a = Corpus::new(3).polynomial_metric(ChartSplit::two_block(4, 2).unwrap());
        let b = Corpus::new(3).polynomial_metric(ChartSplit::two_block(4, 2).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn metrics_are_nondegenerate_on_the_box() {
        let mut c = Corpus::new(11);
        for n in 2..=5 {
            let g = c.polynomial_metric(ChartSplit::two_block(n, 1).unwrap());
            for x in sample_box(n, 50, n as u64) {
                assert!(g.at(&x).unwrap().determinant().abs() > DET_FLOOR);
            }
        }
    }

    #[test]
    fn isometry_forms_are_killing() {
        let mut c = Corpus::new(5);
        for _ in 0..12 {
            let m = c.index(3);
            let (spec, omega) = c.isometry_case(m);
            assert!(build_pullback_extension(&spec).is_ok());
            for z in sample_box(spec.r() + m, 5, 1) {
                let l = killing_operator(spec.base(), &omega, &z).unwrap();
                assert!(l.amax() < 1e-12, "{l}");
            }
        }
    }
}
