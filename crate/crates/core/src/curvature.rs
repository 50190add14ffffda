//! Riemann curvature of a torsion-free connection.
//!
//! `R_ijk^l = ∂_j Γ^l_ik - ∂_i Γ^l_jk + Γ^l_jp Γ^p_ik - Γ^l_ip Γ^p_jk`, lowered
//! on the last slot: `R_ijkl = R_ijk^m g_ml`.

use nalgebra::DMatrix;

use crate::connection::ConnectionField;
use crate::error::{Error, Result};
use crate::point::Point;

/// `R_ijk^l` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureValue {
    n: usize,
    data: Vec<f64>,
}

impl CurvatureValue {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// `R_ijk^l`.
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.n;
        self.data[((i * n + j) * n + k) * n + l]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |R_ijk^l + R_jki^l + R_kij^l|`.
    pub fn bianchi_residual(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let s = self.get(i, j, k, l) + self.get(j, k, i, l) + self.get(k, i, j, l);
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }

    /// `max |R_ijk^l + R_jik^l|`. Zero by construction.
    pub fn antisymmetry_residual(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        worst = worst.max((self.get(i, j, k, l) + self.get(j, i, k, l)).abs());
                    }
                }
            }
        }
        worst
    }
}

/// `R_ijkl` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct LoweredCurvature {
    n: usize,
    data: Vec<f64>,
}

impl LoweredCurvature {
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.n;
        self.data[((i * n + j) * n + k) * n + l]
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Largest violation of `R_ijkl = -R_jikl`, `R_ijkl = -R_ijlk` and
    /// `R_ijkl = R_klij`.
    pub fn pair_symmetry_residual(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let v = self.get(i, j, k, l);
                        worst = worst
                            .max((v + self.get(j, i, k, l)).abs())
                            .max((v + self.get(i, j, l, k)).abs())
                            .max((v - self.get(k, l, i, j)).abs());
                    }
                }
            }
        }
        worst
    }
}

/// The curvature of `gamma` at `x`.
pub fn curvature(gamma: &ConnectionField, x: &Point) -> Result<CurvatureValue> {
    let n = gamma.dim();
    let (c, d) = gamma.jet_at(x)?;
    let mut data = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let a = d.get(j, l, i, k) - d.get(i, l, j, k);
                    let mut s1 = 0.0;
                    let mut s2 = 0.0;
                    for p in 0..n {
                        s1 += c.get(l, j, p) * c.get(p, i, k);
                        s2 += c.get(l, i, p) * c.get(p, j, k);
                    }
                    // grouped so that swapping i and j negates the value exactly
                    data[((i * n + j) * n + k) * n + l] = a + (s1 - s2);
                }
            }
        }
    }
    Ok(CurvatureValue { n, data })
}

/// `R_ijkl = R_ijk^m g_ml` with `g` the metric matrix at the same point.
pub fn lower_curvature(r: &CurvatureValue, g: &DMatrix<f64>) -> Result<LoweredCurvature> {
    let n = r.n;
    if g.nrows() != n || g.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: g.nrows() });
    }
    let mut data = vec![0.0; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut s = 0.0;
                    for m in 0..n {
                        s += r.get(i, j, k, m) * g[(m, l)];
                    }
                    data[((i * n + j) * n + k) * n + l] = s;
                }
            }
        }
    }
    Ok(LoweredCurvature { n, data })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{ChartSplit, MetricField};
    use crate::connection::christoffel;
    use crate::expr::ScalarField;

    fn sphere() -> MetricField {
        MetricField::from_fn(ChartSplit::two_block(2, 1).unwrap(), |i, j| match (i, j) {
            (0, 0) => ScalarField::integer(1, 2),
            (1, 1) => ScalarField::parse("sin(x1)^2", 2).unwrap(),
            _ => ScalarField::zero(2),
        })
        .unwrap()
    }

    /// Finite-difference curvature from Christoffel values alone.
    fn fd_curvature(gamma: &ConnectionField, x: &Point) -> Vec<f64> {
        let n = gamma.dim();
        let h = 1e-5;
        let c = gamma.values_at(x).unwrap();
        let shifted = |m: usize, s: f64| {
            let mut y = x.coords().to_vec();
            y[m] += s;
            gamma.values_at(&Point::new(y)).unwrap()
        };
        let dd: Vec<_> = (0..n).map(|m| (shifted(m, h), shifted(m, -h))).collect();
        let d = |m: usize, l: usize, a: usize, b: usize| (dd[m].0.get(l, a, b) - dd[m].1.get(l, a, b)) / (2.0 * h);
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut v = d(j, l, i, k) - d(i, l, j, k);
                        for p in 0..n {
                            v += c.get(l, j, p) * c.get(p, i, k) - c.get(l, i, p) * c.get(p, j, k);
                        }
                        out.push(v);
                    }
                }
            }
        }
        out
    }

    #[test]
    fn sphere_sign() {
        let g = sphere();
        let lc = christoffel(&g);
        let x = Point::new(vec![0.9, 0.3]);
        let r = curvature(&lc, &x).unwrap();
        // R_121^2 = 1 for the unit sphere in this convention
        assert!((r.get(0, 1, 0, 1) - 1.0).abs() < 1e-12);
        let fd = fd_curvature(&lc, &x);
        let at = |i: usize, j: usize, k: usize, l: usize| ((i * 2 + j) * 2 + k) * 2 + l;
        assert!((fd[at(0, 1, 0, 1)] - 1.0).abs() < 1e-6);
        let low = lower_curvature(&r, &g.at(&x).unwrap()).unwrap();
        assert!(low.pair_symmetry_residual() < 1e-12);
        assert!(r.bianchi_residual() < 1e-12);
        assert_eq!(r.antisymmetry_residual(), 0.0);
    }

    #[test]
    fn matches_finite_differences() {
        let g = MetricField::from_fn(ChartSplit::two_block(3, 1).unwrap(), |i, j| {
            let t = match (i, j) {
                (0, 0) => "3 + x1*x2",
                (0, 1) => "0.2*x3^2",
                (1, 1) => "-3 + 0.1*x1^3",
                (1, 2) => "0.1*x1*x2",
                (2, 2) => "4 + x2*x3",
                _ => "0",
            };
            ScalarField::parse(t, 3).unwrap()
        })
        .unwrap();
        let lc = christoffel(&g);
        let x = Point::new(vec![0.3, -0.4, 0.7]);
        let r = curvature(&lc, &x).unwrap();
        let fd = fd_curvature(&lc, &x);
        let n = 3;
        for (idx, v) in fd.iter().enumerate() {
            let (l, rest) = (idx % n, idx / n);
            let (k, rest) = (rest % n, rest / n);
            let (j, i) = (rest % n, rest / n);
            assert!((r.get(i, j, k, l) - v).abs() < 1e-7, "{i}{j}{k}{l}");
        }
    }

    #[test]
    fn flat_connection_has_zero_curvature() {
        let r = curvature(&ConnectionField::flat(3), &Point::new(vec![0.1, 0.2, 0.3])).unwrap();
        assert_eq!(r.max_abs(), 0.0);
    }
}
