//! Riemann extensions and Riemann pullback-extensions in Walker charts.
//!
//! A pullback-extension lives on a Walker chart `(x^i, x^p, x^a)` with `r`
//! base coordinates, `m` middle coordinates and `r` fiber coordinates. Its
//! components are
//!
//! ```text
//! g_jk = λ_jk - 2 g_ia x^a Γ^i_jk,   g_ip = λ_ip,   g_pq = h_pq,
//! g_ia constant,                    g_pa = g_ab = 0,
//! ```
//!
//! with `Γ` the base connection. `m = 0` is the classical Riemann extension.

use nalgebra::DMatrix;

use crate::chart::{ChartSplit, MetricField, SymMatrix, DET_FLOOR};
use crate::connection::ConnectionField;
use crate::error::{Error, Result};
use crate::expr::ScalarField;
use crate::point::{Point, Sampler};
use crate::residual::Residual;

/// Input data of a pullback-extension.
#[derive(Debug, Clone)]
pub struct ExtensionSpec {
    r: usize,
    m: usize,
    base: ConnectionField,
    lambda: SymMatrix<ScalarField>,
    g_ia: DMatrix<f64>,
}

impl ExtensionSpec {
    /// `base` must have symbolic components on the `r` base coordinates;
    /// `lambda` is the symmetric `(r+m) x (r+m)` array over `(x^i, x^p)`
    /// whose middle block is the vertical metric `h`. `g_ia` defaults to
    /// the identity.
    pub fn new(
        r: usize,
        m: usize,
        base: ConnectionField,
        lambda: SymMatrix<ScalarField>,
        g_ia: Option<DMatrix<f64>>,
    ) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidExtension("r must be positive".into()));
        }
        if base.dim() != r {
            return Err(Error::InvalidExtension(format!("base connection has dimension {}, expected {r}", base.dim())));
        }
        if base.symbolic_component(0, 0, 0).is_none() {
            return Err(Error::InvalidExtension("base connection must be given by component expressions".into()));
        }
        if lambda.dim() != r + m {
            return Err(Error::InvalidExtension(format!("lambda has size {}, expected {}", lambda.dim(), r + m)));
        }
        if let Some((i, j, f)) = lambda.iter().find(|(_, _, f)| f.dim() != r + m) {
            return Err(Error::InvalidExtension(format!(
                "lambda_{}{} is over {} coordinates, expected {}",
                i + 1,
                j + 1,
                f.dim(),
                r + m
            )));
        }
        let g_ia = g_ia.unwrap_or_else(|| DMatrix::identity(r, r));
        if g_ia.nrows() != r || g_ia.ncols() != r {
            return Err(Error::InvalidExtension(format!("g_ia must be {r} x {r}")));
        }
        if g_ia.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidExtension("g_ia has non-finite entries".into()));
        }
        Ok(Self { r, m, base, lambda, g_ia })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Dimension `2r + m` of the total space.
    pub fn dim(&self) -> usize {
        2 * self.r + self.m
    }

    pub fn chart(&self) -> ChartSplit {
        ChartSplit::Walker { n: self.dim(), r: self.r }
    }

    pub fn base(&self) -> &ConnectionField {
        &self.base
    }

    pub fn lambda(&self) -> &SymMatrix<ScalarField> {
        &self.lambda
    }

    /// The vertical metric `h_pq` (middle block of `lambda`).
    pub fn h(&self) -> SymMatrix<ScalarField> {
        let r = self.r;
        SymMatrix::from_fn(self.m, |p, q| self.lambda.get(r + p, r + q).clone())
    }

    pub fn g_ia(&self) -> &DMatrix<f64> {
        &self.g_ia
    }
}

/// Components of a 1-form section `ω_i` over `(x^i, x^p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneFormSection {
    dim: usize,
    components: Vec<ScalarField>,
}

impl OneFormSection {
    pub fn new(components: Vec<ScalarField>) -> Result<Self> {
        let dim = components.first().map(ScalarField::dim).ok_or_else(|| {
            Error::InvalidExtension("a 1-form section needs at least one component".into())
        })?;
        if let Some(f) = components.iter().find(|f| f.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: f.dim() });
        }
        Ok(Self { dim, components })
    }

    pub fn zero(r: usize, dim: usize) -> Self {
        Self { dim, components: vec![ScalarField::zero(dim); r] }
    }

    /// Number of components.
    pub fn r(&self) -> usize {
        self.components.len()
    }

    /// Dimension of the space `(x^i, x^p)` the components live on.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }
}

/// `ω_i` and `∂_μ ω_i` with the partials formed once.
struct OmegaJet<'a> {
    omega: &'a OneFormSection,
    partials: Vec<Vec<ScalarField>>,
}

impl<'a> OmegaJet<'a> {
    fn new(omega: &'a OneFormSection) -> Result<Self> {
        let partials = omega
            .components
            .iter()
            .map(|w| (0..omega.dim).map(|mu| w.partial(mu)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { omega, partials })
    }

    fn values(&self, z: &Point) -> Result<Vec<f64>> {
        self.omega.components.iter().map(|w| w.evaluate(z)).collect()
    }

    /// `d[i][μ] = ∂_μ ω_i`.
    fn derivatives(&self, z: &Point) -> Result<Vec<Vec<f64>>> {
        self.partials.iter().map(|row| row.iter().map(|f| f.evaluate(z)).collect()).collect()
    }
}

fn invert_block(g_ia: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let det = g_ia.determinant();
    if !(det.abs() > 0.0) {
        return Err(Error::SingularMatrix { what: "g_ia" });
    }
    g_ia.clone().try_inverse().ok_or(Error::SingularMatrix { what: "g_ia" })
}

/// Riemann extension on dimension `2r` from a base connection, the
/// symmetric section data `λ_jk` and the constant block `g_ia`.
pub fn build_riemann_extension(
    base: &ConnectionField,
    lambda: SymMatrix<ScalarField>,
    g_ia: Option<DMatrix<f64>>,
) -> Result<MetricField> {
    let spec = ExtensionSpec::new(base.dim(), 0, base.clone(), lambda, g_ia)?;
    build_pullback_extension(&spec)
}

/// Number of seeded points at which the vertical metric must be
/// nondegenerate somewhere for a build to proceed.
const H_SAMPLES: usize = 100;

/// Pullback-extension metric of `spec` on its Walker chart.
pub fn build_pullback_extension(spec: &ExtensionSpec) -> Result<MetricField> {
    let (r, m) = (spec.r, spec.m);
    let n = spec.dim();
    invert_block(&spec.g_ia)?;
    if m > 0 {
        let h = spec.h();
        let mut sampler = Sampler::new(r + m, 42);
        sampler
            .sample_where(H_SAMPLES, |z| {
                let mut mat = DMatrix::zeros(m, m);
                for (p, q, f) in h.iter() {
                    match f.evaluate(z) {
                        Ok(v) => {
                            mat[(p, q)] = v;
                            mat[(q, p)] = v;
                        }
                        Err(_) => return false,
                    }
                }
                mat.determinant().abs() >= DET_FLOOR
            })
            .map_err(|_| Error::InvalidExtension("vertical metric h_pq is singular at the sampled points".into()))?;
    }

    let fiber = r + m;
    let mut comps = SymMatrix::from_fn(n, |_, _| ScalarField::zero(n));
    for j in 0..fiber {
        for k in j..fiber {
            let lam = spec.lambda.get(j, k).embed(n)?;
            if k >= r {
                comps.set(j, k, lam);
                continue;
            }
            let mut terms = vec![lam];
            for i in 0..r {
                let gamma = spec.base.symbolic_component(i, j, k).expect("symbolic base");
                if gamma.is_zero() {
                    continue;
                }
                let gamma = gamma.embed(n)?;
                for a in 0..r {
                    let c = spec.g_ia[(i, a)];
                    if c == 0.0 {
                        continue;
                    }
                    terms.push(ScalarField::product(
                        n,
                        [ScalarField::constant(-2.0 * c, n), ScalarField::coordinate(fiber + a, n)?, gamma.clone()],
                    ));
                }
            }
            comps.set(j, k, ScalarField::sum(n, terms));
        }
    }
    for i in 0..r {
        for a in 0..r {
            comps.set(i, fiber + a, ScalarField::constant(spec.g_ia[(i, a)], n));
        }
    }
    MetricField::new(spec.chart(), comps)
}

/// The extended Killing operator at `z = (x^i, x^p)`:
/// `[Lω]_ij = ∂_j ω_i + ∂_i ω_j - 2 Γ^k_ij ω_k`, `[Lω]_ip = ∂_p ω_i`, `[Lω]_pq = 0`.
pub fn killing_operator(base: &ConnectionField, omega: &OneFormSection, z: &Point) -> Result<DMatrix<f64>> {
    killing_with(base, &OmegaJet::new(omega)?, z)
}

fn killing_with(base: &ConnectionField, jet: &OmegaJet<'_>, z: &Point) -> Result<DMatrix<f64>> {
    let r = base.dim();
    let dim = jet.omega.dim;
    if jet.omega.r() != r {
        return Err(Error::DimensionMismatch { expected: r, found: jet.omega.r() });
    }
    if z.dim() != dim || dim < r {
        return Err(Error::DimensionMismatch { expected: dim, found: z.dim() });
    }
    let w = jet.values(z)?;
    let d = jet.derivatives(z)?;
    let gamma = base.values_at(&z.truncate(r))?;
    let mut out = DMatrix::zeros(dim, dim);
    for i in 0..r {
        for j in i..r {
            let mut s = 0.0;
            for k in 0..r {
                s += gamma.get(k, i, j) * w[k];
            }
            let v = d[i][j] + d[j][i] - 2.0 * s;
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
        for p in r..dim {
            out[(i, p)] = d[i][p];
            out[(p, i)] = d[i][p];
        }
    }
    Ok(out)
}

fn walker_sizes(g: &MetricField) -> Result<(usize, usize)> {
    match g.chart() {
        ChartSplit::Walker { n, r } => Ok((r, n - 2 * r)),
        c => Err(Error::InvalidSplit(format!("expected a Walker split, found {c:?}"))),
    }
}

fn pullback_with(g: &MetricField, jet: &OmegaJet<'_>, inv: &DMatrix<f64>, x: &Point) -> Result<DMatrix<f64>> {
    let (r, m) = walker_sizes(g)?;
    let n = g.dim();
    let fiber = r + m;
    if jet.omega.r() != r || jet.omega.dim != fiber {
        return Err(Error::DimensionMismatch { expected: fiber, found: jet.omega.dim });
    }
    if x.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: x.dim() });
    }
    let z = x.truncate(fiber);
    let w = jet.values(&z)?;
    let d = jet.derivatives(&z)?;
    let mut fx = x.coords().to_vec();
    let mut jac = DMatrix::<f64>::identity(n, n);
    for a in 0..r {
        let mut shift = 0.0;
        for i in 0..r {
            shift += inv[(a, i)] * w[i];
        }
        fx[fiber + a] += shift;
        for mu in 0..fiber {
            let mut s = 0.0;
            for i in 0..r {
                s += inv[(a, i)] * d[i][mu];
            }
            jac[(fiber + a, mu)] += s;
        }
    }
    let gf = g.at(&Point::new(fx))?;
    Ok(jac.transpose() * gf * jac)
}

/// `ω*g` at `x` for the fiber translation `x^a -> x^a + g^{ai} ω_i`.
pub fn fiber_translate_pullback(
    g: &MetricField,
    omega: &OneFormSection,
    g_ia: &DMatrix<f64>,
    x: &Point,
) -> Result<DMatrix<f64>> {
    pullback_with(g, &OmegaJet::new(omega)?, &invert_block(g_ia)?, x)
}

/// `max |ω*g - g - π*Lω|` over `points`, where `π*Lω` carries `Lω` in the
/// base and middle block and vanishes elsewhere.
pub fn transformation_rule_residual(
    g: &MetricField,
    spec: &ExtensionSpec,
    omega: &OneFormSection,
    points: &[Point],
) -> Result<Residual> {
    let jet = OmegaJet::new(omega)?;
    let inv = invert_block(&spec.g_ia)?;
    let fiber = spec.r + spec.m;
    let mut res = Residual::zero();
    for x in points {
        let pulled = pullback_with(g, &jet, &inv, x)?;
        let l = killing_with(&spec.base, &jet, &x.truncate(fiber))?;
        let mut diff = pulled - g.at(x)?;
        for mu in 0..fiber {
            for nu in 0..fiber {
                diff[(mu, nu)] -= l[(mu, nu)];
            }
        }
        res.observe(diff.amax(), x);
    }
    Ok(res)
}

/// `max |ω*g - g|` over `points`.
pub fn isometry_residual(
    g: &MetricField,
    omega: &OneFormSection,
    g_ia: &DMatrix<f64>,
    points: &[Point],
) -> Result<Residual> {
    let jet = OmegaJet::new(omega)?;
    let inv = invert_block(g_ia)?;
    let mut res = Residual::zero();
    for x in points {
        res.observe((pullback_with(g, &jet, &inv, x)? - g.at(x)?).amax(), x);
    }
    Ok(res)
}

/// The middle block `g_pq` of a Walker-form metric as expressions.
pub fn vertical_metric_fields(g: &MetricField) -> Result<SymMatrix<ScalarField>> {
    let (r, m) = walker_sizes(g)?;
    Ok(SymMatrix::from_fn(m, |p, q| g.component(r + p, r + q).clone()))
}

/// The vertical metric `g_pq(x)`; empty when there is no middle block.
pub fn recover_vertical_metric(g: &MetricField, x: &Point) -> Result<DMatrix<f64>> {
    let (r, m) = walker_sizes(g)?;
    let mut out = DMatrix::zeros(m, m);
    for p in 0..m {
        for q in p..m {
            let v = g.component(r + p, r + q).evaluate(x)?;
            out[(p, q)] = v;
            out[(q, p)] = v;
        }
    }
    if m > 0 && out.determinant().abs() < DET_FLOOR {
        return Err(Error::SingularMatrix { what: "g_pq" });
    }
    Ok(out)
}

/// Fiber components `v^a` of the vertical vector with `g(v, ∂_i) = ξ_i`,
/// i.e. the solution of `g_ia v^a = ξ_i`.
pub fn canonical_vertical_field(xi: &[f64], g_ia: &DMatrix<f64>) -> Result<Vec<f64>> {
    let r = g_ia.nrows();
    if xi.len() != r || g_ia.ncols() != r {
        return Err(Error::DimensionMismatch { expected: r, found: xi.len() });
    }
    let inv = invert_block(g_ia)?;
    let v = inv * nalgebra::DVector::from_column_slice(xi);
    Ok(v.iter().copied().collect())
}
