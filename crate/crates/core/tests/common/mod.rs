#![allow(dead_code)]

use walkerlab_core::chart::{ChartSplit, MetricField};
use walkerlab_core::connection::ConnectionField;
use walkerlab_core::corpus::Corpus;
use walkerlab_core::expr::ScalarField;
use walkerlab_core::point::Point;
use walkerlab_core::transport::CurveSpec;

/// Explicit Euler for `ẇ = -Γ(x(t)) ẋ w` with `steps` equal steps over the
/// curve's span, recording `w` every `stride` steps (the first and last
/// values included when `stride` divides `steps`). Shares nothing with the
/// library integrator beyond Christoffel evaluation.
pub fn euler(gamma: &ConnectionField, curve: &CurveSpec, w0: &[f64], steps: usize, stride: usize) -> Vec<Vec<f64>> {
    let n = w0.len();
    let (t0, t1) = curve.span();
    let h = (t1 - t0) / steps as f64;
    let vel: Vec<ScalarField> = curve.components().iter().map(|c| c.partial(0).unwrap()).collect();
    let mut w = w0.to_vec();
    let mut x = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut dw = vec![0.0; n];
    let mut out = vec![w.clone()];
    for s in 0..steps {
        let t = t0 + s as f64 * h;
        for mu in 0..n {
            x[mu] = curve.components()[mu].evaluate_at(&[t]).unwrap();
            v[mu] = vel[mu].evaluate_at(&[t]).unwrap();
        }
        let c = gamma.values_at(&Point::new(x.clone())).unwrap();
        for l in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                if v[j] == 0.0 {
                    continue;
                }
                for k in 0..n {
                    acc += c.get(l, j, k) * v[j] * w[k];
                }
            }
            dw[l] = -acc;
        }
        for l in 0..n {
            w[l] += h * dw[l];
        }
        if (s + 1) % stride == 0 {
            out.push(w.clone());
        }
    }
    out
}

/// Euler at step `h` and `2h` combined by one Richardson extrapolation,
/// sampled at `checkpoints + 1` equally spaced times of the span.
pub fn euler_reference(
    gamma: &ConnectionField,
    curve: &CurveSpec,
    w0: &[f64],
    h: f64,
    checkpoints: usize,
) -> Vec<Vec<f64>> {
    let (t0, t1) = curve.span();
    let steps = ((t1 - t0) / h).round() as usize;
    assert_eq!(steps % (2 * checkpoints), 0, "checkpoints must divide the coarse Euler grid");
    let fine = euler(gamma, curve, w0, steps, steps / checkpoints);
    let coarse = euler(gamma, curve, w0, steps / 2, steps / 2 / checkpoints);
    fine.iter()
        .zip(&coarse)
        .map(|(f, c)| f.iter().zip(c).map(|(a, b)| 2.0 * a - b).collect())
        .collect()
}

pub fn field(text: &str, dim: usize) -> ScalarField {
    ScalarField::parse(text, dim).unwrap()
}

pub fn metric(chart: ChartSplit, entries: &[((usize, usize), &str)]) -> MetricField {
    let n = chart.dim();
    MetricField::from_fn(chart, |i, j| {
        entries
            .iter()
            .find(|((a, b), _)| (*a, *b) == (i, j))
            .map(|(_, t)| field(t, n))
            .unwrap_or_else(|| ScalarField::zero(n))
    })
    .unwrap()
}

/// `x^μ(t) = α + β t + γ t²` with `|α| <= 0.4`, `|β| <= 0.3`, `|γ| <= 0.2`.
pub fn polynomial_curve(corpus: &mut Corpus, n: usize, step: f64) -> CurveSpec {
    let comps = (0..n)
        .map(|_| {
            let a = corpus.uniform(-0.4, 0.4);
            let b = corpus.uniform(-0.3, 0.3);
            let c = corpus.uniform(-0.2, 0.2);
            ScalarField::parse_with_parameter(&format!("{a} + {b}*t + {c}*t^2"), "t").unwrap()
        })
        .collect();
    CurveSpec::new(comps, 0.0, 1.0, step).unwrap()
}

pub fn random_vector(corpus: &mut Corpus, n: usize) -> Vec<f64> {
    (0..n).map(|_| corpus.uniform(-1.0, 1.0)).collect()
}
