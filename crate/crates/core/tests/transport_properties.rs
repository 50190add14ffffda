mod common;

use proptest::prelude::*;

use common::{euler_reference, polynomial_curve, random_vector};
use walkerlab_core::connection::{christoffel, ConnectionField};
use walkerlab_core::corpus::Corpus;
use walkerlab_core::extension::build_pullback_extension;
use walkerlab_core::transport::{norm_drift, parallel_transport, CurveSpec};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn levi_civita_transport_preserves_norm(seed in any::<u64>(), r in 1usize..=2, m in 0usize..=2) {
        let mut c = Corpus::new(seed);
        let g = build_pullback_extension(&c.extension_spec(r, m)).unwrap();
        let curve = polynomial_curve(&mut c, g.dim(), 1e-3);
        let w0 = random_vector(&mut c, g.dim());
        let path = parallel_transport(&christoffel(&g), &curve, &w0).unwrap();
        prop_assert!(norm_drift(&g, &curve, &path).unwrap() < 1e-6);
    }

    #[test]
    fn transport_is_linear(seed in any::<u64>(), r in 1usize..=2, m in 0usize..=1) {
        let mut c = Corpus::new(seed);
        let g = build_pullback_extension(&c.extension_spec(r, m)).unwrap();
        let n = g.dim();
        let gamma = christoffel(&g);
        let curve = polynomial_curve(&mut c, n, 1e-2);
        let (u, v) = (random_vector(&mut c, n), random_vector(&mut c, n));
        let (a, b) = (c.uniform(-2.0, 2.0), c.uniform(-2.0, 2.0));
        let mix: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
        let tu = parallel_transport(&gamma, &curve, &u).unwrap();
        let tv = parallel_transport(&gamma, &curve, &v).unwrap();
        let tm = parallel_transport(&gamma, &curve, &mix).unwrap();
        for l in 0..n {
            let expected = a * tu.last()[l] + b * tv.last()[l];
            prop_assert!((tm.last()[l] - expected).abs() < 1e-10 * (1.0 + expected.abs()));
        }
    }

    #[test]
    fn flat_transport_is_exactly_constant(seed in any::<u64>(), n in 1usize..=5) {
        let mut c = Corpus::new(seed);
        let curve = polynomial_curve(&mut c, n, 1e-2);
        let w0 = random_vector(&mut c, n);
        let path = parallel_transport(&ConnectionField::flat(n), &curve, &w0).unwrap();
        prop_assert_eq!(path.vectors.len(), curve.steps() + 1);
        prop_assert!(path.vectors.iter().all(|w| w == &w0));
    }

    #[test]
    fn grid_covers_the_span(span in 0.01f64..3.0, step in 1e-3f64..1.0) {
        let curve = CurveSpec::parse(&["t"], "t", 0.5, 0.5 + span, step).unwrap();
        prop_assert_eq!(curve.steps(), ((span / step).round() as usize).max(1));
        prop_assert_eq!(curve.time(0), 0.5);
        prop_assert_eq!(curve.time(curve.steps()), 0.5 + span);
    }
}

#[test]
fn matches_independent_euler_reference() {
    let mut c = Corpus::new(77);
    let g = build_pullback_extension(&c.extension_spec(1, 1)).unwrap();
    let gamma = christoffel(&g);
    let curve = polynomial_curve(&mut c, g.dim(), 1e-2);
    let w0 = random_vector(&mut c, g.dim());
    let reference = euler_reference(&gamma, &curve, &w0, 1e-5, 10);
    let path = parallel_transport(&gamma, &curve, &w0).unwrap();
    for (k, r) in reference.iter().enumerate() {
        for (a, b) in path.vectors[10 * k].iter().zip(r) {
            assert!((a - b).abs() < 1e-7, "checkpoint {k}: {a} vs {b}");
        }
    }
}

#[test]
fn fourth_order_convergence() {
    let gamma = ConnectionField::from_fn(2, |l, j, k| {
        let text = match (l, j, k) {
            (0, 0, 0) => "x1*x2",
            (1, 0, 1) | (1, 1, 0) => "cos(x1)",
            (1, 1, 1) => "x2^2",
            _ => "0",
        };
        walkerlab_core::ScalarField::parse(text, 2).unwrap()
    })
    .unwrap();
    let curve = CurveSpec::parse(&["sin(t)", "t^2 - 0.5"], "t", 0.0, 1.0, 0.1).unwrap();
    let w0 = [1.0, -0.5];
    let exact = parallel_transport(&gamma, &curve.with_step(1e-4).unwrap(), &w0).unwrap();
    let err = |h: f64| {
        let p = parallel_transport(&gamma, &curve.with_step(h).unwrap(), &w0).unwrap();
        p.last().iter().zip(exact.last()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    };
    let ratio = err(0.1) / err(0.05);
    assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
}
