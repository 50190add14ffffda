use proptest::prelude::*;

use walkerlab_core::chart::ChartSplit;
use walkerlab_core::connection::christoffel;
use walkerlab_core::corpus::Corpus;
use walkerlab_core::dist::{
    check_null, check_parallel, check_projectable, check_walker_form, curvature_condition, projected_connection,
    DistributionSpec,
};
use walkerlab_core::extension::{
    build_pullback_extension, build_riemann_extension, canonical_vertical_field, killing_operator,
    transformation_rule_residual, vertical_metric_fields, ExtensionSpec, OneFormSection,
};
use walkerlab_core::point::{sample_box, Point};
use walkerlab_core::Error;

const TOL: f64 = 1e-10;

fn sizes() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=2, 0usize..=2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn built_extension_round_trip(seed in any::<u64>(), (r, m) in sizes()) {
        let spec = Corpus::new(seed).extension_spec(r, m);
        let g = build_pullback_extension(&spec).unwrap();
        prop_assert_eq!(g.chart(), ChartSplit::Walker { n: 2 * r + m, r });
        let pts = g.sample_points(10, seed).unwrap();
        let p = DistributionSpec::trailing_of(g.chart());
        let v = DistributionSpec::orthogonal_of(g.chart());
        prop_assert!(check_walker_form(&g, &pts, TOL).unwrap().passed());
        prop_assert_eq!(check_null(&g, p, &pts).unwrap().value, 0.0);
        prop_assert!(check_parallel(&g, p, &pts).unwrap().value < TOL);
        prop_assert!(curvature_condition(&g, v, &pts).unwrap().value < TOL);
        let gamma = christoffel(&g);
        prop_assert!(check_projectable(&gamma, v, &pts).unwrap().total().value < TOL);

        let projected = projected_connection(&gamma, v, &pts, TOL).unwrap();
        for y in sample_box(r, 5, seed) {
            let a = projected.values_at(&y).unwrap();
            let b = spec.base().values_at(&y).unwrap();
            for l in 0..r {
                for i in 0..r {
                    for j in 0..r {
                        prop_assert!((a.get(l, i, j) - b.get(l, i, j)).abs() < 1e-12);
                    }
                }
            }
        }
        let h = spec.h();
        let recovered = vertical_metric_fields(&g).unwrap();
        prop_assert!(h.iter().all(|(i, j, f)| recovered.get(i, j).same_expression(f)));
    }

    #[test]
    fn transformation_rule(seed in any::<u64>(), (r, m) in sizes()) {
        let mut c = Corpus::new(seed);
        let spec = c.extension_spec(r, m);
        let omega = c.one_form(r, r + m);
        let g = build_pullback_extension(&spec).unwrap();
        let pts = g.sample_points(8, seed).unwrap();
        prop_assert!(transformation_rule_residual(&g, &spec, &omega, &pts).unwrap().value < 1e-9);
    }

    /// On the zero section the metric restricts to `λ` exactly.
    #[test]
    fn zero_section_restriction(seed in any::<u64>(), (r, m) in sizes()) {
        let spec = Corpus::new(seed).extension_spec(r, m);
        let g = build_pullback_extension(&spec).unwrap();
        let fiber = r + m;
        for z in sample_box(fiber, 10, seed) {
            let x = z.pad_zeros(g.dim());
            for j in 0..fiber {
                for k in j..fiber {
                    let built = g.component(j, k).evaluate(&x).unwrap();
                    let lam = spec.lambda().get(j, k).evaluate(&z).unwrap();
                    prop_assert_eq!(built.to_bits(), lam.to_bits());
                }
            }
        }
    }

    /// The vertical field dual to a constant `ξ` stays vertical under `∇`.
    #[test]
    fn canonical_field_is_vertical_parallel(seed in any::<u64>(), (r, m) in sizes()) {
        let mut c = Corpus::new(seed);
        let spec = c.extension_spec(r, m);
        let xi: Vec<f64> = (0..r).map(|_| c.uniform(-1.0, 1.0)).collect();
        let g = build_pullback_extension(&spec).unwrap();
        let n = g.dim();
        let fiber = r + m;
        let va = canonical_vertical_field(&xi, spec.g_ia()).unwrap();
        let gamma = christoffel(&g);
        for x in g.sample_points(8, seed).unwrap() {
            let gx = g.at(&x).unwrap();
            for i in 0..r {
                let pairing: f64 = (0..r).map(|a| gx[(i, fiber + a)] * va[a]).sum();
                prop_assert!((pairing - xi[i]).abs() < 1e-12);
            }
            let cv = gamma.values_at(&x).unwrap();
            for mu in 0..fiber {
                for nu in 0..n {
                    let s: f64 = (0..r).map(|a| cv.get(mu, nu, fiber + a) * va[a]).sum();
                    prop_assert!(s.abs() < TOL);
                }
            }
        }
    }

    #[test]
    fn builds_are_deterministic(seed in any::<u64>(), (r, m) in sizes()) {
        let spec = Corpus::new(seed).extension_spec(r, m);
        let again = Corpus::new(seed).extension_spec(r, m);
        prop_assert_eq!(build_pullback_extension(&spec).unwrap(), build_pullback_extension(&again).unwrap());
    }
}

#[test]
fn isometry_families_annihilate_killing_operator() {
    let mut c = Corpus::new(9);
    for k in 0..12 {
        let (spec, omega) = c.isometry_case(k % 3);
        for z in sample_box(spec.r() + spec.m(), 10, k as u64) {
            assert!(killing_operator(spec.base(), &omega, &z).unwrap().amax() < 1e-12);
        }
    }
}

#[test]
fn zero_form_is_identity_translation() {
    let mut c = Corpus::new(3);
    let spec = c.extension_spec(2, 1);
    let g = build_pullback_extension(&spec).unwrap();
    let omega = OneFormSection::zero(2, 3);
    let pts = g.sample_points(10, 1).unwrap();
    assert_eq!(transformation_rule_residual(&g, &spec, &omega, &pts).unwrap().value, 0.0);
}

#[test]
fn riemann_extension_has_no_middle_block() {
    let mut c = Corpus::new(5);
    let spec = c.extension_spec(2, 0);
    let g = build_riemann_extension(spec.base(), spec.lambda().clone(), Some(spec.g_ia().clone())).unwrap();
    assert_eq!(g.chart(), ChartSplit::Walker { n: 4, r: 2 });
    assert_eq!(g, build_pullback_extension(&spec).unwrap());
}

#[test]
fn rejects_singular_blocks() {
    let mut c = Corpus::new(11);
    let template = c.extension_spec(2, 1);
    let singular = nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
    let spec =
        ExtensionSpec::new(2, 1, template.base().clone(), template.lambda().clone(), Some(singular)).unwrap();
    assert!(matches!(build_pullback_extension(&spec), Err(Error::SingularMatrix { .. })));

    let mut lambda = template.lambda().clone();
    lambda.set(2, 2, walkerlab_core::ScalarField::zero(3));
    let spec = ExtensionSpec::new(2, 1, template.base().clone(), lambda, None).unwrap();
    assert!(matches!(build_pullback_extension(&spec), Err(Error::InvalidExtension(_))));
}

#[test]
fn fiber_translation_shifts_trailing_coordinates_only() {
    let mut c = Corpus::new(21);
    let spec = c.extension_spec(1, 1);
    let g = build_pullback_extension(&spec).unwrap();
    let x = Point::new(vec![0.1, -0.2, 0.3]);
    // ω = 0.5 constant: the pullback is g at the shifted point.
    let omega = OneFormSection::new(vec![walkerlab_core::ScalarField::constant(0.5, 2)]).unwrap();
    let pulled = walkerlab_core::extension::fiber_translate_pullback(&g, &omega, spec.g_ia(), &x).unwrap();
    let shift = 0.5 / spec.g_ia()[(0, 0)];
    let expected = g.at(&Point::new(vec![0.1, -0.2, 0.3 + shift])).unwrap();
    assert!((pulled - expected).amax() < 1e-15);
}
