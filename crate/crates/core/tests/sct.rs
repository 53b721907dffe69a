mod common;

use std::f64::consts::{PI, TAU};

use common::DiskOracle;
use echoid::forward::Medium;
use echoid::geometry::{make_shape, transform, RigidTransform, ShapeName};
use echoid::matrix;
use echoid::sct::{compute_w, fit_decay_constant, rotate_w, scale_law_check, translate_w};

#[test]
fn disk_coefficients_are_diagonal_and_match_the_oracle() {
    let b = make_shape(ShapeName::Disk, 256).unwrap();
    let med = Medium::default();
    for omega in [PI, TAU] {
        let w = compute_w(&b, &med, omega, 8).unwrap();
        let oracle = DiskOracle::new(0.5, 3.0, 3.0, 1.0, 1.0, omega);
        for m in -8..=8i64 {
            for n in -8..=8i64 {
                if m != n {
                    assert!(w.get(m, n).norm() < 1e-8, "W[{m},{n}] = {}", w.get(m, n));
                }
            }
            let expected = oracle.w_diagonal(m as i32);
            let got = w.get(m, m);
            assert!(
                (got - expected).norm() < 1e-6 * expected.norm().max(1e-12),
                "m={m}: {got} vs {expected}"
            );
        }
    }
}

#[test]
fn flower_coefficients_decay_inside_the_fitted_envelope() {
    let b = make_shape(ShapeName::Flower, 256).unwrap();
    let w = compute_w(&b, &Medium::default(), TAU, 12).unwrap();
    let c = fit_decay_constant(&w);
    let w00 = w.get(0, 0).norm();
    for k in 5..=12i64 {
        let ratio = w.get(k, k).norm() / w00;
        let envelope = (c / k as f64).powi(2 * k as i32);
        assert!(ratio < envelope, "K={k}: {ratio:e} vs {envelope:e}");
    }
}

#[test]
fn decay_constant_is_stable_in_the_order() {
    let b = make_shape(ShapeName::Flower, 256).unwrap();
    let med = Medium::default();
    let c10 = fit_decay_constant(&compute_w(&b, &med, TAU, 10).unwrap());
    let c15 = fit_decay_constant(&compute_w(&b, &med, TAU, 15).unwrap());
    assert!(c10.is_finite() && c10 > 0.0);
    assert!((c15 / c10 - 1.0).abs() < 0.1, "{c10} vs {c15}");
}

#[test]
fn translation_round_trip() {
    let b = make_shape(ShapeName::Flower, 256).unwrap();
    let k0 = TAU;
    let w = compute_w(&b, &Medium::default(), TAU, 50).unwrap();
    for z in [[1.0, 0.0], [-0.5, 0.5], [0.3, -0.6]] {
        let there = translate_w(&w, z, k0, 40, 10);
        assert!(there.margin_satisfied);
        let back = translate_w(&there.w, [-z[0], -z[1]], k0, 30, 10);
        let diff = matrix::max_abs_diff(&back.w.values, &w.truncate(30).values);
        assert!(diff < 1e-8, "z={z:?}: {diff:e}");
    }
}

#[test]
fn translation_agrees_with_recomputation() {
    let b = make_shape(ShapeName::Flower, 256).unwrap();
    let med = Medium::default();
    let z = [-0.5, 0.5];
    let w = compute_w(&b, &med, TAU, 40).unwrap();
    let moved = translate_w(&w, z, med.k0(TAU), 10, 10);
    let direct = compute_w(&transform(&b, &RigidTransform::translation(z)), &med, TAU, 10).unwrap();
    let diff = matrix::max_abs_diff(&moved.w.values, &direct.values);
    assert!(diff < 1e-6, "{diff:e}");
}

#[test]
fn translation_series_is_cauchy_in_the_margin() {
    let b = make_shape(ShapeName::Flower, 256).unwrap();
    let med = Medium::default();
    let z = [-0.5, 0.5];
    let w = compute_w(&b, &med, TAU, 25).unwrap();
    let a = translate_w(&w.truncate(20), z, med.k0(TAU), 10, 10);
    let c = translate_w(&w, z, med.k0(TAU), 10, 15);
    assert!(a.margin_satisfied && c.margin_satisfied);
    let diff = matrix::max_abs_diff(&a.w.values, &c.w.values);
    assert!(diff < 1e-9, "{diff:e}");
    let short = translate_w(&w.truncate(12), z, med.k0(TAU), 10, 10);
    assert!(!short.margin_satisfied);
    assert!(short.truncation_estimate > 0.0);
}

#[test]
fn rotation_agrees_with_recomputation() {
    let b = make_shape(ShapeName::Flower, 256).unwrap();
    let med = Medium::default();
    let theta = PI / 3.0;
    let w = compute_w(&b, &med, TAU, 10).unwrap();
    let direct = compute_w(&transform(&b, &RigidTransform::rotation(theta)), &med, TAU, 10).unwrap();
    let diff = matrix::max_abs_diff(&rotate_w(&w, theta).values, &direct.values);
    assert!(diff < 1e-6, "{diff:e}");
}

#[test]
fn scaling_trades_against_frequency() {
    let flower = make_shape(ShapeName::Flower, 256).unwrap();
    let med = Medium::default();
    let d = scale_law_check(&flower, &med, TAU, 1.5, 10).unwrap();
    assert!(d < 1e-6, "{d:e}");
    let disk = make_shape(ShapeName::Disk, 256).unwrap();
    assert!(scale_law_check(&disk, &med, PI, 2.0, 10).unwrap() < 1e-6);
    // the doubled disk against the analytic solution of radius 1
    let big = compute_w(&transform(&disk, &RigidTransform::scaling(2.0)), &med, PI, 6).unwrap();
    let oracle = DiskOracle::new(1.0, 3.0, 3.0, 1.0, 1.0, PI);
    for m in -6..=6 {
        let e = oracle.w_diagonal(m);
        assert!((big.get(m as i64, m as i64) - e).norm() < 1e-6 * e.norm());
    }
}
