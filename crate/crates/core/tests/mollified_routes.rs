use std::sync::Arc;

use depauw_core::field::{VectorField, VectorFieldSpec};
use depauw_core::mollify::{convolve_eval, make_mollifier, scale, MollifiedField, MollifierSpec};
use depauw_core::Point2;

/// Bicubic tables hold the velocity to about `0.3 (m/n)^3` with `n/m >= 24`
/// nodes per kernel width.
const TABLE_TOL: f64 = 5e-5;

fn compare(inner: VectorFieldSpec, spec: MollifierSpec, k: u32, samples: &[(f64, Point2)], tol: f64) {
    let fast = MollifiedField::build(&inner, &spec, k).unwrap();
    assert!(fast.is_tabulated());
    let theta = scale(Arc::new(make_mollifier(&spec).unwrap()), k).unwrap();
    let zext = VectorFieldSpec::zero_extended(inner.clone());
    for &(t, p) in samples {
        let a = fast.velocity(t, p);
        let b = convolve_eval(&zext, &theta, t, p, Default::default()).unwrap();
        assert!((a - b).norm() < tol, "{inner} k={k} t={t} {p:?}: {a:?} vs {b:?}");
    }
}

#[test]
fn tabulated_depauw_matches_direct_convolution() {
    let samples = [
        (0.6, Point2::new(0.13, -0.41)),
        (0.45, Point2::new(0.7, 0.22)),
        (0.9, Point2::new(-0.35, 0.05)),
    ];
    compare(VectorFieldSpec::DepauwFull, MollifierSpec::tensor_bump(), 4, &samples, TABLE_TOL);
    compare(VectorFieldSpec::DepauwFull, MollifierSpec::shifted_bump(), 4, &samples, TABLE_TOL);
}

#[test]
fn tabulated_truncation_and_periodic_field_match_direct_convolution() {
    let samples = [(0.7, Point2::new(0.31, 0.12)), (0.52, Point2::new(-0.2, 0.6))];
    let trunc = VectorFieldSpec::truncated(VectorFieldSpec::DepauwFull, 0.5);
    compare(trunc, MollifierSpec::tensor_bump(), 8, &samples, TABLE_TOL);
    compare(VectorFieldSpec::PeriodizedU, MollifierSpec::shifted_bump(), 2, &samples, TABLE_TOL);
}
