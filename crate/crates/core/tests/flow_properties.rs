use depauw_core::field::VectorFieldSpec;
use depauw_core::flow::{flow_exact_bdp, FlowMap};
use depauw_core::mollify::MollifierSpec;
use depauw_core::Point2;
use proptest::prelude::*;

fn time() -> impl Strategy<Value = f64> {
    prop_oneof![1.0 / 1024.0..1.5f64, (0u32..10).prop_map(|j| f64::powi(2.0, -(j as i32)))]
}

fn point() -> impl Strategy<Value = Point2> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(a, b)| Point2::new(a, b))
}

proptest! {
    #[test]
    fn exact_flow_group_identity_and_speed(t in time(), s in time(), r in time(), p in point()) {
        prop_assert_eq!(flow_exact_bdp(s, s, p).unwrap(), p);
        let direct = flow_exact_bdp(t, r, p).unwrap();
        let composed = flow_exact_bdp(t, s, flow_exact_bdp(s, r, p).unwrap()).unwrap();
        prop_assert!((direct - composed).norm() < 1e-12, "{:?} {:?}", direct, composed);
        prop_assert!((direct - p).norm() <= 2.0 * (t - r).abs() + 1e-12);
        let back = flow_exact_bdp(r, t, direct).unwrap();
        prop_assert!((back - p).norm() < 1e-12);
    }
}

#[test]
fn mollified_flow_approaches_exact_flow_inside_cells() {
    // a point well inside a filled cell, away from its diagonals and edge
    let p = Point2::new(0.2, 0.05);
    let exact = flow_exact_bdp(1.0, 0.5, p).unwrap();
    let mut prev = f64::INFINITY;
    for k in [4, 8, 16] {
        let field = VectorFieldSpec::mollified(VectorFieldSpec::DepauwFull, MollifierSpec::tensor_bump(), k);
        let x = FlowMap::numeric(field, None).unwrap().apply(1.0, 0.5, p).unwrap();
        let d = (x - exact).norm();
        assert!(d < 4.0 / k as f64 && d < prev, "k={k} {d}");
        prev = d;
    }
}
