use depauw_core::flow::FlowMap;
use depauw_core::geometry::{dyadic_side, DyadicSquare, Point2, Window};
use depauw_core::testfn::{Profile, SmoothBump, TestFunction};
use depauw_core::transport::{evolve_dyadic, solve_bvp, zeta, Continuation, Datum, DyadicDensity, GridSpec, ZetaIndex};
use depauw_core::weaklimit::pair;
use proptest::prelude::*;

fn window() -> Window {
    Window::new(1.0).unwrap()
}

/// Zero-continued density on `[-1, 1]²` with values in `[-2, 2]`.
fn zero_continued(level: u32) -> impl Strategy<Value = DyadicDensity> {
    let n = window().cells_per_side(level);
    prop::collection::vec(-2.0..2.0f64, n * n)
        .prop_map(move |v| DyadicDensity::from_values(level, window(), Continuation::Zero, v).unwrap())
}

/// Density with period 2 in both directions, which every epoch cell divides.
fn periodic(level: u32) -> impl Strategy<Value = DyadicDensity> {
    let n = window().cells_per_side(level);
    prop::collection::vec(-2.0..2.0f64, n * n).prop_map(move |v| {
        DyadicDensity::periodic(level, window(), n, |i1, i2| {
            v[i2.rem_euclid(n as i64) as usize * n + i1.rem_euclid(n as i64) as usize]
        })
        .unwrap()
    })
}

/// `(level, m_from, m_to)` with `m_to < m_from <= level`.
fn epochs() -> impl Strategy<Value = (u32, u32, u32)> {
    (2u32..=5).prop_flat_map(|l| (Just(l), 1..=l)).prop_flat_map(|(l, m)| (Just(l), Just(m), 0..m))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn evolution_rearranges_values((l, m, m_to) in epochs(), seed in 0u64..1000) {
        let n = window().cells_per_side(l) as i64;
        let rho = DyadicDensity::periodic(l, window(), n as usize, |i1, i2| {
            ((i2.rem_euclid(n) * n + i1.rem_euclid(n)) as u64 * 7919 + seed) as f64 % 97.0 / 8.0
        })
        .unwrap();
        let out = evolve_dyadic(&rho, dyadic_side(m), dyadic_side(m_to)).unwrap();
        prop_assert_eq!(out.histogram(), rho.histogram());
        prop_assert_eq!(out.total_mass(), rho.total_mass());
        let back = evolve_dyadic(&out, dyadic_side(m_to), dyadic_side(m)).unwrap();
        prop_assert_eq!(back.stored(), rho.stored());
    }

    #[test]
    fn zeta_indices_are_complementary(t in 0.0..1.5f64, x1 in -3.0..3.0f64, x2 in -3.0..3.0f64) {
        let p = Point2::new(x1, x2);
        prop_assert_eq!(zeta(ZetaIndex::One, t, p) + zeta(ZetaIndex::Two, t, p), 1);
    }

    #[test]
    fn pairing_is_lipschitz_in_the_sup_norm(
        rho in zero_continued(3),
        sigma in zero_continued(3),
        level in 0u32..=3,
        i1 in -8i64..8,
        i2 in -8i64..8,
        c in (-0.4..0.4f64, -0.4..0.4f64),
        r in 0.1..0.5f64,
    ) {
        let d = rho
            .stored()
            .iter()
            .zip(sigma.stored())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let n = 1i64 << level;
        let square = DyadicSquare::s1(level, i1.rem_euclid(2 * n) - n, i2.rem_euclid(2 * n) - n);
        let phi = TestFunction::DyadicIndicator { square };
        let gap = (pair(&rho, &phi).unwrap() - pair(&sigma, &phi).unwrap()).abs();
        prop_assert!(gap <= d * square.area() * (1.0 + 1e-12) + 1e-15);

        let bump = TestFunction::SmoothBump(SmoothBump::new(Point2::new(c.0, c.1), r, 1.0, Profile::Smooth).unwrap());
        let one = DyadicDensity::constant(1.0, 3, window()).unwrap();
        let mass = pair(&one, &bump).unwrap();
        let gap = (pair(&rho, &bump).unwrap() - pair(&sigma, &bump).unwrap()).abs();
        prop_assert!(gap <= d * mass * (1.0 + 1e-12) + 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn grid_solution_matches_dyadic_evolution(rho in periodic(4), (m, m_to) in (1u32..=4).prop_flat_map(|m| (Just(m), 0..m))) {
        // samples off the cell lines and diagonals of level 5
        let grid = GridSpec::with_offset(window(), 64, (0.5, 0.25)).unwrap();
        let (s, t) = (dyadic_side(m), dyadic_side(m_to));
        let sampled = solve_bvp(&FlowMap::exact(), &Datum::Dyadic(rho.clone()), s, t, grid).unwrap();
        let evolved = evolve_dyadic(&rho, s, t).unwrap();
        for i2 in 0..64 {
            for i1 in 0..64 {
                let p = grid.center(i1, i2);
                prop_assert_eq!(sampled.sample(i1, i2), evolved.value_at(p), "at {:?}", p);
            }
        }
    }
}
