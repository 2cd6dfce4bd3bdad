//! Solutions of the transport equation along the Depauw field: the exact
//! chessboard solutions, characteristic solvers, combinatorial evolution
//! of dyadic densities and weak-formulation residuals.

mod density;
mod residual;

use serde::{Deserialize, Serialize};

pub use density::{Continuation, DyadicDensity, GridDensity, GridSpec};
pub use residual::{weak_residual, ResidualQuadrature};

use crate::error::{Error, Result};
use crate::field::{binary_exponent, Epoch};
use crate::flow::{advance, FlowMap};
use crate::geometry::{chessboard, dyadic_side, DyadicSquare, Family, Point2, Window, DEFAULT_MAX_LEVEL};
use crate::testfn::SmoothBump;

/// Which of the two chessboard solutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZetaIndex {
    One,
    Two,
}

impl ZetaIndex {
    pub fn from_number(i: u8) -> Result<Self> {
        match i {
            1 => Ok(ZetaIndex::One),
            2 => Ok(ZetaIndex::Two),
            _ => Err(Error::InvalidInput(format!("zeta index must be 1 or 2, got {i}"))),
        }
    }

    fn apply(self, z1: u8) -> u8 {
        match self {
            ZetaIndex::One => z1,
            ZetaIndex::Two => 1 - z1,
        }
    }
}

/// `ζᵢ(t, p)` with the default level cap.
pub fn zeta(i: ZetaIndex, t: f64, p: Point2) -> u8 {
    zeta_capped(i, t, p, DEFAULT_MAX_LEVEL)
}

/// `ζᵢ(t, p)`, frozen at its value at `2^{-max_level}` for earlier times.
pub fn zeta_capped(i: ZetaIndex, t: f64, p: Point2, max_level: u32) -> u8 {
    let z1 = if t >= 1.0 {
        chessboard(p)
    } else {
        let t = t.max(dyadic_side(max_level));
        let j = Epoch::of(t).map_or(max_level, |e| e.level);
        let e = dyadic_side(j);
        // pull back to the end of the epoch, where ζ₁ is a scaled chessboard
        let y = advance(j, e - t, p);
        let c = chessboard(y / e);
        if j.is_multiple_of(2) {
            c
        } else {
            1 - c
        }
    };
    i.apply(z1)
}

/// `ζᵢ(2^{-m}, ·)` as a 2-periodic tile at level `m`.
pub fn zeta_density(i: ZetaIndex, m: u32, window: Window) -> Result<DyadicDensity> {
    DyadicDensity::periodic(m, window, 2, |a, b| {
        let c = ((a + b) % 2) as u8;
        i.apply(if m.is_multiple_of(2) { c } else { 1 - c }) as f64
    })
}

/// The exponent `m` with `t = 2^{-m}`, `m ≥ 0`.
pub fn dyadic_exponent(t: f64) -> Result<u32> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::NonDyadicTime(t));
    }
    match binary_exponent(t) {
        (e, true) => Ok((-e) as u32),
        _ => Err(Error::NonDyadicTime(t)),
    }
}

/// Initial or boundary data for the characteristic solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Datum {
    Constant { value: f64 },
    /// `ζ̄₁(2^level x)`, or `1 - ζ̄₁(2^level x)` when inverted.
    Chessboard {
        level: u32,
        #[serde(default)]
        inverted: bool,
    },
    /// `ζᵢ(time, ·)`.
    Zeta { index: ZetaIndex, time: f64 },
    /// Indicator of `[lo, hi)`.
    Indicator { lo: Point2, hi: Point2 },
    Bump(SmoothBump),
    Dyadic(DyadicDensity),
}

impl Datum {
    pub fn eval(&self, p: Point2) -> f64 {
        match self {
            Datum::Constant { value } => *value,
            Datum::Chessboard { level, inverted } => {
                let c = chessboard(p / dyadic_side(*level));
                f64::from(if *inverted { 1 - c } else { c })
            }
            Datum::Zeta { index, time } => f64::from(zeta(*index, *time, p)),
            Datum::Indicator { lo, hi } => {
                let inside = p.x1 >= lo.x1 && p.x1 < hi.x1 && p.x2 >= lo.x2 && p.x2 < hi.x2;
                f64::from(u8::from(inside))
            }
            Datum::Bump(b) => b.value(p),
            Datum::Dyadic(d) => d.value_at(p),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match self {
            Datum::Constant { value } => value.abs(),
            Datum::Chessboard { .. } | Datum::Zeta { .. } | Datum::Indicator { .. } => 1.0,
            Datum::Bump(b) => b.amplitude.abs(),
            Datum::Dyadic(d) => d.sup_norm(),
        }
    }
}

/// `ρ(t, x) = ρ̄(X(0, t, x))` sampled on the grid.
pub fn solve_ivp(flow: &FlowMap, datum: &Datum, t: f64, grid: GridSpec) -> Result<GridDensity> {
    solve_bvp(flow, datum, 0.0, t, grid)
}

/// `ρ(t, x) = φ(X(s, t, x))` sampled on the grid, for `t` on either side of `s`.
pub fn solve_bvp(flow: &FlowMap, datum: &Datum, s: f64, t: f64, grid: GridSpec) -> Result<GridDensity> {
    let samples = grid
        .centers()
        .map(|x| Ok(datum.eval(flow.apply(s, t, x)?)))
        .collect::<Result<Vec<_>>>()?;
    GridDensity::new(grid, t, samples)
}

/// A bounded solution of the transport equation.
#[derive(Debug, Clone)]
pub enum Solution {
    /// The exact chessboard solution `ζᵢ` along the Depauw field.
    Zeta(ZetaIndex),
    /// `ρ(t, x) = datum(X(datum_time, t, x))`.
    Sampled {
        flow: FlowMap,
        datum: Datum,
        datum_time: f64,
    },
}

impl Solution {
    pub fn eval(&self, t: f64, p: Point2) -> Result<f64> {
        match self {
            Solution::Zeta(i) => Ok(f64::from(zeta(*i, t, p))),
            Solution::Sampled {
                flow,
                datum,
                datum_time,
            } => Ok(datum.eval(flow.apply(*datum_time, t, p)?)),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match self {
            Solution::Zeta(_) => 1.0,
            Solution::Sampled { datum, .. } => datum.sup_norm(),
        }
    }
}

/// Centre of the level-`j` cell containing the level-`l` square `i`, in
/// level-`l` index units (`s = 2^{l-j}` squares per cell side), and
/// whether the cell is filled.
#[inline]
fn cell_of(i: (i64, i64), s: i64) -> ((i64, i64), bool) {
    let c1 = s * (i.0 + s / 2).div_euclid(s);
    let c2 = s * (i.1 + s / 2).div_euclid(s);
    ((c1, c2), (c1 / s + c2 / s).rem_euclid(2) == 0)
}

/// Image of square `i` under one full epoch (counterclockwise quarter
/// turn of the filled cells), or its preimage when `inverse`.
#[inline]
fn epoch_square_map(i: (i64, i64), s: i64, inverse: bool) -> (i64, i64) {
    let ((c1, c2), filled) = cell_of(i, s);
    if !filled {
        return i;
    }
    if inverse {
        (c1 - c2 + i.1, c2 + c1 - i.0 - 1)
    } else {
        (c1 + c2 - i.1 - 1, c2 - c1 + i.0)
    }
}

/// Image of an `S¹` square under one full epoch `level` of the exact
/// flow. The square must be at least as fine as half an epoch cell.
pub fn epoch_square_image(square: &DyadicSquare, level: u32) -> Result<DyadicSquare> {
    if square.family != Family::S1 || square.level <= level {
        return Err(Error::LevelMismatch(format!(
            "square {square:?} is not an S1 square finer than epoch {level}"
        )));
    }
    let s = 1i64 << (square.level - level);
    let (a, b) = epoch_square_map(square.index, s, false);
    Ok(DyadicSquare::s1(square.level, a, b))
}

/// Exact transport of `ρ` from `t_from = 2^{-m}` to `t_to = 2^{-m'}`
/// along the Depauw flow. Each epoch permutes the squares of `ρ`. Epoch
/// cells straddle the window edge, so a zero-continued density loses the
/// values each epoch carries out of the window; periodic densities are
/// transported exactly.
pub fn evolve_dyadic(rho: &DyadicDensity, t_from: f64, t_to: f64) -> Result<DyadicDensity> {
    let m = dyadic_exponent(t_from)?;
    let m_to = dyadic_exponent(t_to)?;
    let l = rho.level();
    if l < m.max(m_to) {
        return Err(Error::LevelMismatch(format!(
            "density at level {l} cannot resolve the epochs between 2^-{m} and 2^-{m_to}"
        )));
    }
    let forward = m_to < m;
    let epochs: Vec<u32> = if forward {
        (m_to..m).rev().collect()
    } else {
        (m..m_to).collect()
    };
    let mut cur = rho.clone();
    for j in epochs {
        let s = 1i64 << (l - j);
        let (origin, size) = cur.block();
        let size = match cur.continuation() {
            Continuation::Periodic => size.max(2 * s as usize),
            Continuation::Zero => size,
        };
        let mut values = Vec::with_capacity(size * size);
        for b in 0..size as i64 {
            for a in 0..size as i64 {
                // pull back: the new value at q is the old value at the preimage of q
                let (p1, p2) = epoch_square_map((origin + a, origin + b), s, forward);
                values.push(cur.value(p1, p2));
            }
        }
        cur = cur.with_block(origin, size, values);
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::flow_exact_bdp;
    use crate::geometry::DyadicSquare;

    fn p(x1: f64, x2: f64) -> Point2 {
        Point2::new(x1, x2)
    }

    #[test]
    fn zeta_examples() {
        assert_eq!(zeta(ZetaIndex::One, 1.0, p(0.5, 0.5)), 0);
        assert_eq!(zeta(ZetaIndex::One, 0.5, p(0.3, 0.3)), 1);
        for q in [p(0.13, 0.71), p(-0.42, 0.05), p(1.37, -0.88)] {
            assert_eq!(zeta(ZetaIndex::One, 0.25, q), chessboard(q * 4.0));
            assert_eq!(zeta(ZetaIndex::Two, 0.25, q), 1 - chessboard(q * 4.0));
        }
    }

    #[test]
    fn zeta_continuous_across_epoch_boundaries() {
        // at 2^{-j-1} the epoch-j pull-back agrees with the epoch-(j+1) formula
        for j in 0..6u32 {
            let e = dyadic_side(j);
            for q in [p(0.137, 0.711), p(-0.423, 0.051), p(0.377, -0.883), p(0.0123, 0.0311)] {
                let pulled = advance(j, 0.5 * e, q);
                let c = chessboard(pulled / e);
                let via_j = if j.is_multiple_of(2) { c } else { 1 - c };
                assert_eq!(via_j, zeta(ZetaIndex::One, 0.5 * e, q), "j={j} q={q:?}");
            }
        }
    }

    #[test]
    fn zeta_below_cap_is_frozen() {
        let q = p(0.3, 0.2);
        assert_eq!(zeta_capped(ZetaIndex::One, 1e-9, q, 4), zeta_capped(ZetaIndex::One, 1.0 / 16.0, q, 4));
    }

    #[test]
    fn dyadic_exponents() {
        assert_eq!(dyadic_exponent(1.0).unwrap(), 0);
        assert_eq!(dyadic_exponent(0.125).unwrap(), 3);
        assert!(dyadic_exponent(0.3).is_err());
        assert!(dyadic_exponent(2.0).is_err());
    }

    #[test]
    fn square_maps_are_inverse_four_cycles() {
        for s in [2i64, 4, 8] {
            for a in -9..9 {
                for b in -9..9 {
                    let i = (a, b);
                    let f = epoch_square_map(i, s, false);
                    assert_eq!(epoch_square_map(f, s, true), i);
                    let f4 = (0..4).fold(i, |x, _| epoch_square_map(x, s, false));
                    assert_eq!(f4, i);
                }
            }
        }
    }

    #[test]
    fn square_map_matches_flow_of_centres() {
        // level l = 3, epoch j = 1: one epoch moves a generic point of square i into its image
        // (square centres can sit on the fixed diagonals)
        let (l, j) = (3u32, 1u32);
        let h = dyadic_side(l);
        for a in -8..8 {
            for b in -8..8 {
                let x = DyadicSquare::s1(l, a, b).origin() + p(0.31 * h, 0.67 * h);
                let moved = flow_exact_bdp(0.5, 0.25, x).unwrap();
                let image = epoch_square_map((a, b), 1 << (l - j), false);
                let k = crate::geometry::square_of(moved, l, crate::geometry::Family::S1);
                assert_eq!(k.index, image, "{a},{b}: {moved:?}");
            }
        }
    }

    #[test]
    fn epoch_square_image_follows_the_flow() {
        let (l, j) = (4u32, 2u32);
        let h = dyadic_side(l);
        for (a, b) in [(0, 0), (3, -2), (-5, 7), (1, 1)] {
            let sq = DyadicSquare::s1(l, a, b);
            let image = epoch_square_image(&sq, j).unwrap();
            assert_eq!(image.level, l);
            let x = sq.origin() + p(0.31 * h, 0.67 * h);
            let moved = flow_exact_bdp(dyadic_side(j), dyadic_side(j + 1), x).unwrap();
            assert_eq!(crate::geometry::square_of(moved, l, Family::S1), image, "{a},{b}");
        }
        assert!(epoch_square_image(&DyadicSquare::s1(2, 0, 0), 2).is_err());
        assert!(epoch_square_image(&DyadicSquare::new(Family::S2, 4, (0, 0)), 1).is_err());
    }

    #[test]
    fn evolve_zeta_half_to_one_gives_chessboard() {
        let w = Window::new(2.0).unwrap();
        let z = zeta_density(ZetaIndex::One, 1, w).unwrap();
        let out = evolve_dyadic(&z, 0.5, 1.0).unwrap();
        for a in -4..4 {
            for b in -4..4 {
                let c = DyadicSquare::s1(1, a, b).center();
                assert_eq!(out.value(a, b), f64::from(chessboard(c)), "{a},{b}");
            }
        }
        let back = evolve_dyadic(&out, 1.0, 0.5).unwrap();
        for a in -4..4 {
            for b in -4..4 {
                assert_eq!(back.value(a, b), z.value(a, b));
            }
        }
    }

    #[test]
    fn evolve_indicator_one_epoch() {
        let w = Window::new(1.0).unwrap();
        let target = (1i64, 0i64);
        let ind = DyadicDensity::from_fn(3, w, Continuation::Zero, |s| f64::from(u8::from(s.index == target))).unwrap();
        let out = evolve_dyadic(&ind, 0.25, 0.5).unwrap();
        let moved = flow_exact_bdp(0.5, 0.25, DyadicSquare::s1(3, 1, 0).center()).unwrap();
        let k = crate::geometry::square_of(moved, 3, crate::geometry::Family::S1);
        assert_eq!(out.value(k.index.0, k.index.1), 1.0);
        assert_eq!(out.histogram(), ind.histogram());
    }

    #[test]
    fn evolve_rejects_bad_inputs() {
        let w = Window::new(1.0).unwrap();
        let z = zeta_density(ZetaIndex::One, 2, w).unwrap();
        assert!(matches!(evolve_dyadic(&z, 0.3, 1.0), Err(Error::NonDyadicTime(_))));
        assert!(matches!(evolve_dyadic(&z, 0.125, 1.0), Err(Error::LevelMismatch(_))));
    }

    #[test]
    fn bvp_refining_identity() {
        let grid = GridSpec::new(Window::new(1.0).unwrap(), 37).unwrap();
        let datum = Datum::Chessboard {
            level: 0,
            inverted: false,
        };
        let out = solve_bvp(&FlowMap::exact(), &datum, 1.0, 0.5, grid).unwrap();
        // the odd grid has points on the axes and on the fixed diagonals x1 = ±x2
        for (x, v) in grid.centers().zip(out.samples()).filter(|(x, _)| x.x1.abs() != x.x2.abs() && x.x1 != 0.0 && x.x2 != 0.0) {
            assert_eq!(*v, 1.0 - f64::from(chessboard(x * 2.0)), "{x:?}");
        }
        let same = solve_bvp(&FlowMap::exact(), &datum, 1.0, 1.0, grid).unwrap();
        assert!(grid.centers().zip(same.samples()).all(|(x, v)| *v == datum.eval(x)));
    }

    #[test]
    fn ivp_of_zeta_datum_matches_zeta() {
        let grid = GridSpec::new(Window::new(1.0).unwrap(), 41).unwrap();
        for m in 1..5u32 {
            let t0 = dyadic_side(m);
            let datum = Datum::Zeta {
                index: ZetaIndex::One,
                time: t0,
            };
            let out = solve_bvp(&FlowMap::exact(), &datum, t0, 2.0 * t0, grid).unwrap();
            for (x, v) in grid.centers().zip(out.samples()).filter(|(x, _)| x.x1.abs() != x.x2.abs() && x.x1 != 0.0 && x.x2 != 0.0) {
                assert_eq!(*v, f64::from(zeta(ZetaIndex::One, 2.0 * t0, x)), "m={m} {x:?}");
            }
        }
    }
}
