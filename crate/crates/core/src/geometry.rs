//! Dyadic lattices, square families and the chessboard patterns they carry.
//!
//! Two square subdivisions of the plane are used throughout. Family `S1` has
//! its vertices on `2^{-k} Z^2`; family `S2` is the same grid shifted by
//! `(2^{-k-1}, 2^{-k-1})`, so its centres lie on `2^{-k} Z^2`. All squares are
//! half-open `[a, a + 2^{-k})` in both coordinates.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Finest dyadic level used by default. Beyond this the boundary arithmetic
/// of doubles near square edges stops being trustworthy.
pub const DEFAULT_MAX_LEVEL: u32 = 16;

/// A point (or displacement) in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x1: f64,
    pub x2: f64,
}

/// Velocities share the representation of points.
pub type Vec2 = Point2;

impl Point2 {
    pub const ZERO: Point2 = Point2 { x1: 0.0, x2: 0.0 };

    #[inline]
    pub const fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x1.hypot(self.x2)
    }

    #[inline]
    pub fn norm_inf(self) -> f64 {
        self.x1.abs().max(self.x2.abs())
    }

    #[inline]
    pub fn dot(self, other: Point2) -> f64 {
        self.x1 * other.x1 + self.x2 * other.x2
    }

    /// z-component of the planar cross product.
    #[inline]
    pub fn cross(self, other: Point2) -> f64 {
        self.x1 * other.x2 - self.x2 * other.x1
    }

    #[inline]
    pub fn scale(self, s: f64) -> Self {
        Self::new(self.x1 * s, self.x2 * s)
    }

    /// Counterclockwise rotation by a quarter turn.
    #[inline]
    pub fn rot90(self) -> Self {
        Self::new(-self.x2, self.x1)
    }
}

impl Add for Point2 {
    type Output = Point2;
    #[inline]
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x1 + o.x1, self.x2 + o.x2)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    #[inline]
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x1 - o.x1, self.x2 - o.x2)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    #[inline]
    fn neg(self) -> Point2 {
        Point2::new(-self.x1, -self.x2)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    #[inline]
    fn mul(self, s: f64) -> Point2 {
        self.scale(s)
    }
}

impl Div<f64> for Point2 {
    type Output = Point2;
    #[inline]
    fn div(self, s: f64) -> Point2 {
        self.scale(s.recip())
    }
}

/// Which of the two square subdivisions a square belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    S1,
    S2,
}

/// A square of side `2^{-level}` addressed by its integer index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicSquare {
    pub family: Family,
    pub level: u32,
    pub index: (i64, i64),
}

/// `2^{-level}` computed exactly.
#[inline]
pub fn dyadic_side(level: u32) -> f64 {
    // exact for every level we can represent
    f64::powi(2.0, -(level as i32))
}

impl DyadicSquare {
    pub fn new(family: Family, level: u32, index: (i64, i64)) -> Self {
        Self {
            family,
            level,
            index,
        }
    }

    pub fn s1(level: u32, i: i64, j: i64) -> Self {
        Self::new(Family::S1, level, (i, j))
    }

    pub fn side(&self) -> f64 {
        dyadic_side(self.level)
    }

    pub fn area(&self) -> f64 {
        let s = self.side();
        s * s
    }

    /// Lower-left corner.
    pub fn origin(&self) -> Point2 {
        let h = self.side();
        let shift = match self.family {
            Family::S1 => 0.0,
            Family::S2 => 0.5 * h,
        };
        Point2::new(
            self.index.0 as f64 * h + shift,
            self.index.1 as f64 * h + shift,
        )
    }

    pub fn center(&self) -> Point2 {
        let h = self.side();
        self.origin() + Point2::new(0.5 * h, 0.5 * h)
    }

    /// Half-open containment test.
    pub fn contains(&self, p: Point2) -> bool {
        let o = self.origin();
        let h = self.side();
        p.x1 >= o.x1 && p.x1 < o.x1 + h && p.x2 >= o.x2 && p.x2 < o.x2 + h
    }

    /// The four squares of level `k+1` that partition this square.
    ///
    /// An `S2` square of level `k` is made of four `S1` squares of level
    /// `k+1`, listed counterclockwise from the upper-right quadrant. An `S1`
    /// square gives its four `S1` quadrants in the same order.
    pub fn subsquares(&self) -> [DyadicSquare; 4] {
        let (i, j) = self.index;
        let l = self.level + 1;
        let (bi, bj) = match self.family {
            // S1 (i,j) at level k covers S1 indices 2i..2i+1 at level k+1
            Family::S1 => (2 * i, 2 * j),
            // S2 (i,j) is shifted by half a side: its lower-left S1 child
            // starts at 2i+1
            Family::S2 => (2 * i + 1, 2 * j + 1),
        };
        [
            DyadicSquare::s1(l, bi + 1, bj + 1),
            DyadicSquare::s1(l, bi, bj + 1),
            DyadicSquare::s1(l, bi, bj),
            DyadicSquare::s1(l, bi + 1, bj),
        ]
    }
}

/// Locate the square of the given family and level containing `p`.
pub fn square_of(p: Point2, level: u32, family: Family) -> DyadicSquare {
    let inv = f64::powi(2.0, level as i32);
    let shift = match family {
        Family::S1 => 0.0,
        Family::S2 => 0.5,
    };
    let i = (p.x1 * inv - shift).floor() as i64;
    let j = (p.x2 * inv - shift).floor() as i64;
    DyadicSquare::new(family, level, (i, j))
}

/// Unit chessboard: `floor(x1) + floor(x2) mod 2`.
#[inline]
pub fn chessboard(p: Point2) -> u8 {
    let s = p.x1.floor() as i64 + p.x2.floor() as i64;
    s.rem_euclid(2) as u8
}

/// Whether the `S2` square is "filled", i.e. its centre lies in the scaled
/// lattice `2^{-k} Λ` with `Λ = {y ∈ Z^2 : y1 + y2 even}`.
pub fn is_filled(s: &DyadicSquare) -> Result<bool> {
    if s.family != Family::S2 {
        return Err(Error::InvalidInput(
            "filled/empty classification is defined for S2 squares only".into(),
        ));
    }
    // centre of S2 (i,j) at level k is 2^{-k}(i+1, j+1)
    Ok((s.index.0 + 1 + s.index.1 + 1).rem_euclid(2) == 0)
}

/// The square window `[-R, R]^2`, with `R` a power of two (possibly `2^0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    half_width: f64,
}

impl Window {
    pub fn new(half_width: f64) -> Result<Self> {
        let ok = half_width >= 1.0
            && half_width.is_finite()
            && (half_width.log2().fract() == 0.0);
        if !ok {
            return Err(Error::InvalidInput(format!(
                "window half-width must be a power of two >= 1, got {half_width}"
            )));
        }
        Ok(Self { half_width })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x1 >= -self.half_width
            && p.x1 < self.half_width
            && p.x2 >= -self.half_width
            && p.x2 < self.half_width
    }

    /// Number of level-`k` `S1` squares along one side.
    pub fn cells_per_side(&self, level: u32) -> usize {
        (2.0 * self.half_width * f64::powi(2.0, level as i32)) as usize
    }
}
