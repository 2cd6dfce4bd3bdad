use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Rect;
use crate::geometry::{dyadic_side, DyadicSquare, Family, Point2, Window};

/// How a density is continued outside its stored block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Continuation {
    Zero,
    Periodic,
}

/// A function constant on the `S¹_k` squares of level `k`.
///
/// Values are stored on a square block of indices `origin..origin + size`
/// in each axis. Outside the block the density is either zero or the
/// periodic repetition of the block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DyadicDensity {
    level: u32,
    window: Window,
    continuation: Continuation,
    origin: i64,
    size: usize,
    values: Vec<f64>,
}

fn window_block(level: u32, window: &Window) -> (i64, usize) {
    let size = window.cells_per_side(level);
    (-(size as i64) / 2, size)
}

impl DyadicDensity {
    /// Samples `f` on every square of the window.
    pub fn from_fn(
        level: u32,
        window: Window,
        continuation: Continuation,
        f: impl Fn(DyadicSquare) -> f64,
    ) -> Result<Self> {
        let (origin, size) = window_block(level, &window);
        let mut values = Vec::with_capacity(size * size);
        for b in 0..size as i64 {
            for a in 0..size as i64 {
                values.push(f(DyadicSquare::s1(level, origin + a, origin + b)));
            }
        }
        Self::checked(level, window, continuation, origin, size, values)
    }

    /// Row-major values over the window, first index fastest.
    pub fn from_values(level: u32, window: Window, continuation: Continuation, values: Vec<f64>) -> Result<Self> {
        let (origin, size) = window_block(level, &window);
        if values.len() != size * size {
            return Err(Error::InvalidInput(format!(
                "expected {} values for level {level}, got {}",
                size * size,
                values.len()
            )));
        }
        Self::checked(level, window, continuation, origin, size, values)
    }

    /// A `period`-periodic density given by its tile at indices `0..period`.
    pub fn periodic(level: u32, window: Window, period: usize, f: impl Fn(i64, i64) -> f64) -> Result<Self> {
        if !period.is_power_of_two() {
            return Err(Error::InvalidInput(format!("period {period} is not a power of two")));
        }
        let mut values = Vec::with_capacity(period * period);
        for b in 0..period as i64 {
            for a in 0..period as i64 {
                values.push(f(a, b));
            }
        }
        Self::checked(level, window, Continuation::Periodic, 0, period, values)
    }

    pub fn constant(value: f64, level: u32, window: Window) -> Result<Self> {
        Self::periodic(level, window, 1, |_, _| value)
    }

    fn checked(
        level: u32,
        window: Window,
        continuation: Continuation,
        origin: i64,
        size: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidInput("empty density".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite density value {v}")));
        }
        Ok(Self {
            level,
            window,
            continuation,
            origin,
            size,
            values,
        })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn continuation(&self) -> Continuation {
        self.continuation
    }

    /// Stored values, row-major over the stored block.
    pub fn stored(&self) -> &[f64] {
        &self.values
    }

    /// Value on the `S¹` square with index `(i1, i2)` at this level.
    #[inline]
    pub fn value(&self, i1: i64, i2: i64) -> f64 {
        let n = self.size as i64;
        let (a, b) = (i1 - self.origin, i2 - self.origin);
        let (a, b) = match self.continuation {
            Continuation::Periodic => (a.rem_euclid(n), b.rem_euclid(n)),
            Continuation::Zero => {
                if a < 0 || b < 0 || a >= n || b >= n {
                    return 0.0;
                }
                (a, b)
            }
        };
        self.values[(b * n + a) as usize]
    }

    pub fn value_at(&self, p: Point2) -> f64 {
        let inv = dyadic_side(self.level).recip();
        self.value((p.x1 * inv).floor() as i64, (p.x2 * inv).floor() as i64)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Stored values in increasing order.
    pub fn histogram(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Index range `(lo1, lo2, n)` of the level-`self.level` squares making
    /// up `square`, if the square is resolved at this level.
    fn index_block(&self, square: &DyadicSquare) -> Option<(i64, i64, i64)> {
        let (i, j) = square.index;
        match square.family {
            Family::S1 if square.level <= self.level => {
                let s = 1i64 << (self.level - square.level);
                Some((i * s, j * s, s))
            }
            Family::S2 if square.level < self.level => {
                let h = 1i64 << (self.level - square.level - 1);
                Some(((2 * i + 1) * h, (2 * j + 1) * h, 2 * h))
            }
            _ => None,
        }
    }

    /// `∑` of values over an `n × n` index block.
    fn block_sum(&self, lo1: i64, lo2: i64, n: i64) -> f64 {
        let p = self.size as i64;
        if self.continuation == Continuation::Periodic && n >= p && n % p == 0 {
            let reps = (n / p) as f64;
            return reps * reps * self.values.iter().sum::<f64>();
        }
        // Neumaier summation keeps large block sums exact to rounding.
        let mut sum = 0.0f64;
        let mut carry = 0.0f64;
        for b in lo2..lo2 + n {
            for a in lo1..lo1 + n {
                let v = self.value(a, b);
                let t = sum + v;
                carry += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
                sum = t;
            }
        }
        sum + carry
    }

    /// `⨍_S ρ`.
    pub fn average(&self, square: &DyadicSquare) -> f64 {
        match self.index_block(square) {
            Some((a, b, n)) => self.block_sum(a, b, n) / (n * n) as f64,
            None => self.value_at(square.center()),
        }
    }

    /// `∫_S ρ`.
    pub fn integral_over(&self, square: &DyadicSquare) -> f64 {
        self.average(square) * square.area()
    }

    /// `∫ ρ` over the window.
    pub fn total_mass(&self) -> f64 {
        let n = self.window.cells_per_side(self.level) as i64;
        self.block_sum(-n / 2, -n / 2, n) * dyadic_side(self.level).powi(2)
    }

    /// Replaces the stored block, keeping level, window and continuation.
    pub(crate) fn with_block(&self, origin: i64, size: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), size * size);
        Self {
            origin,
            size,
            values,
            ..self.clone()
        }
    }

    pub(crate) fn block(&self) -> (i64, usize) {
        (self.origin, self.size)
    }

    /// CSV rows `i1,i2,value` over the window.
    pub fn to_csv(&self) -> String {
        let n = self.window.cells_per_side(self.level) as i64;
        let mut out = String::from("i1,i2,value\n");
        for b in -n / 2..n / 2 {
            for a in -n / 2..n / 2 {
                out.push_str(&format!("{a},{b},{}\n", self.value(a, b)));
            }
        }
        out
    }
}

/// Grid sampling parameters: `n × n` cells over the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub window: Window,
    pub n: usize,
    /// Sample position inside each grid cell, in cell units.
    #[serde(default = "centred")]
    pub offset: (f64, f64),
}

fn centred() -> (f64, f64) {
    (0.5, 0.5)
}

impl GridSpec {
    pub fn new(window: Window, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("grid resolution must be positive".into()));
        }
        Ok(Self { window, n, offset: centred() })
    }

    /// Samples at `-R + (i + o) h` instead of the cell centres.
    pub fn with_offset(window: Window, n: usize, offset: (f64, f64)) -> Result<Self> {
        let in_cell = |o: f64| (0.0..1.0).contains(&o);
        if !(in_cell(offset.0) && in_cell(offset.1)) {
            return Err(Error::InvalidInput(format!("offset {offset:?} must lie in [0, 1)")));
        }
        Ok(Self { offset, ..Self::new(window, n)? })
    }

    pub fn cell_size(&self) -> f64 {
        2.0 * self.window.half_width() / self.n as f64
    }

    pub fn center(&self, i1: usize, i2: usize) -> Point2 {
        let h = self.cell_size();
        let r = self.window.half_width();
        Point2::new(-r + (i1 as f64 + self.offset.0) * h, -r + (i2 as f64 + self.offset.1) * h)
    }

    pub fn centers(&self) -> impl Iterator<Item = Point2> + '_ {
        (0..self.n).flat_map(move |b| (0..self.n).map(move |a| self.center(a, b)))
    }
}

/// Samples of `ρ(t, ·)` at grid cell centres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    pub grid: GridSpec,
    pub t: f64,
    samples: Vec<f64>,
}

impl GridDensity {
    pub fn new(grid: GridSpec, t: f64, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.n * grid.n {
            return Err(Error::InvalidInput(format!(
                "expected {} samples, got {}",
                grid.n * grid.n,
                samples.len()
            )));
        }
        if let Some(v) = samples.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite sample {v}")));
        }
        Ok(Self { grid, t, samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample(&self, i1: usize, i2: usize) -> f64 {
        self.samples[i2 * self.grid.n + i1]
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Midpoint rule for `∫ ρ φ`.
    pub fn pair_with(&self, phi: impl Fn(Point2) -> f64, support: Option<Rect>) -> f64 {
        let h = self.grid.cell_size();
        let r = self.grid.window.half_width();
        let range = |lo: f64, hi: f64| {
            let a = (((lo + r) / h).floor().max(0.0)) as usize;
            let b = (((hi + r) / h).ceil().max(0.0) as usize).min(self.grid.n);
            a..b
        };
        let (r1, r2) = match support {
            Some(s) => (range(s.lo.x1, s.hi.x1), range(s.lo.x2, s.hi.x2)),
            None => (0..self.grid.n, 0..self.grid.n),
        };
        let mut sum = 0.0;
        for b in r2 {
            for a in r1.clone() {
                sum += self.sample(a, b) * phi(self.grid.center(a, b));
            }
        }
        sum * h * h
    }

    /// CSV rows `x1,x2,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x1,x2,value\n");
        for (p, v) in self.grid.centers().zip(&self.samples) {
            out.push_str(&format!("{},{},{}\n", p.x1, p.x2, v));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_and_zero_lookup() {
        let w = Window::new(1.0).unwrap();
        let chess = DyadicDensity::periodic(2, w, 2, |a, b| ((a + b) % 2) as f64).unwrap();
        assert_eq!(chess.value(-3, 5), 0.0);
        assert_eq!(chess.value(-3, 4), 1.0);
        assert_eq!(chess.value_at(Point2::new(0.3, 0.1)), 1.0);
        let ind = DyadicDensity::from_fn(1, w, Continuation::Zero, |s| if s.index == (0, 0) { 2.0 } else { 0.0 }).unwrap();
        assert_eq!(ind.value(0, 0), 2.0);
        assert_eq!(ind.value(7, 0), 0.0);
        assert_eq!(ind.total_mass(), 0.5);
        assert_eq!(chess.total_mass(), 2.0);
    }

    #[test]
    fn averages_on_both_families() {
        let w = Window::new(1.0).unwrap();
        let ramp = DyadicDensity::from_fn(3, w, Continuation::Zero, |s| s.index.0 as f64).unwrap();
        // S1 level-1 square (0,0) covers indices 0..4
        assert_eq!(ramp.average(&DyadicSquare::s1(1, 0, 0)), 1.5);
        // S2 level-1 square (0,0) is [1/4, 3/4)², indices 2..6
        assert_eq!(ramp.average(&DyadicSquare::new(Family::S2, 1, (0, 0))), 3.5);
        // finer than the density: containing value
        assert_eq!(ramp.average(&DyadicSquare::s1(5, 9, 0)), 2.0);
        let chess = DyadicDensity::periodic(10, w, 2, |a, b| ((a + b) % 2) as f64).unwrap();
        assert_eq!(chess.average(&DyadicSquare::s1(0, -1, 0)), 0.5);
    }

    #[test]
    fn grid_pairing_of_constant() {
        let g = GridSpec::new(Window::new(1.0).unwrap(), 64).unwrap();
        let d = GridDensity::new(g, 0.0, vec![3.0; 64 * 64]).unwrap();
        let sq = Rect::new(Point2::new(-0.5, -0.25), Point2::new(0.25, 0.5));
        let v = d.pair_with(|p| if p.x1 >= -0.5 && p.x1 < 0.25 && p.x2 >= -0.25 && p.x2 < 0.5 { 1.0 } else { 0.0 }, Some(sq));
        assert!((v - 3.0 * 0.5625).abs() < 1e-12);
    }
}
