//! The Depauw vector field family.
//!
//! `w` rotates every square orbit of the unit cell `[-1/2, 1/2]^2`
//! counterclockwise. `u` repeats `w` on the cells centred at the lattice
//! `Λ = {y ∈ Z^2 : y1 + y2 even}` and vanishes on the other cells. The full
//! field runs `u(2^j x)` on the time epoch `(2^{-j-1}, 2^{-j}]` and is zero
//! for `t > 1` and `t <= 0`.
//!
//! Values on null sets (diagonals, cell edges) are fixed to zero; the epoch
//! containing `t = 2^{-j}` is `j`.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{Point2, Vec2};
use crate::mollify::MollifierSpec;

/// Supremum of `|w|` (attained as `4 · 1/2` on the cell boundary).
pub const DEPAUW_SUP_NORM: f64 = 2.0;

/// The autonomous unit-cell field.
#[inline]
pub fn eval_w(p: Point2) -> Vec2 {
    let a1 = p.x1.abs();
    let a2 = p.x2.abs();
    if a1 < 0.5 && a1 > a2 {
        Vec2::new(0.0, 4.0 * p.x1)
    } else if a2 < 0.5 && a2 > a1 {
        Vec2::new(-4.0 * p.x2, 0.0)
    } else {
        Vec2::ZERO
    }
}

/// Centre of the level-0 `S2` cell containing `p` (nearest integer point,
/// half-open rounding), and whether that cell is filled.
#[inline]
pub fn unit_cell(p: Point2) -> (Point2, bool) {
    let c1 = (p.x1 + 0.5).floor();
    let c2 = (p.x2 + 0.5).floor();
    let filled = ((c1 as i64) + (c2 as i64)).rem_euclid(2) == 0;
    (Point2::new(c1, c2), filled)
}

/// The Λ-periodisation of `w`. Translates of `w` have disjoint supports, so
/// only the cell containing `p` can contribute.
#[inline]
pub fn eval_u(p: Point2) -> Vec2 {
    let (c, filled) = unit_cell(p);
    if filled {
        eval_w(p - c)
    } else {
        Vec2::ZERO
    }
}

/// Stream function of `u`: `u = (-∂₂U, ∂₁U)`. Equals `2 r^2` at `L∞`
/// distance `r` from a filled centre and `1/2` on empty cells.
#[inline]
pub fn stream_u(p: Point2) -> f64 {
    let (c, filled) = unit_cell(p);
    if filled {
        let r = (p - c).norm_inf().min(0.5);
        2.0 * r * r
    } else {
        0.5
    }
}

/// Time epoch `j` with `t ∈ (2^{-j-1}, 2^{-j}]`, or `None` outside `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Epoch {
    pub level: u32,
}

impl Epoch {
    pub fn of(t: f64) -> Option<Epoch> {
        if !(t > 0.0 && t <= 1.0) {
            return None;
        }
        let (exp, exact) = binary_exponent(t);
        // t ∈ [2^exp, 2^{exp+1}); exact powers belong to the epoch they close
        let level = if exact { -exp } else { -exp - 1 };
        Some(Epoch {
            level: level as u32,
        })
    }

    /// `(start, end]` of the epoch.
    pub fn interval(&self) -> (f64, f64) {
        let end = f64::powi(2.0, -(self.level as i32));
        (0.5 * end, end)
    }

    pub fn duration(&self) -> f64 {
        f64::powi(2.0, -(self.level as i32) - 1)
    }

    /// Spatial scale `2^{-j}` of the epoch's cells.
    pub fn scale(&self) -> f64 {
        f64::powi(2.0, -(self.level as i32))
    }
}

/// Binary exponent `e` with `t ∈ [2^e, 2^{e+1})`, and whether `t == 2^e`.
pub(crate) fn binary_exponent(t: f64) -> (i32, bool) {
    debug_assert!(t > 0.0 && t.is_finite());
    let bits = t.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i32;
    let mantissa = bits & ((1u64 << 52) - 1);
    if biased == 0 {
        // subnormal: never a valid epoch time at any sane level cap
        let lz = mantissa.leading_zeros() as i32 - 12;
        return (-1022 - lz - 1, mantissa.is_power_of_two());
    }
    (biased - 1023, mantissa == 0)
}

/// The time-dependent Depauw field.
#[inline]
pub fn eval_bdp(t: f64, p: Point2) -> Vec2 {
    match Epoch::of(t) {
        Some(e) => eval_u(p * e.scale().recip()),
        None => Vec2::ZERO,
    }
}

/// Descriptor of a bounded vector field built from the Depauw family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum VectorFieldSpec {
    /// Autonomous unit-cell field `w`.
    W,
    /// Autonomous periodised field `u`.
    PeriodizedU,
    /// The dyadic-in-time Depauw field.
    DepauwFull,
    /// The zero field.
    Zero,
    Constant {
        value: Vec2,
    },
    /// `b(x) = A x`, used as a reference field in tests.
    Linear {
        matrix: [[f64; 2]; 2],
    },
    /// `inner` for `t >= from`, zero before.
    Truncated {
        inner: Box<VectorFieldSpec>,
        from: f64,
    },
    /// `inner` for `t >= 0`, zero for negative times.
    ZeroExtended {
        inner: Box<VectorFieldSpec>,
    },
    /// Space-time convolution of the zero-extended `inner` with `θ^k`.
    /// Evaluated through [`crate::mollify::MollifiedField`].
    Mollified {
        inner: Box<VectorFieldSpec>,
        mollifier: MollifierSpec,
        k: u32,
    },
}

impl VectorFieldSpec {
    pub fn truncated(inner: VectorFieldSpec, from: f64) -> Self {
        VectorFieldSpec::Truncated {
            inner: Box::new(inner),
            from,
        }
    }

    pub fn zero_extended(inner: VectorFieldSpec) -> Self {
        VectorFieldSpec::ZeroExtended {
            inner: Box::new(inner),
        }
    }

    pub fn mollified(inner: VectorFieldSpec, mollifier: MollifierSpec, k: u32) -> Self {
        VectorFieldSpec::Mollified {
            inner: Box::new(inner),
            mollifier,
            k,
        }
    }

    /// Upper bound for `|b(t, x)|` over all arguments.
    pub fn sup_norm_bound(&self) -> f64 {
        match self {
            VectorFieldSpec::W | VectorFieldSpec::PeriodizedU | VectorFieldSpec::DepauwFull => {
                DEPAUW_SUP_NORM
            }
            VectorFieldSpec::Zero => 0.0,
            VectorFieldSpec::Constant { value } => value.norm(),
            VectorFieldSpec::Linear { .. } => f64::INFINITY,
            VectorFieldSpec::Truncated { inner, .. }
            | VectorFieldSpec::ZeroExtended { inner }
            | VectorFieldSpec::Mollified { inner, .. } => inner.sup_norm_bound(),
        }
    }

    pub fn divergence_free(&self) -> bool {
        match self {
            VectorFieldSpec::Linear { matrix } => matrix[0][0] + matrix[1][1] == 0.0,
            VectorFieldSpec::Truncated { inner, .. }
            | VectorFieldSpec::ZeroExtended { inner }
            | VectorFieldSpec::Mollified { inner, .. } => inner.divergence_free(),
            _ => true,
        }
    }

    /// Whether the field is built from `DepauwFull` by truncation and zero
    /// extension only. Returns the truncation time (0 when untruncated).
    pub fn depauw_truncation(&self) -> Option<f64> {
        match self {
            VectorFieldSpec::DepauwFull => Some(0.0),
            VectorFieldSpec::ZeroExtended { inner } => inner.depauw_truncation(),
            VectorFieldSpec::Truncated { inner, from } => {
                inner.depauw_truncation().map(|t| t.max(*from))
            }
            _ => None,
        }
    }
}

/// Pointwise evaluation of an analytic field descriptor.
///
/// Mollified descriptors need a precomputed evaluator and fail with
/// [`Error::UnbuiltMollification`].
pub fn eval(spec: &VectorFieldSpec, t: f64, p: Point2) -> Result<Vec2> {
    Ok(match spec {
        VectorFieldSpec::W => eval_w(p),
        VectorFieldSpec::PeriodizedU => eval_u(p),
        VectorFieldSpec::DepauwFull => eval_bdp(t, p),
        VectorFieldSpec::Zero => Vec2::ZERO,
        VectorFieldSpec::Constant { value } => *value,
        VectorFieldSpec::Linear { matrix } => Vec2::new(
            matrix[0][0] * p.x1 + matrix[0][1] * p.x2,
            matrix[1][0] * p.x1 + matrix[1][1] * p.x2,
        ),
        VectorFieldSpec::Truncated { inner, from } => {
            if t < *from {
                Vec2::ZERO
            } else {
                eval(inner, t, p)?
            }
        }
        VectorFieldSpec::ZeroExtended { inner } => {
            if t < 0.0 {
                Vec2::ZERO
            } else {
                eval(inner, t, p)?
            }
        }
        VectorFieldSpec::Mollified { .. } => return Err(Error::UnbuiltMollification),
    })
}

/// A field that can be evaluated pointwise, as needed by flow integrators.
pub trait VectorField: Send + Sync {
    fn velocity(&self, t: f64, p: Point2) -> Vec2;
    fn sup_norm_bound(&self) -> f64;
}

/// A validated analytic (non-mollified) field.
#[derive(Debug, Clone)]
pub struct AnalyticField {
    spec: VectorFieldSpec,
}

impl AnalyticField {
    pub fn new(spec: VectorFieldSpec) -> Result<Self> {
        fn check(s: &VectorFieldSpec) -> Result<()> {
            match s {
                VectorFieldSpec::Mollified { .. } => Err(Error::UnbuiltMollification),
                VectorFieldSpec::Truncated { inner, .. } | VectorFieldSpec::ZeroExtended { inner } => {
                    check(inner)
                }
                _ => Ok(()),
            }
        }
        check(&spec)?;
        Ok(Self { spec })
    }

    pub fn spec(&self) -> &VectorFieldSpec {
        &self.spec
    }
}

impl VectorField for AnalyticField {
    fn velocity(&self, t: f64, p: Point2) -> Vec2 {
        eval(&self.spec, t, p).expect("validated at construction")
    }

    fn sup_norm_bound(&self) -> f64 {
        self.spec.sup_norm_bound()
    }
}

impl fmt::Display for VectorFieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VectorFieldSpec::W => write!(f, "w"),
            VectorFieldSpec::PeriodizedU => write!(f, "u"),
            VectorFieldSpec::DepauwFull => write!(f, "bdp"),
            VectorFieldSpec::Zero => write!(f, "zero"),
            VectorFieldSpec::Constant { value } => write!(f, "const:{},{}", value.x1, value.x2),
            VectorFieldSpec::Linear { matrix } => write!(
                f,
                "linear:{},{},{},{}",
                matrix[0][0], matrix[0][1], matrix[1][0], matrix[1][1]
            ),
            VectorFieldSpec::Truncated { inner, from } => write!(f, "trunc:{from}:{inner}"),
            VectorFieldSpec::ZeroExtended { inner } => write!(f, "zext:{inner}"),
            VectorFieldSpec::Mollified {
                inner,
                mollifier,
                k,
            } => write!(f, "moll:{}:{k}:{inner}", mollifier.name()),
        }
    }
}

/// Parses the compact textual form used on the command line:
/// `w`, `u`, `bdp`, `zero`, `const:a,b`, `linear:a,b,c,d`,
/// `trunc:<from>:<inner>`, `zext:<inner>`, `moll:<profile>:<k>:<inner>`.
impl FromStr for VectorFieldSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("malformed field spec `{s}`"));
        let nums = |body: &str, n: usize| -> Result<Vec<f64>> {
            let v: std::result::Result<Vec<f64>, _> =
                body.split(',').map(|x| x.trim().parse::<f64>()).collect();
            match v {
                Ok(v) if v.len() == n && v.iter().all(|x| x.is_finite()) => Ok(v),
                _ => Err(bad()),
            }
        };
        match s.trim() {
            "w" => return Ok(VectorFieldSpec::W),
            "u" => return Ok(VectorFieldSpec::PeriodizedU),
            "bdp" => return Ok(VectorFieldSpec::DepauwFull),
            "zero" => return Ok(VectorFieldSpec::Zero),
            _ => {}
        }
        let (head, rest) = s.trim().split_once(':').ok_or_else(bad)?;
        match head {
            "const" => {
                let v = nums(rest, 2)?;
                Ok(VectorFieldSpec::Constant {
                    value: Vec2::new(v[0], v[1]),
                })
            }
            "linear" => {
                let v = nums(rest, 4)?;
                Ok(VectorFieldSpec::Linear {
                    matrix: [[v[0], v[1]], [v[2], v[3]]],
                })
            }
            "trunc" => {
                let (from, inner) = rest.split_once(':').ok_or_else(bad)?;
                let from: f64 = from.parse().map_err(|_| bad())?;
                Ok(VectorFieldSpec::truncated(inner.parse()?, from))
            }
            "zext" => Ok(VectorFieldSpec::zero_extended(rest.parse()?)),
            "moll" => {
                let mut it = rest.splitn(3, ':');
                let name = it.next().ok_or_else(bad)?;
                let k: u32 = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
                let inner = it.next().unwrap_or("bdp");
                if k == 0 {
                    return Err(bad());
                }
                Ok(VectorFieldSpec::mollified(
                    inner.parse()?,
                    MollifierSpec::named(name)?,
                    k,
                ))
            }
            _ => Err(bad()),
        }
    }
}

/// Axis-aligned rectangle `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub lo: Point2,
    pub hi: Point2,
}

impl Rect {
    pub fn new(lo: Point2, hi: Point2) -> Self {
        Self { lo, hi }
    }

    pub fn square(center: Point2, half: f64) -> Self {
        Self::new(
            center - Point2::new(half, half),
            center + Point2::new(half, half),
        )
    }

    pub fn area(&self) -> f64 {
        (self.hi.x1 - self.lo.x1).max(0.0) * (self.hi.x2 - self.lo.x2).max(0.0)
    }

    pub fn intersect(&self, o: &Rect) -> Rect {
        Rect::new(
            Point2::new(self.lo.x1.max(o.lo.x1), self.lo.x2.max(o.lo.x2)),
            Point2::new(self.hi.x1.min(o.hi.x1), self.hi.x2.min(o.hi.x2)),
        )
    }

    pub fn scaled(&self, s: f64) -> Rect {
        Rect::new(self.lo * s, self.hi * s)
    }
}

/// `∫ 8|a| da` over `(lo, hi)`: the jump `|[w]| = 4√2|a|` integrated
/// against `dH^1 = √2 da` along a diagonal.
fn diagonal_mass(lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let prim = |a: f64| 4.0 * a * a.abs();
    prim(hi) - prim(lo)
}

/// Jump mass of `|Dw|` on the two diagonals of the unit cell inside the
/// open box `r` (coordinates relative to the cell centre).
fn cell_diagonal_mass(r: &Rect) -> f64 {
    // main diagonal x1 = x2 = a
    let lo = r.lo.x1.max(r.lo.x2).max(-0.5);
    let hi = r.hi.x1.min(r.hi.x2).min(0.5);
    let main = diagonal_mass(lo, hi);
    // anti-diagonal (a, -a)
    let lo = r.lo.x1.max(-r.hi.x2).max(-0.5);
    let hi = r.hi.x1.min(-r.lo.x2).min(0.5);
    let anti = diagonal_mass(lo, hi);
    main + anti
}

/// Total variation `|Dw|(box)` for a box inside the unit cell.
///
/// The absolutely continuous part has constant Frobenius density 4; the
/// jump part lives on both diagonals with density `|[w]| = 4√2|a|`. Jump
/// mass on the box edges is not counted (open-box convention).
pub fn total_variation_w(r: &Rect) -> Result<f64> {
    let inside = r.lo.x1 >= -0.5 && r.lo.x2 >= -0.5 && r.hi.x1 <= 0.5 && r.hi.x2 <= 0.5;
    if !inside || r.hi.x1 < r.lo.x1 || r.hi.x2 < r.lo.x2 {
        return Err(Error::InvalidInput(format!(
            "box {r:?} is not inside the unit cell [-1/2, 1/2]^2"
        )));
    }
    Ok(4.0 * r.area() + cell_diagonal_mass(r))
}

/// Total variation `|Du|(r)` over the open rectangle `r`, including the jump
/// of magnitude 2 across the boundary of each filled cell.
pub fn total_variation_u(r: &Rect) -> f64 {
    let c1_lo = (r.lo.x1 - 0.5).floor() as i64;
    let c1_hi = (r.hi.x1 + 0.5).ceil() as i64;
    let c2_lo = (r.lo.x2 - 0.5).floor() as i64;
    let c2_hi = (r.hi.x2 + 0.5).ceil() as i64;
    let mut total = 0.0;
    for c1 in c1_lo..=c1_hi {
        for c2 in c2_lo..=c2_hi {
            if (c1 + c2).rem_euclid(2) != 0 {
                continue;
            }
            let c = Point2::new(c1 as f64, c2 as f64);
            let local = Rect::new(r.lo - c, r.hi - c);
            let clipped = local.intersect(&Rect::square(Point2::ZERO, 0.5));
            if clipped.area() > 0.0 {
                total += 4.0 * clipped.area();
            }
            total += cell_diagonal_mass(&local);
            // cell edges at ±1/2, counted where they lie strictly inside r
            let open_len = |lo: f64, hi: f64| (hi.min(0.5) - lo.max(-0.5)).max(0.0);
            for edge in [-0.5, 0.5] {
                if local.lo.x1 < edge && edge < local.hi.x1 {
                    total += 2.0 * open_len(local.lo.x2, local.hi.x2);
                }
                if local.lo.x2 < edge && edge < local.hi.x2 {
                    total += 2.0 * open_len(local.lo.x1, local.hi.x1);
                }
            }
        }
    }
    total
}

/// `∫_{epoch j} |D_x b(t, ·)|(r) dt` for the full Depauw field.
///
/// On the epoch the field is `u(2^j x)`, whose variation on `r` equals
/// `2^{-j} |Du|(2^j r)`.
pub fn epoch_total_variation(level: u32, r: &Rect) -> f64 {
    let e = Epoch { level };
    let s = e.scale().recip();
    e.duration() * e.scale() * total_variation_u(&r.scaled(s))
}

/// Variation of a sampled field by forward differences on a cell-centred
/// grid of `n × n` points over `r` (Frobenius norm of the difference
/// quotients). Used as an independent check of the closed forms.
pub fn fd_total_variation<F: Fn(Point2) -> Vec2>(f: F, r: &Rect, n: usize) -> f64 {
    let h1 = (r.hi.x1 - r.lo.x1) / n as f64;
    let h2 = (r.hi.x2 - r.lo.x2) / n as f64;
    let at = |i: usize, j: usize| {
        f(Point2::new(
            r.lo.x1 + (i as f64 + 0.5) * h1,
            r.lo.x2 + (j as f64 + 0.5) * h2,
        ))
    };
    let mut prev_row: Vec<Vec2> = (0..n).map(|i| at(i, 0)).collect();
    let mut total = 0.0;
    for j in 0..n {
        let next_row: Option<Vec<Vec2>> = (j + 1 < n).then(|| (0..n).map(|i| at(i, j + 1)).collect());
        for i in 0..n {
            let v = prev_row[i];
            let d1 = if i + 1 < n { prev_row[i + 1] - v } else { Vec2::ZERO };
            let d2 = match &next_row {
                Some(row) => row[i] - v,
                None => Vec2::ZERO,
            };
            let g = (d1.x1 * d1.x1 + d1.x2 * d1.x2) / (h1 * h1)
                + (d2.x1 * d2.x1 + d2.x2 * d2.x2) / (h2 * h2);
            total += g.sqrt() * h1 * h2;
        }
        if let Some(row) = next_row {
            prev_row = row;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: Vec2, b: Vec2) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn w_examples() {
        assert!(close(eval_w(Point2::new(0.25, 0.1)), Vec2::new(0.0, 1.0)));
        assert!(close(eval_w(Point2::new(-0.1, -0.3)), Vec2::new(1.2, 0.0)));
        assert!(close(eval_w(Point2::new(0.3, 0.3)), Vec2::ZERO));
        assert!(close(eval_w(Point2::new(0.7, 0.1)), Vec2::ZERO));
    }

    #[test]
    fn u_examples() {
        assert!(close(eval_u(Point2::new(1.25, 1.1)), Vec2::new(0.0, 1.0)));
        assert!(close(eval_u(Point2::new(1.3, 0.1)), Vec2::ZERO));
        assert!(close(eval_u(Point2::ZERO), Vec2::ZERO));
    }

    #[test]
    fn bdp_examples() {
        assert!(close(eval_bdp(0.75, Point2::new(0.25, 0.1)), Vec2::new(0.0, 1.0)));
        assert!(close(eval_bdp(0.3, Point2::new(0.125, 0.05)), Vec2::new(0.0, 1.0)));
        assert!(close(eval_bdp(2.0, Point2::new(0.25, 0.1)), Vec2::ZERO));
        assert!(close(eval_bdp(0.0, Point2::new(0.25, 0.1)), Vec2::ZERO));
    }

    #[test]
    fn epochs_partition_unit_interval() {
        assert_eq!(Epoch::of(1.0), Some(Epoch { level: 0 }));
        assert_eq!(Epoch::of(0.75), Some(Epoch { level: 0 }));
        assert_eq!(Epoch::of(0.5), Some(Epoch { level: 1 }));
        assert_eq!(Epoch::of(0.3), Some(Epoch { level: 1 }));
        assert_eq!(Epoch::of(0.25), Some(Epoch { level: 2 }));
        assert_eq!(Epoch::of(0.2), Some(Epoch { level: 2 }));
        assert_eq!(Epoch::of(1.5), None);
        assert_eq!(Epoch::of(0.0), None);
        assert_eq!(Epoch::of(f64::powi(2.0, -40)), Some(Epoch { level: 40 }));
        for j in 0..30 {
            let e = Epoch { level: j };
            let (a, b) = e.interval();
            assert_eq!(Epoch::of(b), Some(e));
            assert_eq!(Epoch::of(a * 1.000001), Some(e));
            assert_eq!(e.duration(), b - a);
        }
    }

    #[test]
    fn dispatch_examples() {
        let tr = VectorFieldSpec::truncated(VectorFieldSpec::DepauwFull, 0.125);
        assert_eq!(eval(&tr, 0.05, Point2::new(0.01, 0.002)).unwrap(), Vec2::ZERO);
        let ze = VectorFieldSpec::zero_extended(VectorFieldSpec::DepauwFull);
        assert_eq!(eval(&ze, -1.0, Point2::new(0.25, 0.1)).unwrap(), Vec2::ZERO);
        let v = eval(&VectorFieldSpec::DepauwFull, 0.75, Point2::new(0.25, 0.1)).unwrap();
        assert!(close(v, Vec2::new(0.0, 1.0)));
        let m = VectorFieldSpec::mollified(VectorFieldSpec::DepauwFull, MollifierSpec::tensor_bump(), 4);
        assert!(matches!(eval(&m, 0.5, Point2::ZERO), Err(Error::UnbuiltMollification)));
        assert_eq!(tr.depauw_truncation(), Some(0.125));
        assert_eq!(ze.depauw_truncation(), Some(0.0));
    }

    #[test]
    fn spec_parse_roundtrip() {
        for s in ["w", "u", "bdp", "zero", "const:1,2", "trunc:0.125:bdp", "zext:bdp", "moll:tensor-bump:8:zext:bdp"] {
            let spec: VectorFieldSpec = s.parse().unwrap();
            let again: VectorFieldSpec = spec.to_string().parse().unwrap();
            assert_eq!(spec, again);
        }
        assert!("wat".parse::<VectorFieldSpec>().is_err());
        assert!("const:1".parse::<VectorFieldSpec>().is_err());
        assert!("moll:tensor-bump:0".parse::<VectorFieldSpec>().is_err());
    }

    #[test]
    fn stream_function_generates_u() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = 1e-6;
        for _ in 0..2000 {
            let p = Point2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let (c, _) = unit_cell(p);
            let d = p - c;
            // stay away from kinks
            if (d.x1.abs() - d.x2.abs()).abs() < 1e-4 || (d.norm_inf() - 0.5).abs() < 1e-4 {
                continue;
            }
            let d1 = (stream_u(p + Point2::new(h, 0.0)) - stream_u(p - Point2::new(h, 0.0))) / (2.0 * h);
            let d2 = (stream_u(p + Point2::new(0.0, h)) - stream_u(p - Point2::new(0.0, h))) / (2.0 * h);
            let v = eval_u(p);
            assert!((v.x1 + d2).abs() < 1e-6 && (v.x2 - d1).abs() < 1e-6, "{p:?}");
        }
    }

    #[test]
    fn support_disjointness_of_translates() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20000 {
            let p = Point2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let base = Point2::new(p.x1.round(), p.x2.round());
            let mut active = 0;
            let mut sum = Vec2::ZERO;
            for a in -1..=1 {
                for b in -1..=1 {
                    let y = base + Point2::new(a as f64, b as f64);
                    if ((y.x1 as i64) + (y.x2 as i64)).rem_euclid(2) != 0 {
                        continue;
                    }
                    let v = eval_w(p - y);
                    if v != Vec2::ZERO {
                        active += 1;
                    }
                    sum = sum + v;
                }
            }
            assert!(active <= 1);
            assert!(close(sum, eval_u(p)));
        }
    }

    #[test]
    fn self_similarity_across_epochs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5000 {
            let t: f64 = rng.gen_range(0.01..1.0);
            let p = Point2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let j = Epoch::of(t).unwrap().level;
            let v = eval_bdp(t, p);
            assert_eq!(v, eval_u(p * f64::powi(2.0, j as i32)));
            assert_eq!(eval_bdp(t / 2.0, p / 2.0), v);
        }
    }

    #[test]
    fn boundedness_by_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let specs = [
            VectorFieldSpec::W,
            VectorFieldSpec::PeriodizedU,
            VectorFieldSpec::DepauwFull,
            VectorFieldSpec::truncated(VectorFieldSpec::DepauwFull, 0.125),
        ];
        for _ in 0..250_000 {
            let t: f64 = rng.gen_range(-0.5..1.5);
            let p = Point2::new(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
            for s in &specs {
                assert!(eval(s, t, p).unwrap().norm() <= s.sup_norm_bound());
            }
        }
    }

    #[test]
    fn weakly_divergence_free() {
        // ∫ w · ∇φ for a smooth bump φ centred off-symmetry
        use crate::quadrature::{clip_halfplane, integrate_convex, rect_polygon, GaussLegendre};
        let gl = GaussLegendre::new(10);
        let c = Point2::new(0.13, -0.07);
        let rad = 0.3;
        let grad = |p: Point2| -> Vec2 {
            let d = p - c;
            let s2 = d.dot(d) / (rad * rad);
            if s2 >= 1.0 {
                return Vec2::ZERO;
            }
            let b = (-1.0 / (1.0 - s2)).exp();
            let f = -2.0 / ((1.0 - s2) * (1.0 - s2)) / (rad * rad);
            d * (b * f)
        };
        // integrate exactly on the four triangles of the cell, each split
        // into a fine grid of panels
        let mut total = 0.0;
        let n = 64;
        let h = 1.0 / n as f64;
        for i in 0..n {
            for j in 0..n {
                let lo = Point2::new(-0.5 + i as f64 * h, -0.5 + j as f64 * h);
                let sq = rect_polygon(lo, lo + Point2::new(h, h));
                // inward normals of the right, top, left and bottom triangles
                for (n1, n2) in [
                    ((1.0, -1.0), (1.0, 1.0)),
                    ((-1.0, 1.0), (1.0, 1.0)),
                    ((-1.0, 1.0), (-1.0, -1.0)),
                    ((1.0, -1.0), (-1.0, -1.0)),
                ] {
                    let piece = clip_halfplane(&sq, Point2::new(n1.0, n1.1), 0.0);
                    let piece = clip_halfplane(&piece, Point2::new(n2.0, n2.1), 0.0);
                    total += integrate_convex(&gl, &piece, |p| eval_w(p).dot(grad(p)));
                }
            }
        }
        assert!(total.abs() < 1e-9, "{total}");
    }

    #[test]
    fn total_variation_examples() {
        let off = Rect::new(Point2::new(0.1, -0.05), Point2::new(0.2, 0.05));
        assert!((total_variation_w(&off).unwrap() - 0.04).abs() < 1e-15);
        // finite differences of w itself on the same box
        let fd = fd_total_variation(eval_w, &off, 400);
        assert!((fd - 0.04).abs() < 1e-3, "{fd}");
        let cell = Rect::square(Point2::ZERO, 0.5);
        // AC part 4 plus 2 per diagonal
        assert!((total_variation_w(&cell).unwrap() - 8.0).abs() < 1e-12);
        assert!(total_variation_w(&Rect::square(Point2::ZERO, 0.6)).is_err());
    }

    #[test]
    fn total_variation_u_matches_w_inside_cell_and_epochs_are_constant() {
        let b = Rect::new(Point2::new(-0.3, -0.2), Point2::new(0.4, 0.1));
        assert!((total_variation_u(&b) - total_variation_w(&b).unwrap()).abs() < 1e-12);
        let win = Rect::square(Point2::ZERO, 1.0);
        for j in 0..8 {
            assert!((epoch_total_variation(j, &win) - 16.0).abs() < 1e-9);
        }
    }
}
