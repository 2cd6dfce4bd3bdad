//! Flow maps `X(t, s, x)`: the position at time `t` of the trajectory that
//! passes through `x` at time `s`.
//!
//! The Depauw field moves every point of a filled cell along the boundary
//! of the square of `L∞` radius `r` about the cell centre, at speed `4r` in
//! unit coordinates, counterclockwise. A full epoch advances exactly one
//! side, i.e. a quarter rotation about the centre. [`FlowMap::ExactDepauw`]
//! composes these perimeter advances; [`FlowMap::Numeric`] integrates any
//! bounded field with classical RK4.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{unit_cell, Epoch, VectorField, VectorFieldSpec};
use crate::geometry::{Point2, DEFAULT_MAX_LEVEL};
use crate::mollify;

/// Serializable description of a flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FlowSpec {
    /// Exact flow of `b_DP`, with the field switched off before `from`.
    ExactDepauw {
        #[serde(default)]
        from: f64,
        #[serde(default = "default_max_level")]
        max_level: u32,
    },
    /// RK4 flow of `field`. `dt` defaults to [`default_dt`].
    Numeric { field: VectorFieldSpec, dt: Option<f64> },
}

fn default_max_level() -> u32 {
    DEFAULT_MAX_LEVEL
}

/// Default RK4 step: `1/(32k)` for fields mollified at scale `k`, `1e-3`
/// otherwise.
pub fn default_dt(field: &VectorFieldSpec) -> f64 {
    match field {
        VectorFieldSpec::Mollified { k, .. } => 1.0 / (32.0 * *k as f64),
        _ => 1e-3,
    }
}

/// Exact flow of the (possibly truncated) Depauw field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactDepauw {
    /// The field vanishes for `t < from`.
    pub from: f64,
    /// Finest epoch the flow may traverse.
    pub max_level: u32,
}

impl Default for ExactDepauw {
    fn default() -> Self {
        Self {
            from: 0.0,
            max_level: DEFAULT_MAX_LEVEL,
        }
    }
}

/// RK4 integrator for a compiled field.
#[derive(Clone)]
pub struct NumericFlow {
    spec: VectorFieldSpec,
    field: Arc<dyn VectorField>,
    dt: f64,
}

impl fmt::Debug for NumericFlow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NumericFlow")
            .field("field", &self.spec.to_string())
            .field("dt", &self.dt)
            .finish()
    }
}

impl NumericFlow {
    pub fn new(spec: VectorFieldSpec, dt: Option<f64>) -> Result<Self> {
        let field = mollify::compile(&spec)?;
        Self::with_field(spec, field, dt)
    }

    /// Use an already compiled evaluator for `spec`.
    pub fn with_field(spec: VectorFieldSpec, field: Arc<dyn VectorField>, dt: Option<f64>) -> Result<Self> {
        let dt = dt.unwrap_or_else(|| default_dt(&spec));
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidInput(format!("step {dt} must be positive")));
        }
        Ok(Self { spec, field, dt })
    }

    pub fn spec(&self) -> &VectorFieldSpec {
        &self.spec
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn field(&self) -> &Arc<dyn VectorField> {
        &self.field
    }

    /// RK4 from `(s, p)` to time `t`; `t < s` integrates backward.
    pub fn integrate(&self, t: f64, s: f64, p: Point2) -> Point2 {
        let span = t - s;
        if span == 0.0 {
            return p;
        }
        let n = (span.abs() / self.dt).ceil().max(1.0) as usize;
        let h = span / n as f64;
        let b = &self.field;
        let mut x = p;
        for i in 0..n {
            let tau = s + h * i as f64;
            let k1 = b.velocity(tau, x);
            let k2 = b.velocity(tau + 0.5 * h, x + k1 * (0.5 * h));
            let k3 = b.velocity(tau + 0.5 * h, x + k2 * (0.5 * h));
            let k4 = b.velocity(tau + h, x + k3 * h);
            x = x + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
        }
        x
    }
}

/// A flow map `X(t, s, ·)`.
#[derive(Debug, Clone)]
pub enum FlowMap {
    ExactDepauw(ExactDepauw),
    Numeric(NumericFlow),
}

impl FlowMap {
    pub fn exact() -> Self {
        FlowMap::ExactDepauw(ExactDepauw::default())
    }

    /// Exact flow of the Depauw field switched off before `from`.
    pub fn exact_truncated(from: f64) -> Self {
        FlowMap::ExactDepauw(ExactDepauw {
            from,
            ..ExactDepauw::default()
        })
    }

    pub fn numeric(field: VectorFieldSpec, dt: Option<f64>) -> Result<Self> {
        Ok(FlowMap::Numeric(NumericFlow::new(field, dt)?))
    }

    pub fn build(spec: &FlowSpec) -> Result<Self> {
        match spec {
            FlowSpec::ExactDepauw { from, max_level } => Ok(FlowMap::ExactDepauw(ExactDepauw {
                from: *from,
                max_level: *max_level,
            })),
            FlowSpec::Numeric { field, dt } => Self::numeric(field.clone(), *dt),
        }
    }

    /// Bound on the speed of every trajectory.
    pub fn speed_bound(&self) -> f64 {
        match self {
            FlowMap::ExactDepauw(_) => crate::field::DEPAUW_SUP_NORM,
            FlowMap::Numeric(n) => n.field.sup_norm_bound(),
        }
    }

    /// `X(t, s, p)`.
    pub fn apply(&self, t: f64, s: f64, p: Point2) -> Result<Point2> {
        match self {
            FlowMap::ExactDepauw(e) => e.apply(t, s, p),
            FlowMap::Numeric(n) => Ok(n.integrate(t, s, p)),
        }
    }
}

/// Flow of `u(2^j ·)` for the times `t_in → t_out`, both in the closed
/// epoch `[2^{-j-1}, 2^{-j}]`.
pub fn epoch_flow_exact(level: u32, t_out: f64, t_in: f64, p: Point2) -> Result<Point2> {
    let (lo, hi) = Epoch { level }.interval();
    for t in [t_out, t_in] {
        if !(t >= lo && t <= hi) {
            return Err(Error::InvalidInput(format!(
                "time {t} outside epoch {level} = [{lo}, {hi}]"
            )));
        }
    }
    Ok(advance(level, t_out - t_in, p))
}

/// Exact flow of `b_DP`.
pub fn flow_exact_bdp(t: f64, s: f64, p: Point2) -> Result<Point2> {
    ExactDepauw::default().apply(t, s, p)
}

impl ExactDepauw {
    pub fn apply(&self, t: f64, s: f64, p: Point2) -> Result<Point2> {
        if t == s {
            return Ok(p);
        }
        let (lo, hi) = if s < t { (s, t) } else { (t, s) };
        let a = lo.max(self.from).max(0.0);
        let b = hi.min(1.0);
        if a >= b {
            return Ok(p);
        }
        // epochs j meeting (a, b) in an interval of positive length
        let mut levels = Vec::new();
        let mut j = 0u32;
        loop {
            let (e_lo, e_hi) = Epoch { level: j }.interval();
            if e_hi <= a {
                break;
            }
            if j > self.max_level {
                return Err(Error::LevelCap {
                    time: a,
                    max_level: self.max_level,
                });
            }
            let (o_lo, o_hi) = (a.max(e_lo), b.min(e_hi));
            if o_hi > o_lo {
                levels.push((j, o_hi - o_lo));
            }
            j += 1;
        }
        let mut x = p;
        if s < t {
            // forward: finest epoch first
            for &(j, len) in levels.iter().rev() {
                x = advance(j, len, x);
            }
        } else {
            for &(j, len) in &levels {
                x = advance(j, -len, x);
            }
        }
        Ok(x)
    }
}

/// Advance `p` for a signed time `dt` under `u(2^j ·)`.
pub(crate) fn advance(level: u32, dt: f64, p: Point2) -> Point2 {
    if dt == 0.0 {
        return p;
    }
    let e = Epoch { level }.scale();
    let y = p / e;
    let (c, filled) = unit_cell(y);
    if !filled {
        return p;
    }
    let d = y - c;
    let r = d.norm_inf();
    if r >= 0.5 || d.x1.abs() == d.x2.abs() {
        return p;
    }
    // quarter turns: a full epoch 2^{-j-1} is one side of the orbit
    let turns = dt * f64::powi(2.0, level as i32 + 1);
    let whole = turns.floor();
    let frac = turns - whole;
    let mut d = d;
    for _ in 0..(whole as i64).rem_euclid(4) {
        d = d.rot90();
    }
    if frac > 0.0 {
        let len = 8.0 * r;
        let mut sigma = perimeter_position(d, r) + 2.0 * r * frac;
        if sigma >= len {
            sigma -= len;
        }
        d = perimeter_point(sigma, r);
    }
    (c + d) * e
}

/// Arc length along the square of radius `r`, counterclockwise from the
/// corner `(r, -r)`.
fn perimeter_position(d: Point2, r: f64) -> f64 {
    if d.x1.abs() > d.x2.abs() {
        if d.x1 > 0.0 {
            d.x2 + r
        } else {
            5.0 * r - d.x2
        }
    } else if d.x2 > 0.0 {
        3.0 * r - d.x1
    } else {
        7.0 * r + d.x1
    }
}

fn perimeter_point(sigma: f64, r: f64) -> Point2 {
    let side = (sigma / (2.0 * r)).floor().clamp(0.0, 3.0);
    let u = sigma - 2.0 * r * side;
    match side as u8 {
        0 => Point2::new(r, u - r),
        1 => Point2::new(r - u, r),
        2 => Point2::new(-r, r - u),
        _ => Point2::new(u - r, -r),
    }
}

/// Central-difference determinant of `∇ₓX(t, s, ·)` at `p`.
pub fn jacobian_estimate(flow: &FlowMap, t: f64, s: f64, p: Point2, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!("step {h} must be positive")));
    }
    let e1 = Point2::new(h, 0.0);
    let e2 = Point2::new(0.0, h);
    let c1 = (flow.apply(t, s, p + e1)? - flow.apply(t, s, p - e1)?) / (2.0 * h);
    let c2 = (flow.apply(t, s, p + e2)? - flow.apply(t, s, p - e2)?) / (2.0 * h);
    Ok(c1.cross(c2))
}

/// Distance statistics between two flows over a sample set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub sup: f64,
    /// Mean of `min(1, |Xa - Xb|)`.
    pub mean: f64,
}

pub fn flow_deviation(a: &FlowMap, b: &FlowMap, samples: &[Point2], t: f64, s: f64) -> Result<Deviation> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("no sample points".into()));
    }
    let mut sup = 0.0f64;
    let mut sum = 0.0;
    for &p in samples {
        let d = (a.apply(t, s, p)? - b.apply(t, s, p)?).norm();
        sup = sup.max(d);
        sum += d.min(1.0);
    }
    Ok(Deviation {
        sup,
        mean: sum / samples.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::eval_u;

    fn rk4_u(t: f64, p: Point2, dt: f64) -> Point2 {
        let n = (t / dt).round() as usize;
        let mut x = p;
        for _ in 0..n {
            let k1 = eval_u(x);
            let k2 = eval_u(x + k1 * (0.5 * dt));
            let k3 = eval_u(x + k2 * (0.5 * dt));
            let k4 = eval_u(x + k3 * dt);
            x = x + (k1 + (k2 + k3) * 2.0 + k4) * (dt / 6.0);
        }
        x
    }

    #[test]
    fn full_epoch_is_counterclockwise_quarter_turn() {
        let p = Point2::new(0.25, 0.0);
        let x = epoch_flow_exact(0, 1.0, 0.5, p).unwrap();
        assert_eq!(x, Point2::new(0.0, 0.25));
        let oracle = rk4_u(0.5, p, 1e-5);
        assert!((x - oracle).norm() < 1e-4, "{oracle:?}");
    }

    #[test]
    fn partial_advance_matches_rk4() {
        for (p, dt) in [
            (Point2::new(0.3, -0.1), 0.13),
            (Point2::new(-0.05, 0.41), 0.37),
            (Point2::new(2.2, 1.9), 0.21),
        ] {
            let x = advance(0, dt, p);
            let oracle = rk4_u(dt, p, 1e-5);
            assert!((x - oracle).norm() < 1e-4, "{p:?} {x:?} {oracle:?}");
        }
    }

    #[test]
    fn fixed_points() {
        for p in [Point2::new(1.3, 0.1), Point2::ZERO, Point2::new(0.2, 0.2), Point2::new(0.5, 0.1)] {
            assert_eq!(epoch_flow_exact(0, 1.0, 0.5, p).unwrap(), p);
        }
        let p = Point2::new(0.1, 0.3);
        assert_eq!(epoch_flow_exact(2, 0.2, 0.2, p).unwrap(), p);
        assert!(epoch_flow_exact(0, 1.0, 0.4, p).is_err());
    }

    #[test]
    fn frozen_outside_unit_interval_and_level_cap() {
        let p = Point2::new(0.3, -0.2);
        assert_eq!(flow_exact_bdp(2.0, 0.99, p).unwrap(), flow_exact_bdp(1.0, 0.99, p).unwrap());
        assert_eq!(flow_exact_bdp(-1.0, -3.0, p).unwrap(), p);
        assert!(matches!(flow_exact_bdp(1.0, 0.0, p), Err(Error::LevelCap { .. })));
        assert!(matches!(flow_exact_bdp(1.0, 1e-7, p), Err(Error::LevelCap { .. })));
        let trunc = FlowMap::exact_truncated(1.0 / 64.0);
        assert_eq!(trunc.apply(1.0, 0.0, p).unwrap(), flow_exact_bdp(1.0, 1.0 / 64.0, p).unwrap());
    }

    #[test]
    fn numeric_constant_and_linear() {
        let c = FlowMap::numeric(VectorFieldSpec::Constant { value: Point2::new(0.5, -1.0) }, Some(0.01)).unwrap();
        let x = c.apply(0.7, 0.2, Point2::new(1.0, 1.0)).unwrap();
        assert!((x - Point2::new(1.25, 0.5)).norm() < 1e-12);
        let hyp = FlowMap::numeric(VectorFieldSpec::Linear { matrix: [[1.0, 0.0], [0.0, -1.0]] }, Some(1e-3)).unwrap();
        let j = jacobian_estimate(&hyp, 0.5, 0.0, Point2::new(0.3, 0.2), 1e-4).unwrap();
        assert!((j - 1.0).abs() < 1e-9, "{j}");
        let x = hyp.apply(0.5, 0.0, Point2::new(0.3, 0.2)).unwrap();
        assert!((x.x1 - 0.3 * 0.5f64.exp()).abs() < 1e-12);
    }
}
