//! Space-time mollifiers `θ`, their scalings `θ^k(t,x) = k^3 θ(kt, kx)` and
//! evaluation of `b ⋆ θ^k` for fields of the Depauw family.
//!
//! Two evaluation routes exist. [`convolve_eval`] integrates the
//! convolution directly with tensor Gauss–Legendre rules and works for any
//! analytic field and any mollifier. [`MollifiedField`] exploits separable
//! mollifiers: on every epoch the Depauw field is a rescaled copy of `u`, so
//! `b ⋆ θ^k` is a time-weighted sum of rescaled copies of `u ⋆ Ψ_m`, which
//! is tabulated once per scale `m` through its stream function.

mod bump;
mod stream;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{self, AnalyticField, Epoch, VectorField, VectorFieldSpec};
use crate::geometry::{Point2, Vec2, DEFAULT_MAX_LEVEL};
use crate::quadrature::{split_nodes, tanh_sinh, EndKind, GaussLegendre};

pub use bump::{bump, bump_cdf, BUMP_MASS};
pub use stream::{StreamTable, MIN_TABLE_SCALE};

/// One-dimensional factor `s ↦ B((s - center)/half_width) / (half_width·I)`
/// with `B(z) = exp(-1/(1 - z^2))` and `I = ∫B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpFactor {
    pub center: f64,
    pub half_width: f64,
}

impl BumpFactor {
    pub const fn new(center: f64, half_width: f64) -> Self {
        Self { center, half_width }
    }

    #[inline]
    pub fn density(&self, s: f64) -> f64 {
        bump((s - self.center) / self.half_width) / (self.half_width * BUMP_MASS)
    }

    #[inline]
    pub fn cdf(&self, s: f64) -> f64 {
        bump_cdf((s - self.center) / self.half_width)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }

    fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0 && self.half_width.is_finite() && self.center.is_finite()) {
            return Err(Error::Mollifier(format!("invalid bump factor {self:?}")));
        }
        Ok(())
    }
}

/// Serializable choice of a separable mollifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "kebab-case")]
pub enum MollifierSpec {
    /// Centred product bump of the given radius in `t`, `x1` and `x2`.
    TensorBump { radius: f64 },
    /// Time support `[0.1, 0.9]`, spatial support `[-0.5, 1] × [-0.6, 0.6]`.
    ShiftedBump,
    Separable {
        time: BumpFactor,
        x1: BumpFactor,
        x2: BumpFactor,
    },
}

impl MollifierSpec {
    pub fn tensor_bump() -> Self {
        MollifierSpec::TensorBump { radius: 1.0 }
    }

    pub fn shifted_bump() -> Self {
        MollifierSpec::ShiftedBump
    }

    /// Built-in profile by name.
    pub fn named(name: &str) -> Result<Self> {
        match name {
            "tensor-bump" => Ok(Self::tensor_bump()),
            "shifted-bump" => Ok(Self::shifted_bump()),
            _ => Err(Error::Mollifier(format!("unknown mollifier profile `{name}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MollifierSpec::TensorBump { .. } => "tensor-bump",
            MollifierSpec::ShiftedBump => "shifted-bump",
            MollifierSpec::Separable { .. } => "separable",
        }
    }

    pub fn factors(&self) -> [BumpFactor; 3] {
        match self {
            MollifierSpec::TensorBump { radius } => [BumpFactor::new(0.0, *radius); 3],
            MollifierSpec::ShiftedBump => [
                BumpFactor::new(0.5, 0.4),
                BumpFactor::new(0.25, 0.75),
                BumpFactor::new(0.0, 0.6),
            ],
            MollifierSpec::Separable { time, x1, x2 } => [*time, *x1, *x2],
        }
    }
}

impl fmt::Display for MollifierSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Box `[t] × [x1] × [x2]` outside which a mollifier vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportBox {
    pub t: (f64, f64),
    pub x1: (f64, f64),
    pub x2: (f64, f64),
}

impl SupportBox {
    /// Largest distance of the box from the origin along any axis.
    pub fn radius(&self) -> f64 {
        [self.t.0, self.t.1, self.x1.0, self.x1.1, self.x2.0, self.x2.1]
            .iter()
            .fold(0.0f64, |r, v| r.max(v.abs()))
    }

    pub fn scaled(&self, s: f64) -> SupportBox {
        SupportBox {
            t: (self.t.0 * s, self.t.1 * s),
            x1: (self.x1.0 * s, self.x1.1 * s),
            x2: (self.x2.0 * s, self.x2.1 * s),
        }
    }
}

/// A user supplied profile `(t, x) ↦ value`, normalised at construction.
pub type ProfileFn = Arc<dyn Fn(f64, Point2) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Profile {
    Separable([BumpFactor; 3]),
    Custom(ProfileFn),
}

/// A nonnegative space-time kernel of unit mass.
#[derive(Clone)]
pub struct Mollifier {
    name: String,
    spec: Option<MollifierSpec>,
    profile: Profile,
    support: SupportBox,
    normalization: f64,
}

impl fmt::Debug for Mollifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Mollifier")
            .field("name", &self.name)
            .field("support", &self.support)
            .field("normalization", &self.normalization)
            .finish()
    }
}

const MASS_TOL: f64 = 1e-10;

/// Build one of the separable profiles and check its mass by quadrature.
pub fn make_mollifier(spec: &MollifierSpec) -> Result<Mollifier> {
    let factors = spec.factors();
    let mut mass = 1.0;
    for f in &factors {
        f.validate()?;
        let (a, b) = f.support();
        mass *= tanh_sinh(a, b, 1e-14, |s| f.density(s))
            .map_err(|e| Error::Mollifier(format!("mass quadrature failed: {e}")))?;
    }
    if (mass - 1.0).abs() > MASS_TOL {
        return Err(Error::Mollifier(format!(
            "mass {mass} of `{}` differs from 1",
            spec.name()
        )));
    }
    let [t, x1, x2] = factors;
    Ok(Mollifier {
        name: spec.name().to_string(),
        spec: Some(spec.clone()),
        profile: Profile::Separable(factors),
        support: SupportBox {
            t: t.support(),
            x1: x1.support(),
            x2: x2.support(),
        },
        normalization: 1.0 / (t.half_width * x1.half_width * x2.half_width * BUMP_MASS.powi(3)),
    })
}

/// Build a mollifier from an arbitrary profile vanishing outside `support`.
///
/// The profile is sampled for negativity and normalised with two tensor
/// rules, graded toward the support faces, whose agreement is required to
/// `1e-10`.
pub fn make_custom_mollifier(name: &str, support: SupportBox, profile: ProfileFn) -> Result<Mollifier> {
    let tensor_mass = |max_dv: f64| -> Result<f64> {
        let gl = GaussLegendre::cached(8);
        let [t, x1, x2] = [support.t, support.x1, support.x2].map(|r| axis_rule(&gl, r, EndKind::Graded, &[], max_dv));
        let mut acc = 0.0;
        for &(t, wt) in &t {
            for &(x1, w1) in &x1 {
                for &(x2, w2) in &x2 {
                    let v = profile(t, Point2::new(x1, x2));
                    if v < 0.0 || !v.is_finite() {
                        return Err(Error::Mollifier(format!(
                            "profile `{name}` takes the value {v} at (t, x) = ({t}, {x1}, {x2})"
                        )));
                    }
                    acc += wt * w1 * w2 * v;
                }
            }
        }
        Ok(acc)
    };
    let coarse = tensor_mass(0.5)?;
    let fine = tensor_mass(0.25)?;
    if !(fine > 0.0) {
        return Err(Error::Mollifier(format!("profile `{name}` has no mass")));
    }
    if (coarse - fine).abs() > MASS_TOL * fine {
        return Err(Error::Mollifier(format!(
            "mass quadrature for `{name}` did not converge ({coarse} vs {fine})"
        )));
    }
    Ok(Mollifier {
        name: name.to_string(),
        spec: None,
        profile: Profile::Custom(profile),
        support,
        normalization: 1.0 / fine,
    })
}

/// Nodes on `range` split at `breaks`, with the given behaviour at both
/// ends of the range.
fn axis_rule(gl: &GaussLegendre, range: (f64, f64), ends: EndKind, breaks: &[f64], max_dv: f64) -> Vec<(f64, f64)> {
    split_nodes(gl, range.0, range.1, (ends, ends), breaks, EndKind::Regular, max_dv)
}

impl Mollifier {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn spec(&self) -> Option<&MollifierSpec> {
        self.spec.as_ref()
    }

    pub fn support(&self) -> SupportBox {
        self.support
    }

    pub fn support_radius(&self) -> f64 {
        self.support.radius()
    }

    pub fn normalization_constant(&self) -> f64 {
        self.normalization
    }

    /// Separable factors `(η, ψ1, ψ2)` when the profile is a product.
    pub fn factors(&self) -> Option<[BumpFactor; 3]> {
        match &self.profile {
            Profile::Separable(f) => Some(*f),
            Profile::Custom(_) => None,
        }
    }

    /// How the profile vanishes at the faces of its support: bump factors
    /// are flat there, custom profiles get graded rules.
    fn end_kind(&self) -> EndKind {
        match self.profile {
            Profile::Separable(_) => EndKind::Flat,
            Profile::Custom(_) => EndKind::Graded,
        }
    }

    #[inline]
    pub fn eval(&self, t: f64, x: Point2) -> f64 {
        match &self.profile {
            Profile::Separable([a, b, c]) => a.density(t) * b.density(x.x1) * c.density(x.x2),
            Profile::Custom(f) => {
                let s = &self.support;
                if t < s.t.0 || t > s.t.1 || x.x1 < s.x1.0 || x.x1 > s.x1.1 || x.x2 < s.x2.0 || x.x2 > s.x2.1 {
                    0.0
                } else {
                    self.normalization * f(t, x)
                }
            }
        }
    }

    /// Space-time mass by tensor quadrature.
    pub fn mass(&self) -> f64 {
        scaled_mass(self, 1)
    }
}

fn scaled_mass(m: &Mollifier, k: u32) -> f64 {
    let kf = k as f64;
    let s = m.support.scaled(1.0 / kf);
    let gl = GaussLegendre::cached(8);
    let [t, x1, x2] = [s.t, s.x1, s.x2].map(|r| axis_rule(&gl, r, m.end_kind(), &[], 0.4));
    let k3 = kf * kf * kf;
    let mut acc = 0.0;
    for &(t, wt) in &t {
        for &(x1, w1) in &x1 {
            for &(x2, w2) in &x2 {
                acc += wt * w1 * w2 * k3 * m.eval(kf * t, Point2::new(x1, x2) * kf);
            }
        }
    }
    acc
}

/// `θ^k(t, x) = k^3 θ(kt, kx)`.
#[derive(Debug, Clone)]
pub struct ScaledMollifier {
    pub base: Arc<Mollifier>,
    pub k: u32,
}

pub fn scale(m: Arc<Mollifier>, k: u32) -> Result<ScaledMollifier> {
    if k == 0 {
        return Err(Error::InvalidInput("mollifier scale k must be at least 1".into()));
    }
    Ok(ScaledMollifier { base: m, k })
}

impl ScaledMollifier {
    #[inline]
    pub fn eval(&self, t: f64, x: Point2) -> f64 {
        let k = self.k as f64;
        k * k * k * self.base.eval(k * t, x * k)
    }

    pub fn support(&self) -> SupportBox {
        self.base.support.scaled(1.0 / self.k as f64)
    }

    pub fn support_radius(&self) -> f64 {
        self.base.support_radius() / self.k as f64
    }

    pub fn mass(&self) -> f64 {
        scaled_mass(&self.base, self.k)
    }
}

/// Rule parameters for [`convolve_eval`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionQuadrature {
    /// Gauss–Legendre order per panel.
    pub order: usize,
    /// Panel length in the mapped variable of each piece.
    pub max_dv: f64,
}

impl Default for ConvolutionQuadrature {
    fn default() -> Self {
        Self { order: 8, max_dv: 0.6 }
    }
}

/// More cells than this per axis and the spatial rule is no longer split
/// at cell edges and diagonals.
const MAX_SPLIT_CELLS: f64 = 512.0;

/// Cell size of the field at time `τ`, for fields whose cells jump across
/// their edges and diagonals.
fn cell_size(spec: &VectorFieldSpec, tau: f64) -> Option<f64> {
    match spec {
        VectorFieldSpec::W | VectorFieldSpec::PeriodizedU => Some(1.0),
        VectorFieldSpec::DepauwFull => Epoch::of(tau).map(|e| e.scale()),
        VectorFieldSpec::Truncated { inner, .. } | VectorFieldSpec::ZeroExtended { inner } => cell_size(inner, tau),
        _ => None,
    }
}

/// Time breakpoints of a field (where it may jump in time).
fn time_breaks(spec: &VectorFieldSpec, out: &mut Vec<f64>) {
    match spec {
        VectorFieldSpec::DepauwFull => {
            out.push(0.0);
            out.extend((0..=DEFAULT_MAX_LEVEL).map(|j| f64::powi(2.0, -(j as i32))));
        }
        VectorFieldSpec::Truncated { inner, from } => {
            out.push(*from);
            time_breaks(inner, out);
        }
        VectorFieldSpec::ZeroExtended { inner } => {
            out.push(0.0);
            time_breaks(inner, out);
        }
        _ => {}
    }
}

/// Offsets `y` in `(lo, hi)` with `(x - y)/e` in `shift + Z`.
fn lattice_breaks(lo: f64, hi: f64, x: f64, e: f64, shift: f64, out: &mut Vec<f64>) {
    let n_lo = ((x - hi) / e - shift).ceil() as i64;
    let n_hi = ((x - lo) / e - shift).floor() as i64;
    out.extend((n_lo..=n_hi).map(|n| x - e * (n as f64 + shift)));
}

/// `(b ⋆ θ^k)(t, p) = ∫∫ b(t - s, p - y) θ^k(s, y) dy ds` by nested
/// quadrature over the support of `θ^k`, split at the time breakpoints of
/// `b`, and in space at the cell edges and diagonals of its current cells.
///
/// `b` is convolved as given; wrap it in
/// [`VectorFieldSpec::ZeroExtended`] to convolve the zero extension.
pub fn convolve_eval(
    b: &VectorFieldSpec,
    theta: &ScaledMollifier,
    t: f64,
    p: Point2,
    quad: ConvolutionQuadrature,
) -> Result<Vec2> {
    if quad.order < 2 || !(quad.max_dv > 0.0 && quad.max_dv <= 4.0) {
        return Err(Error::InvalidInput(format!("quadrature {quad:?} out of range")));
    }
    let field = AnalyticField::new(b.clone())?;
    let gl = GaussLegendre::cached(quad.order);
    let sup = theta.support();
    let ends = theta.base.end_kind();

    let mut breaks = Vec::new();
    time_breaks(b, &mut breaks);
    // s = t - τ for every breakpoint τ
    let s_breaks: Vec<f64> = breaks.iter().map(|tau| t - tau).collect();

    let mut acc = Vec2::ZERO;
    let mut y1_breaks = Vec::new();
    let mut y2_breaks = Vec::new();
    for (s, ws) in axis_rule(&gl, sup.t, ends, &s_breaks, quad.max_dv) {
        let tau = t - s;
        let cell = cell_size(b, tau).filter(|e| (sup.x1.1 - sup.x1.0).max(sup.x2.1 - sup.x2.0) / e < MAX_SPLIT_CELLS);
        y2_breaks.clear();
        if let Some(e) = cell {
            // rows change at half-integers, diagonals cross at integers
            lattice_breaks(sup.x2.0, sup.x2.1, p.x2, 0.5 * e, 0.0, &mut y2_breaks);
        }
        let mut inner = Vec2::ZERO;
        for (y2, w2) in axis_rule(&gl, sup.x2, ends, &y2_breaks, quad.max_dv) {
            y1_breaks.clear();
            if let Some(e) = cell {
                let z2 = (p.x2 - y2) / e;
                let d2 = z2 - (z2 + 0.5).floor();
                for shift in [0.5, d2, -d2] {
                    lattice_breaks(sup.x1.0, sup.x1.1, p.x1, e, shift, &mut y1_breaks);
                }
            }
            let mut row = Vec2::ZERO;
            for (y1, w1) in axis_rule(&gl, sup.x1, ends, &y1_breaks, quad.max_dv) {
                let y = Point2::new(y1, y2);
                let th = theta.eval(s, y);
                if th != 0.0 {
                    row = row + field.velocity(tau, p - y) * (w1 * th);
                }
            }
            inner = inner + row * w2;
        }
        acc = acc + inner * ws;
    }
    Ok(acc)
}

/// Central-difference divergence `∂₁b₁ + ∂₂b₂` at `(t, p)`.
pub fn divergence_estimate(b: &dyn VectorField, t: f64, p: Point2, h: f64) -> f64 {
    let e1 = Point2::new(h, 0.0);
    let e2 = Point2::new(0.0, h);
    let d1 = b.velocity(t, p + e1).x1 - b.velocity(t, p - e1).x1;
    let d2 = b.velocity(t, p + e2).x2 - b.velocity(t, p - e2).x2;
    (d1 + d2) / (2.0 * h)
}

enum Evaluator {
    /// Truncated Depauw field: `Σ_j A_j(t) F_{m_j}(2^j x)`.
    Depauw {
        time: BumpFactor,
        from: f64,
        /// `(j, table for m = k 2^{-j})` for every retained epoch.
        tables: Vec<(u32, Arc<StreamTable>)>,
    },
    /// Zero-extended `u`: `H(kt) F_k(x)`.
    Periodic { time: BumpFactor, table: Arc<StreamTable> },
    /// Zero-extended constant: `H(kt) c`.
    Constant { time: BumpFactor, value: Vec2 },
    /// Direct quadrature for anything else.
    Generic {
        inner: VectorFieldSpec,
        theta: ScaledMollifier,
        quad: ConvolutionQuadrature,
    },
}

/// Evaluator for `b̃ ⋆ θ^k`, where `b̃` is the zero extension of `inner`.
pub struct MollifiedField {
    inner: VectorFieldSpec,
    k: u32,
    bound: f64,
    eval: Evaluator,
}

impl fmt::Debug for MollifiedField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MollifiedField")
            .field("inner", &self.inner)
            .field("k", &self.k)
            .finish()
    }
}

fn strip_zero_extension(spec: &VectorFieldSpec) -> &VectorFieldSpec {
    match spec {
        VectorFieldSpec::ZeroExtended { inner } => strip_zero_extension(inner),
        s => s,
    }
}

impl MollifiedField {
    /// Build from a built-in mollifier profile.
    pub fn build(inner: &VectorFieldSpec, mollifier: &MollifierSpec, k: u32) -> Result<Self> {
        let m = Arc::new(make_mollifier(mollifier)?);
        Self::with_mollifier(inner, m, k)
    }

    /// Build from a constructed mollifier; non-separable kernels fall back
    /// to direct quadrature.
    pub fn with_mollifier(inner: &VectorFieldSpec, mollifier: Arc<Mollifier>, k: u32) -> Result<Self> {
        AnalyticField::new(inner.clone())?;
        let theta = scale(mollifier.clone(), k)?;
        let kf = k as f64;
        let bound = inner.sup_norm_bound();
        let base = strip_zero_extension(inner);
        let eval = match (mollifier.factors(), base) {
            (Some([time, f1, f2]), VectorFieldSpec::PeriodizedU) => Evaluator::Periodic {
                time,
                table: StreamTable::cached(f1, f2, kf)?,
            },
            (Some([time, _, _]), VectorFieldSpec::Constant { value }) => Evaluator::Constant { time, value: *value },
            (Some([time, _, _]), VectorFieldSpec::Zero) => Evaluator::Constant { time, value: Vec2::ZERO },
            (Some([time, f1, f2]), s) if s.depauw_truncation().is_some() => {
                let from = s.depauw_truncation().unwrap_or(0.0);
                let mut tables = Vec::new();
                for j in 0..DEFAULT_MAX_LEVEL {
                    let e = Epoch { level: j };
                    if e.interval().1 <= from {
                        break;
                    }
                    let m = kf * e.scale();
                    if m < MIN_TABLE_SCALE {
                        break;
                    }
                    tables.push((j, StreamTable::cached(f1, f2, m)?));
                }
                Evaluator::Depauw { time, from, tables }
            }
            _ => Evaluator::Generic {
                inner: VectorFieldSpec::zero_extended(inner.clone()),
                theta,
                quad: ConvolutionQuadrature::default(),
            },
        };
        Ok(Self {
            inner: inner.clone(),
            k,
            bound,
            eval,
        })
    }

    /// Build from a `Mollified` descriptor.
    pub fn from_spec(spec: &VectorFieldSpec) -> Result<Self> {
        match spec {
            VectorFieldSpec::Mollified { inner, mollifier, k } => Self::build(inner, mollifier, *k),
            other => Err(Error::InvalidInput(format!("{other} is not a mollified field"))),
        }
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn inner(&self) -> &VectorFieldSpec {
        &self.inner
    }

    /// Whether the tabulated fast route is in use.
    pub fn is_tabulated(&self) -> bool {
        !matches!(self.eval, Evaluator::Generic { .. })
    }
}

impl VectorField for MollifiedField {
    fn velocity(&self, t: f64, p: Point2) -> Vec2 {
        let k = self.k as f64;
        match &self.eval {
            Evaluator::Depauw { time, from, tables } => {
                let (s_lo, s_hi) = time.support();
                // τ = t - s ranges over [t - s_hi/k, t - s_lo/k]
                let tau_hi = t - s_lo / k;
                let tau_lo = t - s_hi / k;
                if tau_hi <= from.max(0.0) || tau_lo > 1.0 {
                    return Vec2::ZERO;
                }
                let mut acc = Vec2::ZERO;
                for (j, table) in tables {
                    let e = Epoch { level: *j };
                    let (lo, hi) = e.interval();
                    if lo >= tau_hi {
                        continue;
                    }
                    if hi <= tau_lo {
                        break;
                    }
                    let lo = lo.max(*from);
                    if lo >= hi {
                        continue;
                    }
                    let w = time.cdf(k * (t - lo)) - time.cdf(k * (t - hi));
                    if w != 0.0 {
                        acc = acc + table.velocity(p * e.scale().recip()) * w;
                    }
                }
                acc
            }
            Evaluator::Periodic { time, table } => {
                let w = time.cdf(k * t);
                if w == 0.0 {
                    Vec2::ZERO
                } else {
                    table.velocity(p) * w
                }
            }
            Evaluator::Constant { time, value } => *value * time.cdf(k * t),
            Evaluator::Generic { inner, theta, quad } => {
                convolve_eval(inner, theta, t, p, *quad).expect("validated at construction")
            }
        }
    }

    fn sup_norm_bound(&self) -> f64 {
        self.bound
    }
}

/// Compile any descriptor into an evaluable field.
pub fn compile(spec: &VectorFieldSpec) -> Result<Arc<dyn VectorField>> {
    match spec {
        VectorFieldSpec::Mollified { .. } => Ok(Arc::new(MollifiedField::from_spec(spec)?)),
        _ => Ok(Arc::new(AnalyticField::new(spec.clone())?)),
    }
}

/// Pointwise evaluation of any descriptor, building mollified evaluators
/// on demand (tables are cached process-wide).
pub fn eval_any(spec: &VectorFieldSpec, t: f64, p: Point2) -> Result<Vec2> {
    match spec {
        VectorFieldSpec::Mollified { .. } => Ok(MollifiedField::from_spec(spec)?.velocity(t, p)),
        _ => field::eval(spec, t, p),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_profiles_have_unit_mass() {
        for spec in [MollifierSpec::tensor_bump(), MollifierSpec::shifted_bump()] {
            let m = make_mollifier(&spec).unwrap();
            assert!((m.mass() - 1.0).abs() < 1e-10, "{}", m.mass());
            for k in [1, 2, 4, 8, 16] {
                let s = scale(Arc::new(m.clone()), k).unwrap();
                assert!((s.mass() - 1.0).abs() < 1e-10);
            }
        }
        let s = make_mollifier(&MollifierSpec::shifted_bump()).unwrap().support();
        assert!((s.t.0 - 0.1).abs() < 1e-15 && s.t.1 == 0.9);
    }

    #[test]
    fn scaling_shrinks_support_and_raises_peak() {
        let m = Arc::new(make_mollifier(&MollifierSpec::tensor_bump()).unwrap());
        let s1 = scale(m.clone(), 1).unwrap();
        let s2 = scale(m.clone(), 2).unwrap();
        assert_eq!(s1.eval(0.3, Point2::new(0.1, -0.2)), m.eval(0.3, Point2::new(0.1, -0.2)));
        assert_eq!(s2.support_radius(), 0.5);
        assert!((s2.eval(0.0, Point2::ZERO) - 8.0 * m.eval(0.0, Point2::ZERO)).abs() < 1e-12);
        assert!(scale(m, 0).is_err());
    }

    #[test]
    fn negative_profile_is_rejected() {
        let sup = SupportBox {
            t: (-1.0, 1.0),
            x1: (-1.0, 1.0),
            x2: (-1.0, 1.0),
        };
        let lobed: ProfileFn = Arc::new(|t, x| bump(t) * bump(x.x1) * bump(x.x2) * (1.0 - 3.0 * x.x1 * x.x1));
        assert!(matches!(make_custom_mollifier("lobed", sup, lobed), Err(Error::Mollifier(_))));
        let ok: ProfileFn = Arc::new(|t, x| bump(t) * bump(x.x1) * bump(x.x2) * (1.0 + 0.5 * x.x1 * x.x2));
        let m = make_custom_mollifier("skewed", sup, ok).unwrap();
        assert!((m.mass() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn convolving_constants_and_linear_fields() {
        let m = Arc::new(make_mollifier(&MollifierSpec::shifted_bump()).unwrap());
        let th = scale(m, 4).unwrap();
        let c = VectorFieldSpec::Constant { value: Vec2::new(0.3, -1.2) };
        let v = convolve_eval(&c, &th, 0.4, Point2::new(0.2, 0.1), Default::default()).unwrap();
        assert!((v - Vec2::new(0.3, -1.2)).norm() < 1e-12, "{v:?}");
        let lin = VectorFieldSpec::Linear { matrix: [[1.0, 0.0], [0.0, 0.0]] };
        let f = GenericField { spec: lin, theta: th };
        let d = divergence_estimate(&f, 0.4, Point2::new(0.2, 0.1), 1e-3);
        assert!((d - 1.0).abs() < 1e-6, "{d}");
    }

    struct GenericField {
        spec: VectorFieldSpec,
        theta: ScaledMollifier,
    }

    impl VectorField for GenericField {
        fn velocity(&self, t: f64, p: Point2) -> Vec2 {
            convolve_eval(&self.spec, &self.theta, t, p, Default::default()).unwrap()
        }
        fn sup_norm_bound(&self) -> f64 {
            f64::INFINITY
        }
    }

    #[test]
    fn zero_extension_vanishes_before_support() {
        let m = Arc::new(make_mollifier(&MollifierSpec::tensor_bump()).unwrap());
        let th = scale(m, 4).unwrap();
        let v = convolve_eval(&VectorFieldSpec::DepauwFull, &th, -0.3, Point2::new(0.1, 0.2), Default::default())
            .unwrap();
        assert_eq!(v, Vec2::ZERO);
    }
}
