//! Weak-star diagnostics: pairings, dyadic averages, the localized
//! approximation sequences, mollifier selection, the duality identity and
//! the two-solution construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Rect, VectorField, VectorFieldSpec};
use crate::flow::{default_dt, FlowMap};
use crate::geometry::{dyadic_side, DyadicSquare, Family, Point2, Window};
use crate::mollify::{self, MollifierSpec};
use crate::quadrature::GaussLegendre;
use crate::testfn::{SmoothBump, SpaceTimeBump, TestFunction};
use crate::transport::{
    dyadic_exponent, evolve_dyadic, zeta_density, Continuation, Datum, DyadicDensity, GridDensity, Solution, ZetaIndex,
};

/// Bump pairings use squares no larger than `radius / 2^BUMP_LEVELS`.
const BUMP_LEVELS: i32 = 5;

fn check_window(window: &Window, support: &Rect) -> Result<()> {
    let r = window.half_width();
    if support.lo.x1 < -r || support.lo.x2 < -r || support.hi.x1 > r || support.hi.x2 > r {
        return Err(Error::Window(format!("test function support {support:?} leaves [-{r}, {r}]²")));
    }
    Ok(())
}

/// Densities that can be paired with spatial test functions.
pub trait Pairing {
    fn pair(&self, phi: &TestFunction) -> Result<f64>;
}

impl Pairing for DyadicDensity {
    /// Exact for dyadic indicators; midpoint rule on a refined dyadic
    /// partition for bumps.
    fn pair(&self, phi: &TestFunction) -> Result<f64> {
        check_window(&self.window(), &phi.support())?;
        match phi {
            TestFunction::DyadicIndicator { square } => Ok(self.integral_over(square)),
            TestFunction::SmoothBump(b) => {
                let resolve = (BUMP_LEVELS as f64 - b.radius.log2()).ceil().max(0.0) as u32;
                let level = self.level().max(resolve);
                let shift = level - self.level();
                let h = dyadic_side(level);
                let sup = b.support();
                let lo = |x: f64| (x / h).floor() as i64;
                let mut sum = 0.0;
                for i2 in lo(sup.lo.x2)..=lo(sup.hi.x2) {
                    for i1 in lo(sup.lo.x1)..=lo(sup.hi.x1) {
                        let c = Point2::new((i1 as f64 + 0.5) * h, (i2 as f64 + 0.5) * h);
                        let v = b.value(c);
                        if v != 0.0 {
                            sum += v * self.value(i1 >> shift, i2 >> shift);
                        }
                    }
                }
                Ok(sum * h * h)
            }
        }
    }
}

impl Pairing for GridDensity {
    fn pair(&self, phi: &TestFunction) -> Result<f64> {
        let support = phi.support();
        check_window(&self.grid.window, &support)?;
        Ok(self.pair_with(|p| phi.value(p), Some(support)))
    }
}

pub fn pair<D: Pairing + ?Sized>(rho: &D, phi: &TestFunction) -> Result<f64> {
    rho.pair(phi)
}

/// `⨍_S ρ`.
pub fn local_average(rho: &DyadicDensity, square: &DyadicSquare) -> Result<f64> {
    if square.level > rho.level() {
        return Err(Error::LevelMismatch(format!(
            "square at level {} is finer than the density at level {}",
            square.level,
            rho.level()
        )));
    }
    Ok(rho.average(square))
}

/// Pairings of one test function along a sequence of scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingReport {
    pub test_fn: String,
    pub mollifier: String,
    pub entries: Vec<(u32, f64)>,
    /// The last entry.
    pub limit_estimate: f64,
    /// Largest gap between two of the last three entries.
    pub spread: f64,
}

impl PairingReport {
    pub fn new(test_fn: impl Into<String>, mollifier: impl Into<String>, entries: Vec<(u32, f64)>) -> Result<Self> {
        let Some(&(_, last)) = entries.last() else {
            return Err(Error::InvalidInput("pairing report without entries".into()));
        };
        let tail = &entries[entries.len().saturating_sub(3)..];
        let spread = tail
            .iter()
            .flat_map(|a| tail.iter().map(move |b| (a.1 - b.1).abs()))
            .fold(0.0, f64::max);
        Ok(Self {
            test_fn: test_fn.into(),
            mollifier: mollifier.into(),
            entries,
            limit_estimate: last,
            spread,
        })
    }

    /// Value at scale `k`.
    pub fn entry(&self, k: u32) -> Option<f64> {
        self.entries.iter().find(|e| e.0 == k).map(|e| e.1)
    }

    /// Rows `experiment,mollifier,k,test_fn,value`.
    pub fn csv_rows(&self, experiment: &str) -> String {
        let quote = |s: &str| {
            if s.contains([',', '"']) {
                format!("\"{}\"", s.replace('"', "\"\""))
            } else {
                s.to_owned()
            }
        };
        let (m, f) = (quote(&self.mollifier), quote(&self.test_fn));
        self.entries
            .iter()
            .map(|(k, v)| format!("{},{m},{k},{f},{v}\n", quote(experiment)))
            .collect()
    }
}

pub const PAIRING_CSV_HEADER: &str = "experiment,mollifier,k,test_fn,value\n";

/// Largest gap between the limit estimates of reports on the same test function.
pub fn cross_gap(reports: &[PairingReport]) -> f64 {
    let mut gap: f64 = 0.0;
    for (i, a) in reports.iter().enumerate() {
        for b in &reports[i + 1..] {
            if a.test_fn == b.test_fn {
                gap = gap.max((a.limit_estimate - b.limit_estimate).abs());
            }
        }
    }
    gap
}

/// A `{0,1}`-valued function constant on `S¹_{k+1}` squares with average
/// `1/2` on every `S¹_k` square.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Localizer {
    /// `ζᵢ(2^{-k-1}, ·)`.
    Zeta { index: ZetaIndex },
    Custom { density: DyadicDensity },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxSequenceSpec {
    pub datum: DyadicDensity,
    pub localizer: Localizer,
    pub level: u32,
}

/// `ρ̄^k = 2 f^{k+1} Σ_{S ∈ S¹_k} 1_S ⨍_S ρ̄`.
pub fn approx_sequence(spec: &ApproxSequenceSpec) -> Result<DyadicDensity> {
    let k = spec.level;
    let datum = &spec.datum;
    let window = datum.window();
    let f = match &spec.localizer {
        Localizer::Zeta { index } => zeta_density(*index, k + 1, window)?,
        Localizer::Custom { density } => {
            check_localizer(density, k)?;
            density.clone()
        }
    };
    let level = datum.level().max(k + 1);
    let coarse = level - k;
    let fine = level - (k + 1);
    let value = |i1: i64, i2: i64| {
        let fv = f.value(i1 >> fine, i2 >> fine);
        if fv == 0.0 {
            return 0.0;
        }
        let parent = DyadicSquare::s1(k, i1 >> coarse, i2 >> coarse);
        2.0 * fv * datum.average(&parent)
    };
    match datum.continuation() {
        Continuation::Zero => DyadicDensity::from_fn(level, window, Continuation::Zero, |s| value(s.index.0, s.index.1)),
        Continuation::Periodic => {
            let (_, size) = datum.block();
            let period = (size << (level - datum.level())).max(1 << coarse).max(2 << fine);
            DyadicDensity::periodic(level, window, period, value)
        }
    }
}

fn check_localizer(f: &DyadicDensity, k: u32) -> Result<()> {
    if f.level() != k + 1 {
        return Err(Error::LevelMismatch(format!("localizer at level {} for k = {k}", f.level())));
    }
    if let Some(v) = f.stored().iter().find(|v| **v != 0.0 && **v != 1.0) {
        return Err(Error::InvalidInput(format!("localizer value {v} is not 0 or 1")));
    }
    let n = f.window().cells_per_side(k) as i64;
    for i2 in -n / 2..n / 2 {
        for i1 in -n / 2..n / 2 {
            let mean = f.average(&DyadicSquare::s1(k, i1, i2));
            if mean != 0.5 {
                return Err(Error::Localizer { square: (i1, i2), mean });
            }
        }
    }
    Ok(())
}

/// Spatial and temporal resolution of trajectory-based pairings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagrangianQuadrature {
    /// Midpoint cells per unit length.
    pub per_unit: usize,
    /// RK4 step; defaults to the field's default.
    pub dt: Option<f64>,
}

impl Default for LagrangianQuadrature {
    fn default() -> Self {
        Self { per_unit: 64, dt: None }
    }
}

/// Classical RK4 for `(X, ∫ g(t, X) dt)` from `t = 0` to `t_end`.
fn trajectory_integral(
    field: &dyn VectorField,
    y: Point2,
    t_end: f64,
    dt: f64,
    g: impl Fn(f64, Point2) -> f64,
) -> (Point2, f64) {
    let n = (t_end / dt).ceil().max(1.0) as usize;
    let h = t_end / n as f64;
    let (mut x, mut acc) = (y, 0.0);
    for i in 0..n {
        let t = i as f64 * h;
        let k1 = field.velocity(t, x);
        let x2 = x + k1 * (0.5 * h);
        let k2 = field.velocity(t + 0.5 * h, x2);
        let x3 = x + k2 * (0.5 * h);
        let k3 = field.velocity(t + 0.5 * h, x3);
        let x4 = x + k3 * h;
        let k4 = field.velocity(t + h, x4);
        acc += h / 6.0 * (g(t, x) + 2.0 * g(t + 0.5 * h, x2) + 2.0 * g(t + 0.5 * h, x3) + g(t + h, x4));
        x = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    (x, acc)
}

/// Midpoint cells of `rect` on the lattice `Z²/n`.
fn lattice_cells(rect: &Rect, n: usize) -> impl Iterator<Item = Point2> {
    lattice_points(rect, n, (0.5, 0.5))
}

/// One point per cell of side `1/n`, at fractional position `offset` in the cell.
fn lattice_points(rect: &Rect, n: usize, offset: (f64, f64)) -> impl Iterator<Item = Point2> {
    let n = n as f64;
    let (a1, b1) = ((rect.lo.x1 * n).floor() as i64, (rect.hi.x1 * n).ceil() as i64);
    let (a2, b2) = ((rect.lo.x2 * n).floor() as i64, (rect.hi.x2 * n).ceil() as i64);
    (a2..b2).flat_map(move |j| (a1..b1).map(move |i| Point2::new((i as f64 + offset.0) / n, (j as f64 + offset.1) / n)))
}

fn grow(r: &Rect, d: f64) -> Rect {
    Rect::new(r.lo - Point2::new(d, d), r.hi + Point2::new(d, d))
}

/// `∬ ρ φ dx dt` for `ρ(t, ·) = X(t, 0, ·)_# ρ̄`, written as
/// `∫ ρ̄(y) ∫ φ(t, X(t, 0, y)) dt dy`.
pub fn lagrangian_pairing(
    field: &dyn VectorField,
    datum: &Datum,
    phi: &SpaceTimeBump,
    quad: &LagrangianQuadrature,
    dt: f64,
) -> f64 {
    let t_end = phi.time_support().1.max(0.0);
    let reach = grow(&phi.space.support(), field.sup_norm_bound() * t_end);
    let h = 1.0 / quad.per_unit as f64;
    lattice_cells(&reach, quad.per_unit)
        .map(|y| {
            let r = datum.eval(y);
            if r == 0.0 {
                return 0.0;
            }
            r * trajectory_integral(field, y, t_end, dt, |t, x| phi.value(t, x)).1
        })
        .sum::<f64>()
        * h
        * h
}

fn mollified_depauw(m: &MollifierSpec, k: u32) -> VectorFieldSpec {
    VectorFieldSpec::mollified(VectorFieldSpec::DepauwFull, m.clone(), k)
}

/// Pairings `∬ ρ^k φ` of the forward solutions along the mollified fields,
/// one report per mollifier.
pub fn selection_experiment(
    datum: &Datum,
    phi: &SpaceTimeBump,
    mollifiers: &[MollifierSpec],
    ks: &[u32],
    quad: &LagrangianQuadrature,
) -> Result<Vec<PairingReport>> {
    if ks.windows(2).any(|w| w[1] < w[0]) || ks.is_empty() {
        return Err(Error::InvalidInput(format!("scales must be non-empty and increasing, got {ks:?}")));
    }
    mollifiers
        .iter()
        .map(|m| {
            let entries = ks
                .iter()
                .map(|&k| {
                    let spec = mollified_depauw(m, k);
                    let field = mollify::compile(&spec)?;
                    let dt = quad.dt.unwrap_or_else(|| default_dt(&spec));
                    Ok((k, lagrangian_pairing(field.as_ref(), datum, phi, quad, dt)))
                })
                .collect::<Result<Vec<_>>>()?;
            PairingReport::new(bump_id(&phi.space), m.name(), entries)
        })
        .collect()
}

/// Pairings `⟨ρ̃^k(0, ·), ψ⟩` of the backward solutions with datum `φ` at
/// time `s`, where `ρ̃^k(0, x) = φ(X^k(s, 0, x))`. One report per
/// (mollifier, ψ).
pub fn backward_pairings(
    phi: &SmoothBump,
    s: f64,
    psis: &[SmoothBump],
    mollifiers: &[MollifierSpec],
    ks: &[u32],
    quad: &LagrangianQuadrature,
) -> Result<Vec<PairingReport>> {
    if !(s > 0.0) {
        return Err(Error::InvalidInput(format!("datum time {s} must be positive")));
    }
    let h = 1.0 / quad.per_unit as f64;
    let mut reports = Vec::new();
    for m in mollifiers {
        let mut entries = vec![Vec::new(); psis.len()];
        for &k in ks {
            let spec = mollified_depauw(m, k);
            let field = mollify::compile(&spec)?;
            let dt = quad.dt.unwrap_or_else(|| default_dt(&spec));
            for (psi, out) in psis.iter().zip(entries.iter_mut()) {
                let v: f64 = lattice_cells(&psi.support(), quad.per_unit)
                    .map(|x| {
                        let w = psi.value(x);
                        if w == 0.0 {
                            return 0.0;
                        }
                        let (end, _) = trajectory_integral(field.as_ref(), x, s, dt, |_, _| 0.0);
                        w * phi.value(end)
                    })
                    .sum();
                out.push((k, v * h * h));
            }
        }
        for (psi, e) in psis.iter().zip(entries) {
            reports.push(PairingReport::new(bump_id(psi), m.name(), e)?);
        }
    }
    Ok(reports)
}

pub fn bump_id(b: &SmoothBump) -> String {
    format!("bump({},{};{})", b.center.x1, b.center.x2, b.radius)
}

/// Quadrature for [`duality_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualityQuadrature {
    pub time_panels: usize,
    pub time_order: usize,
    /// Midpoint cells per unit length.
    pub per_unit: usize,
}

impl Default for DualityQuadrature {
    fn default() -> Self {
        Self {
            time_panels: 4,
            time_order: 4,
            per_unit: 128,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

/// Both sides of `∬ ρ(s,x) φ(s,x) dx ds = ∬ ρ̄(x) ρ̃_{φ(s,·),s}(0,x) dx ds`.
///
/// The left side samples the forward solution by backward characteristics
/// on the support of `φ`; the right side samples the backward solutions
/// `ρ̃(0, x) = φ(s, X(s, 0, x))` on the region they can reach.
pub fn duality_check(datum: &Datum, phi: &SpaceTimeBump, flow: &FlowMap, quad: &DualityQuadrature) -> Result<DualityReport> {
    let (a, b) = phi.time_support();
    let (a, b) = (a.max(0.0), b.max(0.0));
    let gl = GaussLegendre::cached(quad.time_order);
    let h = 1.0 / quad.per_unit as f64;
    let support = phi.space.support();
    let reach = grow(&support, flow.speed_bound() * b);
    let mut nodes = Vec::new();
    let step = (b - a) / quad.time_panels as f64;
    for p in 0..quad.time_panels {
        let lo = a + p as f64 * step;
        for (x, w) in gl.nodes.iter().zip(&gl.weights) {
            nodes.push((lo + 0.5 * step * (x + 1.0), 0.5 * step * w));
        }
    }
    let mut lhs = 0.0;
    for &(s, w) in &nodes {
        let mut l = 0.0;
        for x in lattice_cells(&support, quad.per_unit) {
            let f = phi.value(s, x);
            if f != 0.0 {
                l += f * datum.eval(flow.apply(0.0, s, x)?);
            }
        }
        lhs += w * l * h * h;
    }
    // one forward trajectory per starting point serves every time node
    let mut rhs = 0.0;
    for y in lattice_cells(&reach, quad.per_unit) {
        let d = datum.eval(y);
        if d == 0.0 {
            continue;
        }
        let (mut t, mut x) = (0.0, y);
        let mut r = 0.0;
        for &(s, w) in &nodes {
            x = flow.apply(s, t, x)?;
            t = s;
            r += w * phi.value(s, x);
        }
        rhs += d * r;
    }
    rhs *= h * h;
    Ok(DualityReport {
        lhs,
        rhs,
        gap: (lhs - rhs).abs(),
    })
}

/// The two solutions built from a common datum.
#[derive(Debug, Clone)]
pub struct NonUniqueness {
    /// Construction level `K`: the field is switched off before `2^{-K}`.
    pub level: u32,
    /// `ρ̄ᵢ`, localized on `ζᵢ(2^{-K}, ·)`.
    pub data: [DyadicDensity; 2],
    pub solutions: [Solution; 2],
    /// Bound `M` with `|ρᵢ| ≤ M ζᵢ` for `t ≥ 2^{-K}`.
    pub bound: f64,
}

/// Solutions `ρ₁ ≠ ρ₂` along the Depauw field truncated before `2^{-K}`,
/// both with the local averages of `ρ̄` on `S¹_{K-1}` squares.
pub fn nonuniqueness_construct(datum: &DyadicDensity, level: u32) -> Result<NonUniqueness> {
    if level == 0 || level >= crate::geometry::DEFAULT_MAX_LEVEL {
        return Err(Error::LevelCap {
            time: dyadic_side(level),
            max_level: crate::geometry::DEFAULT_MAX_LEVEL - 1,
        });
    }
    let start = dyadic_side(level);
    let build = |index| {
        approx_sequence(&ApproxSequenceSpec {
            datum: datum.clone(),
            localizer: Localizer::Zeta { index },
            level: level - 1,
        })
    };
    let data = [build(ZetaIndex::One)?, build(ZetaIndex::Two)?];
    let solutions = data.clone().map(|d| Solution::Sampled {
        flow: FlowMap::exact_truncated(start),
        datum: Datum::Dyadic(d),
        datum_time: start,
    });
    Ok(NonUniqueness {
        level,
        data,
        solutions,
        bound: 2.0 * datum.sup_norm() * (1.0 + 1e-9),
    })
}

impl NonUniqueness {
    /// `ρᵢ(t, ·)` at a dyadic time `t ≥ 2^{-K}`, exactly.
    pub fn density_at(&self, i: ZetaIndex, t: f64) -> Result<DyadicDensity> {
        let m = dyadic_exponent(t)?;
        if m > self.level {
            return Err(Error::InvalidInput(format!("time {t} precedes the construction time 2^-{}", self.level)));
        }
        let d = match i {
            ZetaIndex::One => &self.data[0],
            ZetaIndex::Two => &self.data[1],
        };
        evolve_dyadic(d, dyadic_side(self.level), t)
    }

    /// `|⟨ρ₁(t) − ρ₂(t), φ⟩|` at a dyadic time, exactly for indicators.
    pub fn distinctness(&self, phi: &TestFunction, t: f64) -> Result<f64> {
        let a = self.density_at(ZetaIndex::One, t)?;
        let b = self.density_at(ZetaIndex::Two, t)?;
        Ok((a.pair(phi)? - b.pair(phi)?).abs())
    }
}

/// `|⟨ρ₁(t,·) − ρ₂(t,·), φ⟩|` by one sample per cell of the two solutions.
/// Samples sit off the cell diagonals, where the flow fixes points and the
/// solutions take boundary values.
pub fn distinctness_metric(a: &Solution, b: &Solution, phi: &TestFunction, t: f64, per_unit: usize) -> Result<f64> {
    let h = 1.0 / per_unit as f64;
    let mut sum = 0.0;
    for x in lattice_points(&phi.support(), per_unit, (0.5, 0.25)) {
        let w = phi.value(x);
        if w != 0.0 {
            sum += w * (a.eval(t, x)? - b.eval(t, x)?);
        }
    }
    Ok((sum * h * h).abs())
}

/// The `S¹_l` squares inside the window.
pub fn window_squares(window: &Window, level: u32) -> impl Iterator<Item = DyadicSquare> {
    let n = window.cells_per_side(level) as i64;
    (-n / 2..n / 2).flat_map(move |j| (-n / 2..n / 2).map(move |i| DyadicSquare::new(Family::S1, level, (i, j))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testfn::Profile;

    fn w(r: f64) -> Window {
        Window::new(r).unwrap()
    }

    #[test]
    fn pairing_examples() {
        for m in 1..6u32 {
            let z = zeta_density(ZetaIndex::One, m, w(2.0)).unwrap();
            for l in 0..m {
                let s = DyadicSquare::s1(l, -1, 0);
                let v = pair(&z, &TestFunction::DyadicIndicator { square: s }).unwrap();
                assert_eq!(v, s.area() / 2.0);
            }
        }
        let c = DyadicDensity::constant(3.0, 4, w(1.0)).unwrap();
        let s = DyadicSquare::s1(2, 1, -2);
        assert_eq!(pair(&c, &TestFunction::DyadicIndicator { square: s }).unwrap(), 3.0 * s.area());
        let z1 = zeta_density(ZetaIndex::One, 0, w(1.0)).unwrap();
        let unit = TestFunction::DyadicIndicator { square: DyadicSquare::s1(0, 0, 0) };
        // ζ₁(1, ·) is constant on unit squares, 0 on [0,1)²; the quarter-cell count works at level 1
        let z1_fine = evolve_dyadic(&zeta_density(ZetaIndex::One, 1, w(1.0)).unwrap(), 0.5, 1.0).unwrap();
        assert_eq!(pair(&z1, &unit).unwrap(), pair(&z1_fine, &unit).unwrap());
        let far = TestFunction::DyadicIndicator { square: DyadicSquare::s1(0, 5, 0) };
        assert!(matches!(pair(&c, &far), Err(Error::Window(_))));
    }

    #[test]
    fn bump_pairing_against_constant() {
        let c = DyadicDensity::constant(2.0, 3, w(2.0)).unwrap();
        let b = SmoothBump::new(Point2::new(0.3, -0.2), 0.5, 1.0, Profile::Smooth).unwrap();
        let v = pair(&c, &TestFunction::SmoothBump(b)).unwrap();
        assert!((v - 2.0 * b.integral()).abs() < 1e-6, "{v}");
    }

    #[test]
    fn local_average_examples() {
        for k in 0..6u32 {
            for i in [ZetaIndex::One, ZetaIndex::Two] {
                let z = zeta_density(i, k + 1, w(2.0)).unwrap();
                for s in window_squares(&w(2.0), k) {
                    assert_eq!(local_average(&z, &s).unwrap(), 0.5);
                }
            }
        }
        let q = DyadicDensity::from_fn(3, w(1.0), Continuation::Zero, |s| f64::from(u8::from(s.index == (2, 2)))).unwrap();
        assert_eq!(local_average(&q, &DyadicSquare::s1(2, 1, 1)).unwrap(), 0.25);
        assert!(local_average(&q, &DyadicSquare::s1(4, 1, 1)).is_err());
    }

    #[test]
    fn approx_sequence_examples() {
        let window = w(1.0);
        let c = DyadicDensity::constant(0.75, 0, window).unwrap();
        for k in 0..4 {
            let out = approx_sequence(&ApproxSequenceSpec {
                datum: c.clone(),
                localizer: Localizer::Zeta { index: ZetaIndex::Two },
                level: k,
            })
            .unwrap();
            let f = zeta_density(ZetaIndex::Two, k + 1, window).unwrap();
            for s in window_squares(&window, k + 1) {
                assert_eq!(out.value(s.index.0, s.index.1), 1.5 * f.value(s.index.0, s.index.1));
            }
        }
        let ind = DyadicDensity::from_fn(0, window, Continuation::Zero, |s| f64::from(u8::from(s.index == (0, 0)))).unwrap();
        let out = approx_sequence(&ApproxSequenceSpec {
            datum: ind,
            localizer: Localizer::Zeta { index: ZetaIndex::One },
            level: 0,
        })
        .unwrap();
        let f = zeta_density(ZetaIndex::One, 1, window).unwrap();
        for s in window_squares(&window, 1) {
            let inside = s.index.0 >= 0 && s.index.1 >= 0;
            let expect = if inside { 2.0 * f.value(s.index.0, s.index.1) } else { 0.0 };
            assert_eq!(out.value(s.index.0, s.index.1), expect);
        }
    }

    #[test]
    fn bad_localizer_is_rejected() {
        let window = w(1.0);
        let f = DyadicDensity::from_fn(1, window, Continuation::Zero, |s| f64::from(u8::from(s.index.0 >= 0))).unwrap();
        let err = approx_sequence(&ApproxSequenceSpec {
            datum: DyadicDensity::constant(1.0, 0, window).unwrap(),
            localizer: Localizer::Custom { density: f },
            level: 0,
        });
        assert!(matches!(err, Err(Error::Localizer { .. })));
    }

    #[test]
    fn report_statistics() {
        let r = PairingReport::new("phi", "tensor-bump", vec![(2, 0.0), (4, 1.0), (8, 1.5), (16, 1.25)]).unwrap();
        assert_eq!(r.limit_estimate, 1.25);
        assert_eq!(r.spread, 0.5);
        assert_eq!(r.entry(8), Some(1.5));
        assert!(r.csv_rows("selection").starts_with("selection,tensor-bump,2,phi,0\n"));
    }

    fn time_mass(phi: &SpaceTimeBump) -> f64 {
        let (a, b) = phi.time_support();
        let n = 20000;
        let h = (b - a) / n as f64;
        (0..n).map(|i| phi.time_factor(a + (i as f64 + 0.5) * h).0).sum::<f64>() * h
    }

    #[test]
    fn duality_with_constant_datum() {
        let phi = SpaceTimeBump::new(0.3, 0.9, SmoothBump::new(Point2::new(0.1, 0.2), 0.3, 1.0, Profile::Smooth).unwrap()).unwrap();
        let flow = FlowMap::exact_truncated(1.0 / 64.0);
        let r = duality_check(&Datum::Constant { value: 1.0 }, &phi, &flow, &DualityQuadrature::default()).unwrap();
        // both sides are ∬φ; the right side samples the kinked map φ(s, X(s, 0, ·))
        let exact = phi.space.integral() * time_mass(&phi);
        assert!(r.gap < 1e-3 && (r.lhs - exact).abs() < 1e-3 * exact, "{r:?} {exact}");
    }

    #[test]
    fn nonuniqueness_from_half() {
        let window = w(1.0);
        let half = DyadicDensity::constant(0.5, 0, window).unwrap();
        let nu = nonuniqueness_construct(&half, 3).unwrap();
        for (i, d) in [ZetaIndex::One, ZetaIndex::Two].into_iter().zip(&nu.data) {
            let z = zeta_density(i, 3, window).unwrap();
            assert!(window_squares(&window, 3).all(|s| d.value(s.index.0, s.index.1) == z.value(s.index.0, s.index.1)));
            // at t = 2^{-m} the averages over S¹_l are 1/2 for every l < m
            for m in 1..=3u32 {
                let later = nu.density_at(i, dyadic_side(m)).unwrap();
                for l in 0..m {
                    for s in window_squares(&window, l) {
                        assert_eq!(local_average(&later, &s).unwrap(), 0.5);
                    }
                }
            }
        }
        let s = DyadicSquare::s1(1, 0, 0);
        let v = nu.distinctness(&TestFunction::DyadicIndicator { square: s }, 0.5).unwrap();
        assert_eq!(v, s.area());
        let zero = nonuniqueness_construct(&DyadicDensity::constant(0.0, 0, window).unwrap(), 3).unwrap();
        assert!(zero.data.iter().all(|d| d.sup_norm() == 0.0));
    }
}
