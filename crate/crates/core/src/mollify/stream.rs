//! Tabulated stream function of `u ⋆ Ψ_m`, with
//! `Ψ_m(y) = m^2 ψ1(m y1) ψ2(m y2)`.
//!
//! `u = ∇^⊥U` with `U = 2r^2` on filled cells (`r` the `L∞` distance to the
//! centre) and `U = 1/2` on empty cells, so `u ⋆ Ψ_m = ∇^⊥(U ⋆ Ψ_m)`. The
//! smoothed stream function `Φ_m = U ⋆ Ψ_m` is Λ-periodic, hence periodic
//! on `[0, 2)²`; it is sampled there and interpolated by a periodic bicubic
//! spline. The interpolant is `C^2`, so the interpolated field is `C^1` and
//! exactly divergence-free, and RK4 flow maps along it are `C^1`.
//!
//! Node values come from one-dimensional integrals per filled cell. Write
//! `V = 1/2 - 2 max(z1^2, z2^2)` on the centred cell, so `Φ = 1/2 - Σ V ⋆ Ψ`.
//! On the horizontal bowtie `|z2| < |z1|` the inner `z2`-integral is a
//! difference of kernel CDFs; after one integration by parts (`V` vanishes
//! on the cell boundary) the derivatives reduce to the same shape.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::BumpFactor;
use crate::error::{Error, Result};
use crate::geometry::{Point2, Vec2};
use crate::quadrature::{split_nodes, EndKind, GaussLegendre};

/// Kernel scales below this are dropped by [`super::MollifiedField`]. At
/// `m = 1/8` the smoothed field is below `5e-5` in magnitude and it decays
/// by more than an order of magnitude per halving of `m`.
pub const MIN_TABLE_SCALE: f64 = 0.125;

/// Table nodes per kernel width `1/m`, with a floor per unit length that is
/// lower for wide (small-amplitude) kernels.
const NODES_PER_KERNEL_WIDTH: f64 = 24.0;
const MIN_NODES_PER_UNIT: usize = 32;
const MIN_NODES_PER_UNIT_WIDE: usize = 16;
const PANEL_ORDER: usize = 8;
/// Panel length in the mapped quadrature variable.
const MAX_DV: f64 = 0.8;

/// Scaled one-dimensional kernel `K(s) = m ψ(m s)` with CDF `Q(s)`.
#[derive(Debug, Clone, Copy)]
struct Kernel {
    factor: BumpFactor,
    m: f64,
}

impl Kernel {
    #[inline]
    fn density(&self, s: f64) -> f64 {
        self.m * self.factor.density(self.m * s)
    }

    #[inline]
    fn cdf(&self, s: f64) -> f64 {
        self.factor.cdf(self.m * s)
    }

    fn support(&self) -> (f64, f64) {
        let (a, b) = self.factor.support();
        (a / self.m, b / self.m)
    }
}

/// Node data `(Φ, ∂₁Φ, ∂₂Φ, ∂₁₂Φ)` together with the second route to
/// `∂₁₂Φ` through the vertical bowtie.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct NodeValues {
    pub phi: f64,
    pub d1: f64,
    pub d2: f64,
    pub d12: f64,
    pub d12_alt: f64,
}

/// Calls `f(z, weight)` for a rule on `[-1/2, 1/2] ∩ kz_support`
/// restricted to `|z| ∈ flat` (ends may be infinite), split at `z = 0` and
/// at the graded `breaks`. The kernel support ends and finite ends of
/// `flat` are flat zeros of the integrand.
fn integrate_sided<F: FnMut(f64, f64)>(
    gl: &GaussLegendre,
    kz_support: (f64, f64),
    flat: (f64, f64),
    breaks: &[f64],
    mut f: F,
) {
    use EndKind::*;
    let inner = flat.0.max(0.0);
    if flat.1 <= inner {
        return;
    }
    let inner_kind = if flat.0 > 0.0 { Flat } else { Graded };
    for (a, b) in [((inner, inner_kind), (flat.1, Flat)), ((-flat.1, Flat), (-inner, inner_kind))] {
        let lo = [(kz_support.0, Flat), a, (-0.5, Graded)]
            .into_iter()
            .fold((f64::NEG_INFINITY, Regular), |m, c| if c.0 > m.0 { c } else { m });
        let hi = [(kz_support.1, Flat), b, (0.5, Graded)]
            .into_iter()
            .fold((f64::INFINITY, Regular), |m, c| if c.0 < m.0 { c } else { m });
        if !(hi.0 > lo.0) {
            continue;
        }
        // a kernel end just beyond a cut end is a near singularity
        let near = 2.0 * (hi.0 - lo.0);
        let lo_kind = if lo.1 == Graded && lo.0 - kz_support.0 > near { Regular } else { lo.1 };
        let hi_kind = if hi.1 == Graded && kz_support.1 - hi.0 > near { Regular } else { hi.1 };
        for (z, w) in split_nodes(gl, lo.0, hi.0, (lo_kind, hi_kind), breaks, Graded, MAX_DV) {
            f(z, w);
        }
    }
}

/// Contribution of one bowtie of the centred filled cell, integrating along
/// its long axis `z` with kernel `kz` and cross kernel `kc`.
/// Returns `(∫V Ψ, ∂_long Φ, ∂₁₂Φ)` for `a_long`, `a_cross` the node offsets.
fn bowtie(gl: &GaussLegendre, kz: &Kernel, kc: &Kernel, a_long: f64, a_cross: f64) -> [f64; 3] {
    let (zlo, zhi) = kz.support();
    // z with a_long - z inside the kernel support
    let support = (a_long - zhi, a_long - zlo);
    if support.1 <= -0.5 || support.0 >= 0.5 {
        return [0.0; 3];
    }
    let (clo, chi) = kc.support();
    let e1 = (a_cross - clo).abs();
    let e2 = (a_cross - chi).abs();
    let breaks = [e1, -e1, e2, -e2];
    // [a_cross - |z|, a_cross + |z|] meets the cross support iff |z| >= dmin
    let dmin = (clo - a_cross).max(a_cross - chi).max(0.0);
    let mut phi = 0.0;
    let mut d_long = 0.0;
    integrate_sided(gl, support, (dmin, f64::INFINITY), &breaks, |z, w| {
        let k = w * kz.density(a_long - z);
        let az = z.abs();
        let dq = kc.cdf(a_cross + az) - kc.cdf(a_cross - az);
        phi += (0.5 - 2.0 * z * z) * k * dq;
        d_long += 4.0 * z * k * dq;
    });
    let mut d12 = 0.0;
    integrate_sided(gl, support, (clo - a_cross, chi - a_cross), &[], |z, w| {
        d12 += 4.0 * z * w * kz.density(a_long - z) * kc.density(a_cross + z.abs());
    });
    integrate_sided(gl, support, (a_cross - chi, a_cross - clo), &[], |z, w| {
        d12 -= 4.0 * z * w * kz.density(a_long - z) * kc.density(a_cross - z.abs());
    });
    [phi, d_long, d12]
}

pub(crate) fn node_values(f1: BumpFactor, f2: BumpFactor, m: f64, x: Point2) -> NodeValues {
    let gl = GaussLegendre::cached(PANEL_ORDER);
    let k1 = Kernel { factor: f1, m };
    let k2 = Kernel { factor: f2, m };
    let (lo1, hi1) = k1.support();
    let (lo2, hi2) = k2.support();
    let c1_min = (x.x1 - hi1 - 0.5).ceil() as i64;
    let c1_max = (x.x1 - lo1 + 0.5).floor() as i64;
    let c2_min = (x.x2 - hi2 - 0.5).ceil() as i64;
    let c2_max = (x.x2 - lo2 + 0.5).floor() as i64;
    let mut v = [0.0f64; 5];
    for c1 in c1_min..=c1_max {
        for c2 in c2_min..=c2_max {
            if (c1 + c2).rem_euclid(2) != 0 {
                continue;
            }
            let a1 = x.x1 - c1 as f64;
            let a2 = x.x2 - c2 as f64;
            let h = bowtie(&gl, &k1, &k2, a1, a2);
            let w = bowtie(&gl, &k2, &k1, a2, a1);
            v[0] += h[0] + w[0];
            v[1] += h[1];
            v[2] += w[1];
            v[3] += h[2];
            v[4] += w[2];
        }
    }
    NodeValues {
        phi: 0.5 - v[0],
        d1: v[1],
        d2: v[2],
        d12: v[3],
        d12_alt: v[4],
    }
}

/// Periodic bicubic spline of `Φ_m` on `[0, 2)²`.
#[derive(Debug)]
pub struct StreamTable {
    m: f64,
    /// Nodes per unit length.
    n: usize,
    /// Spline coefficients at nodes `-1..2n + 2` on both axes, row-major,
    /// so that every evaluation stencil is contiguous.
    coef: Vec<f64>,
}

type CacheKey = [u64; 5];
type CacheSlot = Arc<OnceLock<Arc<StreamTable>>>;

impl StreamTable {
    pub fn build(f1: BumpFactor, f2: BumpFactor, m: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidInput(format!("kernel scale {m} must be positive")));
        }
        let floor = if m < 1.0 { MIN_NODES_PER_UNIT_WIDE } else { MIN_NODES_PER_UNIT };
        let n = ((NODES_PER_KERNEL_WIDTH * m).ceil() as usize).max(floor);
        Ok(Self::with_resolution(f1, f2, m, n))
    }

    fn with_resolution(f1: BumpFactor, f2: BumpFactor, m: f64, n: usize) -> Self {
        let h = 1.0 / n as f64;
        let size = 2 * n;
        let mut coef = vec![0.0; size * size];
        // the upper half follows from the shift by (1, 1)
        for j in 0..n {
            for i in 0..size {
                let phi = node_values(f1, f2, m, Point2::new(i as f64 * h, j as f64 * h)).phi;
                coef[j * size + i] = phi;
                coef[(j + n) * size + (i + n) % size] = phi;
            }
        }
        let mut line = vec![0.0; size];
        for j in 0..size {
            spline_prefilter(&mut coef[j * size..(j + 1) * size]);
        }
        for i in 0..size {
            for j in 0..size {
                line[j] = coef[j * size + i];
            }
            spline_prefilter(&mut line);
            for j in 0..size {
                coef[j * size + i] = line[j];
            }
        }
        let padded = size + 3;
        let wrap = |i: usize| (i + size - 1) % size;
        let coef = (0..padded)
            .flat_map(|j| (0..padded).map(move |i| (i, j)))
            .map(|(i, j)| coef[wrap(j) * size + wrap(i)])
            .collect();
        Self { m, n, coef }
    }

    /// Shared table for `(ψ1, ψ2, m)`; concurrent callers for the same key
    /// wait for a single build.
    pub fn cached(f1: BumpFactor, f2: BumpFactor, m: f64) -> Result<Arc<StreamTable>> {
        static CACHE: OnceLock<Mutex<HashMap<CacheKey, CacheSlot>>> = OnceLock::new();
        let key = [
            f1.center.to_bits(),
            f1.half_width.to_bits(),
            f2.center.to_bits(),
            f2.half_width.to_bits(),
            m.to_bits(),
        ];
        let slot = {
            let mut guard = CACHE
                .get_or_init(|| Mutex::new(HashMap::new()))
                .lock()
                .expect("stream table cache poisoned");
            guard.entry(key).or_default().clone()
        };
        if let Some(t) = slot.get() {
            return Ok(t.clone());
        }
        let table = Arc::new(Self::build(f1, f2, m)?);
        Ok(slot.get_or_init(|| table).clone())
    }

    pub fn scale(&self) -> f64 {
        self.m
    }

    pub fn nodes_per_unit(&self) -> usize {
        self.n
    }

    /// Interpolated `(Φ, ∂₁Φ, ∂₂Φ)`.
    fn interpolate(&self, p: Point2) -> (f64, f64, f64) {
        let size = 2 * self.n;
        let padded = size + 3;
        let nf = self.n as f64;
        let u = p.x1.rem_euclid(2.0) * nf;
        let v = p.x2.rem_euclid(2.0) * nf;
        // rem_euclid may round up to the period itself
        let i = (u.floor() as usize).min(size - 1);
        let j = (v.floor() as usize).min(size - 1);
        let (bs, dbs) = bspline(u - i as f64);
        let (bt, dbt) = bspline(v - j as f64);
        let mut val = 0.0;
        let mut dx = 0.0;
        let mut dy = 0.0;
        for b in 0..4 {
            let row = &self.coef[(j + b) * padded + i..][..4];
            let (mut r, mut dr) = (0.0, 0.0);
            for a in 0..4 {
                let c = row[a];
                r += bs[a] * c;
                dr += dbs[a] * c;
            }
            val += bt[b] * r;
            dx += bt[b] * dr;
            dy += dbt[b] * r;
        }
        (val, dx * nf, dy * nf)
    }

    /// Smoothed stream function `Φ_m(p)`.
    pub fn stream(&self, p: Point2) -> f64 {
        self.interpolate(p).0
    }

    /// `(u ⋆ Ψ_m)(p) = (-∂₂Φ_m, ∂₁Φ_m)`.
    #[inline]
    pub fn velocity(&self, p: Point2) -> Vec2 {
        let (_, dx, dy) = self.interpolate(p);
        Vec2::new(-dy, dx)
    }
}

/// Uniform cubic B-spline weights of the nodes `-1, 0, 1, 2` at local
/// coordinate `s ∈ [0, 1)`, with their derivatives in `s`.
#[inline]
fn bspline(s: f64) -> ([f64; 4], [f64; 4]) {
    let r = 1.0 - s;
    let s2 = s * s;
    let s3 = s2 * s;
    let b = [
        r * r * r / 6.0,
        (3.0 * s3 - 6.0 * s2 + 4.0) / 6.0,
        (-3.0 * s3 + 3.0 * s2 + 3.0 * s + 1.0) / 6.0,
        s3 / 6.0,
    ];
    let d = [-0.5 * r * r, 1.5 * s2 - 2.0 * s, -1.5 * s2 + s + 0.5, 0.5 * s2];
    (b, d)
}

/// Replaces periodic samples `f` by the cubic spline coefficients `c`
/// with `(c[i-1] + 4 c[i] + c[i+1]) / 6 = f[i]` (causal and anticausal
/// recursive filters with pole `√3 - 2`).
fn spline_prefilter(c: &mut [f64]) {
    let n = c.len();
    let z = 3f64.sqrt() - 2.0;
    let scale = 1.0 / (1.0 - z.powi(n as i32));
    let mut acc = 0.0;
    let mut zk = 1.0;
    for k in 0..n {
        acc += zk * c[(n - k) % n];
        zk *= z;
    }
    c[0] = acc * scale;
    for i in 1..n {
        c[i] += z * c[i - 1];
    }
    let mut acc = 0.0;
    let mut zk = 1.0;
    for k in 0..n {
        acc += zk * c[(n - 1 + k) % n];
        zk *= z;
    }
    let last = -z * acc * scale;
    c[n - 1] = last;
    for i in (0..n - 1).rev() {
        c[i] = z * (c[i + 1] - c[i]);
    }
    for v in c.iter_mut() {
        *v *= 6.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{eval_u, stream_u};

    fn tensor(m: f64) -> (BumpFactor, BumpFactor, f64) {
        (BumpFactor::new(0.0, 1.0), BumpFactor::new(0.0, 1.0), m)
    }

    /// `U ⋆ Ψ` by nested quadrature in `y2` (outer) and `y1` (inner),
    /// splitting the inner rule at every kink of `y1 ↦ U(x - y/m)`: cell
    /// edges and both diagonals of each filled cell.
    fn brute_phi(f1: BumpFactor, f2: BumpFactor, m: f64, x: Point2) -> f64 {
        let dv = 0.05;
        use EndKind::*;
        let gl = GaussLegendre::new(8);
        let (a1, b1) = f1.support();
        let (a2, b2) = f2.support();
        // outer kinks: cell edges and centre lines in y2
        let outer: Vec<f64> = (-80..80).map(|n| m * (x.x2 - 0.5 * n as f64)).collect();
        let mut acc = 0.0;
        for (y2, w2) in split_nodes(&gl, a2, b2, (Flat, Flat), &outer, Regular, dv) {
            let z2 = x.x2 - y2 / m;
            let c2 = (z2 + 0.5).floor();
            let d2 = z2 - c2;
            let mut inner = Vec::new();
            for n in -40..40 {
                let c1 = n as f64;
                // cell edges, and diagonals z1 - c1 = ±d2 of this row
                for z1 in [c1 + 0.5, c1 + d2, c1 - d2] {
                    inner.push(m * (x.x1 - z1));
                }
            }
            let row: f64 = split_nodes(&gl, a1, b1, (Flat, Flat), &inner, Regular, dv)
                .into_iter()
                .map(|(y1, w1)| w1 * f1.density(y1) * stream_u(x - Point2::new(y1, y2) / m))
                .sum();
            acc += w2 * f2.density(y2) * row;
        }
        acc
    }

    #[test]
    fn prefilter_inverts_the_spline_stencil() {
        let f: Vec<f64> = (0..37).map(|i| ((i * 7919) % 101) as f64 / 13.0 - 3.0).collect();
        let mut c = f.clone();
        spline_prefilter(&mut c);
        let n = c.len();
        for i in 0..n {
            let back = (c[(i + n - 1) % n] + 4.0 * c[i] + c[(i + 1) % n]) / 6.0;
            assert!((back - f[i]).abs() < 1e-12, "{i}: {back} vs {}", f[i]);
        }
    }

    #[test]
    fn node_values_match_brute_force_and_routes_agree() {
        let shifted = (BumpFactor::new(0.25, 0.75), BumpFactor::new(0.0, 0.6));
        for (f1, f2, m) in [tensor(2.0), tensor(0.5), (shifted.0, shifted.1, 3.0)] {
            for x in [Point2::new(0.1, 0.2), Point2::new(0.43, -0.31), Point2::new(1.2, 0.7)] {
                let nv = node_values(f1, f2, m, x);
                let brute = brute_phi(f1, f2, m, x);
                assert!((nv.phi - brute).abs() < 1e-8, "{x:?} {} {brute}", nv.phi);
                assert!((nv.d12 - nv.d12_alt).abs() < 1e-9, "{nv:?}");
                // derivatives against differences of the node values
                let h = 1e-3;
                let at = |p: Point2| node_values(f1, f2, m, p).phi;
                let fd1 = (at(x + Point2::new(h, 0.0)) - at(x - Point2::new(h, 0.0))) / (2.0 * h);
                let fd2 = (at(x + Point2::new(0.0, h)) - at(x - Point2::new(0.0, h))) / (2.0 * h);
                assert!((fd1 - nv.d1).abs() < 1e-4 && (fd2 - nv.d2).abs() < 1e-4, "{nv:?} {fd1} {fd2}");
                let d1 = |p: Point2| node_values(f1, f2, m, p).d1;
                let fd12 = (d1(x + Point2::new(0.0, h)) - d1(x - Point2::new(0.0, h))) / (2.0 * h);
                assert!((fd12 - nv.d12).abs() < 1e-4, "{nv:?} {fd12}");
            }
        }
    }

    #[test]
    fn large_scale_table_approaches_u() {
        let (f1, f2, m) = tensor(16.0);
        let t = StreamTable::build(f1, f2, m).unwrap();
        // deep inside a filled cell, away from diagonals
        let p = Point2::new(0.3, 0.05);
        assert!((t.velocity(p) - eval_u(p)).norm() < 1e-9, "{:?}", t.velocity(p));
        let p = Point2::new(1.3, 0.05);
        assert!(t.velocity(p).norm() < 1e-9);
    }

    #[test]
    fn periodic_and_continuous_across_domain_edges() {
        let (f1, f2, m) = tensor(1.0);
        let t = StreamTable::build(f1, f2, m).unwrap();
        let p = Point2::new(0.37, 0.81);
        for s in [Point2::new(1.0, 1.0), Point2::new(2.0, 0.0), Point2::new(-3.0, 5.0)] {
            assert!((t.velocity(p + s) - t.velocity(p)).norm() < 1e-12);
        }
        let e = 1e-12;
        for q in [Point2::new(2.0, 0.4), Point2::new(0.6, 1.0), Point2::new(0.0, 0.0)] {
            let a = t.velocity(q - Point2::new(e, e));
            let b = t.velocity(q + Point2::new(e, e));
            assert!((a - b).norm() < 1e-9, "{q:?}");
        }
        // reductions that round up to the period
        let tiny = Point2::new(-1e-18, -1e-18);
        assert!((t.velocity(tiny) - t.velocity(Point2::ZERO)).norm() < 1e-12);
    }

    #[test]
    fn small_scales_are_negligible() {
        let f = BumpFactor::new(0.0, 1.0);
        let worst = |m: f64| {
            let mut w = 0.0f64;
            for i in 0..8 {
                for j in 0..4 {
                    let nv = node_values(f, f, m, Point2::new(i as f64 / 4.0 + 0.05, j as f64 / 4.0 + 0.1));
                    w = w.max(nv.d1.abs()).max(nv.d2.abs());
                }
            }
            w
        };
        let at_min = worst(MIN_TABLE_SCALE);
        let below = worst(MIN_TABLE_SCALE / 2.0);
        assert!(at_min < 5e-5, "{at_min}");
        assert!(below < at_min / 10.0, "{below}");
    }

    #[test]
    fn interpolated_velocity_converges_at_third_order() {
        let (f1, f2, m) = tensor(4.0);
        let pts: Vec<Point2> = (0..60)
            .map(|i| Point2::new((0.0301 * i as f64) % 2.0, (0.01731 * i as f64) % 1.0))
            .collect();
        let exact: Vec<Vec2> = pts
            .iter()
            .map(|&p| {
                let nv = node_values(f1, f2, m, p);
                Vec2::new(-nv.d2, nv.d1)
            })
            .collect();
        let worst = |n: usize| {
            let t = StreamTable::with_resolution(f1, f2, m, n);
            pts.iter().zip(&exact).map(|(&p, &v)| (t.velocity(p) - v).norm()).fold(0.0, f64::max)
        };
        let (coarse, fine) = (worst(64), worst(128));
        assert!(fine < 2e-5 && coarse > 5.0 * fine, "{coarse} {fine}");
    }
}
