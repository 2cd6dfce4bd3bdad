//! Quadrature rules and small convex-polygon helpers.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::geometry::Point2;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess followed by Newton on P_n
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Shared, lazily built rule of order `n`.
    pub fn cached(n: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("quadrature cache poisoned");
        guard
            .entry(n)
            .or_insert_with(|| Arc::new(GaussLegendre::new(n)))
            .clone()
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Integrate `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Integrate over `[a, b]` split into `panels` equal pieces.
    pub fn integrate_panels<F: FnMut(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        panels: usize,
        mut f: F,
    ) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|i| {
                let lo = a + h * i as f64;
                self.integrate(lo, lo + h, &mut f)
            })
            .sum()
    }
}

/// Legendre polynomial `P_n(x)` and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Double-exponential (tanh-sinh) quadrature on `[a, b]`.
///
/// Robust against endpoint behaviour such as the essential singularity of
/// smooth bump profiles at the edge of their support. Halves the step until
/// two successive estimates agree to `tol` (absolute + relative).
pub fn tanh_sinh<F: Fn(f64) -> f64>(a: f64, b: f64, tol: f64, f: F) -> Result<f64> {
    use std::f64::consts::FRAC_PI_2;
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let tmax = 3.5;
    let eval = |t: f64| -> f64 {
        let s = FRAC_PI_2 * t.sinh();
        let ch = s.cosh();
        let w = FRAC_PI_2 * t.cosh() / (ch * ch);
        // 1 - |tanh s| without cancellation
        let gap = (-s.abs()).exp() / ch;
        if w == 0.0 || gap == 0.0 {
            return 0.0;
        }
        let y = mid + half * s.signum() * (1.0 - gap);
        let v = f(y);
        if v.is_finite() {
            v * w
        } else {
            0.0
        }
    };
    let mut h = 0.5;
    let mut sum = eval(0.0);
    let mut t = h;
    while t <= tmax {
        sum += eval(t) + eval(-t);
        t += h;
    }
    let mut prev = sum * h * half;
    for _ in 0..12 {
        h *= 0.5;
        let mut t = h;
        while t <= tmax {
            sum += eval(t) + eval(-t);
            t += 2.0 * h;
        }
        let est = sum * h * half;
        if (est - prev).abs() <= tol * (1.0 + est.abs()) {
            return Ok(est);
        }
        prev = est;
    }
    Err(Error::InvalidInput(format!(
        "tanh-sinh quadrature on [{a}, {b}] did not reach tolerance {tol}"
    )))
}

/// How an integrand behaves at one end of a quadrature piece.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndKind {
    /// Smooth up to the end.
    Regular,
    /// Vanishes with all derivatives, like a bump at the edge of its
    /// support. Nodes cluster exponentially; the last `0.2%` of the piece
    /// is not sampled.
    Flat,
    /// Smooth but not analytic (for instance the onset of a bump tail);
    /// panels are refined geometrically toward the end.
    Graded,
}

/// Range of the mapped variable for flat ends: `1 - tanh(3.2) < 2e-3`.
const FLAT_LIMIT: f64 = 3.2;
const GRADING_LEVELS: usize = 8;

/// Append Gauss–Legendre nodes `(x, weight)` for `[lo, hi]`, using panels
/// no longer than `max_dv` in a mapped variable chosen by the end
/// behaviour. Regular pieces map to `v ∈ [0, 1]`, pieces with flat ends to
/// a `tanh` variable of length 3.2 (one flat end) or 6.4 (two).
pub fn piece_nodes(
    gl: &GaussLegendre,
    lo: f64,
    hi: f64,
    ends: (EndKind, EndKind),
    max_dv: f64,
    out: &mut Vec<(f64, f64)>,
) {
    if !(hi > lo) {
        return;
    }
    let len = hi - lo;
    let mid = 0.5 * (lo + hi);
    let flat_lo = ends.0 == EndKind::Flat;
    let flat_hi = ends.1 == EndKind::Flat;
    // map v -> (x, dx/dv) and the v range; `rev` marks a map whose v = 0
    // end sits at `hi`
    let (v0, v1, rev) = match (flat_lo, flat_hi) {
        (true, true) => (-FLAT_LIMIT, FLAT_LIMIT, false),
        (false, true) => (0.0, FLAT_LIMIT, false),
        (true, false) => (0.0, FLAT_LIMIT, true),
        (false, false) => (0.0, 1.0, false),
    };
    let map = |v: f64| -> (f64, f64) {
        match (flat_lo, flat_hi) {
            (true, true) => {
                let t = v.tanh();
                (mid + 0.5 * len * t, 0.5 * len * (1.0 - t * t))
            }
            (false, true) => {
                let t = v.tanh();
                (lo + len * t, len * (1.0 - t * t))
            }
            (true, false) => {
                let t = v.tanh();
                (hi - len * t, len * (1.0 - t * t))
            }
            (false, false) => (lo + len * v, len),
        }
    };
    // graded ends in v coordinates
    let (graded_v0, graded_v1) = {
        let g_lo = ends.0 == EndKind::Graded;
        let g_hi = ends.1 == EndKind::Graded;
        if rev {
            (g_hi, g_lo)
        } else {
            (g_lo, g_hi)
        }
    };
    let panels = ((v1 - v0) / max_dv).ceil().max(1.0) as usize;
    let h = (v1 - v0) / panels as f64;
    let emit = |a: f64, b: f64, out: &mut Vec<(f64, f64)>| {
        let hh = 0.5 * (b - a);
        for (z, wt) in gl.nodes.iter().zip(&gl.weights) {
            let (x, dx) = map(a + hh * (z + 1.0));
            out.push((x, hh * wt * dx));
        }
    };
    for p in 0..panels {
        let a = v0 + h * p as f64;
        let b = a + h;
        let grade_a = p == 0 && graded_v0;
        let grade_b = p + 1 == panels && graded_v1;
        match (grade_a, grade_b) {
            (false, false) => emit(a, b, out),
            (true, false) => {
                let mut right = b;
                for _ in 0..GRADING_LEVELS {
                    let m = a + 0.5 * (right - a);
                    emit(m, right, out);
                    right = m;
                }
                emit(a, right, out);
            }
            (false, true) => {
                let mut left = a;
                for _ in 0..GRADING_LEVELS {
                    let m = left + 0.5 * (b - left);
                    emit(left, m, out);
                    left = m;
                }
                emit(left, b, out);
            }
            (true, true) => {
                let c = 0.5 * (a + b);
                let mut right = c;
                for _ in 0..GRADING_LEVELS {
                    let m = a + 0.5 * (right - a);
                    emit(m, right, out);
                    right = m;
                }
                emit(a, right, out);
                let mut left = c;
                for _ in 0..GRADING_LEVELS {
                    let m = left + 0.5 * (b - left);
                    emit(left, m, out);
                    left = m;
                }
                emit(left, b, out);
            }
        }
    }
}

/// Nodes for `[lo, hi]` split at `breaks`, with the given behaviour at the
/// outer ends and at every break.
pub fn split_nodes(
    gl: &GaussLegendre,
    lo: f64,
    hi: f64,
    outer: (EndKind, EndKind),
    breaks: &[f64],
    at_break: EndKind,
    max_dv: f64,
) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    if !(hi > lo) {
        return out;
    }
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|b| *b > lo && *b < hi).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    pts.dedup();
    let mut left = (lo, outer.0);
    for b in pts {
        piece_nodes(gl, left.0, b, (left.1, at_break), max_dv, &mut out);
        left = (b, at_break);
    }
    piece_nodes(gl, left.0, hi, (left.1, outer.1), max_dv, &mut out);
    out
}

/// Collapsed (Duffy) Gauss rule on a triangle.
pub fn integrate_triangle<F: FnMut(Point2) -> f64>(
    gl: &GaussLegendre,
    p0: Point2,
    p1: Point2,
    p2: Point2,
    mut f: F,
) -> f64 {
    let e1 = p1 - p0;
    let e2 = p2 - p0;
    let jac = e1.cross(e2).abs();
    if jac == 0.0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for (u, wu) in gl.nodes.iter().zip(&gl.weights) {
        let u = 0.5 * (u + 1.0);
        for (v, wv) in gl.nodes.iter().zip(&gl.weights) {
            let v = 0.5 * (v + 1.0);
            let q = p0 + (e1 * (1.0 - v) + e2 * v) * u;
            acc += wu * wv * u * f(q);
        }
    }
    // weights sum to 2 per axis on [-1,1]: rescale to [0,1]^2
    acc * 0.25 * jac
}

/// Integrate over a convex polygon by fanning from its first vertex.
pub fn integrate_convex<F: FnMut(Point2) -> f64>(
    gl: &GaussLegendre,
    poly: &[Point2],
    mut f: F,
) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 1..poly.len() - 1 {
        acc += integrate_triangle(gl, poly[0], poly[i], poly[i + 1], &mut f);
    }
    acc
}

/// Keep the part of a convex polygon where `normal · x + offset >= 0`.
pub fn clip_halfplane(poly: &[Point2], normal: Point2, offset: f64) -> Vec<Point2> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    if n == 0 {
        return out;
    }
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let da = normal.dot(a) + offset;
        let db = normal.dot(b) + offset;
        if da >= 0.0 {
            out.push(a);
        }
        if (da >= 0.0) != (db >= 0.0) {
            let s = da / (da - db);
            out.push(a + (b - a) * s);
        }
    }
    out
}

pub fn polygon_area(poly: &[Point2]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        acc += poly[i].cross(poly[(i + 1) % n]);
    }
    0.5 * acc.abs()
}

/// Axis-aligned rectangle as a counterclockwise polygon.
pub fn rect_polygon(lo: Point2, hi: Point2) -> Vec<Point2> {
    vec![
        lo,
        Point2::new(hi.x1, lo.x2),
        hi,
        Point2::new(lo.x1, hi.x2),
    ]
}
