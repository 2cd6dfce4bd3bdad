use serde::{Deserialize, Serialize};

use super::{zeta_capped, Solution};
use crate::error::{Error, Result};
use crate::field::{eval_bdp, Epoch, VectorFieldSpec};
use crate::geometry::{dyadic_side, Point2, DEFAULT_MAX_LEVEL};
use crate::mollify;
use crate::quadrature::{integrate_triangle, GaussLegendre};
use crate::testfn::SpaceTimeBump;

/// Quadrature parameters for [`weak_residual`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualQuadrature {
    /// Gauss panels per time panel (half-epochs for chessboard solutions).
    pub time_panels: usize,
    pub time_order: usize,
    /// Triangle rule order for piecewise-smooth solutions.
    pub space_order: usize,
    /// Largest triangle diameter, relative to the bump radius.
    pub piece: f64,
    /// Midpoint cells per bump radius for sampled solutions.
    pub grid: usize,
}

impl Default for ResidualQuadrature {
    fn default() -> Self {
        Self {
            time_panels: 8,
            time_order: 3,
            space_order: 6,
            piece: 0.25,
            grid: 64,
        }
    }
}

impl ResidualQuadrature {
    /// Halves every step size.
    pub fn refined(&self) -> Self {
        Self {
            time_panels: 2 * self.time_panels,
            piece: 0.5 * self.piece,
            grid: 2 * self.grid,
            ..*self
        }
    }
}

/// `∫∫ ρ (∂ₜφ + b·∇φ) dx dt + ∫ ρ(0,·) φ(0,·) dx`.
///
/// For the chessboard solutions along the Depauw field (or the zero
/// field) every `S²_j` cell splits into eight triangles on which both `ζ`
/// and `b` are smooth, so the space integral is computed by triangle
/// rules. Other solutions use midpoint sums.
pub fn weak_residual(
    sol: &Solution,
    field: &VectorFieldSpec,
    phi: &SpaceTimeBump,
    quad: &ResidualQuadrature,
) -> Result<f64> {
    if quad.time_panels == 0 || quad.time_order == 0 || quad.space_order == 0 || quad.grid == 0 || !(quad.piece > 0.0) {
        return Err(Error::InvalidInput(format!("degenerate residual quadrature {quad:?}")));
    }
    let (a, b) = phi.time_support();
    let lo = a.max(0.0);
    let gl_t = GaussLegendre::cached(quad.time_order);
    match (sol, field) {
        (Solution::Zeta(i), VectorFieldSpec::DepauwFull | VectorFieldSpec::Zero) => {
            let depauw = matches!(field, VectorFieldSpec::DepauwFull);
            let gl = GaussLegendre::cached(quad.space_order);
            let slice = |t: f64| structured_slice(*i, depauw, phi, t, quad.piece * phi.space.radius, &gl);
            let mut total = integrate_panels(&gl_t, &panel_breaks(lo, b), quad.time_panels, slice);
            if a < 0.0 {
                total += initial_term(|p| zeta_capped(*i, 0.0, p, DEFAULT_MAX_LEVEL) as f64, phi, quad.grid);
            }
            Ok(total)
        }
        _ => {
            let b_field = mollify::compile(field)?;
            let mut err = None;
            let mut slice = |t: f64| {
                let (tf, dtf) = phi.time_factor(t);
                if tf == 0.0 && dtf == 0.0 {
                    return 0.0;
                }
                grid_sum(phi, quad.grid, |p| {
                    let (_, dt, g) = phi.jet(t, p);
                    if dt == 0.0 && g.x1 == 0.0 && g.x2 == 0.0 {
                        return 0.0;
                    }
                    match sol.eval(t, p) {
                        Ok(rho) => rho * (dt + b_field.velocity(t, p).dot(g)),
                        Err(e) => {
                            err.get_or_insert(e);
                            0.0
                        }
                    }
                })
            };
            let mut total = integrate_panels(&gl_t, &panel_breaks(lo, b), quad.time_panels, &mut slice);
            if let Some(e) = err {
                return Err(e);
            }
            if a < 0.0 {
                let mut err = None;
                total += initial_term(
                    |p| {
                        sol.eval(0.0, p).unwrap_or_else(|e| {
                            err.get_or_insert(e);
                            0.0
                        })
                    },
                    phi,
                    quad.grid,
                );
                if let Some(e) = err {
                    return Err(e);
                }
            }
            Ok(total)
        }
    }
}

/// Epoch ends and midpoints in `(lo, hi)`, with `lo` and `hi` appended.
fn panel_breaks(lo: f64, hi: f64) -> Vec<f64> {
    let mut out = vec![lo];
    let floor = dyadic_side(DEFAULT_MAX_LEVEL);
    for j in 0..=DEFAULT_MAX_LEVEL {
        let e = dyadic_side(j);
        if e < floor {
            break;
        }
        for c in [e, 0.75 * e] {
            if c > lo && c < hi {
                out.push(c);
            }
        }
    }
    out.push(hi);
    out.sort_by(f64::total_cmp);
    out
}

fn integrate_panels(gl: &GaussLegendre, breaks: &[f64], sub: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let h = (w[1] - w[0]) / sub as f64;
        for k in 0..sub {
            let a = w[0] + k as f64 * h;
            total += gl.integrate(a, a + h, &mut f);
        }
    }
    total
}

/// Midpoint sum of `f` over the bump's support square.
fn grid_sum(phi: &SpaceTimeBump, per_radius: usize, mut f: impl FnMut(Point2) -> f64) -> f64 {
    let r = phi.space.radius;
    let n = 2 * per_radius;
    let h = 2.0 * r / n as f64;
    let lo = phi.space.center - Point2::new(r, r);
    let mut sum = 0.0;
    for b in 0..n {
        for a in 0..n {
            sum += f(lo + Point2::new((a as f64 + 0.5) * h, (b as f64 + 0.5) * h));
        }
    }
    sum * h * h
}

fn initial_term(mut rho0: impl FnMut(Point2) -> f64, phi: &SpaceTimeBump, per_radius: usize) -> f64 {
    let tf = phi.time_factor(0.0).0;
    if tf == 0.0 {
        return 0.0;
    }
    grid_sum(phi, per_radius, |p| rho0(p) * phi.space.value(p)) * tf
}

/// Unit directions splitting a cell into pieces where `ζ` and `b` are
/// smooth at rotation parameter `q ∈ [0, 2)`, in counterclockwise order.
fn cell_directions(q: f64) -> [Point2; 8] {
    let ray = if q <= 1.0 {
        Point2::new(1.0, -q)
    } else {
        Point2::new(2.0 - q, -1.0)
    };
    let diag = Point2::new(1.0, -1.0);
    let mut out = [Point2::ZERO; 8];
    let (mut r, mut d) = (ray, diag);
    for k in 0..4 {
        // the ray lies counterclockwise of the diagonal (1,-1) for q < 1
        let (first, second) = if q < 1.0 { (d, r) } else { (r, d) };
        out[2 * k] = first;
        out[2 * k + 1] = second;
        r = r.rot90();
        d = d.rot90();
    }
    out
}

/// `∫ ζᵢ(t,x)(∂ₜφ + b·∇φ)(t,x) dx` by exact partition of the cells.
fn structured_slice(i: super::ZetaIndex, depauw: bool, phi: &SpaceTimeBump, t: f64, piece: f64, gl: &GaussLegendre) -> f64 {
    let (tf, dtf) = phi.time_factor(t);
    if tf == 0.0 && dtf == 0.0 {
        return 0.0;
    }
    let cap = dyadic_side(DEFAULT_MAX_LEVEL);
    let (level, q) = match Epoch::of(t.max(cap)) {
        Some(ep) if t < 1.0 => {
            let e = ep.scale();
            let turns = (e - t.max(cap)) / ep.duration();
            (ep.level, 2.0 * turns)
        }
        _ => (0, 0.0),
    };
    let e = dyadic_side(level);
    // empty cells do not move
    let hits = |q: f64| cell_directions(q).map(|d| d * (0.5 * e / d.norm_inf()));
    let (moved, still) = (hits(q.clamp(0.0, 2.0 - f64::EPSILON)), hits(0.0));
    let sup = phi.space.support();
    let idx = |x: f64| (x / e).round() as i64;
    let (n1, m1) = (idx(sup.lo.x1), idx(sup.hi.x1));
    let (n2, m2) = (idx(sup.lo.x2), idx(sup.hi.x2));
    let integrand = |p: Point2| {
        let (_, dt, g) = phi.jet(t, p);
        let b = if depauw && t < 1.0 { eval_bdp(t, p) } else { Point2::ZERO };
        dt + b.dot(g)
    };
    let mut total = 0.0;
    for c2 in n2..=m2 {
        for c1 in n1..=m1 {
            let c = Point2::new(c1 as f64 * e, c2 as f64 * e);
            let hits = if (c1 + c2) % 2 == 0 { &moved } else { &still };
            for k in 0..8 {
                let (h1, h2) = (c + hits[k], c + hits[(k + 1) % 8]);
                let centroid = (c + h1 + h2) / 3.0;
                if f64::from(zeta_capped(i, t, centroid, DEFAULT_MAX_LEVEL)) == 0.0 {
                    continue;
                }
                total += subdivided(gl, [c, h1, h2], piece, &integrand);
            }
        }
    }
    total
}

/// Triangle rule on a midpoint subdivision down to diameter `piece`.
fn subdivided(gl: &GaussLegendre, tri: [Point2; 3], piece: f64, f: &impl Fn(Point2) -> f64) -> f64 {
    let [a, b, c] = tri;
    let diam = (a - b).norm().max((b - c).norm()).max((c - a).norm());
    if diam <= piece {
        return integrate_triangle(gl, a, b, c, f);
    }
    let (ab, bc, ca) = ((a + b) * 0.5, (b + c) * 0.5, (c + a) * 0.5);
    subdivided(gl, [a, ab, ca], piece, f)
        + subdivided(gl, [ab, b, bc], piece, f)
        + subdivided(gl, [ca, bc, c], piece, f)
        + subdivided(gl, [ab, bc, ca], piece, f)
}
