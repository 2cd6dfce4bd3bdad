//! Compactly supported test functions for pairings and weak residuals.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Rect;
use crate::geometry::{DyadicSquare, Point2, Vec2};
use crate::quadrature::{split_nodes, EndKind, GaussLegendre};

/// Radial profile `g(ρ)` on `[0, 1)` with `g(0) = 1`, vanishing for `ρ ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// `exp(1 - 1/(1 - ρ²))`, smooth.
    Smooth,
    /// `cos²(πρ/2)`, only `C¹` at `ρ = 1`.
    Cosine,
}

impl Profile {
    /// `(g(ρ), g'(ρ)/ρ)`; the second entry is finite at `ρ = 0`.
    #[inline]
    fn eval(self, rho2: f64) -> (f64, f64) {
        if rho2 >= 1.0 {
            return (0.0, 0.0);
        }
        match self {
            Profile::Smooth => {
                let q = 1.0 - rho2;
                let g = (1.0 - 1.0 / q).exp();
                (g, -2.0 * g / (q * q))
            }
            Profile::Cosine => {
                let rho = rho2.sqrt();
                let a = 0.5 * PI * rho;
                let g = a.cos().powi(2);
                // g' = -(π/2) sin(πρ), divided by ρ
                let d = if rho > 1e-12 {
                    -0.5 * PI * (PI * rho).sin() / rho
                } else {
                    -0.5 * PI * PI
                };
                (g, d)
            }
        }
    }

    /// `∫_{|x|<1} g(|x|) dx`.
    fn unit_mass(self) -> f64 {
        match self {
            Profile::Cosine => PI * (0.5 - 2.0 / (PI * PI)),
            Profile::Smooth => {
                static MASS: OnceLock<f64> = OnceLock::new();
                *MASS.get_or_init(|| {
                    let gl = GaussLegendre::new(8);
                    let nodes = split_nodes(&gl, 0.0, 1.0, (EndKind::Regular, EndKind::Flat), &[], EndKind::Regular, 0.2);
                    2.0 * PI * nodes.iter().map(|&(r, w)| w * r * self.eval(r * r).0).sum::<f64>()
                })
            }
        }
    }

    /// `max |g'|`.
    fn max_slope(self) -> f64 {
        match self {
            Profile::Cosine => 0.5 * PI,
            Profile::Smooth => {
                static SLOPE: OnceLock<f64> = OnceLock::new();
                *SLOPE.get_or_init(|| {
                    (1..4000)
                        .map(|i| {
                            let r = i as f64 / 4000.0;
                            (self.eval(r * r).1 * r).abs()
                        })
                        .fold(0.0, f64::max)
                })
            }
        }
    }
}

/// `A g(|x - c| / R)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothBump {
    pub center: Point2,
    pub radius: f64,
    pub amplitude: f64,
    pub profile: Profile,
}

impl SmoothBump {
    pub fn new(center: Point2, radius: f64, amplitude: f64, profile: Profile) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite() && amplitude.is_finite() && center.is_finite()) {
            return Err(Error::InvalidInput(format!("bump at {center:?} with radius {radius}")));
        }
        Ok(Self {
            center,
            radius,
            amplitude,
            profile,
        })
    }

    #[inline]
    pub fn value(&self, p: Point2) -> f64 {
        let d = (p - self.center) / self.radius;
        self.amplitude * self.profile.eval(d.dot(d)).0
    }

    #[inline]
    pub fn value_and_grad(&self, p: Point2) -> (f64, Vec2) {
        let d = (p - self.center) / self.radius;
        let (g, dg) = self.profile.eval(d.dot(d));
        (self.amplitude * g, d * (self.amplitude * dg / self.radius))
    }

    pub fn support(&self) -> Rect {
        Rect::square(self.center, self.radius)
    }

    pub fn l1_norm(&self) -> f64 {
        self.amplitude.abs() * self.radius * self.radius * self.profile.unit_mass()
    }

    pub fn integral(&self) -> f64 {
        self.amplitude * self.radius * self.radius * self.profile.unit_mass()
    }

    /// `max |∇φ|`.
    pub fn lipschitz(&self) -> f64 {
        self.amplitude.abs() * self.profile.max_slope() / self.radius
    }
}

/// `φ(t, x) = T((t - t_c)/t_r) S(x)` with `T` the smooth profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeBump {
    pub t_center: f64,
    pub t_radius: f64,
    pub space: SmoothBump,
}

impl SpaceTimeBump {
    /// Bump supported in `(t_lo, t_hi) × B(center, radius)`.
    pub fn new(t_lo: f64, t_hi: f64, space: SmoothBump) -> Result<Self> {
        if !(t_hi > t_lo) {
            return Err(Error::InvalidInput(format!("empty time support ({t_lo}, {t_hi})")));
        }
        Ok(Self {
            t_center: 0.5 * (t_lo + t_hi),
            t_radius: 0.5 * (t_hi - t_lo),
            space,
        })
    }

    pub fn time_support(&self) -> (f64, f64) {
        (self.t_center - self.t_radius, self.t_center + self.t_radius)
    }

    /// `(T(t), T'(t))`.
    #[inline]
    pub fn time_factor(&self, t: f64) -> (f64, f64) {
        let s = (t - self.t_center) / self.t_radius;
        let (g, dg) = Profile::Smooth.eval(s * s);
        (g, dg * s / self.t_radius)
    }

    #[inline]
    pub fn value(&self, t: f64, p: Point2) -> f64 {
        self.time_factor(t).0 * self.space.value(p)
    }

    /// `(φ, ∂ₜφ, ∇φ)`.
    #[inline]
    pub fn jet(&self, t: f64, p: Point2) -> (f64, f64, Vec2) {
        let (a, da) = self.time_factor(t);
        let (s, ds) = self.space.value_and_grad(p);
        (a * s, da * s, ds * a)
    }
}

/// A spatial test function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TestFunction {
    DyadicIndicator { square: DyadicSquare },
    SmoothBump(SmoothBump),
}

impl TestFunction {
    pub fn value(&self, p: Point2) -> f64 {
        match self {
            TestFunction::DyadicIndicator { square } => {
                if square.contains(p) {
                    1.0
                } else {
                    0.0
                }
            }
            TestFunction::SmoothBump(b) => b.value(p),
        }
    }

    pub fn support(&self) -> Rect {
        match self {
            TestFunction::DyadicIndicator { square } => {
                let o = square.origin();
                let s = square.side();
                Rect::new(o, o + Point2::new(s, s))
            }
            TestFunction::SmoothBump(b) => b.support(),
        }
    }

    pub fn l1_norm(&self) -> f64 {
        match self {
            TestFunction::DyadicIndicator { square } => square.area(),
            TestFunction::SmoothBump(b) => b.l1_norm(),
        }
    }

    /// `max |∇φ|`, when the test function is Lipschitz.
    pub fn c1_norm(&self) -> Option<f64> {
        match self {
            TestFunction::DyadicIndicator { .. } => None,
            TestFunction::SmoothBump(b) => Some(b.lipschitz()),
        }
    }
}
