//! The standard bump `B(z) = exp(-1/(1 - z^2))` on `(-1, 1)` and its
//! normalised cumulative distribution.

use std::sync::OnceLock;

use crate::quadrature::GaussLegendre;

/// `∫_{-1}^{1} exp(-1/(1 - z^2)) dz`.
pub const BUMP_MASS: f64 = 0.443_993_816_168_079_4;

const CDF_INTERVALS: usize = 4096;

#[inline]
pub fn bump(z: f64) -> f64 {
    let q = 1.0 - z * z;
    if q <= 0.0 {
        0.0
    } else {
        (-1.0 / q).exp()
    }
}

/// Node values of `G(z) = ∫_{-1}^z B / I` on a uniform grid of `[-1, 1]`.
fn cdf_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let gl = GaussLegendre::new(12);
        let h = 2.0 / CDF_INTERVALS as f64;
        let mut vals = Vec::with_capacity(CDF_INTERVALS + 1);
        let mut acc = 0.0;
        vals.push(0.0);
        for i in 0..CDF_INTERVALS {
            let a = -1.0 + h * i as f64;
            acc += gl.integrate(a, a + h, bump);
            vals.push(acc);
        }
        let total = acc;
        for v in &mut vals {
            *v /= total;
        }
        vals
    })
}

/// Normalised CDF of the bump, cubic Hermite interpolated between table
/// nodes with the exact density as derivative data.
#[inline]
pub fn bump_cdf(z: f64) -> f64 {
    if z <= -1.0 {
        return 0.0;
    }
    if z >= 1.0 {
        return 1.0;
    }
    let table = cdf_table();
    let h = 2.0 / CDF_INTERVALS as f64;
    let u = (z + 1.0) / h;
    let i = (u.floor() as usize).min(CDF_INTERVALS - 1);
    let s = u - i as f64;
    let z0 = -1.0 + h * i as f64;
    let (g0, g1) = (table[i], table[i + 1]);
    let d0 = bump(z0) / BUMP_MASS * h;
    let d1 = bump(z0 + h) / BUMP_MASS * h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * g0 + h10 * d0 + h01 * g1 + h11 * d1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::tanh_sinh;

    #[test]
    fn mass_constant_matches_quadrature() {
        let v = tanh_sinh(-1.0, 1.0, 1e-15, bump).unwrap();
        assert!((v - BUMP_MASS).abs() < 1e-14);
    }

    #[test]
    fn cdf_against_direct_quadrature() {
        for z in [-0.97, -0.6, -0.123, 0.0, 0.31, 0.77, 0.999] {
            let direct = tanh_sinh(-1.0, z, 1e-14, bump).unwrap() / BUMP_MASS;
            assert!((bump_cdf(z) - direct).abs() < 1e-12, "{z}");
        }
        assert!((bump_cdf(0.0) - 0.5).abs() < 1e-14);
        assert_eq!(bump_cdf(-1.5), 0.0);
        assert_eq!(bump_cdf(1.0), 1.0);
    }

    #[test]
    fn cdf_is_monotone() {
        let mut prev = 0.0;
        for i in 0..=20_000 {
            let v = bump_cdf(-1.0 + 2.0 * i as f64 / 20_000.0);
            assert!(v >= prev - 1e-16);
            prev = v;
        }
    }
}
