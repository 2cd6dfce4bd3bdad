use depauw_core::geometry::{dyadic_side, DyadicSquare, Window};
use depauw_core::testfn::TestFunction;
use depauw_core::transport::{zeta, Continuation, DyadicDensity, ZetaIndex};
use depauw_core::weaklimit::{distinctness_metric, nonuniqueness_construct, pair, window_squares};
use depauw_core::Point2;
use rand::Rng;

use super::{rng, ExperimentName};
use crate::config::ExperimentConfig;
use crate::report::{ExperimentResult, Table};
use crate::row;

/// Midpoint cells per unit length for the sampled distinctness metric.
const METRIC_PER_UNIT: usize = 256;

pub(super) fn run(cfg: &ExperimentConfig, res: &mut ExperimentResult) -> anyhow::Result<()> {
    let tol = &cfg.tolerances;
    let level = cfg.sizes.nonuniqueness_level;
    let window = Window::new(cfg.window)?;
    let datum = DyadicDensity::from_fn(0, window, Continuation::Zero, |s| f64::from(s.index == (0, 0)))?;
    let nu = nonuniqueness_construct(&datum, level)?;

    // (i) both data reproduce the coarse pairings of the datum
    let mut mismatches = 0usize;
    let mut squares = 0usize;
    for l in 0..level {
        for s in window_squares(&window, l) {
            let phi = TestFunction::DyadicIndicator { square: s };
            let reference = pair(&datum, &phi)?;
            squares += 1;
            if pair(&nu.data[0], &phi)? != reference || pair(&nu.data[1], &phi)? != reference {
                mismatches += 1;
            }
        }
    }
    res.check(
        "A8",
        "identical coarse pairings",
        mismatches == 0,
        format!("{mismatches} of {squares} squares at levels < {level} differ"),
    );

    // (ii) support bound and (iv) sign at sampled points
    let mut rng = rng(cfg, ExperimentName::Nonuniqueness);
    let t_min = dyadic_side(level);
    let m = nu.bound;
    let (mut support_bad, mut negative) = (0usize, 0usize);
    let mut samples = Table::new("samples", &["t", "x1", "x2", "rho1", "rho2", "zeta1", "zeta2"]);
    for _ in 0..cfg.sizes.support_samples {
        let t = rng.gen_range(t_min..=1.25);
        let p = Point2::new(rng.gen_range(-cfg.window..cfg.window), rng.gen_range(-cfg.window..cfg.window));
        let mut row_values = [0.0; 4];
        for (j, (sol, idx)) in nu.solutions.iter().zip([ZetaIndex::One, ZetaIndex::Two]).enumerate() {
            let v = sol.eval(t, p)?;
            let z = f64::from(zeta(idx, t, p));
            if v.abs() > m * z {
                support_bad += 1;
            }
            if v < 0.0 {
                negative += 1;
            }
            row_values[j] = v;
            row_values[j + 2] = z;
        }
        let [r1, r2, z1, z2] = row_values;
        samples.push(row![t, p.x1, p.x2, r1, r2, z1, z2]);
    }
    res.check(
        "A8",
        "support bound",
        support_bad == 0,
        format!("{support_bad} violations of |rho_i| <= {m} zeta_i over {} samples", cfg.sizes.support_samples),
    );

    // (iii) distinctness on squares where ζ₁(1/2) is constant
    let mut dist = Table::new("distinctness", &["t", "square_level", "i1", "i2", "exact", "sampled", "area"]);
    let t = 0.5;
    let square = DyadicSquare::s1(1, 0, 0);
    let mut metric = 0.0;
    for s in [square, DyadicSquare::s1(1, 1, 1), DyadicSquare::s1(1, -1, 0)] {
        let phi = TestFunction::DyadicIndicator { square: s };
        let exact = nu.distinctness(&phi, t)?;
        let sampled = distinctness_metric(&nu.solutions[0], &nu.solutions[1], &phi, t, METRIC_PER_UNIT)?;
        if s == square {
            metric = sampled;
        }
        dist.push(row![t, s.level, s.index.0, s.index.1, exact, sampled, s.area()]);
    }
    res.check(
        "A8",
        "distinctness",
        metric >= tol.distinctness * square.area(),
        format!("|<rho1 - rho2, 1_S>| = {metric} on S = [0, 1/2)^2, threshold {}", tol.distinctness * square.area()),
    );
    res.check(
        "A8",
        "non-negativity",
        negative == 0,
        format!("{negative} negative values over {} samples", cfg.sizes.support_samples),
    );
    res.tables.extend([samples, dist]);
    Ok(())
}
