use std::time::Instant;

use depauw_core::field::VectorFieldSpec;
use depauw_core::flow::FlowMap;
use depauw_core::geometry::{chessboard, Window};
use depauw_core::testfn::{Profile, SmoothBump, SpaceTimeBump};
use depauw_core::transport::{solve_bvp, weak_residual, Datum, GridSpec, Solution, ZetaIndex};
use depauw_core::Point2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{rng, runtime_check, ExperimentName};
use crate::config::ExperimentConfig;
use crate::report::{ExperimentResult, Table};
use crate::row;

/// `true` when `x` lies on a line of the level-1 dyadic grid.
fn on_half_lines(x: f64) -> bool {
    (2.0 * x).fract() == 0.0
}

fn refining_identity(cfg: &ExperimentConfig, res: &mut ExperimentResult) -> anyhow::Result<()> {
    let start = Instant::now();
    let window = Window::new(cfg.window)?;
    // half-cell offset in x1 only keeps the samples off both cell diagonals
    let grid = GridSpec::with_offset(window, cfg.grid, (0.5, 0.0))?;
    let datum = Datum::Zeta { index: ZetaIndex::One, time: 1.0 };
    let rho = solve_bvp(&FlowMap::exact(), &datum, 1.0, 0.5, grid)?;
    let mut mismatches = 0usize;
    let mut skipped = 0usize;
    for (x, &v) in grid.centers().zip(rho.samples()) {
        if on_half_lines(x.x1) || on_half_lines(x.x2) {
            skipped += 1;
            continue;
        }
        let expected = 1.0 - f64::from(chessboard(x * 2.0));
        if v != expected {
            mismatches += 1;
        }
    }
    let compared = cfg.grid * cfg.grid - skipped;
    res.check(
        "A2",
        "refining identity",
        mismatches == 0 && compared > 0,
        format!("{mismatches} mismatches over {compared} samples ({skipped} on dyadic lines skipped)"),
    );
    runtime_check(res, "A2", start, cfg.tolerances.refining_seconds);
    let mut table = Table::new("refining", &["grid", "window", "compared", "skipped", "mismatches"]);
    table.push(row![cfg.grid, cfg.window, compared, skipped, mismatches]);
    res.tables.push(table);
    Ok(())
}

fn random_bump(rng: &mut ChaCha8Rng, window: f64) -> anyhow::Result<SpaceTimeBump> {
    let t_lo = rng.gen_range(1.0 / 64.0..0.7);
    let t_hi = rng.gen_range(t_lo + 0.1..=1.0);
    let r = rng.gen_range(0.15..0.6f64).min(0.5 * window);
    let c = Point2::new(rng.gen_range(-window + r..window - r), rng.gen_range(-window + r..window - r));
    Ok(SpaceTimeBump::new(t_lo, t_hi, SmoothBump::new(c, r, 1.0, Profile::Smooth)?)?)
}

fn residuals(cfg: &ExperimentConfig, res: &mut ExperimentResult) -> anyhow::Result<()> {
    let tol = &cfg.tolerances;
    let mut rng = rng(cfg, ExperimentName::Refining);
    let q = cfg.quadrature.residual;
    let zeta = Solution::Zeta(ZetaIndex::One);
    let mut bumps = (0..cfg.sizes.residual_bumps)
        .map(|_| random_bump(&mut rng, cfg.window))
        .collect::<anyhow::Result<Vec<_>>>()?;
    // unit-mass control bump where ζ₁ switches from 1 to 0 during (1/2, 1)
    let space = SmoothBump::new(Point2::new(0.25, 0.25), 0.2, 1.0, Profile::Smooth)?;
    let space = SmoothBump { amplitude: 1.0 / space.integral(), ..space };
    let control = SpaceTimeBump::new(0.3, 0.99, space)?;

    let mut table = Table::new(
        "residuals",
        &["bump", "t_lo", "t_hi", "x1", "x2", "radius", "amplitude", "residual", "refined", "zero_field"],
    );
    let (mut worst, mut worst_ratio, mut best_control) = (0.0f64, f64::INFINITY, 0.0f64);
    bumps.push(control);
    for (i, phi) in bumps.iter().enumerate() {
        let is_control = i == bumps.len() - 1;
        let zero = weak_residual(&zeta, &VectorFieldSpec::Zero, phi, &q)?.abs();
        best_control = best_control.max(zero);
        let (r, fine) = if is_control {
            (f64::NAN, f64::NAN)
        } else {
            let r = weak_residual(&zeta, &VectorFieldSpec::DepauwFull, phi, &q)?.abs();
            let fine = weak_residual(&zeta, &VectorFieldSpec::DepauwFull, phi, &q.refined())?.abs();
            worst = worst.max(r);
            worst_ratio = worst_ratio.min(r / fine);
            (r, fine)
        };
        let (lo, hi) = phi.time_support();
        let id = if is_control { "control".to_owned() } else { i.to_string() };
        let s = &phi.space;
        table.push(row![id, lo, hi, s.center.x1, s.center.x2, s.radius, s.amplitude, r, fine, zero]);
    }
    let n = cfg.sizes.residual_bumps;
    res.check("A9", "residual", worst <= tol.residual, format!("{n} bumps, max |residual| {worst:e}"));
    res.check(
        "A9",
        "refinement",
        worst_ratio >= tol.residual_refinement,
        format!("smallest decrease under refinement {worst_ratio:.1}x"),
    );
    res.check(
        "A9",
        "negative control",
        best_control >= tol.negative_control,
        format!("largest zero-field residual {best_control:.4}"),
    );
    res.tables.push(table);
    Ok(())
}

pub(super) fn run(cfg: &ExperimentConfig, res: &mut ExperimentResult) -> anyhow::Result<()> {
    refining_identity(cfg, res)?;
    residuals(cfg, res)
}
