use depauw_core::geometry::{DyadicSquare, Window};
use depauw_core::testfn::{Profile, SmoothBump, TestFunction};
use depauw_core::transport::{zeta_density, Continuation, DyadicDensity, ZetaIndex};
use depauw_core::weaklimit::{approx_sequence, local_average, pair, window_squares, ApproxSequenceSpec, Localizer};
use depauw_core::Point2;
use rand::Rng;

use super::{rng, ExperimentName};
use crate::config::ExperimentConfig;
use crate::report::{ExperimentResult, Table};
use crate::row;

const INDICES: [ZetaIndex; 2] = [ZetaIndex::One, ZetaIndex::Two];

fn index_number(i: ZetaIndex) -> u32 {
    match i {
        ZetaIndex::One => 1,
        ZetaIndex::Two => 2,
    }
}

fn local_averages(cfg: &ExperimentConfig, res: &mut ExperimentResult) -> anyhow::Result<()> {
    let window = Window::new(cfg.window)?;
    let mut table = Table::new("local_averages", &["zeta", "k", "squares", "off_half"]);
    let mut total_bad = 0usize;
    let mut total = 0usize;
    for i in INDICES {
        for k in 0..=cfg.sizes.average_levels {
            let f = zeta_density(i, k + 1, window)?;
            let mut squares = 0usize;
            let mut bad = 0usize;
            for s in window_squares(&window, k) {
                squares += 1;
                if local_average(&f, &s)? != 0.5 {
                    bad += 1;
                }
            }
            table.push(row![index_number(i), k, squares, bad]);
            total += squares;
            total_bad += bad;
        }
    }
    res.check(
        "A3",
        "local averages",
        total_bad == 0,
        format!("{total_bad} of {total} squares with average != 1/2 (k <= {})", cfg.sizes.average_levels),
    );
    res.tables.push(table);
    Ok(())
}

/// The three data of the approximation check, all non-negative.
fn data(cfg: &ExperimentConfig) -> anyhow::Result<Vec<(&'static str, DyadicDensity)>> {
    let window = Window::new(cfg.sizes.datum_window)?;
    let indicator = DyadicDensity::from_fn(0, window, Continuation::Zero, |s| f64::from(s.index == (0, 0)))?;

    // dyadic-rational layers at levels 1, 2 and 3
    let mut rng = rng(cfg, ExperimentName::Averages);
    let layers: Vec<Vec<f64>> = (1..=3u32)
        .map(|l| {
            let n = window.cells_per_side(l);
            (0..n * n).map(|_| f64::from(rng.gen_range(0..8u8)) / 8.0).collect()
        })
        .collect();
    let layered = DyadicDensity::from_fn(3, window, Continuation::Zero, |s| {
        (1..=3u32)
            .map(|l| {
                let n = window.cells_per_side(l) as i64;
                let shift = 3 - l;
                let (a, b) = ((s.index.0 >> shift) + n / 2, (s.index.1 >> shift) + n / 2);
                layers[l as usize - 1][(b * n + a) as usize]
            })
            .sum()
    })?;

    let bump = SmoothBump::new(Point2::new(0.1, -0.2), 0.7, 1.0, Profile::Smooth)?;
    let sampled = DyadicDensity::from_fn(6, window, Continuation::Zero, |s| bump.value(s.center()))?;
    Ok(vec![("indicator", indicator), ("layered", layered), ("sampled-bump", sampled)])
}

fn approximation(cfg: &ExperimentConfig, res: &mut ExperimentResult) -> anyhow::Result<()> {
    let tol = &cfg.tolerances;
    let window = Window::new(cfg.sizes.datum_window)?;
    let mut table = Table::new(
        "approximation",
        &["datum", "zeta", "k", "max_pairing_error", "sup_ratio", "min_value"],
    );
    let (mut worst_err, mut worst_ratio, mut worst_min) = (0.0f64, 0.0f64, f64::INFINITY);
    for (name, datum) in data(cfg)? {
        let sup = datum.sup_norm();
        // reference pairings, computed once per square
        let reference: Vec<Vec<(DyadicSquare, f64)>> = (0..=cfg.sizes.average_levels)
            .map(|l| {
                window_squares(&window, l)
                    .map(|s| Ok((s, pair(&datum, &TestFunction::DyadicIndicator { square: s })?)))
                    .collect::<anyhow::Result<Vec<_>>>()
            })
            .collect::<anyhow::Result<_>>()?;
        for i in INDICES {
            for k in 0..=cfg.sizes.average_levels {
                let spec = ApproxSequenceSpec {
                    datum: datum.clone(),
                    localizer: Localizer::Zeta { index: i },
                    level: k,
                };
                let rk = approx_sequence(&spec)?;
                let mut err = 0.0f64;
                for level in &reference[..=k as usize] {
                    for (s, v) in level {
                        let p = pair(&rk, &TestFunction::DyadicIndicator { square: *s })?;
                        err = err.max((p - v).abs());
                    }
                }
                let ratio = rk.sup_norm() / sup;
                let min = rk.stored().iter().copied().fold(f64::INFINITY, f64::min);
                worst_err = worst_err.max(err);
                worst_ratio = worst_ratio.max(ratio);
                worst_min = worst_min.min(min);
                table.push(row![name, index_number(i), k, err, ratio, min]);
            }
        }
    }
    res.check(
        "A4",
        "pairings preserved",
        worst_err <= tol.pairing,
        format!("max |<rho^k, 1_S> - <rho, 1_S>| = {worst_err:e}"),
    );
    res.check("A4", "sup bound", worst_ratio <= 2.0, format!("max ||rho^k|| / ||rho|| = {worst_ratio}"));
    res.check("A4", "non-negativity", worst_min >= 0.0, format!("min value {worst_min}"));
    res.tables.push(table);
    Ok(())
}

pub(super) fn run(cfg: &ExperimentConfig, res: &mut ExperimentResult) -> anyhow::Result<()> {
    local_averages(cfg, res)?;
    approximation(cfg, res)
}
