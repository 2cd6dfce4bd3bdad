use std::time::Instant;

use anyhow::bail;
use depauw_core::testfn::{Profile, SmoothBump, SpaceTimeBump};
use depauw_core::transport::Datum;
use depauw_core::weaklimit::{backward_pairings, selection_experiment, PairingReport, PAIRING_CSV_HEADER};
use depauw_core::Point2;
use rand::Rng;

use super::{rng, runtime_check, ExperimentName};
use crate::config::ExperimentConfig;
use crate::report::{ExperimentResult, Table};
use crate::row;

fn pairing_table(name: &str, experiment: &str, reports: &[PairingReport]) -> Table {
    let header: Vec<&str> = PAIRING_CSV_HEADER.trim_end().split(',').collect();
    let mut t = Table::new(name, &header);
    for r in reports {
        for &(k, v) in &r.entries {
            t.push(row![experiment, r.mollifier.as_str(), k, r.test_fn.as_str(), v]);
        }
    }
    t
}

/// `(cross-mollifier gap, largest tail spread)` over reports on one test function.
fn gap_and_spread(reports: &[&PairingReport]) -> (f64, f64) {
    let mut gap = 0.0f64;
    for (i, a) in reports.iter().enumerate() {
        for b in &reports[i + 1..] {
            gap = gap.max((a.limit_estimate - b.limit_estimate).abs());
        }
    }
    let spread = reports.iter().map(|r| r.spread).fold(0.0, f64::max);
    (gap, spread)
}

fn forward(cfg: &ExperimentConfig, res: &mut ExperimentResult) -> anyhow::Result<()> {
    let start = Instant::now();
    let tol = &cfg.tolerances;
    let datum = Datum::Chessboard { level: 0, inverted: false };
    let phi = SpaceTimeBump::new(0.25, 0.75, SmoothBump::new(Point2::new(0.3, 0.2), 0.4, 1.0, Profile::Smooth)?)?;
    let reports = selection_experiment(&datum, &phi, &cfg.mollifiers, &cfg.ks, &cfg.lagrangian())?;
    let [k0, k1, k2] = cfg.ks[cfg.ks.len() - 3..] else { unreachable!() };
    for r in &reports {
        let (e0, e1, e2) = (r.entries[r.entries.len() - 3].1, r.entries[r.entries.len() - 2].1, r.limit_estimate);
        let (late, early) = ((e2 - e1).abs(), (e1 - e0).abs());
        res.check(
            "A7",
            &format!("{} contraction", r.mollifier),
            late < early,
            format!("|e({k2}) - e({k1})| = {late:e} vs |e({k1}) - e({k0})| = {early:e}"),
        );
    }
    if reports.len() > 1 {
        let all: Vec<&PairingReport> = reports.iter().collect();
        let (gap, spread) = gap_and_spread(&all);
        let bound = spread.max(tol.mollifier_gap_floor);
        res.check(
            "A7",
            "mollifier independence",
            gap <= bound,
            format!("gap at k={k2} {gap:e} <= max(spread {spread:e}, {})", tol.mollifier_gap_floor),
        );
    }
    runtime_check(res, "A7", start, tol.selection_seconds);
    res.tables.push(pairing_table("forward", "selection", &reports));
    Ok(())
}

fn backward(cfg: &ExperimentConfig, res: &mut ExperimentResult) -> anyhow::Result<()> {
    let tol = &cfg.tolerances;
    let mut rng = rng(cfg, ExperimentName::Selection);
    // only C¹ at the edge of its support
    let phi = SmoothBump::new(Point2::new(0.1, 0.2), 0.5, 1.0, Profile::Cosine)?;
    let psis = (0..cfg.sizes.backward_tests)
        .map(|_| {
            let c = Point2::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
            SmoothBump::new(c, rng.gen_range(0.3..0.5), 1.0, Profile::Smooth)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let reports = backward_pairings(&phi, cfg.sizes.backward_time, &psis, &cfg.mollifiers, &cfg.ks, &cfg.lagrangian())?;
    if cfg.mollifiers.len() > 1 {
        let k = cfg.ks[cfg.ks.len() - 1];
        let mut worst = (0.0f64, 0.0f64, f64::INFINITY);
        let mut ok = true;
        for r0 in reports.iter().filter(|r| r.mollifier == reports[0].mollifier) {
            let same: Vec<&PairingReport> = reports.iter().filter(|r| r.test_fn == r0.test_fn).collect();
            let (gap, spread) = gap_and_spread(&same);
            let bound = spread.max(tol.mollifier_gap_floor);
            ok &= gap <= bound;
            if gap / bound > worst.0 / worst.2 {
                worst = (gap, spread, bound);
            }
        }
        res.check(
            "A11",
            "backward mollifier independence",
            ok,
            format!("{} test functions, worst gap at k={k} {:e} vs bound {:e}", psis.len(), worst.0, worst.2),
        );
    }
    res.tables.push(pairing_table("backward", "backward", &reports));
    Ok(())
}

pub(super) fn run(cfg: &ExperimentConfig, res: &mut ExperimentResult) -> anyhow::Result<()> {
    if cfg.ks.len() < 3 {
        bail!("selection needs at least three scales, got {:?}", cfg.ks);
    }
    forward(cfg, res)?;
    backward(cfg, res)
}
