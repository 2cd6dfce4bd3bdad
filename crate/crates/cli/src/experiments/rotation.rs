use std::time::Instant;

use depauw_core::field::eval_u;
use depauw_core::flow::flow_exact_bdp;
use depauw_core::geometry::{square_of, DyadicSquare, Family};
use depauw_core::transport::epoch_square_image;
use depauw_core::Point2;
use rand::Rng;

use super::{rng, runtime_check, ExperimentName};
use crate::config::ExperimentConfig;
use crate::report::{ExperimentResult, Table};
use crate::row;

/// Unit cells with centres in `[-CELLS, CELLS]²` are sampled.
const CELLS: i64 = 2;

/// Fine RK4 along the epoch-0 field `u` from `t = 1/2` to `t = 1`.
fn rk4_oracle(p: Point2, dt: f64) -> Point2 {
    let steps = (0.5 / dt).round() as usize;
    let h = 0.5 / steps as f64;
    let mut x = p;
    for _ in 0..steps {
        let k1 = eval_u(x);
        let k2 = eval_u(x + k1 * (0.5 * h));
        let k3 = eval_u(x + k2 * (0.5 * h));
        let k4 = eval_u(x + k3 * h);
        x = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    x
}

pub(super) fn run(cfg: &ExperimentConfig, res: &mut ExperimentResult) -> anyhow::Result<()> {
    let start = Instant::now();
    let tol = &cfg.tolerances;
    let mut rng = rng(cfg, ExperimentName::Rotation);
    let n_filled = cfg.sizes.rotation_points;
    let n_empty = n_filled.div_ceil(4);
    let mut table = Table::new(
        "points",
        &["x1", "x2", "filled", "image_x1", "image_x2", "rotation_error", "oracle_error"],
    );
    // worst distance to the counterclockwise and clockwise rotations
    let (mut err_ccw, mut err_cw) = (0.0f64, 0.0f64);
    let mut oracle_err = 0.0f64;
    let mut empty_moved = 0usize;
    let mut quadrant_failures = 0usize;
    let mut filled_seen = 0usize;
    for filled in (0..n_filled + n_empty).map(|i| i < n_filled) {
        let c1 = rng.gen_range(-CELLS..=CELLS);
        // parity of c1 + c2 decides whether the cell is filled
        let mut c2 = rng.gen_range(-CELLS..CELLS);
        if (c1 + c2).rem_euclid(2) != i64::from(!filled) {
            c2 += 1;
        }
        let centre = Point2::new(c1 as f64, c2 as f64);
        let d = Point2::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
        let p = centre + d;
        let image = flow_exact_bdp(1.0, 0.5, p)?;
        let quadrant = square_of(p, 1, Family::S1);
        let mapped = epoch_square_image(&quadrant, 0)?;
        if !mapped.contains(image) {
            quadrant_failures += 1;
        }
        let (rotation_error, oracle_error) = if filled {
            let ccw = (image - (centre + d.rot90())).norm();
            let cw = (image - (centre - d.rot90())).norm();
            err_ccw = err_ccw.max(ccw);
            err_cw = err_cw.max(cw);
            let oracle = (filled_seen < cfg.sizes.oracle_points).then(|| (rk4_oracle(p, cfg.sizes.oracle_dt) - image).norm());
            if let Some(e) = oracle {
                oracle_err = oracle_err.max(e);
            }
            filled_seen += 1;
            (ccw.min(cw), oracle.unwrap_or(f64::NAN))
        } else {
            if image != p {
                empty_moved += 1;
            }
            ((image - p).norm(), f64::NAN)
        };
        table.push(row![p.x1, p.x2, filled, image.x1, image.x2, rotation_error, oracle_error]);
    }

    let (orientation, rot_err) = if err_ccw <= err_cw {
        ("counterclockwise", err_ccw)
    } else {
        ("clockwise", err_cw)
    };
    res.check(
        "A1",
        "quarter rotation",
        rot_err <= tol.rotation,
        format!("{n_filled} points, max error {rot_err:e} ({orientation})"),
    );
    res.check(
        "A1",
        "orientation vs RK4 oracle",
        oracle_err <= tol.orientation,
        format!("{} points at dt {}, max error {oracle_err:e}", cfg.sizes.oracle_points.min(n_filled), cfg.sizes.oracle_dt),
    );

    // quadrant permutation over all cells of the sampled block
    let mut cycle_failures = 0usize;
    for c1 in -CELLS..=CELLS {
        for c2 in -CELLS..=CELLS {
            let filled = (c1 + c2).rem_euclid(2) == 0;
            for (a, b) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                let q = DyadicSquare::s1(1, 2 * c1 - 1 + a, 2 * c2 - 1 + b);
                let orbit: Vec<DyadicSquare> = (0..4)
                    .scan(q, |s, _| {
                        let cur = *s;
                        *s = epoch_square_image(s, 0).ok()?;
                        Some(cur)
                    })
                    .collect();
                let back = epoch_square_image(&orbit[3], 0)?;
                let ok = if filled {
                    let distinct = (0..4).all(|i| (i + 1..4).all(|j| orbit[i] != orbit[j]));
                    distinct && back == q
                } else {
                    orbit.iter().all(|s| *s == q)
                };
                if !ok {
                    cycle_failures += 1;
                }
            }
        }
    }
    res.check(
        "A1",
        "quadrant 4-cycles",
        cycle_failures == 0 && quadrant_failures == 0 && empty_moved == 0,
        format!(
            "{cycle_failures} bad cells, {quadrant_failures} points outside the mapped quadrant, {empty_moved} moved points in empty cells"
        ),
    );
    res.tables.push(table);
    runtime_check(res, "A1", start, tol.rotation_seconds);
    Ok(())
}
