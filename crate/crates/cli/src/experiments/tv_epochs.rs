use depauw_core::field::{eval_bdp, epoch_total_variation, fd_total_variation, Epoch, Rect};
use depauw_core::quadrature::GaussLegendre;
use depauw_core::Point2;

use crate::config::ExperimentConfig;
use crate::report::{ExperimentResult, Table};
use crate::row;

/// Time nodes per epoch.
const TIME_ORDER: usize = 2;

pub(super) fn run(cfg: &ExperimentConfig, res: &mut ExperimentResult) -> anyhow::Result<()> {
    let square = Rect::square(Point2::ZERO, 1.0);
    let gl = GaussLegendre::new(TIME_ORDER);
    let mut table = Table::new("epochs", &["epoch", "t_lo", "t_hi", "grid", "numeric", "closed_form"]);
    let mut values = Vec::new();
    for level in 0..=cfg.sizes.tv_levels {
        let e = Epoch { level };
        let (lo, hi) = e.interval();
        // 2^{j+1} epoch cells across [-1, 1]
        let n = (2usize << level) * cfg.sizes.tv_points_per_cell;
        let numeric: f64 = gl
            .nodes
            .iter()
            .zip(&gl.weights)
            .map(|(x, w)| {
                let t = lo + 0.5 * (hi - lo) * (x + 1.0);
                0.5 * (hi - lo) * w * fd_total_variation(|p| eval_bdp(t, p), &square, n)
            })
            .sum();
        values.push(numeric);
        table.push(row![level, lo, hi, n, numeric, epoch_total_variation(level, &square)]);
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = max / min - 1.0;
    res.check(
        "A10",
        "constant epoch variation",
        spread <= cfg.tolerances.tv_spread,
        format!(
            "epochs 0..={}: variation in [{min:.6}, {max:.6}], relative spread {spread:.2e}",
            cfg.sizes.tv_levels
        ),
    );
    res.tables.push(table);
    Ok(())
}
