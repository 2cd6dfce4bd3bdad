use depauw_core::field::{VectorFieldSpec, DEPAUW_SUP_NORM};
use depauw_core::flow::{flow_deviation, jacobian_estimate, FlowMap};
use depauw_core::geometry::{dyadic_side, DyadicSquare};
use depauw_core::transport::epoch_square_image;
use depauw_core::Point2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{rng, ExperimentName};
use crate::config::ExperimentConfig;
use crate::report::{ExperimentResult, Table};
use crate::row;

/// Latest time sampled; the field vanishes after `t = 1`.
const T_MAX: f64 = 1.25;

/// Step of the reference Jacobian column; data only, the check uses the
/// configured step.
const FINE_JACOBIAN_STEP: f64 = 1e-7;

struct Sample {
    t: f64,
    s: f64,
    p: Point2,
}

fn samples(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vec<Sample> {
    (0..n)
        .map(|_| Sample {
            t: rng.gen_range(0.0..=T_MAX),
            s: rng.gen_range(0.0..=T_MAX),
            p: Point2::new(rng.gen_range(-r..r), rng.gen_range(-r..r)),
        })
        .collect()
}

/// Largest `|X(t,s,p) - p| - 2|t - s|` over the samples.
fn speed_excess(flow: &FlowMap, samples: &[Sample]) -> anyhow::Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for q in samples {
        let d = (flow.apply(q.t, q.s, q.p)? - q.p).norm();
        worst = worst.max(d - DEPAUW_SUP_NORM * (q.t - q.s).abs());
    }
    Ok(worst)
}

fn square_maps(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng, flow: &FlowMap) -> anyhow::Result<(usize, usize)> {
    let r = cfg.window;
    let deepest = cfg.max_level.min(10);
    let mut bad = 0usize;
    for _ in 0..cfg.sizes.square_samples {
        // transport from 2^{-m} to 2^{-m'} through epochs m' .. m-1
        let m = rng.gen_range(1..=deepest);
        let m_to = rng.gen_range(0..m);
        let level = rng.gen_range(m..=m + 3);
        let p = Point2::new(rng.gen_range(-r..r), rng.gen_range(-r..r));
        let h = dyadic_side(level);
        let mut square = DyadicSquare::s1(level, (p.x1 / h).floor() as i64, (p.x2 / h).floor() as i64);
        let start = square;
        for j in (m_to..m).rev() {
            square = epoch_square_image(&square, j)?;
        }
        let o = start.origin();
        for _ in 0..4 {
            let x = o + Point2::new(rng.gen_range(0.0..h), rng.gen_range(0.0..h));
            let y = flow.apply(dyadic_side(m_to), dyadic_side(m), x)?;
            if !square.contains(y) || square.area() != start.area() {
                bad += 1;
                break;
            }
        }
    }
    Ok((cfg.sizes.square_samples, bad))
}

pub(super) fn run(cfg: &ExperimentConfig, res: &mut ExperimentResult) -> anyhow::Result<()> {
    let tol = &cfg.tolerances;
    let mut rng = rng(cfg, ExperimentName::FlowConvergence);
    let pts = samples(&mut rng, cfg.sizes.flow_samples, cfg.window);
    let n_jac = cfg.sizes.jacobian_samples.min(pts.len());
    let exact = FlowMap::exact_truncated(dyadic_side(cfg.max_level));

    let mut speed = Table::new("speed", &["flow", "k", "samples", "max_excess"]);
    let mut jac = Table::new("jacobian", &["mollifier", "k", "samples", "h", "min", "max", "fine_h", "fine_max_dev"]);
    let excess = speed_excess(&exact, &pts)?;
    speed.push(row!["exact", 0u32, pts.len(), excess]);
    let mut worst_excess = excess;
    let mut worst_jac = 0.0f64;
    for m in &cfg.mollifiers {
        for &k in &cfg.sizes.jacobian_ks {
            let spec = VectorFieldSpec::mollified(VectorFieldSpec::DepauwFull, m.clone(), k);
            let flow = FlowMap::numeric(spec, cfg.dt.dt())?;
            let excess = speed_excess(&flow, &pts)?;
            worst_excess = worst_excess.max(excess);
            speed.push(row![m.name(), k, pts.len(), excess]);
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            let mut fine_dev = 0.0f64;
            for q in &pts[..n_jac] {
                let j = jacobian_estimate(&flow, q.t, q.s, q.p, cfg.sizes.jacobian_step)?;
                lo = lo.min(j);
                hi = hi.max(j);
                let fine = jacobian_estimate(&flow, q.t, q.s, q.p, FINE_JACOBIAN_STEP)?;
                fine_dev = fine_dev.max((fine - 1.0).abs());
            }
            worst_jac = worst_jac.max((lo - 1.0).abs()).max((hi - 1.0).abs());
            jac.push(row![m.name(), k, n_jac, cfg.sizes.jacobian_step, lo, hi, FINE_JACOBIAN_STEP, fine_dev]);
        }
    }
    res.check(
        "A5",
        "finite speed",
        worst_excess <= tol.speed_slack,
        format!("max |X - p| - 2|t - s| = {worst_excess:e} over {} samples per flow", pts.len()),
    );
    res.check(
        "A5",
        "incompressibility",
        worst_jac <= tol.jacobian,
        format!(
            "max |J - 1| = {worst_jac:e} at h = {:e} over {n_jac} samples per flow",
            cfg.sizes.jacobian_step
        ),
    );
    let (n, bad) = square_maps(cfg, &mut rng, &exact)?;
    res.check("A5", "square maps", bad == 0, format!("{bad} of {n} squares not mapped onto a square"));

    // distance of the mollified flows to the exact flow over one unit of time
    let mut dev = Table::new("deviation", &["mollifier", "k", "t", "s", "sup", "mean"]);
    let starts: Vec<Point2> = pts[..n_jac].iter().map(|q| q.p * (1.0 / cfg.window)).collect();
    let (t, s) = (1.0, 0.25);
    for m in &cfg.mollifiers {
        for &k in &cfg.ks {
            let spec = VectorFieldSpec::mollified(VectorFieldSpec::DepauwFull, m.clone(), k);
            let flow = FlowMap::numeric(spec, cfg.dt.dt())?;
            let d = flow_deviation(&flow, &exact, &starts, t, s)?;
            dev.push(row![m.name(), k, t, s, d.sup, d.mean]);
        }
    }
    res.tables.extend([speed, jac, dev]);
    Ok(())
}
