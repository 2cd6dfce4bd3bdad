use std::time::Instant;

use anyhow::Context;
use depauw_core::field::VectorFieldSpec;
use depauw_core::flow::FlowMap;
use depauw_core::geometry::dyadic_side;
use depauw_core::testfn::{Profile, SmoothBump, SpaceTimeBump};
use depauw_core::transport::Datum;
use depauw_core::weaklimit::duality_check;
use depauw_core::Point2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{rng, runtime_check, ExperimentName};
use crate::config::ExperimentConfig;
use crate::report::{ExperimentResult, Table};
use crate::row;

/// A bump datum overlapping a random space-time bump near the origin.
fn random_pair(rng: &mut ChaCha8Rng) -> anyhow::Result<(Datum, SpaceTimeBump)> {
    let t_lo = rng.gen_range(0.05..0.5);
    let t_hi = rng.gen_range(t_lo + 0.2..=1.0);
    let c = Point2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let phi = SpaceTimeBump::new(t_lo, t_hi, SmoothBump::new(c, rng.gen_range(0.3..0.6), 1.0, Profile::Smooth)?)?;
    let shift = Point2::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3));
    let rho = SmoothBump::new(c + shift, rng.gen_range(0.5..0.9), rng.gen_range(0.5..2.0), Profile::Smooth)?;
    Ok((Datum::Bump(rho), phi))
}

fn datum_name(d: &Datum) -> String {
    match d {
        Datum::Chessboard { .. } => "chessboard".into(),
        Datum::Bump(b) => format!("bump({},{};{};{})", b.center.x1, b.center.x2, b.radius, b.amplitude),
        other => format!("{other:?}"),
    }
}

pub(super) fn run(cfg: &ExperimentConfig, res: &mut ExperimentResult) -> anyhow::Result<()> {
    let start = Instant::now();
    let tol = &cfg.tolerances;
    let mut rng = rng(cfg, ExperimentName::Duality);
    let mollifier = cfg.mollifiers.first().context("no mollifier configured")?;
    let k = cfg.sizes.duality_k;

    let mut pairs = vec![(
        Datum::Chessboard { level: 0, inverted: false },
        SpaceTimeBump::new(0.2, 0.9, SmoothBump::new(Point2::new(0.1, 0.3), 0.5, 1.0, Profile::Smooth)?)?,
    )];
    while pairs.len() < cfg.sizes.duality_pairs {
        pairs.push(random_pair(&mut rng)?);
    }

    let exact = FlowMap::exact_truncated(dyadic_side(cfg.max_level));
    let spec = VectorFieldSpec::mollified(VectorFieldSpec::DepauwFull, mollifier.clone(), k);
    let numeric = FlowMap::numeric(spec, cfg.dt.dt())?;
    let mut table = Table::new(
        "duality",
        &["pair", "datum", "phi", "t_lo", "t_hi", "flow", "lhs", "rhs", "gap", "seconds"],
    );
    let (mut worst_exact, mut worst_numeric) = (0.0f64, 0.0f64);
    for (i, (datum, phi)) in pairs.iter().enumerate() {
        let (lo, hi) = phi.time_support();
        let phi_name = format!("bump({},{};{})", phi.space.center.x1, phi.space.center.x2, phi.space.radius);
        let runs = [
            ("exact".to_owned(), &exact, &cfg.quadrature.duality),
            (format!("{}-k{k}", mollifier.name()), &numeric, &cfg.quadrature.duality_numeric),
        ];
        for (j, (name, flow, quad)) in runs.iter().enumerate() {
            let run_start = Instant::now();
            let r = duality_check(datum, phi, flow, quad)?;
            let seconds = run_start.elapsed().as_secs_f64();
            if j == 0 {
                worst_exact = worst_exact.max(r.gap);
            } else {
                worst_numeric = worst_numeric.max(r.gap);
            }
            table.push(row![i, datum_name(datum), phi_name.clone(), lo, hi, name.as_str(), r.lhs, r.rhs, r.gap, seconds]);
        }
    }
    let n = pairs.len();
    res.check(
        "A6",
        "exact flow",
        worst_exact <= tol.duality_exact,
        format!("max gap {worst_exact:e} over {n} pairs"),
    );
    res.check(
        "A6",
        "numeric flow",
        worst_numeric <= tol.duality_numeric,
        format!("max gap {worst_numeric:e} over {n} pairs ({} k={k})", mollifier.name()),
    );
    runtime_check(res, "A6", start, tol.duality_seconds);
    res.tables.push(table);
    Ok(())
}
