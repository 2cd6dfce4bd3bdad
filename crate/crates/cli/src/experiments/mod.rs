//! The named experiments. Each returns its checks and raw tables; a failed
//! precondition aborts only that experiment.

mod averages;
mod duality;
mod flow_convergence;
mod nonuniqueness;
mod refining;
mod rotation;
mod selection;
mod tv_epochs;

use std::fmt;
use std::time::Instant;

use clap::ValueEnum;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::report::ExperimentResult;
use crate::ExitStatus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    /// Quarter rotation of the unit cells (A1).
    Rotation,
    /// Refining identity and weak residuals of the chessboard solution (A2, A9).
    Refining,
    /// Local averages and the approximation sequence (A3, A4).
    Averages,
    /// Mollifier selection and backward pairings (A7, A11).
    Selection,
    /// The two solutions from one datum (A8).
    Nonuniqueness,
    /// Forward/backward duality (A6).
    Duality,
    /// Finite speed, incompressibility and square maps (A5).
    FlowConvergence,
    /// Time-integrated variation per epoch (A10).
    TvEpochs,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 8] = [
        ExperimentName::Rotation,
        ExperimentName::Refining,
        ExperimentName::Averages,
        ExperimentName::FlowConvergence,
        ExperimentName::Duality,
        ExperimentName::Selection,
        ExperimentName::Nonuniqueness,
        ExperimentName::TvEpochs,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::Rotation => "rotation",
            ExperimentName::Refining => "refining",
            ExperimentName::Averages => "averages",
            ExperimentName::Selection => "selection",
            ExperimentName::Nonuniqueness => "nonuniqueness",
            ExperimentName::Duality => "duality",
            ExperimentName::FlowConvergence => "flow-convergence",
            ExperimentName::TvEpochs => "tv-epochs",
        }
    }

    /// Acceptance criteria checked by this experiment.
    pub fn criteria(self) -> &'static [&'static str] {
        match self {
            ExperimentName::Rotation => &["A1"],
            ExperimentName::Refining => &["A2", "A9"],
            ExperimentName::Averages => &["A3", "A4"],
            ExperimentName::Selection => &["A7", "A11"],
            ExperimentName::Nonuniqueness => &["A8"],
            ExperimentName::Duality => &["A6"],
            ExperimentName::FlowConvergence => &["A5"],
            ExperimentName::TvEpochs => &["A10"],
        }
    }

    /// Per-experiment RNG stream, so that adding samples to one experiment
    /// leaves the others unchanged.
    fn stream(self) -> u64 {
        Self::ALL.iter().position(|&n| n == self).unwrap_or(0) as u64
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub(crate) fn rng(cfg: &ExperimentConfig, name: ExperimentName) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(name.stream());
    rng
}

pub(crate) fn runtime_check(res: &mut ExperimentResult, criterion: &str, start: Instant, limit: f64) {
    let s = start.elapsed().as_secs_f64();
    res.check(criterion, "runtime", s < limit, format!("{s:.2} s (limit {limit} s)"));
}

/// Runs one experiment; errors are recorded in the result.
pub fn run_experiment(name: ExperimentName, cfg: &ExperimentConfig) -> ExperimentResult {
    let start = Instant::now();
    let mut res = ExperimentResult::new(name.as_str());
    let outcome = match name {
        ExperimentName::Rotation => rotation::run(cfg, &mut res),
        ExperimentName::Refining => refining::run(cfg, &mut res),
        ExperimentName::Averages => averages::run(cfg, &mut res),
        ExperimentName::Selection => selection::run(cfg, &mut res),
        ExperimentName::Nonuniqueness => nonuniqueness::run(cfg, &mut res),
        ExperimentName::Duality => duality::run(cfg, &mut res),
        ExperimentName::FlowConvergence => flow_convergence::run(cfg, &mut res),
        ExperimentName::TvEpochs => tv_epochs::run(cfg, &mut res),
    };
    if let Err(e) = outcome {
        res.status_on_error = Some(ExitStatus::of_error(&e));
        res.error = Some(format!("{e:#}"));
    }
    res.wall_clock_s = start.elapsed().as_secs_f64();
    res
}
