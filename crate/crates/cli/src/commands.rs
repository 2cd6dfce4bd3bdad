//! Command-line interface: argument parsing and the three subcommands.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use depauw_core::field::VectorFieldSpec;
use depauw_core::flow::{ExactDepauw, FlowMap};
use depauw_core::geometry::{DyadicSquare, Window};
use depauw_core::mollify::{eval_any, MollifierSpec};
use depauw_core::transport::{solve_bvp, solve_ivp, Datum, GridSpec, ZetaIndex};
use depauw_core::Point2;

use crate::config::ExperimentConfig;
use crate::experiments::{run_experiment, ExperimentName};
use crate::report::{RunReport, Versions};
use crate::ExitStatus;

#[derive(Debug, Parser)]
#[command(name = "depauw", version, about = "Transport along the Depauw field: evaluation, solvers and experiments")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON configuration; omitted fields take their defaults
    /// (print them with `depauw config`).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory [default: depauw-out].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed of every randomized sample set [default: 1].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Mollification scales, strictly increasing [default: 4,8,16].
    #[arg(long, global = true, value_delimiter = ',')]
    pub k: Option<Vec<u32>>,
    /// Restrict to these mollifiers (tensor-bump, shifted-bump); repeatable.
    #[arg(long, global = true)]
    pub mollifier: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print a field value `b(t, x)` as two numbers.
    FieldEval {
        /// Field spec: w, u, bdp, zero, const:a,b, linear:a,b,c,d,
        /// trunc:<from>:<spec>, zext:<spec>, moll:<mollifier>:<k>[:<spec>].
        spec: String,
        #[arg(allow_negative_numbers = true)]
        x1: f64,
        #[arg(allow_negative_numbers = true)]
        x2: f64,
        #[arg(long, default_value_t = 0.75)]
        t: f64,
    },
    /// Sample a solution of the transport equation on the grid of the
    /// configured window, one CSV per time.
    Solve {
        problem: Problem,
        /// Datum: constant:<c>, chessboard:<m>, indicator:<x0>,<y0>,<x1>,<y1>,
        /// square:<level>,<i>,<j>, zeta:<i>:<t>, or a JSON datum document.
        #[arg(long)]
        datum: String,
        /// Evaluation times.
        #[arg(long, value_delimiter = ',', required = true)]
        times: Vec<f64>,
        /// Time at which a boundary datum is prescribed.
        #[arg(long)]
        s: Option<f64>,
        /// Use the RK4 flow of this field instead of the exact Depauw flow.
        #[arg(long)]
        field: Option<String>,
    },
    /// Run one experiment, or all of them, and write its report.
    Experiment {
        #[arg(value_enum)]
        name: Option<ExperimentName>,
        #[arg(long, conflicts_with = "name")]
        all: bool,
    },
    /// Print the effective configuration as JSON.
    Config,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Problem {
    /// Datum at `t = 0`.
    Ivp,
    /// Datum at `t = s`.
    Bvp,
}

impl GlobalArgs {
    pub fn config(&self) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(k) = &self.k {
            cfg.ks = k.clone();
        }
        if !self.mollifier.is_empty() {
            cfg.mollifiers = self
                .mollifier
                .iter()
                .map(|m| MollifierSpec::named(m))
                .collect::<Result<_, _>>()?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Formats a number for terminal output, printing `-0` as `0`.
fn num(v: f64) -> String {
    format!("{}", v + 0.0)
}

pub fn field_eval(spec: &str, t: f64, x1: f64, x2: f64) -> anyhow::Result<String> {
    let spec: VectorFieldSpec = spec.parse()?;
    let v = eval_any(&spec, t, Point2::new(x1, x2))?;
    Ok(format!("{} {}", num(v.x1), num(v.x2)))
}

/// Parses the compact datum forms listed in `depauw solve --help`.
pub fn parse_datum(s: &str) -> anyhow::Result<Datum> {
    let s = s.trim();
    if s.starts_with('{') {
        return serde_json::from_str(s).context("parsing JSON datum");
    }
    let (head, body) = s.split_once(':').ok_or_else(|| anyhow!("malformed datum `{s}`"))?;
    let nums = |n: usize| -> anyhow::Result<Vec<f64>> {
        let v = body
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("malformed datum `{s}`"))?;
        if v.len() != n {
            bail!("datum `{s}` needs {n} numbers");
        }
        Ok(v)
    };
    Ok(match head {
        "constant" => Datum::Constant { value: nums(1)?[0] },
        "chessboard" => Datum::Chessboard {
            level: body.trim().parse().with_context(|| format!("malformed datum `{s}`"))?,
            inverted: false,
        },
        "indicator" => {
            let v = nums(4)?;
            Datum::Indicator {
                lo: Point2::new(v[0], v[1]),
                hi: Point2::new(v[2], v[3]),
            }
        }
        "square" => {
            let v = nums(3)?;
            if v.iter().any(|x| x.fract() != 0.0) || v[0] < 0.0 {
                bail!("square datum `{s}` needs a level and two integer indices");
            }
            let sq = DyadicSquare::s1(v[0] as u32, v[1] as i64, v[2] as i64);
            let o = sq.origin();
            let h = sq.side();
            Datum::Indicator {
                lo: o,
                hi: o + Point2::new(h, h),
            }
        }
        "zeta" => {
            let (i, t) = body.split_once(':').ok_or_else(|| anyhow!("datum `{s}` should be zeta:<i>:<t>"))?;
            let i: u8 = i.parse().with_context(|| format!("malformed datum `{s}`"))?;
            Datum::Zeta {
                index: ZetaIndex::from_number(i)?,
                time: t.parse().with_context(|| format!("malformed datum `{s}`"))?,
            }
        }
        _ => bail!("unknown datum kind `{head}`"),
    })
}

/// Runs `solve` and returns the written files.
pub fn solve(
    cfg: &ExperimentConfig,
    problem: Problem,
    datum: &str,
    times: &[f64],
    s: Option<f64>,
    field: Option<&str>,
) -> anyhow::Result<Vec<PathBuf>> {
    let datum = parse_datum(datum)?;
    let flow = match field {
        Some(spec) => FlowMap::numeric(spec.parse()?, cfg.dt.dt())?,
        None => FlowMap::ExactDepauw(ExactDepauw {
            max_level: cfg.max_level,
            ..ExactDepauw::default()
        }),
    };
    let grid = GridSpec::new(Window::new(cfg.window)?, cfg.grid)?;
    let dir = cfg.out.join("solve");
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut files = Vec::new();
    for &t in times {
        let (rho, name) = match problem {
            Problem::Ivp => (solve_ivp(&flow, &datum, t, grid)?, format!("ivp_t{t}.csv")),
            Problem::Bvp => {
                let s = s.ok_or_else(|| anyhow!("bvp needs --s"))?;
                (solve_bvp(&flow, &datum, s, t, grid)?, format!("bvp_s{s}_t{t}.csv"))
            }
        };
        let path = dir.join(name);
        fs::write(&path, rho.to_csv()).with_context(|| format!("writing {}", path.display()))?;
        files.push(path);
    }
    Ok(files)
}

/// Runs the given experiments in order, prints one line per check and
/// writes the report files.
pub fn experiments(cfg: &ExperimentConfig, names: &[ExperimentName], out: &mut dyn Write) -> anyhow::Result<RunReport> {
    let start = Instant::now();
    let mut results = Vec::new();
    for &name in names {
        let r = run_experiment(name, cfg);
        for line in r.summary_lines() {
            writeln!(out, "{name}: {line}")?;
        }
        results.push(r);
    }
    let report = RunReport {
        config: cfg.clone(),
        experiments: results,
        versions: Versions::default(),
        wall_clock_s: start.elapsed().as_secs_f64(),
    };
    report.write(&cfg.out)?;
    Ok(report)
}

/// Executes a parsed command line and returns the process exit status.
pub fn run(cli: Cli) -> ExitStatus {
    match execute(cli) {
        Ok(status) => status,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitStatus::of_error(&e)
        }
    }
}

fn execute(cli: Cli) -> anyhow::Result<ExitStatus> {
    let cfg = cli.global.config()?;
    match cli.command {
        Command::FieldEval { spec, x1, x2, t } => {
            println!("{}", field_eval(&spec, t, x1, x2)?);
            Ok(ExitStatus::Pass)
        }
        Command::Solve {
            problem,
            datum,
            times,
            s,
            field,
        } => {
            for f in solve(&cfg, problem, &datum, &times, s, field.as_deref())? {
                println!("{}", f.display());
            }
            Ok(ExitStatus::Pass)
        }
        Command::Experiment { name, all } => {
            let names = match (name, all) {
                (Some(n), _) => vec![n],
                (None, true) => ExperimentName::ALL.to_vec(),
                (None, false) => bail!("name an experiment or pass --all"),
            };
            let report = experiments(&cfg, &names, &mut std::io::stdout())?;
            Ok(report.status())
        }
        Command::Config => {
            println!("{}", serde_json::to_string_pretty(&cfg)?);
            Ok(ExitStatus::Pass)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_eval_examples() {
        assert_eq!(field_eval("w", 0.0, 0.25, 0.1).unwrap(), "0 1");
        assert_eq!(field_eval("bdp", 2.0, 0.3, -0.7).unwrap(), "0 0");
        let err = field_eval("nonsense:1", 0.0, 0.0, 0.0).unwrap_err();
        assert_eq!(ExitStatus::of_error(&err), ExitStatus::Usage);
    }

    #[test]
    fn datum_forms() {
        assert_eq!(parse_datum("constant:2").unwrap(), Datum::Constant { value: 2.0 });
        assert_eq!(
            parse_datum("chessboard:1").unwrap(),
            Datum::Chessboard { level: 1, inverted: false }
        );
        assert_eq!(
            parse_datum("square:1,0,0").unwrap(),
            Datum::Indicator { lo: Point2::ZERO, hi: Point2::new(0.5, 0.5) }
        );
        assert_eq!(
            parse_datum("zeta:2:0.5").unwrap(),
            Datum::Zeta { index: ZetaIndex::Two, time: 0.5 }
        );
        let json = serde_json::to_string(&Datum::Constant { value: 3.0 }).unwrap();
        assert_eq!(parse_datum(&json).unwrap(), Datum::Constant { value: 3.0 });
        for bad in ["constant", "constant:x", "indicator:1,2", "zeta:3:1", "blob:1"] {
            assert!(parse_datum(bad).is_err(), "{bad}");
        }
    }
}
