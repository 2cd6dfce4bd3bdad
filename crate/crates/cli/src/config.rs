//! The experiment configuration document.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use depauw_core::mollify::MollifierSpec;
use depauw_core::transport::ResidualQuadrature;
use depauw_core::weaklimit::{DualityQuadrature, LagrangianQuadrature};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// RK4 step choice for numeric flows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum DtPolicy {
    /// `1/(32k)` for mollified fields, `1e-3` otherwise.
    FieldDefault,
    Fixed { dt: f64 },
}

impl DtPolicy {
    pub fn dt(&self) -> Option<f64> {
        match self {
            DtPolicy::FieldDefault => None,
            DtPolicy::Fixed { dt } => Some(*dt),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub residual: ResidualQuadrature,
    pub duality: DualityQuadrature,
    /// Duality quadrature along the numeric (mollified) flow.
    pub duality_numeric: DualityQuadrature,
    /// Midpoint cells per unit length for trajectory pairings.
    pub lagrangian_per_unit: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            residual: ResidualQuadrature::default(),
            duality: DualityQuadrature::default(),
            duality_numeric: DualityQuadrature {
                per_unit: 64,
                ..DualityQuadrature::default()
            },
            lagrangian_per_unit: LagrangianQuadrature::default().per_unit,
        }
    }
}

/// Acceptance thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub rotation: f64,
    pub orientation: f64,
    pub speed_slack: f64,
    pub jacobian: f64,
    pub pairing: f64,
    pub duality_exact: f64,
    pub duality_numeric: f64,
    pub mollifier_gap_floor: f64,
    pub residual: f64,
    pub residual_refinement: f64,
    pub negative_control: f64,
    pub distinctness: f64,
    pub tv_spread: f64,
    pub rotation_seconds: f64,
    pub refining_seconds: f64,
    pub duality_seconds: f64,
    pub selection_seconds: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rotation: 1e-12,
            orientation: 1e-4,
            speed_slack: 1e-9,
            jacobian: 1e-3,
            pairing: 1e-12,
            duality_exact: 1e-3,
            duality_numeric: 1e-2,
            mollifier_gap_floor: 1e-2,
            residual: 1e-3,
            residual_refinement: 4.0,
            negative_control: 0.1,
            distinctness: 0.9,
            tv_spread: 0.05,
            rotation_seconds: 5.0,
            refining_seconds: 10.0,
            duality_seconds: 60.0,
            selection_seconds: 600.0,
        }
    }
}

/// Sample counts and sizes of the individual experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sizes {
    pub rotation_points: usize,
    /// Points also integrated with the fine RK4 oracle.
    pub oracle_points: usize,
    pub oracle_dt: f64,
    /// Highest `k` in the local-average and approximation checks.
    pub average_levels: u32,
    /// Window half-width for the approximation-sequence data.
    pub datum_window: f64,
    pub flow_samples: usize,
    pub jacobian_ks: Vec<u32>,
    pub jacobian_step: f64,
    /// Samples (a prefix of the speed samples) for Jacobians and flow deviations.
    pub jacobian_samples: usize,
    pub square_samples: usize,
    pub duality_pairs: usize,
    pub duality_k: u32,
    pub residual_bumps: usize,
    pub nonuniqueness_level: u32,
    pub support_samples: usize,
    pub tv_levels: u32,
    /// Difference-grid points per epoch cell side.
    pub tv_points_per_cell: usize,
    pub backward_time: f64,
    pub backward_tests: usize,
}

impl Default for Sizes {
    fn default() -> Self {
        Self {
            rotation_points: 1000,
            oracle_points: 100,
            oracle_dt: 1e-6,
            average_levels: 10,
            datum_window: 1.0,
            flow_samples: 10_000,
            jacobian_ks: vec![4, 8],
            jacobian_step: 1e-5,
            jacobian_samples: 1000,
            square_samples: 2000,
            duality_pairs: 3,
            duality_k: 8,
            residual_bumps: 5,
            nonuniqueness_level: 6,
            support_samples: 10_000,
            tv_levels: 6,
            tv_points_per_cell: 64,
            backward_time: 0.25,
            backward_tests: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Window half-width `R`.
    pub window: f64,
    /// Finest epoch resolved by the exact flow.
    pub max_level: u32,
    /// Samples per side of solution grids.
    pub grid: usize,
    pub dt: DtPolicy,
    pub quadrature: QuadratureConfig,
    pub mollifiers: Vec<MollifierSpec>,
    pub ks: Vec<u32>,
    pub tolerances: Tolerances,
    pub sizes: Sizes,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            window: 4.0,
            max_level: 16,
            grid: 512,
            dt: DtPolicy::FieldDefault,
            quadrature: QuadratureConfig::default(),
            mollifiers: vec![MollifierSpec::tensor_bump(), MollifierSpec::shifted_bump()],
            ks: vec![4, 8, 16],
            tolerances: Tolerances::default(),
            sizes: Sizes::default(),
            seed: 1,
            out: PathBuf::from("depauw-out"),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: Self = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        Ok(cfg)
    }

    pub fn lagrangian(&self) -> LagrangianQuadrature {
        LagrangianQuadrature {
            per_unit: self.quadrature.lagrangian_per_unit,
            dt: self.dt.dt(),
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            bail!("unsupported schema_version {} (expected {SCHEMA_VERSION})", self.schema_version);
        }
        let positive = [
            ("window", self.window),
            ("sizes.oracle_dt", self.sizes.oracle_dt),
            ("sizes.datum_window", self.sizes.datum_window),
            ("sizes.jacobian_step", self.sizes.jacobian_step),
            ("sizes.backward_time", self.sizes.backward_time),
            ("quadrature.residual.piece", self.quadrature.residual.piece),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                bail!("{name} must be positive, got {v}");
            }
        }
        if let DtPolicy::Fixed { dt } = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                bail!("dt must be positive, got {dt}");
            }
        }
        let counts = [
            ("max_level", self.max_level as usize),
            ("grid", self.grid),
            ("quadrature.lagrangian_per_unit", self.quadrature.lagrangian_per_unit),
            ("quadrature.duality.per_unit", self.quadrature.duality.per_unit),
            ("quadrature.duality.time_panels", self.quadrature.duality.time_panels),
            ("quadrature.duality.time_order", self.quadrature.duality.time_order),
            ("quadrature.duality_numeric.per_unit", self.quadrature.duality_numeric.per_unit),
            ("quadrature.duality_numeric.time_panels", self.quadrature.duality_numeric.time_panels),
            ("quadrature.duality_numeric.time_order", self.quadrature.duality_numeric.time_order),
            ("quadrature.residual.time_panels", self.quadrature.residual.time_panels),
            ("quadrature.residual.time_order", self.quadrature.residual.time_order),
            ("quadrature.residual.space_order", self.quadrature.residual.space_order),
            ("quadrature.residual.grid", self.quadrature.residual.grid),
            ("sizes.rotation_points", self.sizes.rotation_points),
            ("sizes.flow_samples", self.sizes.flow_samples),
            ("sizes.jacobian_samples", self.sizes.jacobian_samples),
            ("sizes.duality_pairs", self.sizes.duality_pairs),
            ("sizes.residual_bumps", self.sizes.residual_bumps),
            ("sizes.nonuniqueness_level", self.sizes.nonuniqueness_level as usize),
            ("sizes.support_samples", self.sizes.support_samples),
            ("sizes.tv_points_per_cell", self.sizes.tv_points_per_cell),
            ("sizes.backward_tests", self.sizes.backward_tests),
        ];
        for (name, v) in counts {
            if v == 0 {
                bail!("{name} must be positive");
            }
        }
        if self.mollifiers.is_empty() {
            bail!("at least one mollifier is required");
        }
        for (name, ks) in [("ks", &self.ks), ("sizes.jacobian_ks", &self.sizes.jacobian_ks)] {
            if ks.is_empty() || ks.contains(&0) || ks.windows(2).any(|w| w[1] <= w[0]) {
                bail!("{name} must be positive and strictly increasing, got {ks:?}");
            }
        }
        if self.sizes.oracle_points > self.sizes.rotation_points {
            bail!("sizes.oracle_points exceeds sizes.rotation_points");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_and_validate() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), cfg);
        let partial: ExperimentConfig = serde_json::from_str(r#"{"schema_version": 1, "ks": [2, 4]}"#).unwrap();
        assert_eq!(partial.ks, vec![2, 4]);
        assert_eq!(partial.window, cfg.window);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            r#"{"ks": [4, 4]}"#,
            r#"{"ks": []}"#,
            r#"{"window": -1}"#,
            r#"{"mollifiers": []}"#,
            r#"{"schema_version": 2}"#,
            r#"{"dt": {"policy": "fixed", "dt": 0}}"#,
        ];
        for text in bad {
            let cfg: ExperimentConfig = serde_json::from_str(text).unwrap();
            assert!(cfg.validate().is_err(), "{text}");
        }
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"typo": 1}"#).is_err());
    }
}
