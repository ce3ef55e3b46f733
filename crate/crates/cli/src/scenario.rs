//! Declarative scenario configs: TOML in, validated [`Scenario`] out.
// negated comparisons also reject NaN inputs
#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Unknown keys are hard errors; the resolved scenario (defaults included)
//! is echoed into every run's JSON sidecar.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use frackin_core::grid::Grid1D;
use frackin_core::order::FractionalOrder;

use crate::registry::{BRule, ExternalRule, FieldRule, PairRule};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("validation error: {key}: {message}")]
    Validation { key: String, message: String },
}

fn invalid(key: &str, message: impl ToString) -> ScenarioError {
    ScenarioError::Validation {
        key: key.to_string(),
        message: message.to_string(),
    }
}

/// Uniform axis: nodes `lower + i*h`, `i in 0..count`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub lower: f64,
    pub h: f64,
    pub count: usize,
}

impl AxisSpec {
    pub fn grid(&self, key: &str) -> Result<Grid1D<f64>, ScenarioError> {
        Grid1D::new(self.lower, self.h, self.count).map_err(|e| invalid(key, e))
    }
}

/// Evenly spaced evaluation points.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub dt: f64,
    pub steps: usize,
    #[serde(default = "default_stride")]
    pub output_stride: usize,
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// File stem; the runner writes `<stem>.csv` and `<stem>.json`.
    pub name: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlobSpec {
    pub q_center: f64,
    pub p_center: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum WeightingSpec {
    Plain,
    Fractional,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum FormSpec {
    Continuity,
    Bracket,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SolverSpec {
    CaputoGrid,
    RieszSpectral,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    /// Discrete delta: `1/h` at the node nearest `center`.
    Point {
        center: f64,
    },
    Gaussian {
        center: f64,
        sigma: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevyTableScenario {
    pub alpha: f64,
    pub x: RangeSpec,
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseGridSpec {
    pub q: AxisSpec,
    pub p: AxisSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiouvilleScenario {
    pub alpha: f64,
    #[serde(default = "default_form")]
    pub form: FormSpec,
    pub fields: FieldRule,
    pub grid: PhaseGridSpec,
    pub initial: BlobSpec,
    #[serde(default = "default_weighting")]
    pub weighting: WeightingSpec,
    pub time: TimeSpec,
    pub output: OutputSpec,
}

fn default_form() -> FormSpec {
    FormSpec::Continuity
}

fn default_weighting() -> WeightingSpec {
    WeightingSpec::Plain
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BogoliubovScenario {
    pub alpha: f64,
    pub axis: AxisSpec,
    pub blob: BlobSpec,
    /// Symmetric correlation strength of the two-particle initializer.
    #[serde(default = "default_correlation")]
    pub correlation: f64,
    pub pair_force: PairRule,
    pub external_force: ExternalRule,
    #[serde(default = "default_n_total")]
    pub n_total: usize,
    pub dt: f64,
    pub output: OutputSpec,
}

fn default_correlation() -> f64 {
    0.2
}

fn default_n_total() -> usize {
    2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MagneticSpec {
    pub b: BRule,
    pub axis: AxisSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VlasovScenario {
    pub alpha: f64,
    pub axis: AxisSpec,
    pub blob: BlobSpec,
    pub pair_force: PairRule,
    pub external_force: ExternalRule,
    #[serde(default = "default_n_total")]
    pub n_total: usize,
    #[serde(default)]
    pub magnetic: Option<MagneticSpec>,
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KineticLinearScenario {
    pub alpha: f64,
    pub solver: SolverSpec,
    /// Transport coefficient of the spectral solver.
    #[serde(default = "default_one")]
    pub g: f64,
    /// Advection speed of the grid solver.
    #[serde(default)]
    pub velocity: f64,
    pub q: AxisSpec,
    pub initial: InitialSpec,
    #[serde(default)]
    pub compare: bool,
    pub time: TimeSpec,
    pub output: OutputSpec,
}

fn default_one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SweepOp {
    /// Caputo derivative of x^3 on [0, 1], error at x = 1.
    CaputoCubic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepScenario {
    pub op: SweepOp,
    pub alpha: f64,
    pub resolutions: Vec<usize>,
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scenario {
    LevyTable(LevyTableScenario),
    Liouville(LiouvilleScenario),
    BogoliubovResidual(BogoliubovScenario),
    Vlasov(VlasovScenario),
    KineticLinear(KineticLinearScenario),
    ConvergenceSweep(SweepScenario),
}

impl Scenario {
    pub fn output(&self) -> &OutputSpec {
        match self {
            Scenario::LevyTable(s) => &s.output,
            Scenario::Liouville(s) => &s.output,
            Scenario::BogoliubovResidual(s) => &s.output,
            Scenario::Vlasov(s) => &s.output,
            Scenario::KineticLinear(s) => &s.output,
            Scenario::ConvergenceSweep(s) => &s.output,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Scenario::LevyTable(_) => "levy-table",
            Scenario::Liouville(_) => "liouville",
            Scenario::BogoliubovResidual(_) => "bogoliubov-residual",
            Scenario::Vlasov(_) => "vlasov",
            Scenario::KineticLinear(_) => "kinetic-linear",
            Scenario::ConvergenceSweep(_) => "convergence-sweep",
        }
    }
}

fn check_alpha(alpha: f64) -> Result<(), ScenarioError> {
    FractionalOrder::new(alpha)
        .map(|_| ())
        .map_err(|e| invalid("alpha", e))
}

fn check_time(time: &TimeSpec) -> Result<(), ScenarioError> {
    if !(time.dt > 0.0 && time.dt.is_finite()) {
        return Err(invalid("time.dt", "must be positive"));
    }
    if time.output_stride == 0 {
        return Err(invalid("time.output_stride", "must be >= 1"));
    }
    Ok(())
}

fn check_output(output: &OutputSpec) -> Result<(), ScenarioError> {
    if output.name.is_empty() || output.name.contains(['/', '\\']) {
        return Err(invalid("output.name", "must be a bare file stem"));
    }
    Ok(())
}

/// Parse a TOML document into a validated scenario.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let scenario: Scenario = toml::from_str(text)?;
    validate(&scenario)?;
    Ok(scenario)
}

fn validate(scenario: &Scenario) -> Result<(), ScenarioError> {
    check_output(scenario.output())?;
    match scenario {
        Scenario::LevyTable(s) => {
            check_alpha(s.alpha)?;
            if s.x.count == 0 {
                return Err(invalid("x.count", "must be >= 1"));
            }
            if !(s.x.step > 0.0) {
                return Err(invalid("x.step", "must be positive"));
            }
        }
        Scenario::Liouville(s) => {
            check_alpha(s.alpha)?;
            check_time(&s.time)?;
            s.grid.q.grid("grid.q")?;
            s.grid.p.grid("grid.p")?;
            if !(s.initial.sigma > 0.0) {
                return Err(invalid("initial.sigma", "must be positive"));
            }
        }
        Scenario::BogoliubovResidual(s) => {
            check_alpha(s.alpha)?;
            s.axis.grid("axis")?;
            if !(s.dt > 0.0) {
                return Err(invalid("dt", "must be positive"));
            }
            if s.n_total < 1 {
                return Err(invalid("n_total", "must be >= 1"));
            }
            if s.correlation.abs() >= 1.0 {
                return Err(invalid("correlation", "must lie in (-1, 1)"));
            }
        }
        Scenario::Vlasov(s) => {
            check_alpha(s.alpha)?;
            s.axis.grid("axis")?;
            if let Some(m) = &s.magnetic {
                m.axis.grid("magnetic.axis")?;
            }
            if s.n_total < 1 {
                return Err(invalid("n_total", "must be >= 1"));
            }
        }
        Scenario::KineticLinear(s) => {
            check_alpha(s.alpha)?;
            check_time(&s.time)?;
            s.q.grid("q")?;
            if s.solver == SolverSpec::RieszSpectral && !s.q.count.is_power_of_two() {
                return Err(invalid("q.count", "riesz-spectral needs a power of two"));
            }
            if !(s.g > 0.0) {
                return Err(invalid("g", "must be positive"));
            }
        }
        Scenario::ConvergenceSweep(s) => {
            check_alpha(s.alpha)?;
            if s.resolutions.len() < 2 {
                return Err(invalid("resolutions", "need at least two resolutions"));
            }
            if s.resolutions.windows(2).any(|w| w[1] <= w[0]) {
                return Err(invalid("resolutions", "must be strictly increasing"));
            }
        }
    }
    Ok(())
}
