//! JSON experiment configuration.
//!
//! Every struct rejects unknown keys. The top level carries the mandatory seed and
//! one `experiment` object whose `kind` selects the schema of the rest.

use std::path::PathBuf;

use qbsde::constants::{NormInputs, PartitionInputs};
use qbsde::generators::{GalleryParams, SamplePlan, StructuralParams};
use qbsde::system::PicardOptions;
use qbsde::transforms::PlanarQuadratic;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    Solve(SolveConfig),
    Classify(ClassifyConfig),
    Constants(ConstantsConfig),
    Transform(TransformConfig),
    Norms(NormsConfig),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Solve(_) => "solve",
            Experiment::Classify(_) => "classify",
            Experiment::Constants(_) => "constants",
            Experiment::Transform(_) => "transform",
            Experiment::Norms(_) => "norms",
        }
    }
}

/// A gallery label with Brownian dimension and parameter overrides.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorRef {
    pub label: String,
    #[serde(default = "one")]
    pub d: usize,
    #[serde(default)]
    pub params: GalleryParams,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub horizon: f64,
    pub steps: usize,
}

/// Terminal value as a function of `B_T`, one entry per component.
///
/// Vectors of length one are broadcast to all components.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TerminalConfig {
    /// `amplitude · sin(frequency · B_T[coordinate] + phase)`
    Sine {
        amplitude: Vec<f64>,
        frequency: Vec<f64>,
        #[serde(default)]
        phase: Vec<f64>,
        #[serde(default)]
        coordinate: Vec<usize>,
    },
    /// `clamp(slope · B_T[coordinate], −clip, clip)`
    Clipped {
        slope: Vec<f64>,
        clip: f64,
        #[serde(default)]
        coordinate: Vec<usize>,
    },
    Constant { values: Vec<f64> },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    #[default]
    Picard,
    /// Backward pasting of windows of `window_steps` grid steps.
    Paste,
    /// One scalar solve; needs a one-component generator.
    Scalar,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub generator: GeneratorRef,
    pub grid: GridConfig,
    pub paths: usize,
    pub terminal: TerminalConfig,
    #[serde(default)]
    pub method: SolveMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_steps: Option<usize>,
    #[serde(default)]
    pub solver: PicardOptions,
    /// Compare `Y_0` with the exponential-transform value (pure-quadratic only).
    #[serde(default)]
    pub oracle: bool,
    /// Residual over every start time instead of the window start only.
    #[serde(default)]
    pub residual_all_starts: bool,
    /// Sampled every this many steps in `timeseries.csv`.
    #[serde(default = "one")]
    pub series_stride: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyConfig {
    pub generator: GeneratorRef,
    /// The plan's own seed is replaced by the top-level seed.
    #[serde(default)]
    pub plan: SamplePlan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Chain {
    Local,
    Pasting,
    Partition,
    Young,
}

fn default_chains() -> Vec<Chain> {
    vec![Chain::Local]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    pub params: StructuralParams,
    pub inputs: NormInputs,
    #[serde(default = "default_chains")]
    pub chains: Vec<Chain>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<PartitionInputs>,
    #[serde(default = "default_young_samples")]
    pub young_samples: usize,
}

fn default_young_samples() -> usize {
    100_000
}

fn default_samples() -> usize {
    1000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum TransformConfig {
    /// First row `b`, identity below; pivots on the first non-zero entry of `b`.
    RowReplacement { b: Vec<f64> },
    /// First row `b`, row `i ≥ 2` equal to `a₁ e_i − a_i e_1`.
    PinnedColumn { a: Vec<f64>, b: Vec<f64> },
    /// A user matrix, optionally applied to a gallery generator.
    Linear {
        matrix: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        generator: Option<GeneratorRef>,
    },
    Planar { quadratic: PlanarQuadratic },
    /// The planar pair `z^i (z¹ + z²) − (κ_i/2)(z^i)²` with `κ = (alpha, beta)`.
    ReciprocalPair { alpha: f64, beta: f64 },
    NonsolvablePair {
        theta1: f64,
        vartheta1: f64,
        theta2: f64,
        vartheta2: f64,
        #[serde(default = "one")]
        d: usize,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    /// Solve with `ξ = ξ̄ + ∫ h dB` through the shifted problem and reconstruct.
    Shift {
        generator: GeneratorRef,
        grid: GridConfig,
        paths: usize,
        /// Constant `H`, row-major `n×d`.
        h: Vec<f64>,
        terminal: TerminalConfig,
        #[serde(default)]
        solver: PicardOptions,
    },
}

/// A non-negative scalar process on the grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProcessConfig {
    Constant { value: f64 },
    /// `min(scale · |B_t|, cap)` on the first coordinate.
    AbsBrownian { scale: f64, cap: f64 },
    /// `value · 1{|B_t| > level}`
    Indicator { level: f64, value: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormsConfig {
    pub grid: GridConfig,
    pub paths: usize,
    pub process: ProcessConfig,
    #[serde(default = "default_rates")]
    pub rates: Vec<f64>,
    /// Also run the John–Nirenberg comparison with this relative slack.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub john_nirenberg_slack: Option<f64>,
    #[serde(default)]
    pub regression: qbsde::regression::RegressionOptions,
}

fn default_rates() -> Vec<f64> {
    vec![1.0]
}
