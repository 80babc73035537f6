//! JSON configuration schemas for the command-line tools.

use serde::{Deserialize, Serialize};

use crate::circuit_estimator::{EstimatorConfig, Method};
use crate::contracts::ContractSpec;
use crate::error::{invalid, Result};
use crate::gaussian_loader::TrainOptions;
use crate::market_model::{GbmParams, GridSpec};
use crate::pricing::Sampling;
use crate::qarith::{FixedPointFormat, PolyParams};

fn default_paths() -> u64 {
    100_000
}

/// Input of `price-mc` and `price-exact`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PricingConfig {
    pub model: GbmParams,
    pub contract: ContractSpec,
    #[serde(default = "default_paths")]
    pub paths: u64,
    /// Lattice for exact enumeration or lattice-sampled Monte Carlo.
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub sampling: Sampling,
}

impl PricingConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.contract.validate()?;
        if let Some(g) = &self.grid {
            g.validate()?;
        }
        Ok(())
    }
}

fn default_target() -> f64 {
    2e-3
}

fn default_confidence() -> f64 {
    0.68
}

fn all_methods() -> Vec<Method> {
    vec![Method::Riemann, Method::RiemannNoNorm, Method::Reparam]
}

/// Input of `estimate-resources` and `error-budget`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceConfig {
    pub model: GbmParams,
    pub contract: ContractSpec,
    #[serde(default = "all_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    /// Target total error in units of f_δ.
    #[serde(default = "default_target")]
    pub target_error: f64,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
}

impl ResourceConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.contract.validate()?;
        if self.methods.is_empty() {
            return Err(invalid("methods", "list at least one method"));
        }
        Ok(())
    }
}

fn default_epsilons() -> Vec<f64> {
    vec![1e-2, 3e-3, 1e-3, 3e-4]
}

fn default_alpha() -> f64 {
    0.32
}

/// Input of `iqae-demo`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IqaeDemoConfig {
    #[serde(default = "default_amplitude")]
    pub a: f64,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_runs")]
    pub runs: usize,
}

fn default_amplitude() -> f64 {
    0.3
}

fn default_runs() -> usize {
    200
}

impl Default for IqaeDemoConfig {
    fn default() -> Self {
        Self {
            a: default_amplitude(),
            epsilons: default_epsilons(),
            alpha: default_alpha(),
            runs: default_runs(),
        }
    }
}

/// Input of `train-loader`: a grid of register sizes and depths, plus optional
/// digitization levels applied to the best circuit of every cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainLoaderConfig {
    pub qubits: Vec<u32>,
    pub depths: Vec<u32>,
    #[serde(default)]
    pub options: TrainOptions,
    #[serde(default)]
    pub digitize: Vec<u64>,
}

impl TrainLoaderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.qubits.is_empty() || self.depths.is_empty() {
            return Err(invalid("qubits, depths", "need at least one of each"));
        }
        if self.digitize.iter().any(|&m| m < 4) {
            return Err(invalid("digitize", "grid sizes must be at least 4"));
        }
        Ok(())
    }
}

fn default_fmt() -> FixedPointFormat {
    FixedPointFormat { n: 34, p: 2 }
}

fn default_z() -> u32 {
    4
}

fn default_eps() -> f64 {
    1e-4
}

/// Input of `qarith`: one register format and the approximation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QarithConfig {
    #[serde(default = "default_fmt")]
    pub fmt: FixedPointFormat,
    #[serde(default = "default_z")]
    pub z: u32,
    #[serde(default = "default_eps")]
    pub epsilon: f64,
    #[serde(default)]
    pub poly: Option<PolyParams>,
}

impl Default for QarithConfig {
    fn default() -> Self {
        Self {
            fmt: default_fmt(),
            z: default_z(),
            epsilon: default_eps(),
            poly: None,
        }
    }
}
