//! Experiment configuration: one TOML file per run.
//!
//! ```toml
//! scenario = "estimates"
//! equation = "mbo"
//!
//! [ensemble]
//! seed = 7
//! count = 16
//! law = "packet"
//!
//! [estimates]
//! list = ["bilinear", "maximal"]
//! ns = [3, 4, 5, 6]
//! ```
//!
//! Unknown keys are rejected. Every field has a default, so an empty file with only
//! `scenario` is valid.

use std::path::{Path, PathBuf};

use dispersive_core::{DataLaw, DispersionLaw, Ensemble};
use serde::{Deserialize, Serialize};

use crate::scenarios;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("field `{field}`: {message}")]
    Field { field: &'static str, message: String },
}

fn field(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field { field, message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Equation {
    Mbo,
    Dnls,
}

impl Equation {
    pub fn law(self) -> DispersionLaw {
        match self {
            Self::Mbo => DispersionLaw::BenjaminOno,
            Self::Dnls => DispersionLaw::Schroedinger,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleConfig {
    pub seed: u64,
    pub count: usize,
    pub law: DataLaw,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self { seed: 1, count: 8, law: DataLaw::Packet }
    }
}

impl EnsembleConfig {
    pub fn ensemble(&self) -> Ensemble {
        Ensemble::new(self.seed, self.count, self.law)
    }
}

/// Parameters of the `estimates` scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatesConfig {
    /// any of `l4`, `strichartz`, `bilinear`, `maximal`, `smoothing`, `smoothing_log`
    pub list: Vec<String>,
    pub ns: Vec<usize>,
}

impl Default for EstimatesConfig {
    fn default() -> Self {
        Self { list: Vec::new(), ns: (3..=8).collect() }
    }
}

pub const ESTIMATES: [&str; 6] = ["l4", "strichartz", "bilinear", "maximal", "smoothing", "smoothing_log"];

/// Parameters of the `trilinear` scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrilinearConfig {
    /// class labels `i` .. `vi`
    pub classes: Vec<String>,
}

impl Default for TrilinearConfig {
    fn default() -> Self {
        Self { classes: ["i", "ii", "iii", "iv", "v", "vi"].map(String::from).to_vec() }
    }
}

/// Parameters of the `energy` scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyConfig {
    /// dyadic blocks carried by the power symbol `⟨ξ⟩^{2s}`
    pub symbol_blocks: usize,
    /// integrator steps between snapshots
    pub every: usize,
    /// largest admissible relative cancellation discrepancy
    pub tolerance: f64,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self { symbol_blocks: 8, every: 4, tolerance: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("lab-out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub scenario: String,
    pub equation: Equation,
    /// sign of the cubic term
    pub sigma: f64,
    pub s: f64,
    pub lambdas: Vec<f64>,
    /// spatial grid size `M`
    pub grid: usize,
    /// integrator step; the stability-based default when absent
    pub dt: Option<f64>,
    /// final time `T`
    pub horizon: f64,
    /// `‖u₀‖_{H^s}` of the initial data
    pub amplitude: f64,
    /// highest mode of the random initial data
    pub max_mode: i64,
    /// largest admissible `sup_t ‖u(t)‖_{H^s} / ‖u₀‖_{H^s}` in the `apriori` scenario
    pub growth_bound: f64,
    pub ensemble: EnsembleConfig,
    pub estimates: EstimatesConfig,
    pub trilinear: TrilinearConfig,
    pub energy: EnergyConfig,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: String::new(),
            equation: Equation::Mbo,
            sigma: 1.0,
            s: 0.3,
            lambdas: vec![1.0],
            grid: 128,
            dt: None,
            horizon: 1.0,
            amplitude: 0.05,
            max_mode: 16,
            growth_bound: 4.0,
            ensemble: EnsembleConfig::default(),
            estimates: EstimatesConfig::default(),
            trilinear: TrilinearConfig::default(),
            energy: EnergyConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn for_scenario(name: &str) -> Self {
        Self { scenario: name.to_string(), ..Self::default() }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !scenarios::names().iter().any(|n| *n == self.scenario) {
            return Err(field("scenario", format!("unknown scenario {:?}; see `list-scenarios`", self.scenario)));
        }
        if self.sigma != 1.0 && self.sigma != -1.0 {
            return Err(field("sigma", "must be 1 or -1"));
        }
        if !(self.s.is_finite() && self.s > 0.0) {
            return Err(field("s", "must be positive"));
        }
        if matches!(self.scenario.as_str(), "apriori" | "energy") && self.s <= 0.25 {
            return Err(field("s", "the energy method needs s > 1/4"));
        }
        if self.lambdas.is_empty() || self.lambdas.iter().any(|&l| !(l.is_finite() && l >= 1.0)) {
            return Err(field("lambdas", "need at least one period scale, each >= 1"));
        }
        if !self.grid.is_power_of_two() || self.grid < 8 {
            return Err(field("grid", "must be a power of two >= 8"));
        }
        if self.dt.is_some_and(|dt| !(dt.is_finite() && dt > 0.0)) {
            return Err(field("dt", "must be positive"));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(field("horizon", "must be positive"));
        }
        if !(self.amplitude.is_finite() && self.amplitude > 0.0) {
            return Err(field("amplitude", "must be positive"));
        }
        if self.max_mode < 1 || self.max_mode as usize >= self.grid / 2 {
            return Err(field("max_mode", "must lie in 1..grid/2"));
        }
        if !(self.growth_bound >= 1.0) {
            return Err(field("growth_bound", "must be at least 1"));
        }
        if self.ensemble.count == 0 {
            return Err(field("ensemble.count", "must be positive"));
        }
        if let Some(bad) = self.estimates.list.iter().find(|e| !ESTIMATES.contains(&e.as_str())) {
            return Err(field("estimates.list", format!("unknown estimate {bad:?}; known: {}", ESTIMATES.join(", "))));
        }
        if !self.estimates.list.is_empty() && self.estimates.ns.len() < 3 {
            return Err(field("estimates.ns", "a slope fit needs at least three values"));
        }
        if let Some(bad) = self.trilinear.classes.iter().find(|c| scenarios::class_by_label(c).is_none()) {
            return Err(field("trilinear.classes", format!("unknown interaction class {bad:?}")));
        }
        if self.energy.every == 0 {
            return Err(field("energy.every", "must be positive"));
        }
        if !(self.energy.tolerance > 0.0) {
            return Err(field("energy.tolerance", "must be positive"));
        }
        Ok(())
    }

    pub fn dt_for(&self, geometry: &dispersive_core::TorusGeometry<f64>) -> f64 {
        self.dt.unwrap_or_else(|| dispersive_core::evolution::default_dt(geometry, self.equation.law()))
    }
}
