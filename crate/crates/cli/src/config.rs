//! Study configuration file.

use std::path::{Path, PathBuf};

use feederhc::hosting::{StochasticConfig, Strategy};
use feederhc::load::AllocationConfig;
use feederhc::power_flow::{QstsOptions, SolverOptions};
use feederhc::pv_sizing::{PvCostModel, SizingGrid, DEFAULT_MONTHLY_SCALE};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PoolSource {
    Synthetic { n_houses: usize, resolution_s: u32 },
    Csv { path: PathBuf, resolution_s: u32 },
}

impl PoolSource {
    pub fn resolution_s(&self) -> u32 {
        match self {
            PoolSource::Synthetic { resolution_s, .. } | PoolSource::Csv { resolution_s, .. } => *resolution_s,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeSource {
    #[default]
    Builtin,
    Csv { path: PathBuf, resolution_s: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AllocationSettings {
    pub upper_factor: f64,
    pub lower_factor: f64,
    pub max_attempts: usize,
}

impl Default for AllocationSettings {
    fn default() -> Self {
        let d = AllocationConfig::default();
        Self {
            upper_factor: d.upper_factor,
            lower_factor: d.lower_factor,
            max_attempts: d.max_attempts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZonalSettings {
    pub k: usize,
    pub resolutions: Vec<u32>,
    pub strategies: Vec<Strategy>,
}

impl Default for ZonalSettings {
    fn default() -> Self {
        Self {
            k: 10,
            resolutions: vec![60, 1800],
            strategies: Strategy::ALL.to_vec(),
        }
    }
}

/// Simulation settings. Regulator settings live in the feeder file; the
/// fixture values are engineering choices, not published data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QstsSettings {
    pub power_factor: f64,
    pub source_pu: f64,
    pub regulators_enabled: bool,
    /// Calendar month (1-12) whose PV shape drives the simulated week.
    pub pv_month: usize,
    pub tolerance_pu: f64,
    pub max_iterations: usize,
}

impl Default for QstsSettings {
    fn default() -> Self {
        let s = SolverOptions::default();
        Self {
            power_factor: 0.95,
            source_pu: s.source_pu,
            regulators_enabled: true,
            pv_month: 7,
            tolerance_pu: s.tolerance_pu,
            max_iterations: s.max_iterations,
        }
    }
}

impl QstsSettings {
    pub fn options(&self) -> QstsOptions {
        QstsOptions {
            solver: SolverOptions {
                tolerance_pu: self.tolerance_pu,
                max_iterations: self.max_iterations,
                source_pu: self.source_pu,
            },
            power_factor: self.power_factor,
            regulators_enabled: self.regulators_enabled,
            ..QstsOptions::default()
        }
    }
}

fn default_monthly_scale() -> [f64; 12] {
    DEFAULT_MONTHLY_SCALE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub feeder: PathBuf,
    pub pool: PoolSource,
    pub tariff: PathBuf,
    #[serde(default)]
    pub pv_shape: ShapeSource,
    #[serde(default)]
    pub cost: PvCostModel,
    #[serde(default)]
    pub sizing_grid: SizingGrid,
    /// Demand multipliers per month when the weekly profile is tiled into a year.
    #[serde(default = "default_monthly_scale")]
    pub monthly_scale: [f64; 12],
    #[serde(default)]
    pub allocation: AllocationSettings,
    #[serde(default)]
    pub stochastic: StochasticConfig,
    #[serde(default)]
    pub zonal: ZonalSettings,
    #[serde(default)]
    pub qsts: QstsSettings,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub workers: Option<usize>,
}

impl StudyConfig {
    /// Parses a config file; relative paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut config: StudyConfig =
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(dir);
        Ok(config)
    }

    fn resolve_paths(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        fix(&mut self.feeder);
        fix(&mut self.tariff);
        if let PoolSource::Csv { path, .. } = &mut self.pool {
            fix(path);
        }
        if let ShapeSource::Csv { path, .. } = &mut self.pv_shape {
            fix(path);
        }
        if let Some(out) = &mut self.out {
            fix(out);
        }
    }

    pub fn allocation_config(&self, seed: u64) -> AllocationConfig {
        AllocationConfig {
            upper_factor: self.allocation.upper_factor,
            lower_factor: self.allocation.lower_factor,
            max_attempts: self.allocation.max_attempts,
            rng_seed: seed,
        }
    }
}
