//! On-disk artifacts passed between pipeline stages.

use std::path::Path;

use feederhc::hosting::HostingCapacityResult;
use feederhc::load::NodeAllocation;
use feederhc::pv_sizing::Candidate;
use feederhc::zonal::{CapacityCell, ZoneDelta};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const ALLOCATION_JSON: &str = "allocation.json";
pub const SIZING_JSON: &str = "sizing.json";
pub const HOSTING_JSON: &str = "hosting.json";
pub const FIGS_7_9_CSV: &str = "figs7-9.csv";
pub const FIG_10_CSV: &str = "fig10.csv";
pub const ZONES_JSON: &str = "zones.json";
pub const ZONAL_CSV: &str = "zonal.csv";
pub const ZONAL_JSON: &str = "zonal.json";
pub const TABLE2_CSV: &str = "table2.csv";
pub const REPORT_TXT: &str = "report.txt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HouseEntry {
    pub id: String,
    /// Identifier of the pool profile this house was drawn from.
    pub profile: String,
    pub pool_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeEntry {
    pub node: usize,
    pub bus: String,
    pub phase: String,
    pub peak_kw: f64,
    pub aggregate_peak_kw: f64,
    pub n_houses: usize,
    pub houses: Vec<HouseEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationArtifact {
    pub feeder: String,
    pub seed: u64,
    pub pool_resolution_s: u32,
    pub pool_size: usize,
    pub total_houses: usize,
    pub feeder_peak_kw: f64,
    pub nodes: Vec<NodeEntry>,
}

impl AllocationArtifact {
    /// Node allocations without aggregate series; callers rebuild those from
    /// a pool at the resolution they need.
    pub fn allocations(&self) -> Vec<NodeAllocation> {
        self.nodes
            .iter()
            .map(|n| NodeAllocation {
                node: n.node,
                profiles: n.houses.iter().map(|h| h.pool_index).collect(),
                aggregate_peak_kw: n.aggregate_peak_kw,
                aggregate_kw: Vec::new(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSizing {
    pub pool_index: usize,
    pub profile: String,
    pub optimal_kw: f64,
    pub candidates: Vec<Candidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionSizing {
    pub resolution_s: u32,
    pub profiles: Vec<ProfileSizing>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HouseSizing {
    pub id: String,
    pub bus: String,
    pub pool_index: usize,
    /// Optimal kW at the pool resolution.
    pub optimal_kw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizingArtifact {
    pub seed: u64,
    pub pool_resolution_s: u32,
    pub houses: Vec<HouseSizing>,
    pub resolutions: Vec<ResolutionSizing>,
}

impl SizingArtifact {
    /// Optimal kW per house (in house order) from data at `resolution_s`.
    pub fn house_kw(&self, allocation: &AllocationArtifact, resolution_s: u32) -> Result<Vec<f64>, CliError> {
        let table = self
            .resolutions
            .iter()
            .find(|r| r.resolution_s == resolution_s)
            .ok_or_else(|| {
                CliError::Input(format!(
                    "{SIZING_JSON} has no sizing at {resolution_s} s; re-run `size` with the current config"
                ))
            })?;
        allocation
            .nodes
            .iter()
            .flat_map(|n| &n.houses)
            .map(|h| {
                table
                    .profiles
                    .iter()
                    .find(|p| p.pool_index == h.pool_index)
                    .map(|p| p.optimal_kw)
                    .ok_or_else(|| CliError::Input(format!("{SIZING_JSON} does not cover profile {}", h.profile)))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HostingArtifact {
    pub feeder: String,
    pub seed: u64,
    pub resolution_s: u32,
    pub basis_kva: f64,
    pub results: Vec<HostingCapacityResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneEntry {
    pub id: usize,
    pub buses: Vec<String>,
    pub load_buses: Vec<String>,
    pub centroid_ohm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZonalArtifact {
    pub feeder: String,
    pub seed: u64,
    pub k: usize,
    pub basis_kva: f64,
    pub zones: Vec<ZoneEntry>,
    pub deltas: Vec<ZoneDelta>,
    pub table: Vec<CapacityCell>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Input(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn read_json<T: DeserializeOwned>(path: &Path, producer: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e} (run `{producer}` first)", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, CliError> {
    csv::Writer::from_path(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}
