//! Zonal PV deployment: partition the feeder into connected zones, put PV on
//! every house of one zone at a time, and measure how much the zone's
//! maximum voltage rises.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feeder::{electrical_distances, FeederModel};
use crate::hosting::{
    assign_capacities, houses, run_study, HostingCapacityResult, HostingError, StochasticConfig, Strategy, StudyInputs,
};
use crate::load::NodeAllocation;
use crate::power_flow::{run_qsts, PowerFlowError, PvProfiles, QstsOptions, SweepNetwork};

#[derive(Debug, Error, PartialEq)]
pub enum ZonalError {
    #[error("zone count {k} must be between 1 and the number of load buses ({load_buses})")]
    BadZoneCount { k: usize, load_buses: usize },
    #[error("could not cut the feeder into {0} connected zones")]
    Unpartitionable(usize),
    #[error("zone {zone}: {source}")]
    Solver { zone: usize, source: PowerFlowError },
    #[error(transparent)]
    Hosting(#[from] HostingError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    /// 1-based, in order of increasing centroid distance.
    pub id: usize,
    pub buses: Vec<String>,
    /// Load node indices inside the zone.
    pub load_nodes: Vec<usize>,
    /// Mean electrical distance of the zone's load buses, ohms.
    pub centroid_ohm: f64,
    #[serde(skip)]
    bus_index: Vec<usize>,
}

impl Zone {
    pub fn bus_indices(&self) -> &[usize] {
        &self.bus_index
    }
}

/// Splits the feeder into `k` connected, disjoint zones covering every bus.
///
/// Works bottom-up: a bus whose not-yet-zoned subtree holds at least the
/// running target of load nodes (remaining nodes over remaining zones, times
/// a scale factor) closes that subtree as a zone. The root keeps whatever is
/// left. Closing whole subtrees keeps every zone connected. Passes over a
/// range of scale factors are compared and the most balanced one is kept.
pub fn partition(feeder: &FeederModel, k: usize) -> Result<Vec<Zone>, ZonalError> {
    let n_bus = feeder.buses.len();
    let mut weight = vec![0usize; n_bus];
    for n in 0..feeder.load_nodes.len() {
        weight[feeder.load_node_bus(n)] += 1;
    }
    let load_buses = weight.iter().filter(|&&w| w > 0).count();
    if k == 0 || k > load_buses {
        return Err(ZonalError::BadZoneCount { k, load_buses });
    }
    let total: usize = weight.iter().sum();
    let post_order = post_order(feeder);

    // Scan target scales and keep the most balanced k-zone cut; earlier
    // scales win ties, so the choice is deterministic.
    let ideal = total as f64 / k as f64;
    let mut best: Option<(f64, Vec<usize>)> = None;
    for step in 0..=300 {
        let scale = 1.5 - step as f64 * 0.005;
        let Some(assignment) = cut_pass(feeder, &post_order, &weight, total, k, scale) else {
            continue;
        };
        let mut counts = vec![0usize; k];
        for (bus, &z) in assignment.iter().enumerate() {
            counts[z] += weight[bus];
        }
        let spread = counts.iter().map(|&c| (c as f64 - ideal).abs()).fold(0.0, f64::max);
        if best.as_ref().is_none_or(|(s, _)| spread < *s) {
            best = Some((spread, assignment));
        }
    }
    best.map(|(_, assignment)| build_zones(feeder, &assignment, k))
        .ok_or(ZonalError::Unpartitionable(k))
}

fn post_order(feeder: &FeederModel) -> Vec<usize> {
    let children = feeder.children();
    let mut order = Vec::with_capacity(feeder.buses.len());
    let mut stack = vec![(feeder.source_index(), false)];
    while let Some((bus, expanded)) = stack.pop() {
        if expanded {
            order.push(bus);
        } else {
            stack.push((bus, true));
            for &c in children[bus].iter().rev() {
                stack.push((c, false));
            }
        }
    }
    order
}

/// One greedy pass; `Some(zone index per bus)` when exactly `k` zones result.
fn cut_pass(
    feeder: &FeederModel,
    post_order: &[usize],
    weight: &[usize],
    total: usize,
    k: usize,
    scale: f64,
) -> Option<Vec<usize>> {
    let children = feeder.children();
    let n_bus = weight.len();
    let mut pending = vec![0usize; n_bus];
    let mut zone_of = vec![usize::MAX; n_bus];
    let mut remaining_loads = total;
    let mut remaining_zones = k;
    let mut next_zone = 0;
    let root = feeder.source_index();
    for &bus in post_order {
        pending[bus] = weight[bus] + children[bus].iter().map(|&c| pending[c]).sum::<usize>();
        if bus == root || remaining_zones < 2 || pending[bus] == 0 {
            continue;
        }
        let target = scale * remaining_loads as f64 / remaining_zones as f64;
        let after = remaining_loads - pending[bus];
        if pending[bus] as f64 >= target && after >= remaining_zones - 1 {
            assign_subtree(&children, bus, next_zone, &mut zone_of);
            next_zone += 1;
            remaining_loads = after;
            remaining_zones -= 1;
            pending[bus] = 0;
        }
    }
    if remaining_zones != 1 || remaining_loads == 0 {
        return None;
    }
    for z in &mut zone_of {
        if *z == usize::MAX {
            *z = next_zone;
        }
    }
    Some(zone_of)
}

fn assign_subtree(children: &[Vec<usize>], top: usize, zone: usize, zone_of: &mut [usize]) {
    let mut stack = vec![top];
    while let Some(b) = stack.pop() {
        if zone_of[b] != usize::MAX {
            continue;
        }
        zone_of[b] = zone;
        stack.extend(children[b].iter().copied());
    }
}

fn build_zones(feeder: &FeederModel, zone_of: &[usize], k: usize) -> Vec<Zone> {
    let dist = electrical_distances(feeder);
    let mut groups: Vec<(Vec<usize>, Vec<usize>)> = vec![(Vec::new(), Vec::new()); k];
    for (bus, &z) in zone_of.iter().enumerate() {
        groups[z].0.push(bus);
    }
    for n in 0..feeder.load_nodes.len() {
        groups[zone_of[feeder.load_node_bus(n)]].1.push(n);
    }
    let mut zones: Vec<Zone> = groups
        .into_iter()
        .map(|(buses, nodes)| {
            let load_buses: BTreeSet<usize> = nodes.iter().map(|&n| feeder.load_node_bus(n)).collect();
            let centroid = load_buses.iter().map(|&b| dist[b]).sum::<f64>() / load_buses.len() as f64;
            Zone {
                id: 0,
                buses: buses.iter().map(|&b| feeder.buses[b].id.clone()).collect(),
                load_nodes: nodes,
                centroid_ohm: centroid,
                bus_index: buses,
            }
        })
        .collect();
    zones.sort_by(|a, b| {
        a.centroid_ohm
            .total_cmp(&b.centroid_ohm)
            .then_with(|| a.bus_index.cmp(&b.bus_index))
    });
    for (i, z) in zones.iter_mut().enumerate() {
        z.id = i + 1;
    }
    zones
}

/// Voltage-change metric for one zone, strategy and resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneDelta {
    pub zone: usize,
    pub strategy: Strategy,
    pub resolution_s: u32,
    pub installed_kw: f64,
    pub delta_v_pu: f64,
    pub max_v_with: f64,
    pub max_v_without: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ZonalResult {
    pub deltas: Vec<ZoneDelta>,
}

impl ZonalResult {
    pub fn get(&self, zone: usize, strategy: Strategy, resolution_s: u32) -> Option<&ZoneDelta> {
        self.deltas
            .iter()
            .find(|d| d.zone == zone && d.strategy == strategy && d.resolution_s == resolution_s)
    }
}

/// Load and PV inputs at one data resolution.
#[derive(Debug, Clone, Copy)]
pub struct ResolutionCase<'a> {
    pub resolution_s: u32,
    pub nodal_loads: &'a [Vec<f64>],
    pub pv_shape: &'a [f64],
    /// Optimal kW per house sized from data at this resolution.
    pub optimal_kw: Option<&'a [f64]>,
}

/// Puts PV on every house of each zone in turn (strategy capacities, full
/// feeder load) and compares the zone's week-maximum voltage with the no-PV
/// run.
pub fn zonal_study(
    feeder: &FeederModel,
    allocations: &[NodeAllocation],
    zones: &[Zone],
    config: &StochasticConfig,
    case: &ResolutionCase<'_>,
    qsts: &QstsOptions,
) -> Result<Vec<ZoneDelta>, ZonalError> {
    let hs = houses(allocations);
    let kw = assign_capacities(hs.len(), config, case.optimal_kw, 0)?;
    let net = SweepNetwork::new(feeder);
    let monitor: Vec<Vec<usize>> = zones.iter().map(|z| z.bus_index.clone()).collect();
    let base_opts = QstsOptions {
        monitor: monitor.clone(),
        ..qsts.clone()
    };
    let base = run_qsts(feeder, &net, case.nodal_loads, PvProfiles::None, case.resolution_s, &base_opts)
        .map_err(|source| ZonalError::Solver { zone: 0, source })?
        .monitored_peak();

    zones
        .par_iter()
        .enumerate()
        .map(|(z, zone)| {
            let mut node_kw = vec![0.0; feeder.load_nodes.len()];
            let mut installed = 0.0;
            for (h, &k) in hs.iter().zip(&kw) {
                if zone.load_nodes.binary_search(&h.node).is_ok() {
                    node_kw[h.node] += k;
                    installed += k;
                }
            }
            let without = base[z];
            let with = if installed == 0.0 {
                without
            } else {
                let opts = QstsOptions {
                    monitor: vec![monitor[z].clone()],
                    ..qsts.clone()
                };
                let pv = PvProfiles::Scaled {
                    node_kw: &node_kw,
                    shape: case.pv_shape,
                };
                run_qsts(feeder, &net, case.nodal_loads, pv, case.resolution_s, &opts)
                    .map_err(|source| ZonalError::Solver { zone: zone.id, source })?
                    .monitored_peak()[0]
            };
            Ok(ZoneDelta {
                zone: zone.id,
                strategy: config.strategy,
                resolution_s: case.resolution_s,
                installed_kw: installed,
                delta_v_pu: with - without,
                max_v_with: with,
                max_v_without: without,
            })
        })
        .collect()
}

/// One cell of the strategy × resolution hosting-capacity table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityCell {
    pub strategy: Strategy,
    pub resolution_s: u32,
    pub min_hosting_capacity_kw: f64,
    pub violation_observed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionComparison {
    pub zonal: ZonalResult,
    pub table: Vec<CapacityCell>,
    #[serde(skip)]
    pub hosting: Vec<HostingCapacityResult>,
}

/// Zonal and hosting-capacity studies for every strategy at every resolution.
///
/// `base` supplies everything but the strategy; the capacity-ratio basis is
/// shared across resolutions so the capacities are comparable.
#[allow(clippy::too_many_arguments)]
pub fn resolution_comparison(
    feeder: &FeederModel,
    allocations: &[NodeAllocation],
    zones: &[Zone],
    strategies: &[Strategy],
    cases: &[ResolutionCase<'_>],
    base: &StochasticConfig,
    basis_kva: f64,
    qsts: &QstsOptions,
) -> Result<ResolutionComparison, ZonalError> {
    let mut out = ResolutionComparison {
        zonal: ZonalResult::default(),
        table: Vec::new(),
        hosting: Vec::new(),
    };
    for &strategy in strategies {
        let config = StochasticConfig {
            strategy,
            ..base.clone()
        };
        for case in cases {
            out.zonal
                .deltas
                .extend(zonal_study(feeder, allocations, zones, &config, case, qsts)?);
            let inputs = StudyInputs {
                feeder,
                allocations,
                nodal_loads: case.nodal_loads,
                pv_shape: case.pv_shape,
                resolution_s: case.resolution_s,
                basis_kva,
                optimal_kw: case.optimal_kw,
                qsts,
            };
            let hc = run_study(&inputs, &config)?;
            out.table.push(CapacityCell {
                strategy,
                resolution_s: case.resolution_s,
                min_hosting_capacity_kw: hc.min_hosting_capacity_kw,
                violation_observed: hc.violation_observed,
            });
            out.hosting.push(hc);
        }
    }
    Ok(out)
}
