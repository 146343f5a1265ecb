//! Bottom-up allocation of household profiles to feeder load nodes.
//!
//! Profiles are drawn at random and summed until the weekly maximum of the
//! aggregate falls in `(lower_factor * P_i, upper_factor * P_i]`.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::profile::LoadPool;
use crate::feeder::FeederModel;
use crate::rng::substream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationConfig {
    pub upper_factor: f64,
    pub lower_factor: f64,
    pub max_attempts: usize,
    pub rng_seed: u64,
}

impl Default for AllocationConfig {
    fn default() -> Self {
        Self {
            upper_factor: 1.03,
            lower_factor: 0.97,
            max_attempts: 1000,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum AllocationError {
    #[error("load pool is empty")]
    EmptyPool,
    #[error("invalid allocation band: need lower_factor < 1 < upper_factor")]
    BadBand,
    #[error("peak must be positive, got {0} kW")]
    BadPeak(f64),
    #[error("node {node}: no profile combination reaches ({lower_kw:.3}, {upper_kw:.3}] kW after {attempts} attempts")]
    Infeasible {
        node: usize,
        lower_kw: f64,
        upper_kw: f64,
        attempts: usize,
    },
    #[error("allocation failed at {} load node(s): {}", .0.len(), describe(.0))]
    Nodes(Vec<(String, AllocationError)>),
}

fn describe(failures: &[(String, AllocationError)]) -> String {
    failures
        .iter()
        .map(|(bus, e)| format!("[{bus}] {e}"))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Houses assigned to one load node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeAllocation {
    pub node: usize,
    /// Pool indices of the house profiles, in draw order. A pool profile may
    /// template houses at several nodes.
    pub profiles: Vec<usize>,
    pub aggregate_peak_kw: f64,
    pub aggregate_kw: Vec<f64>,
}

impl NodeAllocation {
    pub fn n_houses(&self) -> usize {
        self.profiles.len()
    }

    /// Identifier of the k-th simulated house at this node.
    pub fn house_id(&self, k: usize) -> String {
        format!("n{:03}h{:02}", self.node, k)
    }
}

fn peak(series: &[f64]) -> f64 {
    series.iter().copied().fold(0.0, f64::max)
}

/// Allocates houses to one load node with the node's own random substream.
pub fn allocate_node(
    pool: &LoadPool,
    node: usize,
    peak_kw: f64,
    config: &AllocationConfig,
) -> Result<NodeAllocation, AllocationError> {
    if pool.profiles.is_empty() {
        return Err(AllocationError::EmptyPool);
    }
    if !(config.lower_factor < 1.0 && 1.0 < config.upper_factor) {
        return Err(AllocationError::BadBand);
    }
    if !(peak_kw > 0.0) {
        return Err(AllocationError::BadPeak(peak_kw));
    }
    let lower = config.lower_factor * peak_kw;
    let upper = config.upper_factor * peak_kw;
    let infeasible = || AllocationError::Infeasible {
        node,
        lower_kw: lower,
        upper_kw: upper,
        attempts: config.max_attempts,
    };
    // Demand is non-negative, so an aggregate peaks at least as high as any
    // member. If every single profile overshoots, no draw sequence can succeed.
    let min_single = pool.profiles.iter().map(|p| p.peak_kw()).fold(f64::INFINITY, f64::min);
    if min_single > upper {
        return Err(infeasible());
    }

    let n = pool.profiles[0].kw.len();
    let mut rng = substream(config.rng_seed, "allocation", node as u64);
    let mut order: Vec<usize> = (0..pool.profiles.len()).collect();
    let mut aggregate = vec![0.0; n];
    let mut candidate = vec![0.0; n];
    for _ in 0..config.max_attempts {
        order.shuffle(&mut rng);
        aggregate.iter_mut().for_each(|v| *v = 0.0);
        let mut chosen = Vec::new();
        for &idx in &order {
            let profile = &pool.profiles[idx].kw;
            for ((c, a), p) in candidate.iter_mut().zip(&aggregate).zip(profile) {
                *c = a + p;
            }
            let candidate_peak = peak(&candidate);
            if candidate_peak > upper {
                // Overshoot: discard this draw and try the next one.
                continue;
            }
            std::mem::swap(&mut aggregate, &mut candidate);
            chosen.push(idx);
            if candidate_peak > lower {
                return Ok(NodeAllocation {
                    node,
                    profiles: chosen,
                    aggregate_peak_kw: candidate_peak,
                    aggregate_kw: aggregate,
                });
            }
        }
    }
    Err(infeasible())
}

/// Allocates every load node of the feeder; node results are independent of
/// processing order.
pub fn allocate_feeder(
    feeder: &FeederModel,
    pool: &LoadPool,
    config: &AllocationConfig,
) -> Result<Vec<NodeAllocation>, AllocationError> {
    if pool.profiles.is_empty() {
        return Err(AllocationError::EmptyPool);
    }
    let results: Vec<_> = feeder
        .load_nodes
        .par_iter()
        .enumerate()
        .map(|(i, node)| allocate_node(pool, i, node.peak_kw, config))
        .collect();
    let mut allocations = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(a) => allocations.push(a),
            Err(e) => failures.push((feeder.load_nodes[i].bus_id.clone(), e)),
        }
    }
    if failures.is_empty() {
        Ok(allocations)
    } else {
        Err(AllocationError::Nodes(failures))
    }
}

/// Per-node aggregate demand rebuilt from a (possibly resampled) pool.
pub fn nodal_loads(allocations: &[NodeAllocation], pool: &LoadPool) -> Vec<Vec<f64>> {
    let n = pool.profiles[0].kw.len();
    allocations
        .iter()
        .map(|a| {
            let mut agg = vec![0.0; n];
            for &idx in &a.profiles {
                for (s, v) in agg.iter_mut().zip(&pool.profiles[idx].kw) {
                    *s += v;
                }
            }
            agg
        })
        .collect()
}

/// Feeder-head demand: the pointwise sum of nodal aggregates.
pub fn feeder_head_series(nodal: &[Vec<f64>]) -> Vec<f64> {
    let n = nodal.first().map_or(0, Vec::len);
    let mut head = vec![0.0; n];
    for series in nodal {
        for (h, v) in head.iter_mut().zip(series) {
            *h += v;
        }
    }
    head
}

pub fn total_houses(allocations: &[NodeAllocation]) -> usize {
    allocations.iter().map(NodeAllocation::n_houses).sum()
}
