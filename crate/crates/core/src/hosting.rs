//! Stochastic PV hosting capacity.
//!
//! Each scenario is a random order in which houses adopt PV. Penetration is
//! raised in `n_steps` equal increments along that order; every (scenario,
//! step) deployment is simulated over the load week and checked against the
//! overvoltage limit.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, LogNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::feeder::FeederModel;
use crate::load::NodeAllocation;
use crate::power_flow::{run_qsts, PowerFlowError, PvProfiles, QstsOptions, SweepNetwork};
use crate::rng::substream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenetrationBasis {
    /// Installed kWp over the feeder's peak apparent power.
    CapacityRatio,
    /// Share of customers with PV.
    CustomerFraction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Optimal,
    Random,
    Fixed,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Optimal, Strategy::Random, Strategy::Fixed];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Optimal => "optimal",
            Strategy::Random => "random",
            Strategy::Fixed => "fixed",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "optimal" => Ok(Strategy::Optimal),
            "random" => Ok(Strategy::Random),
            "fixed" => Ok(Strategy::Fixed),
            other => Err(format!("unknown strategy \"{other}\" (expected optimal, random or fixed)")),
        }
    }
}

/// Truncated log-normal PV size distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomDist {
    pub median_kw: f64,
    pub sigma: f64,
    pub min_kw: f64,
    pub max_kw: f64,
}

impl Default for RandomDist {
    fn default() -> Self {
        Self {
            median_kw: 5.0,
            sigma: 0.5,
            min_kw: 1.0,
            max_kw: 15.0,
        }
    }
}

impl RandomDist {
    fn validate(&self) -> Result<(), HostingError> {
        let ok = self.median_kw > 0.0
            && self.sigma >= 0.0
            && self.sigma.is_finite()
            && 0.0 <= self.min_kw
            && self.min_kw <= self.median_kw
            && self.median_kw <= self.max_kw;
        if ok {
            Ok(())
        } else {
            Err(HostingError::BadConfig(format!("invalid random size distribution {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StochasticConfig {
    pub m_scenarios: usize,
    pub n_steps: usize,
    pub overvoltage_limit_pu: f64,
    pub penetration_basis: PenetrationBasis,
    pub strategy: Strategy,
    pub fixed_kw: f64,
    pub random_dist: RandomDist,
    pub rng_seed: u64,
}

impl Default for StochasticConfig {
    fn default() -> Self {
        Self {
            m_scenarios: 100,
            n_steps: 20,
            overvoltage_limit_pu: 1.05,
            penetration_basis: PenetrationBasis::CapacityRatio,
            strategy: Strategy::Optimal,
            fixed_kw: 10.0,
            random_dist: RandomDist::default(),
            rng_seed: 0,
        }
    }
}

impl StochasticConfig {
    pub fn validate(&self) -> Result<(), HostingError> {
        if self.m_scenarios == 0 || self.n_steps == 0 {
            return Err(HostingError::BadConfig("m_scenarios and n_steps must be at least 1".into()));
        }
        if !(self.overvoltage_limit_pu > 1.0) {
            return Err(HostingError::BadConfig(format!(
                "overvoltage limit {} pu must exceed 1.0",
                self.overvoltage_limit_pu
            )));
        }
        if !(self.fixed_kw >= 0.0) {
            return Err(HostingError::BadConfig(format!("fixed_kw {} must be non-negative", self.fixed_kw)));
        }
        self.random_dist.validate()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum HostingError {
    #[error("no houses to deploy PV on")]
    NoHouses,
    #[error("{0}")]
    BadConfig(String),
    #[error("optimal strategy needs one sizing result per house: expected {expected}, got {got}")]
    MissingSizing { expected: usize, got: usize },
    #[error("scenario {scenario}, step {step}: {source}")]
    Solver {
        scenario: usize,
        step: usize,
        source: PowerFlowError,
    },
    #[error("step {step} outside 0..={n_steps}")]
    StepOutOfRange { step: usize, n_steps: usize },
    #[error("input mismatch: {0}")]
    Inputs(String),
}

/// A simulated house: its load node and the pool profile it was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct House {
    pub node: usize,
    pub slot: usize,
    pub profile: usize,
}

/// Houses in node order, then draw order within a node.
pub fn houses(allocations: &[NodeAllocation]) -> Vec<House> {
    allocations
        .iter()
        .flat_map(|a| {
            a.profiles.iter().enumerate().map(move |(slot, &profile)| House {
                node: a.node,
                slot,
                profile,
            })
        })
        .collect()
}

/// One random adoption order per scenario, each from its own substream.
pub fn generate_scenarios(n_houses: usize, config: &StochasticConfig) -> Vec<Vec<usize>> {
    (0..config.m_scenarios)
        .map(|m| scenario_order(n_houses, config.rng_seed, m))
        .collect()
}

fn scenario_order(n_houses: usize, seed: u64, scenario: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n_houses).collect();
    order.shuffle(&mut substream(seed, "scenario", scenario as u64));
    order
}

/// Installed kW for every house (indexed like `houses`) in one scenario.
///
/// Random sizes are drawn per house in house order from the scenario's own
/// substream, so they do not depend on the adoption order.
pub fn assign_capacities(
    n_houses: usize,
    config: &StochasticConfig,
    optimal_kw: Option<&[f64]>,
    scenario: usize,
) -> Result<Vec<f64>, HostingError> {
    match config.strategy {
        Strategy::Fixed => Ok(vec![config.fixed_kw; n_houses]),
        Strategy::Optimal => {
            let sizes = optimal_kw.ok_or(HostingError::MissingSizing {
                expected: n_houses,
                got: 0,
            })?;
            if sizes.len() != n_houses {
                return Err(HostingError::MissingSizing {
                    expected: n_houses,
                    got: sizes.len(),
                });
            }
            Ok(sizes.to_vec())
        }
        Strategy::Random => {
            let d = config.random_dist;
            d.validate()?;
            if d.sigma == 0.0 {
                return Ok(vec![d.median_kw; n_houses]);
            }
            let dist = LogNormal::new(d.median_kw.ln(), d.sigma)
                .map_err(|e| HostingError::BadConfig(format!("random size distribution: {e}")))?;
            let mut rng = substream(config.rng_seed, "random-size", scenario as u64);
            Ok((0..n_houses)
                .map(|_| loop {
                    let kw = dist.sample(&mut rng);
                    if (d.min_kw..=d.max_kw).contains(&kw) {
                        break kw;
                    }
                })
                .collect())
        }
    }
}

/// Number of houses (a prefix of `order`) carrying PV at each step 0..=N.
pub fn deployment_counts(order: &[usize], kw: &[f64], config: &StochasticConfig, basis_kva: f64) -> Vec<usize> {
    let h = order.len();
    let n = config.n_steps;
    match config.penetration_basis {
        PenetrationBasis::CustomerFraction => (0..=n).map(|s| (s * h).div_ceil(n)).collect(),
        PenetrationBasis::CapacityRatio => {
            let mut cumulative = Vec::with_capacity(h + 1);
            cumulative.push(0.0);
            for &house in order {
                cumulative.push(cumulative.last().copied().unwrap_or(0.0) + kw[house]);
            }
            (0..=n)
                .map(|s| {
                    let target = s as f64 / n as f64 * basis_kva;
                    // Smallest prefix reaching the target; every house if none does.
                    cumulative.partition_point(|&c| c < target).min(h)
                })
                .collect()
        }
    }
}

/// Per-house PV capacity for one scenario at one step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PvDeployment {
    pub scenario: usize,
    pub step: usize,
    /// Houses adopting PV so far, including optimal houses sized at 0 kW.
    pub n_deployed: usize,
    pub house_kw: Vec<f64>,
    pub total_kw: f64,
    pub penetration: f64,
}

fn penetration(config: &StochasticConfig, n_deployed: usize, n_houses: usize, total_kw: f64, basis_kva: f64) -> f64 {
    match config.penetration_basis {
        PenetrationBasis::CapacityRatio => total_kw / basis_kva,
        PenetrationBasis::CustomerFraction => n_deployed as f64 / n_houses as f64,
    }
}

/// The nested deployments of one scenario, steps 0..=N.
pub fn scenario_deployments(
    n_houses: usize,
    config: &StochasticConfig,
    optimal_kw: Option<&[f64]>,
    basis_kva: f64,
    scenario: usize,
) -> Result<Vec<PvDeployment>, HostingError> {
    let order = scenario_order(n_houses, config.rng_seed, scenario);
    let kw = assign_capacities(n_houses, config, optimal_kw, scenario)?;
    let counts = deployment_counts(&order, &kw, config, basis_kva);
    Ok(counts
        .iter()
        .enumerate()
        .map(|(step, &count)| {
            let mut house_kw = vec![0.0; n_houses];
            for &h in &order[..count] {
                house_kw[h] = kw[h];
            }
            let total_kw = order[..count].iter().map(|&h| kw[h]).sum();
            PvDeployment {
                scenario,
                step,
                n_deployed: count,
                house_kw,
                total_kw,
                penetration: penetration(config, count, n_houses, total_kw, basis_kva),
            }
        })
        .collect())
}

/// Everything a study needs besides its configuration.
#[derive(Debug, Clone, Copy)]
pub struct StudyInputs<'a> {
    pub feeder: &'a FeederModel,
    pub allocations: &'a [NodeAllocation],
    /// Per load node demand in kW at `resolution_s`.
    pub nodal_loads: &'a [Vec<f64>],
    /// Per-unit PV output over the same horizon.
    pub pv_shape: &'a [f64],
    pub resolution_s: u32,
    /// Feeder peak apparent power for the capacity-ratio basis.
    pub basis_kva: f64,
    /// Optimal kW per house (required for the optimal strategy).
    pub optimal_kw: Option<&'a [f64]>,
    pub qsts: &'a QstsOptions,
}

/// Feeder-head peak apparent power for a per-node load set.
pub fn feeder_peak_kva(nodal_loads: &[Vec<f64>], power_factor: f64) -> f64 {
    let n = nodal_loads.first().map_or(0, Vec::len);
    let peak = (0..n)
        .map(|t| nodal_loads.iter().map(|s| s[t]).sum::<f64>())
        .fold(0.0, f64::max);
    peak / power_factor
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub scenario: usize,
    pub step: usize,
    pub penetration: f64,
    pub n_deployed: usize,
    pub total_kw: f64,
    pub max_v_pu: f64,
    pub max_bus: String,
    pub max_timestep: usize,
    pub violation: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercentileSummary {
    pub step: usize,
    pub min: f64,
    pub p5: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p95: f64,
    pub max: f64,
}

impl PercentileSummary {
    pub const LABELS: [&'static str; 7] = ["min", "p5", "p25", "p50", "p75", "p95", "max"];

    pub fn values(&self) -> [f64; 7] {
        [self.min, self.p5, self.p25, self.p50, self.p75, self.p95, self.max]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HostingCapacityResult {
    pub config: StochasticConfig,
    pub resolution_s: u32,
    pub basis_kva: f64,
    pub n_houses: usize,
    /// Scenario-major, step-minor.
    pub records: Vec<StepRecord>,
    /// First violating step of each scenario.
    pub first_violation_step: Vec<Option<usize>>,
    pub violation_observed: bool,
    /// Smallest installed kW at a first violation; without any violation,
    /// the smallest 100%-step capacity.
    pub min_hosting_capacity_kw: f64,
    pub step_summaries: Vec<PercentileSummary>,
}

impl HostingCapacityResult {
    pub fn record(&self, scenario: usize, step: usize) -> &StepRecord {
        &self.records[scenario * (self.config.n_steps + 1) + step]
    }
}

/// Type-7 (linear interpolation) empirical quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn summarize(step: usize, values: &mut [f64]) -> PercentileSummary {
    values.sort_by(f64::total_cmp);
    PercentileSummary {
        step,
        min: values[0],
        p5: quantile_sorted(values, 0.05),
        p25: quantile_sorted(values, 0.25),
        p50: quantile_sorted(values, 0.50),
        p75: quantile_sorted(values, 0.75),
        p95: quantile_sorted(values, 0.95),
        max: values[values.len() - 1],
    }
}

/// Distribution of per-scenario maximum voltage at one step.
pub fn max_voltage_distribution(result: &HostingCapacityResult, step: usize) -> Result<PercentileSummary, HostingError> {
    let n_steps = result.config.n_steps;
    if step > n_steps {
        return Err(HostingError::StepOutOfRange { step, n_steps });
    }
    let mut values: Vec<f64> = (0..result.config.m_scenarios)
        .map(|m| result.record(m, step).max_v_pu)
        .collect();
    Ok(summarize(step, &mut values))
}

struct RunSummary {
    max_v_pu: f64,
    max_bus: usize,
    max_timestep: usize,
}

fn simulate(inputs: &StudyInputs<'_>, net: &SweepNetwork, node_kw: &[f64]) -> Result<RunSummary, PowerFlowError> {
    let pv = if node_kw.iter().all(|&k| k == 0.0) {
        PvProfiles::None
    } else {
        PvProfiles::Scaled {
            node_kw,
            shape: inputs.pv_shape,
        }
    };
    let r = run_qsts(inputs.feeder, net, inputs.nodal_loads, pv, inputs.resolution_s, inputs.qsts)?;
    let (t, s) = r.peak();
    Ok(RunSummary {
        max_v_pu: s.max_v_pu,
        max_bus: s.max_bus,
        max_timestep: t,
    })
}

/// Runs every (scenario, step) deployment and derives hosting capacity.
///
/// Work is spread over the current rayon pool; records are assembled in
/// (scenario, step) order, so the result does not depend on the pool size.
pub fn run_study(inputs: &StudyInputs<'_>, config: &StochasticConfig) -> Result<HostingCapacityResult, HostingError> {
    config.validate()?;
    let hs = houses(inputs.allocations);
    if hs.is_empty() {
        return Err(HostingError::NoHouses);
    }
    if inputs.nodal_loads.len() != inputs.feeder.load_nodes.len() {
        return Err(HostingError::Inputs(format!(
            "{} nodal load series for {} load nodes",
            inputs.nodal_loads.len(),
            inputs.feeder.load_nodes.len()
        )));
    }
    if config.penetration_basis == PenetrationBasis::CapacityRatio && !(inputs.basis_kva > 0.0) {
        return Err(HostingError::BadConfig(format!("basis {} kVA must be positive", inputs.basis_kva)));
    }
    let net = SweepNetwork::new(inputs.feeder);
    let n_nodes = inputs.feeder.load_nodes.len();

    let deployments: Vec<Vec<PvDeployment>> = (0..config.m_scenarios)
        .into_par_iter()
        .map(|m| scenario_deployments(hs.len(), config, inputs.optimal_kw, inputs.basis_kva, m))
        .collect::<Result<_, _>>()?;

    // Identical node capacities give identical runs (every scenario's step 0,
    // and steps past full deployment); simulate each distinct one once.
    let mut jobs: Vec<(usize, usize, Vec<f64>)> = Vec::new();
    let mut job_of: Vec<usize> = Vec::with_capacity(deployments.len() * (config.n_steps + 1));
    let mut zero_job = None;
    for (m, steps) in deployments.iter().enumerate() {
        let mut previous: Option<(usize, &Vec<f64>)> = None;
        for d in steps {
            let mut node_kw = vec![0.0; n_nodes];
            for (h, &kw) in hs.iter().zip(&d.house_kw) {
                node_kw[h.node] += kw;
            }
            let is_zero = node_kw.iter().all(|&k| k == 0.0);
            let reuse = match previous {
                Some((j, prev)) if prev == &d.house_kw => Some(j),
                _ if is_zero => zero_job,
                _ => None,
            };
            let j = match reuse {
                Some(j) => j,
                None => {
                    jobs.push((m, d.step, node_kw));
                    jobs.len() - 1
                }
            };
            if is_zero {
                zero_job = Some(j);
            }
            job_of.push(j);
            previous = Some((j, &d.house_kw));
        }
    }

    let runs: Vec<RunSummary> = jobs
        .par_iter()
        .map(|(m, step, node_kw)| {
            simulate(inputs, &net, node_kw).map_err(|source| HostingError::Solver {
                scenario: *m,
                step: *step,
                source,
            })
        })
        .collect::<Result<_, _>>()?;

    let limit = config.overvoltage_limit_pu;
    let mut records = Vec::with_capacity(job_of.len());
    for (steps, jobs_of_scenario) in deployments.iter().zip(job_of.chunks(config.n_steps + 1)) {
        for (d, &j) in steps.iter().zip(jobs_of_scenario) {
            let run = &runs[j];
            records.push(StepRecord {
                scenario: d.scenario,
                step: d.step,
                penetration: d.penetration,
                n_deployed: d.n_deployed,
                total_kw: d.total_kw,
                max_v_pu: run.max_v_pu,
                max_bus: inputs.feeder.buses[run.max_bus].id.clone(),
                max_timestep: run.max_timestep,
                violation: run.max_v_pu > limit,
            });
        }
    }
    let n1 = config.n_steps + 1;
    let first_violation_step: Vec<Option<usize>> = records
        .chunks(n1)
        .map(|steps| steps.iter().find(|r| r.violation).map(|r| r.step))
        .collect();
    let violation_observed = first_violation_step.iter().any(Option::is_some);
    let min_hosting_capacity_kw = if violation_observed {
        records
            .chunks(n1)
            .zip(&first_violation_step)
            .filter_map(|(steps, first)| first.map(|s| steps[s].total_kw))
            .fold(f64::INFINITY, f64::min)
    } else {
        records
            .chunks(n1)
            .map(|steps| steps[config.n_steps].total_kw)
            .fold(f64::INFINITY, f64::min)
    };

    let mut result = HostingCapacityResult {
        config: config.clone(),
        resolution_s: inputs.resolution_s,
        basis_kva: inputs.basis_kva,
        n_houses: hs.len(),
        records,
        first_violation_step,
        violation_observed,
        min_hosting_capacity_kw,
        step_summaries: Vec::new(),
    };
    result.step_summaries = (0..=config.n_steps)
        .map(|s| max_voltage_distribution(&result, s))
        .collect::<Result<_, _>>()?;
    Ok(result)
}
