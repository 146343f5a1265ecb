//! Radial power flow: snapshot solves, regulator control and quasi-static
//! time-series simulation.

mod qsts;
mod regulator;
mod sweep;

use num_complex::Complex64;
use thiserror::Error;

use crate::feeder::{FeederModel, Phase};

pub use qsts::{run_qsts, PvProfiles, QstsOptions, QstsResult, StepSummary};
pub use regulator::{apply_regulator_logic, band_direction};
pub use sweep::{PhaseNode, SolverOptions, SweepNetwork, SweepSolver, SweepStats, NO_PARENT};

#[derive(Debug, Error, PartialEq)]
pub enum PowerFlowError {
    #[error("injection on unknown bus \"{0}\"")]
    UnknownBus(String),
    #[error("bus \"{bus}\" does not carry phase {phase}")]
    MissingPhase { bus: String, phase: Phase },
    #[error("expected {expected} regulator taps, got {got}")]
    TapCount { expected: usize, got: usize },
    #[error("profile length mismatch: {what} has {got} steps, expected {expected}")]
    LengthMismatch {
        what: String,
        expected: usize,
        got: usize,
    },
    #[error("power flow did not converge at timestep {step} after {iterations} iterations")]
    NonConvergence { step: usize, iterations: usize },
}

/// Nodal boundary condition for one bus phase. Load is positive, generation
/// negative.
#[derive(Debug, Clone, PartialEq)]
pub struct Injection {
    pub bus_id: String,
    pub phase: Phase,
    pub p_kw: f64,
    pub q_kvar: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeVoltage {
    pub bus_id: String,
    pub phase: Phase,
    pub v_pu: f64,
    pub angle_rad: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchCurrent {
    pub branch_id: String,
    pub phase: Phase,
    pub amps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub voltages: Vec<NodeVoltage>,
    pub currents: Vec<BranchCurrent>,
    pub converged: bool,
    pub iterations: usize,
}

impl Solution {
    pub fn v_pu(&self, bus_id: &str, phase: Phase) -> Option<f64> {
        self.voltages
            .iter()
            .find(|v| v.bus_id == bus_id && v.phase == phase)
            .map(|v| v.v_pu)
    }

    pub fn max_v_pu(&self) -> f64 {
        self.voltages.iter().map(|v| v.v_pu).fold(f64::MIN, f64::max)
    }

    pub fn min_v_pu(&self) -> f64 {
        self.voltages.iter().map(|v| v.v_pu).fold(f64::MAX, f64::min)
    }
}

/// Sums injections into per-node complex demand in per unit.
pub fn injections_to_pu(
    feeder: &FeederModel,
    net: &SweepNetwork,
    injections: &[Injection],
) -> Result<Vec<Complex64>, PowerFlowError> {
    let mut s = vec![Complex64::new(0.0, 0.0); net.len()];
    let base = feeder.phase_base_kva();
    for inj in injections {
        let bus = feeder
            .bus_index(&inj.bus_id)
            .ok_or_else(|| PowerFlowError::UnknownBus(inj.bus_id.clone()))?;
        let node = net.node(bus, inj.phase).ok_or_else(|| PowerFlowError::MissingPhase {
            bus: inj.bus_id.clone(),
            phase: inj.phase,
        })?;
        s[node] += Complex64::new(inj.p_kw, inj.q_kvar) / base;
    }
    Ok(s)
}

/// Regulator ratios for a set of tap positions.
pub fn tap_ratios(feeder: &FeederModel, taps: &[i32]) -> Result<Vec<f64>, PowerFlowError> {
    if taps.len() != feeder.regulators.len() {
        return Err(PowerFlowError::TapCount {
            expected: feeder.regulators.len(),
            got: taps.len(),
        });
    }
    Ok(feeder.regulators.iter().zip(taps).map(|(r, &t)| r.ratio(t)).collect())
}

/// Solves one steady-state snapshot.
///
/// Non-convergence is reported through `Solution::converged`, never hidden.
pub fn solve_snapshot(
    feeder: &FeederModel,
    injections: &[Injection],
    taps: &[i32],
    opts: &SolverOptions,
) -> Result<Solution, PowerFlowError> {
    let net = SweepNetwork::new(feeder);
    let s = injections_to_pu(feeder, &net, injections)?;
    let ratios = tap_ratios(feeder, taps)?;
    let mut solver = SweepSolver::new(&net);
    let stats = solver.solve(&net, &s, &ratios, opts);
    Ok(collect_solution(feeder, &net, &solver, stats))
}

pub(crate) fn collect_solution(
    feeder: &FeederModel,
    net: &SweepNetwork,
    solver: &SweepSolver,
    stats: SweepStats,
) -> Solution {
    let voltages = net
        .nodes
        .iter()
        .zip(&solver.voltage)
        .map(|(node, v)| NodeVoltage {
            bus_id: feeder.buses[node.bus].id.clone(),
            phase: node.phase,
            v_pu: v.norm(),
            angle_rad: v.arg(),
        })
        .collect();
    let currents = net
        .nodes
        .iter()
        .zip(&solver.branch_current)
        .filter_map(|(node, j)| {
            node.branch.map(|b| BranchCurrent {
                branch_id: feeder.branches[b].id.clone(),
                phase: node.phase,
                amps: j.norm() * node.i_base_a,
            })
        })
        .collect();
    Solution {
        voltages,
        currents,
        converged: stats.converged,
        iterations: stats.iterations,
    }
}
