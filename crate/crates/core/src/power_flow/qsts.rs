//! Quasi-static time-series simulation.

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use super::regulator::{apply_regulator_logic, band_direction};
use super::sweep::{SolverOptions, SweepNetwork, SweepSolver};
use super::PowerFlowError;
use crate::feeder::{FeederModel, Phase};

/// PV generation applied at load nodes.
#[derive(Debug, Clone, Copy)]
pub enum PvProfiles<'a> {
    None,
    /// Installed kW per load node times one common per-unit output shape.
    Scaled { node_kw: &'a [f64], shape: &'a [f64] },
    /// Explicit output series in kW, one per load node.
    Series(&'a [Vec<f64>]),
}

impl PvProfiles<'_> {
    fn output_kw(&self, node: usize, step: usize) -> f64 {
        match self {
            PvProfiles::None => 0.0,
            PvProfiles::Scaled { node_kw, shape } => node_kw[node] * shape[step],
            PvProfiles::Series(series) => series[node][step],
        }
    }
}

#[derive(Debug, Clone)]
pub struct QstsOptions {
    pub solver: SolverOptions,
    /// Load power factor (lagging); PV runs at unity.
    pub power_factor: f64,
    pub regulators_enabled: bool,
    /// Bus-index sets whose maximum voltage is tracked each step.
    pub monitor: Vec<Vec<usize>>,
    /// Keep every node voltage at every step (for trace export).
    pub keep_voltages: bool,
}

impl Default for QstsOptions {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            power_factor: 0.95,
            regulators_enabled: true,
            monitor: Vec::new(),
            keep_voltages: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepSummary {
    pub max_v_pu: f64,
    /// Bus index of the maximum.
    pub max_bus: usize,
    pub max_phase: Phase,
    pub min_v_pu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QstsResult {
    pub resolution_s: u32,
    pub steps: Vec<StepSummary>,
    /// Per step, the maximum voltage within each monitored bus set.
    pub monitored_max: Vec<Vec<f64>>,
    /// Per step, regulator taps in effect for the recorded solution.
    pub tap_trace: Vec<Vec<i32>>,
    /// Per step, every phase-node voltage magnitude (when requested).
    pub voltages: Vec<Vec<f64>>,
}

impl QstsResult {
    /// Step with the largest voltage, and that voltage.
    pub fn peak(&self) -> (usize, StepSummary) {
        let mut best = 0;
        for (k, s) in self.steps.iter().enumerate() {
            if s.max_v_pu > self.steps[best].max_v_pu {
                best = k;
            }
        }
        (best, self.steps[best])
    }

    pub fn max_v_pu(&self) -> f64 {
        self.peak().1.max_v_pu
    }

    /// Maximum over all steps for each monitored set.
    pub fn monitored_peak(&self) -> Vec<f64> {
        let sets = self.monitored_max.first().map_or(0, Vec::len);
        (0..sets)
            .map(|z| self.monitored_max.iter().map(|s| s[z]).fold(f64::MIN, f64::max))
            .collect()
    }

    /// Writes `timestep,bus,phase,v_pu` rows; requires `keep_voltages`.
    pub fn write_voltage_trace<W: Write>(
        &self,
        feeder: &FeederModel,
        net: &SweepNetwork,
        out: W,
    ) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["timestep", "bus", "phase", "v_pu"])?;
        for (t, row) in self.voltages.iter().enumerate() {
            for (node, v) in net.nodes.iter().zip(row) {
                w.write_record([
                    t.to_string(),
                    feeder.buses[node.bus].id.clone(),
                    node.phase.to_string(),
                    format!("{v:.9}"),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Phase nodes and their share of a load node's power.
fn load_node_targets(feeder: &FeederModel, net: &SweepNetwork) -> Vec<Vec<(usize, f64)>> {
    (0..feeder.load_nodes.len())
        .map(|n| {
            let bus = feeder.load_node_bus(n);
            let phases = feeder.load_nodes[n].phase.phases();
            let share = 1.0 / phases.len() as f64;
            phases
                .iter()
                .map(|p| (net.node(bus, p).expect("validated load phase"), share))
                .collect()
        })
        .collect()
}

fn check_len(what: impl Into<String>, got: usize, expected: usize) -> Result<(), PowerFlowError> {
    if got == expected {
        Ok(())
    } else {
        Err(PowerFlowError::LengthMismatch {
            what: what.into(),
            expected,
            got,
        })
    }
}

/// Runs sequential snapshots over the profile horizon.
///
/// `loads` holds one kW series per load node. Regulator state carries across
/// steps: a regulator out of band for at least its delay moves one tap, the
/// step is re-solved, and the re-solved state is recorded.
pub fn run_qsts(
    feeder: &FeederModel,
    net: &SweepNetwork,
    loads: &[Vec<f64>],
    pv: PvProfiles<'_>,
    resolution_s: u32,
    opts: &QstsOptions,
) -> Result<QstsResult, PowerFlowError> {
    check_len("load node series", loads.len(), feeder.load_nodes.len())?;
    let horizon = loads.first().map_or(0, Vec::len);
    for (n, series) in loads.iter().enumerate() {
        check_len(format!("load series of node {n}"), series.len(), horizon)?;
    }
    match pv {
        PvProfiles::None => {}
        PvProfiles::Scaled { node_kw, shape } => {
            check_len("PV node capacities", node_kw.len(), feeder.load_nodes.len())?;
            check_len("PV shape", shape.len(), horizon)?;
        }
        PvProfiles::Series(series) => {
            check_len("PV node series", series.len(), feeder.load_nodes.len())?;
            for (n, s) in series.iter().enumerate() {
                check_len(format!("PV series of node {n}"), s.len(), horizon)?;
            }
        }
    }

    let targets = load_node_targets(feeder, net);
    let base = feeder.phase_base_kva();
    let tan_phi = (1.0 / (opts.power_factor * opts.power_factor) - 1.0).max(0.0).sqrt();

    let mut monitor_nodes: Vec<Vec<usize>> = opts
        .monitor
        .iter()
        .map(|buses| buses.iter().flat_map(|&b| net.bus_nodes(b)).collect())
        .collect();
    for set in &mut monitor_nodes {
        set.sort_unstable();
    }

    let mut regs = feeder.regulators.clone();
    let mut elapsed = vec![0.0f64; regs.len()];
    let mut ratios: Vec<f64> = regs.iter().map(|r| r.ratio(r.current_tap)).collect();
    let reg_nodes: Vec<Vec<usize>> = feeder
        .regulators
        .iter()
        .map(|r| {
            let b = feeder.branches.iter().position(|b| b.id == r.branch_id).expect("validated regulator");
            let child = feeder
                .oriented_branches()
                .iter()
                .find(|ob| ob.branch == b)
                .expect("branch in tree")
                .child_bus;
            net.bus_nodes(child).collect()
        })
        .collect();

    let mut solver = SweepSolver::new(net);
    let mut s = vec![Complex64::new(0.0, 0.0); net.len()];
    let mut result = QstsResult {
        resolution_s,
        steps: Vec::with_capacity(horizon),
        monitored_max: Vec::with_capacity(if monitor_nodes.is_empty() { 0 } else { horizon }),
        tap_trace: Vec::with_capacity(if regs.is_empty() { 0 } else { horizon }),
        voltages: Vec::new(),
    };
    let dt = f64::from(resolution_s);

    for step in 0..horizon {
        s.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
        for (n, parts) in targets.iter().enumerate() {
            let p_load = loads[n][step];
            let p_net = p_load - pv.output_kw(n, step);
            let demand = Complex64::new(p_net, p_load * tan_phi) / base;
            for &(node, share) in parts {
                s[node] += demand * share;
            }
        }

        let mut stats = solver.solve(net, &s, &ratios, &opts.solver);
        if opts.regulators_enabled && !regs.is_empty() && stats.converged {
            let mut moved = false;
            for (r, reg) in regs.iter_mut().enumerate() {
                let nodes = &reg_nodes[r];
                let v = nodes.iter().map(|&k| solver.voltage[k].norm()).sum::<f64>() / nodes.len() as f64;
                if band_direction(reg, v) == 0 {
                    elapsed[r] = 0.0;
                    continue;
                }
                elapsed[r] += dt;
                let tap = apply_regulator_logic(reg, v, elapsed[r]);
                if tap != reg.current_tap {
                    reg.current_tap = tap;
                    ratios[r] = reg.ratio(tap);
                    moved = true;
                }
            }
            if moved {
                stats = solver.solve(net, &s, &ratios, &opts.solver);
            }
        }
        if !stats.converged {
            return Err(PowerFlowError::NonConvergence {
                step,
                iterations: stats.iterations,
            });
        }

        let mut best = 0;
        let mut max_v = f64::MIN;
        let mut min_v = f64::MAX;
        for (k, v) in solver.voltage.iter().enumerate() {
            let m = v.norm();
            if m > max_v {
                max_v = m;
                best = k;
            }
            min_v = min_v.min(m);
        }
        result.steps.push(StepSummary {
            max_v_pu: max_v,
            max_bus: net.nodes[best].bus,
            max_phase: net.nodes[best].phase,
            min_v_pu: min_v,
        });
        if !monitor_nodes.is_empty() {
            result.monitored_max.push(
                monitor_nodes
                    .iter()
                    .map(|set| set.iter().map(|&k| solver.voltage[k].norm()).fold(f64::MIN, f64::max))
                    .collect(),
            );
        }
        if !regs.is_empty() {
            result.tap_trace.push(regs.iter().map(|r| r.current_tap).collect());
        }
        if opts.keep_voltages {
            result.voltages.push(solver.voltage.iter().map(|v| v.norm()).collect());
        }
    }
    Ok(result)
}
