//! Per-phase backward/forward sweep over a radial network.

use num_complex::Complex64;

use crate::feeder::{FeederModel, Phase};

pub const NO_PARENT: usize = usize::MAX;

/// Convergence controls for the sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop when the largest complex voltage update falls below this (pu).
    pub tolerance_pu: f64,
    pub max_iterations: usize,
    /// Source voltage magnitude (pu).
    pub source_pu: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance_pu: 1e-8,
            max_iterations: 100,
            source_pu: 1.0,
        }
    }
}

/// One energized (bus, phase) pair.
#[derive(Debug, Clone, Copy)]
pub struct PhaseNode {
    pub bus: usize,
    pub phase: Phase,
    /// Parent node, or [`NO_PARENT`] for a source phase.
    pub parent: usize,
    /// Feeding branch index into `feeder.branches`.
    pub branch: Option<usize>,
    pub z_pu: Complex64,
    pub regulator: Option<usize>,
    /// Current base of the node's voltage level, amperes.
    pub i_base_a: f64,
}

/// Decoupled per-phase view of a feeder, parents ordered before children.
#[derive(Debug, Clone)]
pub struct SweepNetwork {
    pub nodes: Vec<PhaseNode>,
    node_of: Vec<[Option<usize>; 3]>,
}

impl SweepNetwork {
    pub fn new(feeder: &FeederModel) -> Self {
        let mut nodes = Vec::new();
        let mut node_of = vec![[None; 3]; feeder.buses.len()];
        let source = feeder.source_index();
        let i_base = |bus: usize| {
            let kv_ln = feeder.buses[bus].nominal_kv_ll / 3f64.sqrt();
            feeder.phase_base_kva() / kv_ln
        };
        for phase in Phase::ALL {
            if !feeder.buses[source].phases.contains(phase) {
                continue;
            }
            node_of[source][phase.index()] = Some(nodes.len());
            nodes.push(PhaseNode {
                bus: source,
                phase,
                parent: NO_PARENT,
                branch: None,
                z_pu: Complex64::new(0.0, 0.0),
                regulator: None,
                i_base_a: i_base(source),
            });
            for ob in feeder.oriented_branches() {
                let br = &feeder.branches[ob.branch];
                if !br.phases.contains(phase) {
                    continue;
                }
                let Some(parent) = node_of[ob.parent_bus][phase.index()] else {
                    continue;
                };
                let z_base = feeder.z_base_ohm(feeder.buses[ob.child_bus].nominal_kv_ll);
                node_of[ob.child_bus][phase.index()] = Some(nodes.len());
                nodes.push(PhaseNode {
                    bus: ob.child_bus,
                    phase,
                    parent,
                    branch: Some(ob.branch),
                    z_pu: Complex64::new(br.r_ohm(), br.x_ohm()) / z_base,
                    regulator: feeder.regulator_on_branch(ob.branch),
                    i_base_a: i_base(ob.child_bus),
                });
            }
        }
        Self { nodes, node_of }
    }

    pub fn node(&self, bus: usize, phase: Phase) -> Option<usize> {
        self.node_of[bus][phase.index()]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Phase nodes of one bus.
    pub fn bus_nodes(&self, bus: usize) -> impl Iterator<Item = usize> + '_ {
        self.node_of[bus].iter().flatten().copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepStats {
    pub converged: bool,
    pub iterations: usize,
}

/// Reusable solver buffers for repeated solves on one network.
#[derive(Debug, Clone)]
pub struct SweepSolver {
    pub voltage: Vec<Complex64>,
    /// Secondary-side current of each node's feeding branch, pu.
    pub branch_current: Vec<Complex64>,
    ratio: Vec<f64>,
    child_sum: Vec<Complex64>,
}

impl SweepSolver {
    pub fn new(net: &SweepNetwork) -> Self {
        let n = net.len();
        Self {
            voltage: vec![Complex64::new(0.0, 0.0); n],
            branch_current: vec![Complex64::new(0.0, 0.0); n],
            ratio: vec![1.0; n],
            child_sum: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Solves for node voltages given per-node complex power demand
    /// (`s_pu`, load positive) and regulator ratios.
    ///
    /// Starts from the no-load profile, so the result depends only on the
    /// inputs and never on previous solves.
    pub fn solve(
        &mut self,
        net: &SweepNetwork,
        s_pu: &[Complex64],
        regulator_ratios: &[f64],
        opts: &SolverOptions,
    ) -> SweepStats {
        let nodes = &net.nodes;
        for (k, node) in nodes.iter().enumerate() {
            self.ratio[k] = node.regulator.map_or(1.0, |r| regulator_ratios[r]);
            self.voltage[k] = if node.parent == NO_PARENT {
                Complex64::from_polar(opts.source_pu, node.phase.angle_rad())
            } else {
                self.voltage[node.parent] * self.ratio[k]
            };
        }
        let mut iterations = 0;
        while iterations < opts.max_iterations {
            iterations += 1;
            self.child_sum.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
            for k in (0..nodes.len()).rev() {
                let load_current = (s_pu[k] / self.voltage[k]).conj();
                let j = load_current + self.child_sum[k];
                self.branch_current[k] = j;
                let parent = nodes[k].parent;
                if parent != NO_PARENT {
                    self.child_sum[parent] += j * self.ratio[k];
                }
            }
            let mut max_dv: f64 = 0.0;
            for k in 0..nodes.len() {
                let node = &nodes[k];
                if node.parent == NO_PARENT {
                    continue;
                }
                let v = self.voltage[node.parent] * self.ratio[k] - node.z_pu * self.branch_current[k];
                max_dv = max_dv.max((v - self.voltage[k]).norm());
                self.voltage[k] = v;
            }
            if max_dv < opts.tolerance_pu {
                return SweepStats {
                    converged: true,
                    iterations,
                };
            }
        }
        SweepStats {
            converged: false,
            iterations,
        }
    }
}
