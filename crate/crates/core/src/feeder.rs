//! Radial feeder data model.
//!
//! Feeders are described by a JSON document (see [`FeederFile`]) and
//! validated into an immutable [`FeederModel`]. Validation proves radiality
//! and caches the breadth-first orientation used by the power-flow solver.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FeederError {
    #[error("cannot read feeder file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("feeder schema violation: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("duplicate {kind} id \"{id}\"")]
    DuplicateId { kind: &'static str, id: String },
    #[error("{element} references unknown bus \"{bus}\"")]
    UnknownBus { element: String, bus: String },
    #[error("regulator references unknown branch \"{0}\"")]
    UnknownBranch(String),
    #[error("feeder has no source bus")]
    NoSource,
    #[error("feeder has more than one source bus: \"{0}\" and \"{1}\"")]
    MultipleSources(String, String),
    #[error("{element}: invalid {field}: {reason}")]
    InvalidValue {
        element: String,
        field: &'static str,
        reason: String,
    },
    #[error("branch \"{0}\" closes a cycle")]
    Cycle(String),
    #[error("bus \"{0}\" is not connected to the source")]
    Disconnected(String),
    #[error("unknown bus id \"{0}\"")]
    NoSuchBus(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    A,
    B,
    C,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::A, Phase::B, Phase::C];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Nominal angle of the phase's source voltage.
    pub fn angle_rad(self) -> f64 {
        match self {
            Phase::A => 0.0,
            Phase::B => -2.0 * std::f64::consts::PI / 3.0,
            Phase::C => 2.0 * std::f64::consts::PI / 3.0,
        }
    }

    fn from_char(c: char) -> Option<Phase> {
        match c.to_ascii_uppercase() {
            'A' => Some(Phase::A),
            'B' => Some(Phase::B),
            'C' => Some(Phase::C),
            _ => None,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Phase::A => "A",
            Phase::B => "B",
            Phase::C => "C",
        };
        f.write_str(c)
    }
}

/// Nonempty subset of {A, B, C}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PhaseSet(u8);

impl PhaseSet {
    pub const ABC: PhaseSet = PhaseSet(0b111);

    pub fn single(p: Phase) -> Self {
        PhaseSet(1 << p.index())
    }

    pub fn contains(self, p: Phase) -> bool {
        self.0 & (1 << p.index()) != 0
    }

    pub fn is_subset_of(self, other: PhaseSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Phase> {
        Phase::ALL.into_iter().filter(move |p| self.contains(*p))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn parse(s: &str) -> Option<Self> {
        let mut bits = 0u8;
        for c in s.chars() {
            bits |= 1 << Phase::from_char(c)?.index();
        }
        (bits != 0).then_some(PhaseSet(bits))
    }
}

impl fmt::Display for PhaseSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in self.iter() {
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

/// Phase connection of a load node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadPhase {
    Single(Phase),
    /// Split equally over phases A, B and C.
    Balanced,
}

impl LoadPhase {
    pub fn phases(self) -> PhaseSet {
        match self {
            LoadPhase::Single(p) => PhaseSet::single(p),
            LoadPhase::Balanced => PhaseSet::ABC,
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "ABC" => Some(LoadPhase::Balanced),
            one if one.len() == 1 => Phase::from_char(one.chars().next()?).map(LoadPhase::Single),
            _ => None,
        }
    }
}

impl fmt::Display for LoadPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadPhase::Single(p) => write!(f, "{p}"),
            LoadPhase::Balanced => f.write_str("ABC"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: String,
    pub phases: PhaseSet,
    pub nominal_kv_ll: f64,
    pub is_source: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub id: String,
    pub from_bus: String,
    pub to_bus: String,
    pub phases: PhaseSet,
    pub r_ohm_per_phase: f64,
    pub x_ohm_per_phase: f64,
    pub length_factor: f64,
}

impl Branch {
    pub fn r_ohm(&self) -> f64 {
        self.r_ohm_per_phase * self.length_factor
    }

    pub fn x_ohm(&self) -> f64 {
        self.x_ohm_per_phase * self.length_factor
    }

    /// Series impedance magnitude in ohms.
    pub fn z_abs_ohm(&self) -> f64 {
        self.r_ohm().hypot(self.x_ohm())
    }
}

pub const DEFAULT_TAP_STEP_PU: f64 = 0.00625;
pub const DEFAULT_TAP_MIN: i32 = -16;
pub const DEFAULT_TAP_MAX: i32 = 16;

/// Step voltage regulator installed at the upstream end of a branch.
///
/// The regulated quantity is the mean voltage magnitude over the phases of
/// the branch's downstream bus.
#[derive(Debug, Clone, PartialEq)]
pub struct Regulator {
    pub branch_id: String,
    pub setpoint_pu: f64,
    pub bandwidth_pu: f64,
    pub tap_step_pu: f64,
    pub tap_min: i32,
    pub tap_max: i32,
    pub delay_s: f64,
    pub current_tap: i32,
}

impl Regulator {
    pub fn ratio(&self, tap: i32) -> f64 {
        1.0 + f64::from(tap) * self.tap_step_pu
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadNode {
    pub bus_id: String,
    pub phase: LoadPhase,
    /// Datasheet peak demand of the node.
    pub peak_kw: f64,
    /// Simulated houses assigned by load allocation.
    pub houses: Vec<String>,
}

/// A branch oriented away from the source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrientedBranch {
    pub branch: usize,
    pub parent_bus: usize,
    pub child_bus: usize,
}

#[derive(Debug, Clone, PartialEq)]
struct Topology {
    bus_index: HashMap<String, usize>,
    source: usize,
    /// Branches in breadth-first order from the source.
    order: Vec<OrientedBranch>,
    /// Index into `order` of the branch feeding each bus (None for the source).
    feeding: Vec<Option<usize>>,
    regulator_of_branch: Vec<Option<usize>>,
}

/// Validated, immutable radial feeder.
#[derive(Debug, Clone, PartialEq)]
pub struct FeederModel {
    pub name: String,
    pub base_kva: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub regulators: Vec<Regulator>,
    pub load_nodes: Vec<LoadNode>,
    topo: Topology,
}

// ---------------------------------------------------------------------------
// File schema

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeederFile {
    pub name: String,
    pub base_kva: f64,
    pub buses: Vec<BusRecord>,
    pub branches: Vec<BranchRecord>,
    #[serde(default)]
    pub regulators: Vec<RegulatorRecord>,
    pub load_nodes: Vec<LoadNodeRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusRecord {
    pub id: String,
    pub phases: String,
    pub kv_ll: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub source: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchRecord {
    pub id: String,
    pub from: String,
    pub to: String,
    pub phases: String,
    pub r_ohm: f64,
    pub x_ohm: f64,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub length_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegulatorRecord {
    pub branch: String,
    pub setpoint_pu: f64,
    pub bandwidth_pu: f64,
    #[serde(default = "default_tap_step")]
    pub tap_step_pu: f64,
    pub delay_s: f64,
    #[serde(default = "default_tap_min")]
    pub tap_min: i32,
    #[serde(default = "default_tap_max")]
    pub tap_max: i32,
    #[serde(default)]
    pub tap: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadNodeRecord {
    pub bus: String,
    pub phase: String,
    pub peak_kw: f64,
}

fn one() -> f64 {
    1.0
}

fn is_one(v: &f64) -> bool {
    *v == 1.0
}

fn default_tap_step() -> f64 {
    DEFAULT_TAP_STEP_PU
}

fn default_tap_min() -> i32 {
    DEFAULT_TAP_MIN
}

fn default_tap_max() -> i32 {
    DEFAULT_TAP_MAX
}

// ---------------------------------------------------------------------------

/// Reads and validates a feeder description file.
pub fn parse_feeder(path: impl AsRef<Path>) -> Result<FeederModel, FeederError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| FeederError::Io {
        path: path.display().to_string(),
        source,
    })?;
    FeederModel::from_json_str(&text)
}

fn invalid(element: impl Into<String>, field: &'static str, reason: impl Into<String>) -> FeederError {
    FeederError::InvalidValue {
        element: element.into(),
        field,
        reason: reason.into(),
    }
}

fn parse_phases(element: &str, s: &str) -> Result<PhaseSet, FeederError> {
    PhaseSet::parse(s).ok_or_else(|| invalid(element, "phases", format!("\"{s}\" is not a nonempty subset of ABC")))
}

impl FeederModel {
    pub fn from_json_str(text: &str) -> Result<Self, FeederError> {
        let file: FeederFile = serde_json::from_str(text)?;
        Self::from_file(file)
    }

    pub fn from_file(file: FeederFile) -> Result<Self, FeederError> {
        if !(file.base_kva > 0.0) {
            return Err(invalid("feeder", "base_kva", "must be positive"));
        }
        let mut buses = Vec::with_capacity(file.buses.len());
        let mut bus_index = HashMap::new();
        let mut source: Option<usize> = None;
        for rec in &file.buses {
            let element = format!("bus \"{}\"", rec.id);
            if bus_index.insert(rec.id.clone(), buses.len()).is_some() {
                return Err(FeederError::DuplicateId { kind: "bus", id: rec.id.clone() });
            }
            if !(rec.kv_ll > 0.0) {
                return Err(invalid(element, "kv_ll", "must be positive"));
            }
            let phases = parse_phases(&element, &rec.phases)?;
            if rec.source {
                if let Some(s) = source {
                    return Err(FeederError::MultipleSources(buses_id(&buses, s), rec.id.clone()));
                }
                source = Some(buses.len());
            }
            buses.push(Bus {
                id: rec.id.clone(),
                phases,
                nominal_kv_ll: rec.kv_ll,
                is_source: rec.source,
            });
        }
        let source = source.ok_or(FeederError::NoSource)?;

        let mut branches = Vec::with_capacity(file.branches.len());
        let mut branch_ids = HashMap::new();
        for rec in &file.branches {
            let element = format!("branch \"{}\"", rec.id);
            if branch_ids.insert(rec.id.clone(), branches.len()).is_some() {
                return Err(FeederError::DuplicateId { kind: "branch", id: rec.id.clone() });
            }
            let from = *bus_index.get(&rec.from).ok_or_else(|| FeederError::UnknownBus {
                element: element.clone(),
                bus: rec.from.clone(),
            })?;
            let to = *bus_index.get(&rec.to).ok_or_else(|| FeederError::UnknownBus {
                element: element.clone(),
                bus: rec.to.clone(),
            })?;
            let phases = parse_phases(&element, &rec.phases)?;
            if !phases.is_subset_of(buses[from].phases) || !phases.is_subset_of(buses[to].phases) {
                return Err(invalid(element, "phases", format!("{phases} not present at both endpoints")));
            }
            if buses[from].nominal_kv_ll != buses[to].nominal_kv_ll {
                return Err(invalid(element, "kv_ll", "endpoints have different nominal voltages"));
            }
            if !(rec.r_ohm >= 0.0) || !rec.x_ohm.is_finite() {
                return Err(invalid(element, "r_ohm", "resistance must be non-negative and finite"));
            }
            if !(rec.length_factor > 0.0) {
                return Err(invalid(element, "length_factor", "must be positive"));
            }
            let branch = Branch {
                id: rec.id.clone(),
                from_bus: rec.from.clone(),
                to_bus: rec.to.clone(),
                phases,
                r_ohm_per_phase: rec.r_ohm,
                x_ohm_per_phase: rec.x_ohm,
                length_factor: rec.length_factor,
            };
            if !(branch.z_abs_ohm() > 0.0) {
                return Err(invalid(element, "x_ohm", "impedance magnitude must be positive"));
            }
            branches.push(branch);
        }

        let mut regulators = Vec::with_capacity(file.regulators.len());
        let mut regulator_of_branch = vec![None; branches.len()];
        for rec in &file.regulators {
            let element = format!("regulator on \"{}\"", rec.branch);
            let b = *branch_ids
                .get(&rec.branch)
                .ok_or_else(|| FeederError::UnknownBranch(rec.branch.clone()))?;
            if regulator_of_branch[b].is_some() {
                return Err(FeederError::DuplicateId { kind: "regulator", id: rec.branch.clone() });
            }
            if !(rec.tap_step_pu > 0.0) {
                return Err(invalid(element, "tap_step_pu", "must be positive"));
            }
            if !(rec.bandwidth_pu > rec.tap_step_pu) {
                return Err(invalid(element, "bandwidth_pu", "must exceed tap_step_pu"));
            }
            if !(rec.delay_s >= 0.0) {
                return Err(invalid(element, "delay_s", "must be non-negative"));
            }
            if !(rec.setpoint_pu > 0.0) {
                return Err(invalid(element, "setpoint_pu", "must be positive"));
            }
            if !(rec.tap_min <= rec.tap && rec.tap <= rec.tap_max) {
                return Err(invalid(element, "tap", "must lie within [tap_min, tap_max]"));
            }
            regulator_of_branch[b] = Some(regulators.len());
            regulators.push(Regulator {
                branch_id: rec.branch.clone(),
                setpoint_pu: rec.setpoint_pu,
                bandwidth_pu: rec.bandwidth_pu,
                tap_step_pu: rec.tap_step_pu,
                tap_min: rec.tap_min,
                tap_max: rec.tap_max,
                delay_s: rec.delay_s,
                current_tap: rec.tap,
            });
        }

        if file.load_nodes.is_empty() {
            return Err(invalid("feeder", "load_nodes", "at least one load node is required"));
        }
        let mut load_nodes = Vec::with_capacity(file.load_nodes.len());
        for (i, rec) in file.load_nodes.iter().enumerate() {
            let element = format!("load node {i} on \"{}\"", rec.bus);
            let bus = *bus_index.get(&rec.bus).ok_or_else(|| FeederError::UnknownBus {
                element: element.clone(),
                bus: rec.bus.clone(),
            })?;
            let phase = LoadPhase::parse(&rec.phase)
                .ok_or_else(|| invalid(&element, "phase", format!("\"{}\" is not A, B, C or ABC", rec.phase)))?;
            if !phase.phases().is_subset_of(buses[bus].phases) {
                return Err(invalid(element, "phase", format!("bus does not carry phase {phase}")));
            }
            if !(rec.peak_kw > 0.0) {
                return Err(invalid(element, "peak_kw", "must be positive"));
            }
            load_nodes.push(LoadNode {
                bus_id: rec.bus.clone(),
                phase,
                peak_kw: rec.peak_kw,
                houses: Vec::new(),
            });
        }

        let (order, feeding) = orient(&buses, &branches, &bus_index, source)?;
        Ok(FeederModel {
            name: file.name,
            base_kva: file.base_kva,
            buses,
            branches,
            regulators,
            load_nodes,
            topo: Topology {
                bus_index,
                source,
                order,
                feeding,
                regulator_of_branch,
            },
        })
    }

    /// The file-schema form of this feeder.
    pub fn to_file(&self) -> FeederFile {
        FeederFile {
            name: self.name.clone(),
            base_kva: self.base_kva,
            buses: self
                .buses
                .iter()
                .map(|b| BusRecord {
                    id: b.id.clone(),
                    phases: b.phases.to_string(),
                    kv_ll: b.nominal_kv_ll,
                    source: b.is_source,
                })
                .collect(),
            branches: self
                .branches
                .iter()
                .map(|b| BranchRecord {
                    id: b.id.clone(),
                    from: b.from_bus.clone(),
                    to: b.to_bus.clone(),
                    phases: b.phases.to_string(),
                    r_ohm: b.r_ohm_per_phase,
                    x_ohm: b.x_ohm_per_phase,
                    length_factor: b.length_factor,
                })
                .collect(),
            regulators: self
                .regulators
                .iter()
                .map(|r| RegulatorRecord {
                    branch: r.branch_id.clone(),
                    setpoint_pu: r.setpoint_pu,
                    bandwidth_pu: r.bandwidth_pu,
                    tap_step_pu: r.tap_step_pu,
                    delay_s: r.delay_s,
                    tap_min: r.tap_min,
                    tap_max: r.tap_max,
                    tap: r.current_tap,
                })
                .collect(),
            load_nodes: self
                .load_nodes
                .iter()
                .map(|n| LoadNodeRecord {
                    bus: n.bus_id.clone(),
                    phase: n.phase.to_string(),
                    peak_kw: n.peak_kw,
                })
                .collect(),
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("feeder serialization cannot fail")
    }

    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.topo.bus_index.get(id).copied()
    }

    pub fn source_index(&self) -> usize {
        self.topo.source
    }

    /// Branches oriented away from the source, parents before children.
    pub fn oriented_branches(&self) -> &[OrientedBranch] {
        &self.topo.order
    }

    /// The oriented branch feeding `bus`, or None for the source.
    pub fn feeding_branch(&self, bus: usize) -> Option<&OrientedBranch> {
        self.topo.feeding[bus].map(|k| &self.topo.order[k])
    }

    pub fn parent_bus(&self, bus: usize) -> Option<usize> {
        self.feeding_branch(bus).map(|b| b.parent_bus)
    }

    pub fn regulator_on_branch(&self, branch: usize) -> Option<usize> {
        self.topo.regulator_of_branch[branch]
    }

    pub fn load_node_bus(&self, node: usize) -> usize {
        self.topo.bus_index[&self.load_nodes[node].bus_id]
    }

    /// Impedance base in ohms for a bus voltage level.
    pub fn z_base_ohm(&self, kv_ll: f64) -> f64 {
        kv_ll * kv_ll * 1000.0 / self.base_kva
    }

    /// Per-phase power base in kVA.
    pub fn phase_base_kva(&self) -> f64 {
        self.base_kva / 3.0
    }

    /// Children lists indexed by bus, in branch order.
    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut children = vec![Vec::new(); self.buses.len()];
        for ob in &self.topo.order {
            children[ob.parent_bus].push(ob.child_bus);
        }
        children
    }
}

fn buses_id(buses: &[Bus], i: usize) -> String {
    buses[i].id.clone()
}

type Orientation = (Vec<OrientedBranch>, Vec<Option<usize>>);

fn orient(
    buses: &[Bus],
    branches: &[Branch],
    bus_index: &HashMap<String, usize>,
    source: usize,
) -> Result<Orientation, FeederError> {
    let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); buses.len()];
    for (k, br) in branches.iter().enumerate() {
        let f = bus_index[&br.from_bus];
        let t = bus_index[&br.to_bus];
        if f == t {
            return Err(FeederError::Cycle(br.id.clone()));
        }
        adjacency[f].push((k, t));
        adjacency[t].push((k, f));
    }
    let mut visited = vec![false; buses.len()];
    let mut used = vec![false; branches.len()];
    let mut feeding = vec![None; buses.len()];
    let mut order = Vec::with_capacity(branches.len());
    let mut queue = VecDeque::from([source]);
    visited[source] = true;
    while let Some(bus) = queue.pop_front() {
        for &(k, other) in &adjacency[bus] {
            if used[k] {
                continue;
            }
            used[k] = true;
            if visited[other] {
                return Err(FeederError::Cycle(branches[k].id.clone()));
            }
            visited[other] = true;
            feeding[other] = Some(order.len());
            order.push(OrientedBranch {
                branch: k,
                parent_bus: bus,
                child_bus: other,
            });
            queue.push_back(other);
        }
    }
    if let Some(i) = visited.iter().position(|v| !v) {
        return Err(FeederError::Disconnected(buses[i].id.clone()));
    }
    for ob in &order {
        let (bus, branch) = (&buses[ob.child_bus], &branches[ob.branch]);
        if !bus.phases.is_subset_of(branch.phases) {
            return Err(invalid(
                format!("bus \"{}\"", bus.id),
                "phases",
                format!("{} not supplied by feeding branch \"{}\" ({})", bus.phases, branch.id, branch.phases),
            ));
        }
    }
    Ok((order, feeding))
}

/// Returns branch indices in breadth-first order from the source, proving
/// the branch set is a spanning tree.
pub fn validate_tree(feeder: &FeederModel) -> Result<Vec<usize>, FeederError> {
    let index: HashMap<String, usize> = feeder
        .buses
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id.clone(), i))
        .collect();
    for br in &feeder.branches {
        for end in [&br.from_bus, &br.to_bus] {
            if !index.contains_key(end) {
                return Err(FeederError::UnknownBus {
                    element: format!("branch \"{}\"", br.id),
                    bus: end.clone(),
                });
            }
        }
    }
    let sources: Vec<usize> = feeder
        .buses
        .iter()
        .enumerate()
        .filter(|(_, b)| b.is_source)
        .map(|(i, _)| i)
        .collect();
    let source = match sources.as_slice() {
        [] => return Err(FeederError::NoSource),
        [s] => *s,
        [a, b, ..] => return Err(FeederError::MultipleSources(feeder.buses[*a].id.clone(), feeder.buses[*b].id.clone())),
    };
    let (order, _) = orient(&feeder.buses, &feeder.branches, &index, source)?;
    Ok(order.into_iter().map(|ob| ob.branch).collect())
}

/// Sum of series impedance magnitudes along the path from the source, in ohms.
pub fn electrical_distance(feeder: &FeederModel, bus_id: &str) -> Result<f64, FeederError> {
    let bus = feeder
        .bus_index(bus_id)
        .ok_or_else(|| FeederError::NoSuchBus(bus_id.to_string()))?;
    Ok(electrical_distances(feeder)[bus])
}

/// Electrical distance of every bus, indexed like `feeder.buses`.
pub fn electrical_distances(feeder: &FeederModel) -> Vec<f64> {
    let mut dist = vec![0.0; feeder.buses.len()];
    for ob in feeder.oriented_branches() {
        dist[ob.child_bus] = dist[ob.parent_bus] + feeder.branches[ob.branch].z_abs_ohm();
    }
    dist
}

/// Set of bus ids carrying at least one load node.
pub fn load_buses(feeder: &FeederModel) -> HashSet<usize> {
    (0..feeder.load_nodes.len()).map(|n| feeder.load_node_bus(n)).collect()
}
