//! Quasi-static time-series PV hosting capacity studies on radial
//! distribution feeders.
//!
//! The pipeline runs in four stages: build a household load pool, allocate
//! houses to feeder load nodes, size each house's PV system against a
//! time-of-use tariff, then sweep stochastic PV deployments through a
//! radial power flow and record overvoltage.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod feeder;
pub mod fixtures;
pub mod hosting;
pub mod load;
pub mod power_flow;
pub mod pv_sizing;
pub mod rng;
pub mod zonal;
