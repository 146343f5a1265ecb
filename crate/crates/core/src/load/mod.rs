//! Household load pool, nodal load allocation and resampling.

mod allocation;
mod profile;
mod synth;

pub use allocation::{
    allocate_feeder, allocate_node, feeder_head_series, nodal_loads, total_houses, AllocationConfig, AllocationError,
    NodeAllocation,
};
pub use profile::{
    block_mean, ingest_csv, read_profiles, resample, steps_per_week, write_profiles, LoadPool, LoadProfile,
    ProfileError, WEEK_S,
};
pub use synth::{generate_synthetic_pool, MAX_HOUSE_KW};
