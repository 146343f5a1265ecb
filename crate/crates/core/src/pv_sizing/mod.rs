//! Cost-benefit PV sizing under a time-of-use tariff.

mod billing;
mod cost;
mod shape;
mod sizing;
mod tariff;

use thiserror::Error;

pub use billing::{annual_bill, Bill, BillingHorizon, PricedHorizon};
pub use cost::{capital_recovery_factor, levelized_cost, PvCostModel};
pub use shape::{
    month_of_day, month_start_day, read_shape_csv, weekday, weekday_counts, ClearSky, PvShape, DAYS_IN_MONTH,
    DAYS_IN_YEAR,
};
pub use sizing::{optimal_size, size_weekly_profiles, Candidate, SizingGrid, SizingResult};
pub use tariff::{PeriodLabel, PeriodRule, Season, TariffError, TariffFile, TariffSchedule};

/// Monthly demand multipliers applied when a weekly profile is tiled into a
/// year; July is the reference month.
pub const DEFAULT_MONTHLY_SCALE: [f64; 12] = [0.95, 0.9, 0.8, 0.75, 0.85, 0.95, 1.0, 1.0, 0.9, 0.8, 0.85, 0.95];

#[derive(Debug, Error, PartialEq)]
pub enum SizingError {
    #[error("invalid cost model: {0}")]
    BadCostModel(String),
    #[error("PV capacity must be non-negative, got {0} kW")]
    NegativeCapacity(f64),
    #[error("misaligned billing inputs: {0}")]
    Misaligned(String),
    #[error("invalid sizing grid {0:?}")]
    BadGrid(SizingGrid),
    #[error("PV shape file: {0}")]
    ShapeFile(String),
}
