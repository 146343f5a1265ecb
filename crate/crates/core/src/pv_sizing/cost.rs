use serde::{Deserialize, Serialize};

use super::SizingError;

/// Annuity factor turning a capital cost into an equal annual payment over
/// `lifetime_years` at `discount_rate`.
pub fn capital_recovery_factor(discount_rate: f64, lifetime_years: u32) -> Result<f64, SizingError> {
    if !(discount_rate >= 0.0) || !discount_rate.is_finite() {
        return Err(SizingError::BadCostModel(format!("discount rate {discount_rate} must be >= 0")));
    }
    if lifetime_years < 1 {
        return Err(SizingError::BadCostModel("lifetime must be at least one year".into()));
    }
    let y = f64::from(lifetime_years);
    if discount_rate == 0.0 {
        return Ok(1.0 / y);
    }
    let growth = (1.0 + discount_rate).powf(y);
    Ok(discount_rate * growth / (growth - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PvCostModel {
    /// Installed capital cost, USD per kW.
    pub a_pv_usd_per_kw: f64,
    pub lifetime_years: u32,
    pub discount_rate: f64,
}

impl Default for PvCostModel {
    fn default() -> Self {
        Self {
            a_pv_usd_per_kw: 1000.0,
            lifetime_years: 20,
            discount_rate: 0.08,
        }
    }
}

impl PvCostModel {
    pub fn k_pv(&self) -> Result<f64, SizingError> {
        capital_recovery_factor(self.discount_rate, self.lifetime_years)
    }
}

/// Levelized annual cost of `p_pv_kw` of installed PV, USD per year.
pub fn levelized_cost(model: &PvCostModel, p_pv_kw: f64) -> Result<f64, SizingError> {
    if !(p_pv_kw >= 0.0) {
        return Err(SizingError::NegativeCapacity(p_pv_kw));
    }
    Ok(model.k_pv()? * model.a_pv_usd_per_kw * p_pv_kw)
}
