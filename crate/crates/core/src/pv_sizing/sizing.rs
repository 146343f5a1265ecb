use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::billing::BillingHorizon;
use super::cost::PvCostModel;
use super::shape::PvShape;
use super::tariff::TariffSchedule;
use super::SizingError;

/// Candidate PV sizes: 0 kW plus `min_kw, min_kw + step_kw, ...` up to `max_kw`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizingGrid {
    pub min_kw: f64,
    pub max_kw: f64,
    pub step_kw: f64,
}

impl Default for SizingGrid {
    fn default() -> Self {
        Self {
            min_kw: 0.0,
            max_kw: 20.0,
            step_kw: 0.5,
        }
    }
}

impl SizingGrid {
    pub fn candidates(&self) -> Result<Vec<f64>, SizingError> {
        if !(self.step_kw > 0.0) || !(self.min_kw >= 0.0) || !(self.max_kw >= self.min_kw) {
            return Err(SizingError::BadGrid(*self));
        }
        let mut out = vec![0.0];
        let n = ((self.max_kw - self.min_kw) / self.step_kw + 1e-9).floor() as usize;
        for k in 0..=n {
            let kw = self.min_kw + k as f64 * self.step_kw;
            if kw > 0.0 {
                out.push(kw);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub kw: f64,
    pub annual_bill_usd: f64,
    pub savings_usd: f64,
    pub levelized_cost_usd: f64,
    pub net_benefit_usd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizingResult {
    pub optimal_kw: f64,
    pub candidates: Vec<Candidate>,
}

impl SizingResult {
    pub fn best(&self) -> &Candidate {
        self.candidates
            .iter()
            .find(|c| c.kw == self.optimal_kw)
            .expect("optimum is a candidate")
    }
}

/// Exhaustive search for the PV size with the greatest annual net benefit
/// (bill savings minus levelized cost). Ties go to the smaller size.
pub fn optimal_size(
    horizon: &BillingHorizon,
    tariff: &TariffSchedule,
    model: &PvCostModel,
    grid: &SizingGrid,
) -> Result<SizingResult, SizingError> {
    let k_pv = model.k_pv()?;
    let priced = horizon.priced(tariff);
    let base = priced.bill(0.0).total_usd;
    let mut candidates = Vec::new();
    for kw in grid.candidates()? {
        let bill = priced.bill(kw).total_usd;
        let cost = k_pv * model.a_pv_usd_per_kw * kw;
        let savings = base - bill;
        candidates.push(Candidate {
            kw,
            annual_bill_usd: bill,
            savings_usd: savings,
            levelized_cost_usd: cost,
            net_benefit_usd: savings - cost,
        });
    }
    let mut best = &candidates[0];
    for c in &candidates[1..] {
        if c.net_benefit_usd > best.net_benefit_usd {
            best = c;
        }
    }
    Ok(SizingResult {
        optimal_kw: best.kw,
        candidates,
    })
}

/// Sizes every weekly profile independently, each over its own tiled year.
pub fn size_weekly_profiles(
    weeks: &[&[f64]],
    resolution_s: u32,
    monthly_scale: &[f64; 12],
    shape: &PvShape,
    tariff: &TariffSchedule,
    model: &PvCostModel,
    grid: &SizingGrid,
) -> Result<Vec<SizingResult>, SizingError> {
    weeks
        .par_iter()
        .map(|week| {
            let horizon = BillingHorizon::tiled_year(week, resolution_s, monthly_scale, shape)?;
            optimal_size(&horizon, tariff, model, grid)
        })
        .collect()
}
