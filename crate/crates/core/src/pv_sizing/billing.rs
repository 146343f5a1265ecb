//! Time-of-use billing with a monthly demand charge and no export credit.

use serde::{Deserialize, Serialize};

use super::shape::{month_of_day, weekday_counts, PvShape, DAYS_IN_YEAR};
use super::tariff::TariffSchedule;
use super::SizingError;

/// Billing intervals with their calendar position and repetition weight.
///
/// A weight above one stands for that many identical intervals in the same
/// month; the demand charge is unaffected by repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct BillingHorizon {
    pub resolution_s: u32,
    month: Vec<u8>,
    hour: Vec<u8>,
    weight: Vec<f64>,
    load_kw: Vec<f64>,
    shape: Vec<f64>,
}

fn check_resolution(resolution_s: u32) -> Result<(), SizingError> {
    if resolution_s == 0 || 3600 % resolution_s != 0 {
        return Err(SizingError::Misaligned(format!(
            "billing resolution {resolution_s} s must divide one hour"
        )));
    }
    Ok(())
}

impl BillingHorizon {
    /// Consecutive intervals starting `start_minute` minutes after 1 January 00:00.
    pub fn from_series(
        start_minute: usize,
        resolution_s: u32,
        load_kw: &[f64],
        shape: &[f64],
    ) -> Result<Self, SizingError> {
        check_resolution(resolution_s)?;
        if load_kw.len() != shape.len() {
            return Err(SizingError::Misaligned(format!(
                "load has {} intervals, PV shape {}",
                load_kw.len(),
                shape.len()
            )));
        }
        let step_min = resolution_s as usize / 60;
        if !resolution_s.is_multiple_of(60) || !start_minute.is_multiple_of(step_min.max(1)) {
            return Err(SizingError::Misaligned("series must start on an interval boundary".into()));
        }
        let end_minute = start_minute + load_kw.len() * step_min;
        if end_minute > DAYS_IN_YEAR * 1440 {
            return Err(SizingError::Misaligned("series runs past the end of the year".into()));
        }
        let mut month = Vec::with_capacity(load_kw.len());
        let mut hour = Vec::with_capacity(load_kw.len());
        for k in 0..load_kw.len() {
            let minute = start_minute + k * step_min;
            month.push(month_of_day(minute / 1440) as u8);
            hour.push(((minute % 1440) / 60) as u8);
        }
        Ok(Self {
            resolution_s,
            month,
            hour,
            weight: vec![1.0; load_kw.len()],
            load_kw: load_kw.to_vec(),
            shape: shape.to_vec(),
        })
    }

    /// One calendar year built by tiling a Monday-first weekly profile, with
    /// demand in each month multiplied by `monthly_scale`.
    ///
    /// Within a month every occurrence of a weekday carries identical load and
    /// PV, so each (month, weekday) day is stored once and weighted by its
    /// number of occurrences. The bill equals that of the explicit 365-day
    /// series.
    pub fn tiled_year(
        week_load_kw: &[f64],
        resolution_s: u32,
        monthly_scale: &[f64; 12],
        shape: &PvShape,
    ) -> Result<Self, SizingError> {
        check_resolution(resolution_s)?;
        let per_day = 86_400 / resolution_s as usize;
        if week_load_kw.len() != 7 * per_day {
            return Err(SizingError::Misaligned(format!(
                "weekly load has {} intervals; {} expected at {resolution_s} s",
                week_load_kw.len(),
                7 * per_day
            )));
        }
        let capacity = 12 * 7 * per_day;
        let mut h = Self {
            resolution_s,
            month: Vec::with_capacity(capacity),
            hour: Vec::with_capacity(capacity),
            weight: Vec::with_capacity(capacity),
            load_kw: Vec::with_capacity(capacity),
            shape: Vec::with_capacity(capacity),
        };
        for (m, &scale) in monthly_scale.iter().enumerate() {
            let pv_week = shape.week(m, resolution_s)?;
            for (wd, &count) in weekday_counts(m).iter().enumerate() {
                if count == 0 {
                    continue;
                }
                for k in 0..per_day {
                    let i = wd * per_day + k;
                    h.month.push(m as u8);
                    h.hour.push((k * resolution_s as usize / 3600) as u8);
                    h.weight.push(count as f64);
                    h.load_kw.push(week_load_kw[i] * scale);
                    h.shape.push(pv_week[i]);
                }
            }
        }
        Ok(h)
    }

    pub fn len(&self) -> usize {
        self.load_kw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.load_kw.is_empty()
    }

    fn dt_h(&self) -> f64 {
        f64::from(self.resolution_s) / 3600.0
    }

    /// Precomputes per-interval prices for repeated bills under one tariff.
    pub fn priced<'a>(&'a self, tariff: &TariffSchedule) -> PricedHorizon<'a> {
        let dt = self.dt_h();
        let energy_price = (0..self.len())
            .map(|k| tariff.rate(self.month[k] as usize, self.hour[k] as usize) * dt * self.weight[k])
            .collect();
        PricedHorizon {
            horizon: self,
            energy_price,
            demand_charge: tariff.demand_charge_usd_per_kw,
        }
    }
}

/// Annual bill components, USD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bill {
    pub energy_usd: f64,
    pub demand_usd: f64,
    pub total_usd: f64,
}

pub struct PricedHorizon<'a> {
    horizon: &'a BillingHorizon,
    /// Rate x interval hours x weight.
    energy_price: Vec<f64>,
    demand_charge: f64,
}

impl PricedHorizon<'_> {
    pub fn bill(&self, pv_kw: f64) -> Bill {
        let h = self.horizon;
        let mut energy = 0.0;
        let mut monthly_peak = [0.0f64; 12];
        for k in 0..h.len() {
            let net = (h.load_kw[k] - pv_kw * h.shape[k]).max(0.0);
            energy += net * self.energy_price[k];
            let m = h.month[k] as usize;
            if net > monthly_peak[m] {
                monthly_peak[m] = net;
            }
        }
        let demand = self.demand_charge * monthly_peak.iter().sum::<f64>();
        Bill {
            energy_usd: energy,
            demand_usd: demand,
            total_usd: energy + demand,
        }
    }
}

/// Bill for the horizon with `pv_kw` of PV netted against demand. Surplus
/// generation is not credited, and each billing month pays the demand charge
/// on its highest net demand.
pub fn annual_bill(horizon: &BillingHorizon, pv_kw: f64, tariff: &TariffSchedule) -> Result<Bill, SizingError> {
    if !(pv_kw >= 0.0) {
        return Err(SizingError::NegativeCapacity(pv_kw));
    }
    Ok(horizon.priced(tariff).bill(pv_kw))
}
