//! Seasonal time-of-use tariff with a monthly demand charge.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TariffError {
    #[error("cannot read tariff {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("tariff schema violation: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("month {month} is covered by {count} seasons; exactly one is required")]
    SeasonCoverage { month: u8, count: usize },
    #[error("month {month}, hour {hour} maps to no period")]
    Unmapped { month: u8, hour: u8 },
    #[error("season \"{season}\": {reason}")]
    Invalid { season: String, reason: String },
}

/// Period labels in increasing precedence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PeriodLabel {
    OffPeak,
    PartialPeak,
    Peak,
}

/// Hour ranges are half-open `[start, end)` in local clock hours; a range
/// with `start >= end` wraps past midnight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodRule {
    pub label: PeriodLabel,
    pub hours: Vec<[u8; 2]>,
    pub rate_usd_per_kwh: f64,
}

impl PeriodRule {
    fn covers(&self, hour: u8) -> bool {
        self.hours.iter().any(|&[start, end]| {
            if start < end {
                (start..end).contains(&hour)
            } else {
                hour >= start || hour < end
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Season {
    pub name: String,
    /// Calendar months 1..=12.
    pub months: Vec<u8>,
    pub periods: Vec<PeriodRule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TariffFile {
    pub name: String,
    pub demand_charge_usd_per_kw: f64,
    pub seasons: Vec<Season>,
}

/// Validated tariff. Where periods overlap, peak beats partial-peak beats
/// off-peak.
#[derive(Debug, Clone, PartialEq)]
pub struct TariffSchedule {
    pub name: String,
    pub seasons: Vec<Season>,
    pub demand_charge_usd_per_kw: f64,
    table: [[(PeriodLabel, f64); 24]; 12],
}

impl TariffSchedule {
    pub fn new(file: TariffFile) -> Result<Self, TariffError> {
        if !(file.demand_charge_usd_per_kw >= 0.0) {
            return Err(TariffError::Invalid {
                season: "-".into(),
                reason: "demand charge must be non-negative".into(),
            });
        }
        for s in &file.seasons {
            for p in &s.periods {
                if !(p.rate_usd_per_kwh > 0.0) {
                    return Err(TariffError::Invalid {
                        season: s.name.clone(),
                        reason: format!("{:?} rate must be positive", p.label),
                    });
                }
                if p.hours.iter().any(|&[a, b]| a > 23 || b > 24) {
                    return Err(TariffError::Invalid {
                        season: s.name.clone(),
                        reason: "hours must lie in 0..=24".into(),
                    });
                }
            }
            if let Some(m) = s.months.iter().find(|m| !(1..=12).contains(*m)) {
                return Err(TariffError::Invalid {
                    season: s.name.clone(),
                    reason: format!("month {m} outside 1..=12"),
                });
            }
        }
        let mut table = [[(PeriodLabel::OffPeak, 0.0); 24]; 12];
        for month in 1..=12u8 {
            let seasons: Vec<&Season> = file.seasons.iter().filter(|s| s.months.contains(&month)).collect();
            let [season] = seasons.as_slice() else {
                return Err(TariffError::SeasonCoverage {
                    month,
                    count: seasons.len(),
                });
            };
            for hour in 0..24u8 {
                let best = season
                    .periods
                    .iter()
                    .filter(|p| p.covers(hour))
                    .max_by_key(|p| p.label)
                    .ok_or(TariffError::Unmapped { month, hour })?;
                table[(month - 1) as usize][hour as usize] = (best.label, best.rate_usd_per_kwh);
            }
        }
        Ok(Self {
            name: file.name,
            seasons: file.seasons,
            demand_charge_usd_per_kw: file.demand_charge_usd_per_kw,
            table,
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self, TariffError> {
        Self::new(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TariffError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| TariffError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::from_json_str(&text)
    }

    pub fn to_file(&self) -> TariffFile {
        TariffFile {
            name: self.name.clone(),
            demand_charge_usd_per_kw: self.demand_charge_usd_per_kw,
            seasons: self.seasons.clone(),
        }
    }

    /// Energy rate for a zero-based month and clock hour.
    pub fn rate(&self, month0: usize, hour: usize) -> f64 {
        self.table[month0][hour].1
    }

    pub fn period(&self, month0: usize, hour: usize) -> PeriodLabel {
        self.table[month0][hour].0
    }

    /// Copy with every energy rate multiplied by `factor`.
    pub fn scaled_rates(&self, factor: f64) -> Self {
        let mut file = self.to_file();
        for s in &mut file.seasons {
            for p in &mut s.periods {
                p.rate_usd_per_kwh *= factor;
            }
        }
        Self::new(file).expect("scaling preserves validity")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaps_and_double_seasons_are_rejected() {
        let gap = r#"{"name":"t","demand_charge_usd_per_kw":0,"seasons":[
            {"name":"all","months":[1,2,3,4,5,6,7,8,9,10,11,12],
             "periods":[{"label":"off-peak","hours":[[0,23]],"rate_usd_per_kwh":0.1}]}]}"#;
        assert!(matches!(
            TariffSchedule::from_json_str(gap),
            Err(TariffError::Unmapped { month: 1, hour: 23 })
        ));
        let twice = r#"{"name":"t","demand_charge_usd_per_kw":0,"seasons":[
            {"name":"a","months":[1,2,3,4,5,6,7,8,9,10,11,12],
             "periods":[{"label":"off-peak","hours":[[0,24]],"rate_usd_per_kwh":0.1}]},
            {"name":"b","months":[7],
             "periods":[{"label":"off-peak","hours":[[0,24]],"rate_usd_per_kwh":0.1}]}]}"#;
        assert!(matches!(
            TariffSchedule::from_json_str(twice),
            Err(TariffError::SeasonCoverage { month: 7, count: 2 })
        ));
    }

    #[test]
    fn precedence_and_wrapping() {
        let text = r#"{"name":"t","demand_charge_usd_per_kw":5,"seasons":[
            {"name":"all","months":[1,2,3,4,5,6,7,8,9,10,11,12],
             "periods":[{"label":"off-peak","hours":[[20,18]],"rate_usd_per_kwh":0.1},
                        {"label":"peak","hours":[[6,9]],"rate_usd_per_kwh":0.3},
                        {"label":"partial-peak","hours":[[18,20]],"rate_usd_per_kwh":0.2}]}]}"#;
        let t = TariffSchedule::from_json_str(text).unwrap();
        assert_eq!(t.period(0, 7), PeriodLabel::Peak);
        assert_eq!(t.period(0, 19), PeriodLabel::PartialPeak);
        assert_eq!(t.period(0, 23), PeriodLabel::OffPeak);
        assert_eq!(t.period(0, 2), PeriodLabel::OffPeak);
        assert_eq!(t.scaled_rates(2.0).rate(0, 7), 0.6);
    }
}
