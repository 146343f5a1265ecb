//! Normalized PV output shapes and the billing calendar.
//!
//! The calendar is a non-leap year whose first day is a Monday, matching the
//! Monday-first weekly load profiles.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SizingError;
use crate::load::block_mean;

pub const DAYS_IN_MONTH: [usize; 12] = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];
pub const DAYS_IN_YEAR: usize = 365;
const MINUTES_PER_DAY: usize = 1440;

/// Zero-based day of year on which a zero-based month starts.
pub fn month_start_day(month0: usize) -> usize {
    DAYS_IN_MONTH[..month0].iter().sum()
}

pub fn month_of_day(day_of_year: usize) -> usize {
    let mut d = day_of_year;
    for (m, &len) in DAYS_IN_MONTH.iter().enumerate() {
        if d < len {
            return m;
        }
        d -= len;
    }
    panic!("day {day_of_year} outside the year")
}

/// Weekday with Monday = 0.
pub fn weekday(day_of_year: usize) -> usize {
    day_of_year % 7
}

/// Number of days in a month falling on each weekday.
pub fn weekday_counts(month0: usize) -> [usize; 7] {
    let mut counts = [0; 7];
    let start = month_start_day(month0);
    for d in start..start + DAYS_IN_MONTH[month0] {
        counts[weekday(d)] += 1;
    }
    counts
}

/// Built-in clear-sky generation shape.
///
/// Output is zero outside daylight and follows a sin² bump centred on solar
/// noon. Day length and the noon peak vary with the month.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClearSky {
    pub mean_daylight_h: f64,
    /// Half the difference between the longest and shortest day, hours.
    pub daylight_swing_h: f64,
    /// Clock time of solar noon, hours.
    pub solar_noon_h: f64,
    /// Noon output at the winter solstice relative to the summer solstice.
    pub winter_peak_ratio: f64,
}

impl Default for ClearSky {
    fn default() -> Self {
        Self {
            mean_daylight_h: 12.0,
            daylight_swing_h: 2.4,
            solar_noon_h: 13.0,
            winter_peak_ratio: 0.7,
        }
    }
}

impl ClearSky {
    fn mid_month_day(month0: usize) -> f64 {
        month_start_day(month0) as f64 + DAYS_IN_MONTH[month0] as f64 / 2.0
    }

    pub fn daylight_h(&self, month0: usize) -> f64 {
        let d = Self::mid_month_day(month0);
        self.mean_daylight_h + self.daylight_swing_h * (2.0 * PI * (d - 80.0) / 365.0).sin()
    }

    pub fn noon_peak(&self, month0: usize) -> f64 {
        let d = Self::mid_month_day(month0);
        let season = 0.5 + 0.5 * (2.0 * PI * (d - 172.0) / 365.0).cos();
        self.winter_peak_ratio + (1.0 - self.winter_peak_ratio) * season
    }

    /// Output at a clock hour of a day in the given month, per unit of
    /// installed capacity.
    pub fn value(&self, month0: usize, hour: f64) -> f64 {
        let length = self.daylight_h(month0);
        let sunrise = self.solar_noon_h - length / 2.0;
        let x = (hour - sunrise) / length;
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        self.noon_peak(month0) * (PI * x).sin().powi(2)
    }

    /// One day of output at `resolution_s`, block-averaged from minute samples.
    pub fn day(&self, month0: usize, resolution_s: u32) -> Vec<f64> {
        let minutes: Vec<f64> = (0..MINUTES_PER_DAY)
            .map(|m| self.value(month0, (m as f64 + 0.5) / 60.0))
            .collect();
        block_mean(&minutes, (resolution_s / 60).max(1) as usize)
    }

    /// Seven identical days for the given month.
    pub fn week(&self, month0: usize, resolution_s: u32) -> Vec<f64> {
        self.day(month0, resolution_s).repeat(7)
    }
}

/// Source of the PV output shape.
#[derive(Debug, Clone, PartialEq)]
pub enum PvShape {
    ClearSky(ClearSky),
    /// A user-supplied weekly shape, applied to every week of the year.
    Weekly { resolution_s: u32, values: Vec<f64> },
}

impl Default for PvShape {
    fn default() -> Self {
        PvShape::ClearSky(ClearSky::default())
    }
}

impl PvShape {
    /// Weekly shape (Monday first) representative of a month.
    pub fn week(&self, month0: usize, resolution_s: u32) -> Result<Vec<f64>, SizingError> {
        match self {
            PvShape::ClearSky(cs) => {
                if !resolution_s.is_multiple_of(60) || 86_400 % resolution_s != 0 {
                    return Err(SizingError::Misaligned(format!(
                        "resolution {resolution_s} s must be a whole number of minutes dividing a day"
                    )));
                }
                Ok(cs.week(month0, resolution_s))
            }
            PvShape::Weekly {
                resolution_s: own,
                values,
            } => {
                if resolution_s == *own {
                    Ok(values.clone())
                } else if resolution_s > *own && resolution_s.is_multiple_of(*own) {
                    Ok(block_mean(values, (resolution_s / own) as usize))
                } else {
                    Err(SizingError::Misaligned(format!(
                        "shape at {own} s cannot be expressed at {resolution_s} s"
                    )))
                }
            }
        }
    }
}

/// Reads a `t,pu_output` CSV holding one week of normalized output.
pub fn read_shape_csv(path: impl AsRef<Path>, resolution_s: u32) -> Result<PvShape, SizingError> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| SizingError::ShapeFile(format!("{}: {e}", path.display())))?;
    let mut values = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| SizingError::ShapeFile(e.to_string()))?;
        let v: f64 = rec
            .get(1)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| SizingError::ShapeFile(format!("row {}: missing or invalid pu_output", row + 2)))?;
        if !(0.0..=1.0).contains(&v) {
            return Err(SizingError::ShapeFile(format!("row {}: {v} outside [0, 1]", row + 2)));
        }
        values.push(v);
    }
    let expected = crate::load::steps_per_week(resolution_s).map_err(|e| SizingError::ShapeFile(e.to_string()))?;
    if values.len() != expected {
        return Err(SizingError::ShapeFile(format!(
            "{} rows at {resolution_s} s; one week needs {expected}",
            values.len()
        )));
    }
    Ok(PvShape::Weekly { resolution_s, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calendar() {
        assert_eq!(month_start_day(6), 181);
        assert_eq!(month_of_day(0), 0);
        assert_eq!(month_of_day(181), 6);
        assert_eq!(month_of_day(364), 11);
        assert_eq!(weekday_counts(1), [4; 7]);
        assert_eq!((0..12).map(|m| weekday_counts(m).iter().sum::<usize>()).sum::<usize>(), 365);
    }

    #[test]
    fn clear_sky_is_bounded_and_dark_at_night() {
        let cs = ClearSky::default();
        for m in 0..12 {
            let day = cs.day(m, 60);
            assert!(day.iter().all(|v| (0.0..=1.0).contains(v)));
            assert_eq!(day[0], 0.0);
            assert_eq!(day[23 * 60], 0.0);
            assert!(day[13 * 60] > 0.5);
        }
        assert!(cs.daylight_h(5) > cs.daylight_h(11));
        let summer: f64 = cs.day(6, 60).iter().sum();
        let winter: f64 = cs.day(0, 60).iter().sum();
        assert!(summer > winter);
    }

    #[test]
    fn coarse_day_is_block_mean_of_fine_day() {
        let cs = ClearSky::default();
        let fine = cs.day(3, 60);
        let coarse = cs.day(3, 1800);
        assert_eq!(block_mean(&fine, 30), coarse);
    }
}
