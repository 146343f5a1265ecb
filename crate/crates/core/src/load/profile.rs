use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Seconds in the weekly profile horizon.
pub const WEEK_S: u32 = 7 * 24 * 3600;

#[derive(Debug, Error, PartialEq)]
pub enum ProfileError {
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("line {line}: {reason}")]
    Malformed { line: u64, reason: String },
    #[error("line {line}, column {column}: negative demand {value} kW")]
    Negative { line: u64, column: usize, value: f64 },
    #[error("house \"{house}\": {got} values at {resolution_s} s do not span one week ({expected} expected)")]
    WrongLength {
        house: String,
        resolution_s: u32,
        expected: usize,
        got: usize,
    },
    #[error("resolution {0} s does not divide one week")]
    BadResolution(u32),
    #[error("pool mixes resolutions {0} s and {1} s")]
    MixedResolutions(u32, u32),
    #[error("load pool is empty")]
    EmptyPool,
    #[error("cannot resample {from} s to {to} s: target must be an integer multiple of the source")]
    NonIntegerRatio { from: u32, to: u32 },
    #[error("upsampling {from} s to {to} s is not supported")]
    Upsample { from: u32, to: u32 },
}

pub fn steps_per_week(resolution_s: u32) -> Result<usize, ProfileError> {
    if resolution_s == 0 || !WEEK_S.is_multiple_of(resolution_s) {
        return Err(ProfileError::BadResolution(resolution_s));
    }
    Ok((WEEK_S / resolution_s) as usize)
}

/// One house's weekly demand, starting Monday 00:00.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadProfile {
    pub house_id: String,
    pub resolution_s: u32,
    pub kw: Vec<f64>,
}

impl LoadProfile {
    pub fn new(house_id: impl Into<String>, resolution_s: u32, kw: Vec<f64>) -> Result<Self, ProfileError> {
        let house_id = house_id.into();
        let expected = steps_per_week(resolution_s)?;
        if kw.len() != expected {
            return Err(ProfileError::WrongLength {
                house: house_id,
                resolution_s,
                expected,
                got: kw.len(),
            });
        }
        if let Some((i, &v)) = kw.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(ProfileError::Negative {
                line: 0,
                column: i + 1,
                value: v,
            });
        }
        Ok(Self {
            house_id,
            resolution_s,
            kw,
        })
    }

    pub fn peak_kw(&self) -> f64 {
        self.kw.iter().copied().fold(0.0, f64::max)
    }

    pub fn energy_kwh(&self) -> f64 {
        self.kw.iter().sum::<f64>() * f64::from(self.resolution_s) / 3600.0
    }
}

/// Sampling pool of household weekly profiles at one resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadPool {
    pub profiles: Vec<LoadProfile>,
    pub resolution_s: u32,
}

impl LoadPool {
    pub fn new(profiles: Vec<LoadProfile>) -> Result<Self, ProfileError> {
        let first = profiles.first().ok_or(ProfileError::EmptyPool)?.resolution_s;
        if let Some(p) = profiles.iter().find(|p| p.resolution_s != first) {
            return Err(ProfileError::MixedResolutions(first, p.resolution_s));
        }
        Ok(Self {
            profiles,
            resolution_s: first,
        })
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn resampled(&self, target_resolution_s: u32) -> Result<Self, ProfileError> {
        let profiles = self
            .profiles
            .iter()
            .map(|p| resample(p, target_resolution_s))
            .collect::<Result<Vec<_>, _>>()?;
        LoadPool::new(profiles)
    }
}

/// Reads a profile CSV (`house_id,t0,t1,...`, one row per house).
///
/// The resolution is declared by the caller, never inferred.
pub fn ingest_csv(path: impl AsRef<Path>, resolution_s: u32) -> Result<LoadPool, ProfileError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| ProfileError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    read_profiles(file, resolution_s)
}

pub fn read_profiles<R: std::io::Read>(reader: R, resolution_s: u32) -> Result<LoadPool, ProfileError> {
    let expected = steps_per_week(resolution_s)?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let header_len = rdr
        .headers()
        .map_err(|e| ProfileError::Malformed {
            line: 1,
            reason: e.to_string(),
        })?
        .len();
    if header_len == 0 {
        return Err(ProfileError::Malformed {
            line: 1,
            reason: "missing header".into(),
        });
    }
    let mut profiles = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| ProfileError::Malformed {
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let house = record.get(0).unwrap_or_default().trim().to_string();
        if house.is_empty() {
            return Err(ProfileError::Malformed {
                line,
                reason: "empty house_id".into(),
            });
        }
        let mut kw = Vec::with_capacity(record.len().saturating_sub(1));
        for (column, field) in record.iter().enumerate().skip(1) {
            let value: f64 = field.trim().parse().map_err(|_| ProfileError::Malformed {
                line,
                reason: format!("column {column}: \"{field}\" is not a number"),
            })?;
            if !(value >= 0.0) {
                return Err(ProfileError::Negative { line, column, value });
            }
            kw.push(value);
        }
        if kw.len() != expected {
            return Err(ProfileError::WrongLength {
                house,
                resolution_s,
                expected,
                got: kw.len(),
            });
        }
        profiles.push(LoadProfile {
            house_id: house,
            resolution_s,
            kw,
        });
    }
    LoadPool::new(profiles)
}

/// Writes profiles in the ingestion CSV layout.
pub fn write_profiles<W: std::io::Write>(pool: &LoadPool, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n = pool.profiles.first().map_or(0, |p| p.kw.len());
    let mut header = vec!["house_id".to_string()];
    header.extend((0..n).map(|t| format!("t{t}")));
    w.write_record(&header)?;
    for p in &pool.profiles {
        let mut row = vec![p.house_id.clone()];
        row.extend(p.kw.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Block-mean downsampling of a series by an integer factor.
pub fn block_mean(series: &[f64], factor: usize) -> Vec<f64> {
    series
        .chunks(factor)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect()
}

/// Downsamples a profile to a coarser resolution by block means, which
/// preserves weekly energy.
pub fn resample(profile: &LoadProfile, target_resolution_s: u32) -> Result<LoadProfile, ProfileError> {
    let from = profile.resolution_s;
    if target_resolution_s < from {
        return Err(ProfileError::Upsample {
            from,
            to: target_resolution_s,
        });
    }
    if !target_resolution_s.is_multiple_of(from) {
        return Err(ProfileError::NonIntegerRatio {
            from,
            to: target_resolution_s,
        });
    }
    steps_per_week(target_resolution_s)?;
    let factor = (target_resolution_s / from) as usize;
    Ok(LoadProfile {
        house_id: profile.house_id.clone(),
        resolution_s: target_resolution_s,
        kw: block_mean(&profile.kw, factor),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn flat(res: u32, v: f64) -> LoadProfile {
        LoadProfile::new("h", res, vec![v; steps_per_week(res).unwrap()]).unwrap()
    }

    #[test]
    fn constant_block_resamples_to_itself() {
        let r = resample(&flat(60, 2.0), 1800).unwrap();
        assert_eq!(r.kw.len(), 336);
        assert!(r.kw.iter().all(|&v| (v - 2.0).abs() < 1e-12));
    }

    #[test]
    fn spike_is_smoothed_by_block_mean() {
        let mut p = flat(60, 0.0);
        p.kw[29] = 30.0;
        let r = resample(&p, 1800).unwrap();
        assert_eq!(r.kw[0], 1.0);
        assert_eq!(p.peak_kw(), 30.0);
        assert_eq!(r.peak_kw(), 1.0);
    }

    #[test]
    fn resample_rejects_bad_targets() {
        let p = flat(60, 1.0);
        assert!(matches!(resample(&p, 90), Err(ProfileError::NonIntegerRatio { .. })));
        let coarse = flat(1800, 1.0);
        assert!(matches!(resample(&coarse, 60), Err(ProfileError::Upsample { .. })));
    }

    #[test]
    fn csv_ingestion() {
        let mut text = String::from("house_id");
        for t in 0..10080 {
            text.push_str(&format!(",t{t}"));
        }
        text.push_str("\nh1");
        for t in 0..10080 {
            text.push_str(&format!(",{}", (t % 7) as f64 * 0.5));
        }
        text.push('\n');
        let pool = read_profiles(text.as_bytes(), 60).unwrap();
        assert_eq!(pool.len(), 1);
        assert_eq!(pool.resolution_s, 60);

        let half_hourly: String = {
            let mut s = String::from("house_id");
            for t in 0..336 {
                s.push_str(&format!(",t{t}"));
            }
            for h in 0..3 {
                s.push_str(&format!("\nu{h}"));
                for _ in 0..336 {
                    s.push_str(",1.25");
                }
            }
            s
        };
        let pool = read_profiles(half_hourly.as_bytes(), 1800).unwrap();
        assert_eq!((pool.len(), pool.resolution_s), (3, 1800));

        assert!(matches!(read_profiles(half_hourly.as_bytes(), 60), Err(ProfileError::WrongLength { .. })));
    }

    #[test]
    fn negative_value_cites_line() {
        let mut s = String::from("house_id");
        for t in 0..336 {
            s.push_str(&format!(",t{t}"));
        }
        // Header is line 1, so house 511 sits on line 512.
        for h in 1..=520 {
            s.push_str(&format!("\nh{h}"));
            for t in 0..336 {
                let v = if h == 511 && t == 100 { -0.5 } else { 1.0 };
                s.push_str(&format!(",{v}"));
            }
        }
        match read_profiles(s.as_bytes(), 1800) {
            Err(ProfileError::Negative { line, column, .. }) => {
                assert_eq!(line, 512);
                assert_eq!(column, 101);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mixed_resolutions_are_rejected() {
        let err = LoadPool::new(vec![flat(60, 1.0), flat(1800, 1.0)]).unwrap_err();
        assert_eq!(err, ProfileError::MixedResolutions(60, 1800));
        assert_eq!(LoadPool::new(vec![]).unwrap_err(), ProfileError::EmptyPool);
    }

    proptest! {
        #[test]
        fn downsampling_preserves_energy_and_never_raises_peak(
            values in proptest::collection::vec(0.0f64..12.0, 336),
            factor in prop::sample::select(vec![2u32, 3, 4, 6, 8, 12, 24, 48]),
        ) {
            let p = LoadProfile::new("p", 1800, values).unwrap();
            let r = resample(&p, 1800 * factor).unwrap();
            let (e0, e1) = (p.energy_kwh(), r.energy_kwh());
            prop_assert!((e0 - e1).abs() <= 1e-9 * e0.max(1.0));
            prop_assert!(r.peak_kw() <= p.peak_kw() + 1e-12);
        }
    }
}
