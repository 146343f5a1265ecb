//! Synthetic household demand for studies without metered data.
//!
//! Each house is a base load plus a refrigerator duty cycle, morning and
//! evening occupancy bumps, an air-conditioning compressor that cycles on
//! and off with a mid-afternoon peak in cooling need, and a handful of
//! discrete appliance events per day.
//! Profiles are built at one-minute resolution and block-averaged to coarser
//! resolutions, so a 30-minute pool is exactly the resampled 1-minute pool.

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};

use super::profile::{resample, LoadPool, LoadProfile, ProfileError, WEEK_S};
use crate::rng::substream;

/// Hard ceiling on any single minute of household demand.
pub const MAX_HOUSE_KW: f64 = 12.0;

const MINUTES_PER_DAY: usize = 1440;

struct HouseTraits {
    base_kw: f64,
    fridge_kw: f64,
    fridge_period_min: usize,
    morning_kw: f64,
    morning_center_h: f64,
    morning_width_h: f64,
    evening_kw: f64,
    evening_center_h: f64,
    evening_width_h: f64,
    /// Compressor rating; zero for houses without central AC.
    ac_kw: f64,
    /// Fraction of the afternoon during which cooling is needed.
    ac_intensity: f64,
    daytime_occupancy: f64,
    events_per_day: f64,
}

fn draw_traits<R: Rng>(rng: &mut R) -> HouseTraits {
    let has_ac = rng.random_bool(0.8);
    HouseTraits {
        base_kw: rng.random_range(0.12..0.45),
        fridge_kw: rng.random_range(0.08..0.18),
        fridge_period_min: rng.random_range(35..70),
        morning_kw: rng.random_range(0.3..1.8),
        morning_center_h: rng.random_range(6.3..8.2),
        morning_width_h: rng.random_range(0.5..1.1),
        evening_kw: rng.random_range(0.5..1.6),
        evening_center_h: rng.random_range(18.0..20.5),
        evening_width_h: rng.random_range(1.0..2.2),
        ac_kw: if has_ac { rng.random_range(2.2..4.4) } else { 0.0 },
        ac_intensity: rng.random_range(0.6..1.0),
        daytime_occupancy: rng.random_range(0.05..1.0),
        events_per_day: rng.random_range(1.0..3.5),
    }
}

fn bump(hour: f64, center: f64, width: f64) -> f64 {
    let z = (hour - center) / width;
    (-0.5 * z * z).exp()
}

/// Cooling need over the day: a low overnight duty and a daytime cycle
/// peaking mid-afternoon.
fn cooling_need(hour: f64) -> f64 {
    let day = if (9.0..22.0).contains(&hour) {
        (std::f64::consts::PI * (hour - 9.0) / 13.0).sin().powi(2)
    } else {
        0.0
    };
    0.2 + 0.8 * day
}

fn synth_house<R: Rng>(rng: &mut R) -> Vec<f64> {
    let t = draw_traits(rng);
    let n = (WEEK_S / 60) as usize;
    let mut kw = vec![0.0; n];
    let jitter = Normal::<f64>::new(1.0, 0.06).expect("valid normal");
    let day_scale = Normal::<f64>::new(1.0, 0.12).expect("valid normal");
    let fridge_phase = rng.random_range(0..t.fridge_period_min);

    for day in 0..7 {
        let weekend = day >= 5;
        let scale: f64 = day_scale.sample(rng);
        let scale = scale.clamp(0.6, 1.5);
        let shift = if weekend { 1.2 } else { 0.0 };
        let occupancy = if weekend { 1.0 } else { t.daytime_occupancy };
        let day_heat = rng.random_range(0.7..1.15);

        // Compressor cycle: on/off lengths in minutes, re-drawn per day.
        let cycle_on = rng.random_range(8..20);
        let cycle_off = rng.random_range(6..16);
        let cycle_offset = rng.random_range(0..cycle_on + cycle_off);

        let start = day * MINUTES_PER_DAY;
        for m in 0..MINUTES_PER_DAY {
            let hour = (m as f64 + 0.5) / 60.0;
            let mut p = t.base_kw;
            if (start + m + fridge_phase) % t.fridge_period_min < t.fridge_period_min * 2 / 5 {
                p += t.fridge_kw;
            }
            p += t.morning_kw * bump(hour, t.morning_center_h + shift, t.morning_width_h);
            p += t.evening_kw * bump(hour, t.evening_center_h, t.evening_width_h);
            // Daytime occupancy adds lighting and plug load late morning to afternoon.
            p += 0.6 * occupancy * bump(hour, 13.5, 2.5);
            p *= scale;

            if t.ac_kw > 0.0 {
                let need = cooling_need(hour) * t.ac_intensity * day_heat * (0.7 + 0.3 * occupancy);
                // Duty fraction tracks need; the compressor runs at full rating when on.
                let period = cycle_on + cycle_off;
                let on_minutes = (need.min(1.0) * period as f64).round() as usize;
                if (m + cycle_offset) % period < on_minutes {
                    p += t.ac_kw;
                }
            }
            kw[start + m] = p;
        }

        let events = Poisson::new(t.events_per_day).expect("positive rate").sample(rng) as usize;
        for _ in 0..events {
            let power = rng.random_range(0.5..2.0);
            let duration = rng.random_range(8..55);
            // Appliance use concentrates in the morning and evening.
            let center: f64 = if rng.random_bool(0.65) {
                rng.random_range(17.0..21.5)
            } else {
                rng.random_range(7.0..16.0) + shift * 0.5
            };
            let first = ((center * 60.0) as usize).min(MINUTES_PER_DAY - 1);
            for m in first..(first + duration).min(MINUTES_PER_DAY) {
                kw[start + m] += power;
            }
        }
    }

    for v in &mut kw {
        *v = (*v * jitter.sample(rng)).clamp(0.0, MAX_HOUSE_KW);
    }
    kw
}

/// Generates a deterministic pool of `n_houses` synthetic weekly profiles.
pub fn generate_synthetic_pool(n_houses: usize, rng_seed: u64, resolution_s: u32) -> Result<LoadPool, ProfileError> {
    if n_houses == 0 {
        return Err(ProfileError::EmptyPool);
    }
    let profiles = (0..n_houses)
        .map(|h| {
            let mut rng = substream(rng_seed, "synthetic-house", h as u64);
            let minute = LoadProfile {
                house_id: format!("syn{h:04}"),
                resolution_s: 60,
                kw: synth_house(&mut rng),
            };
            if resolution_s == 60 {
                Ok(minute)
            } else {
                resample(&minute, resolution_s)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    LoadPool::new(profiles)
}
