use feederhc::fixtures::{fixture_path, DUKE_TOU_2018};
use feederhc::load::generate_synthetic_pool;
use feederhc::pv_sizing::*;

fn tariff() -> TariffSchedule {
    TariffSchedule::load(fixture_path(DUKE_TOU_2018)).unwrap()
}

/// Rate table written out by hand from the published schedule. Summer is
/// June-September; the unassigned summer 8-9 PM hour bills off-peak.
fn published_rate(month0: usize, hour: usize) -> f64 {
    let summer = (5..=8).contains(&month0);
    if summer {
        match hour {
            13..=17 => 0.23507,
            11 | 12 | 18 | 19 => 0.11996,
            _ => 0.07063,
        }
    } else {
        match hour {
            6..=8 => 0.22356,
            9..=11 | 13..=19 => 0.11708,
            _ => 0.07063,
        }
    }
}

fn single_hour(month0: usize, hour: usize, load_kw: f64, shape: f64) -> BillingHorizon {
    let minute = month_start_day(month0) * 1440 + hour * 60;
    BillingHorizon::from_series(minute, 3600, &[load_kw], &[shape]).unwrap()
}

#[test]
fn capital_recovery_and_levelized_cost() {
    let crf = capital_recovery_factor(0.08, 20).unwrap();
    assert!((crf - 0.101852).abs() < 1e-6, "{crf}");
    let cost = levelized_cost(&PvCostModel::default(), 10.0).unwrap();
    assert!((cost - 1018.52).abs() < 0.01, "{cost}");
}

#[test]
fn every_hour_of_the_year_bills_the_published_rate() {
    let t = tariff();
    for m in 0..12 {
        for h in 0..24 {
            let bill = annual_bill(&single_hour(m, h, 1.0, 0.0), 0.0, &t).unwrap();
            assert_eq!(bill.energy_usd, published_rate(m, h), "month {} hour {h}", m + 1);
            assert_eq!(bill.demand_usd, 13.0);
        }
    }
}

#[test]
fn table_rates_examples() {
    let t = tariff();
    let energy = |m, h| annual_bill(&single_hour(m, h, 1.0, 0.0), 0.0, &t).unwrap().energy_usd;
    assert_eq!(energy(6, 15), 0.23507);
    assert_eq!(energy(6, 12), 0.11996);
    assert_eq!(energy(6, 2), 0.07063);
    assert_eq!(energy(0, 7), 0.22356);
    assert_eq!(energy(0, 10), 0.11708);
    assert_eq!(energy(0, 23), 0.07063);
}

#[test]
fn surplus_interval_bills_nothing() {
    let t = tariff();
    let bill = annual_bill(&single_hour(6, 14, 1.0, 1.0), 5.0, &t).unwrap();
    assert_eq!(bill.energy_usd, 0.0);
    assert_eq!(bill.demand_usd, 0.0);
    assert_eq!(bill.total_usd, 0.0);
}

#[test]
fn negative_capacity_is_rejected() {
    assert!(annual_bill(&single_hour(0, 0, 1.0, 0.0), -1.0, &tariff()).is_err());
}

/// The year as 365 explicit days, Monday 1 January.
fn explicit_year(week: &[f64], resolution_s: u32, scale: &[f64; 12], shape: &PvShape) -> (Vec<f64>, Vec<f64>) {
    let per_day = (86_400 / resolution_s) as usize;
    let weeks: Vec<Vec<f64>> = (0..12).map(|m| shape.week(m, resolution_s).unwrap()).collect();
    let mut load = Vec::with_capacity(365 * per_day);
    let mut pv = Vec::with_capacity(365 * per_day);
    for d in 0..DAYS_IN_YEAR {
        let (m, wd) = (month_of_day(d), weekday(d));
        for k in 0..per_day {
            load.push(week[wd * per_day + k] * scale[m]);
            pv.push(weeks[m][wd * per_day + k]);
        }
    }
    (load, pv)
}

#[test]
fn tiled_year_bills_like_the_explicit_year() {
    let pool = generate_synthetic_pool(3, 11, 900).unwrap();
    let t = tariff();
    let shape = PvShape::default();
    for p in &pool.profiles {
        let tiled = BillingHorizon::tiled_year(&p.kw, 900, &DEFAULT_MONTHLY_SCALE, &shape).unwrap();
        let (load, pv) = explicit_year(&p.kw, 900, &DEFAULT_MONTHLY_SCALE, &shape);
        let explicit = BillingHorizon::from_series(0, 900, &load, &pv).unwrap();
        for kw in [0.0, 2.5, 7.0, 20.0] {
            let a = annual_bill(&tiled, kw, &t).unwrap();
            let b = annual_bill(&explicit, kw, &t).unwrap();
            assert!((a.total_usd - b.total_usd).abs() < 1e-6 * b.total_usd.max(1.0));
            assert!((a.demand_usd - b.demand_usd).abs() < 1e-9);
        }
    }
}

/// Independent annual bill: day-by-day over the explicit year with the
/// hand-written rate table and a 13 $/kW monthly demand charge.
fn oracle_bill(load: &[f64], pv: &[f64], resolution_s: u32, kw: f64) -> f64 {
    let per_day = (86_400 / resolution_s) as usize;
    let dt = f64::from(resolution_s) / 3600.0;
    let mut energy = 0.0;
    let mut peaks = [0.0f64; 12];
    for (i, (&l, &s)) in load.iter().zip(pv).enumerate() {
        let day = i / per_day;
        let m = month_of_day(day);
        let hour = (i % per_day) * resolution_s as usize / 3600;
        let net = (l - kw * s).max(0.0);
        energy += net * published_rate(m, hour) * dt;
        peaks[m] = peaks[m].max(net);
    }
    energy + 13.0 * peaks.iter().sum::<f64>()
}

#[test]
fn optimal_size_matches_exhaustive_recomputation() {
    let res = 900;
    let pool = generate_synthetic_pool(50, 5, res).unwrap();
    let t = tariff();
    let shape = PvShape::default();
    let grid = SizingGrid::default();
    let model = PvCostModel::default();
    let annual_cost_per_kw = 0.101852 * 1000.0;
    let weeks: Vec<&[f64]> = pool.profiles.iter().map(|p| p.kw.as_slice()).collect();
    let results = size_weekly_profiles(&weeks, res, &DEFAULT_MONTHLY_SCALE, &shape, &t, &model, &grid).unwrap();
    let mut nonzero = 0;
    for (p, r) in pool.profiles.iter().zip(&results) {
        let (load, pv) = explicit_year(&p.kw, res, &DEFAULT_MONTHLY_SCALE, &shape);
        let base = oracle_bill(&load, &pv, res, 0.0);
        let mut best = (0.0, f64::NEG_INFINITY);
        let sizes: Vec<f64> = (0..=40).map(|k| f64::from(k) * 0.5).collect();
        assert_eq!(r.candidates.len(), sizes.len());
        for (c, &kw) in r.candidates.iter().zip(&sizes) {
            let benefit = base - oracle_bill(&load, &pv, res, kw) - annual_cost_per_kw * kw;
            assert_eq!(c.kw, kw);
            assert!(
                (c.net_benefit_usd - benefit).abs() < 0.01,
                "{}: {kw} kW net benefit {} vs {benefit}",
                p.house_id,
                c.net_benefit_usd
            );
            if benefit > best.1 + 1e-9 {
                best = (kw, benefit);
            }
        }
        assert_eq!(r.optimal_kw, best.0, "{}", p.house_id);
        assert_eq!(r.best().kw, r.optimal_kw);
        nonzero += usize::from(r.optimal_kw > 0.0);
    }
    assert!(nonzero > 25, "most houses should justify some PV, got {nonzero}/50");
}

#[test]
fn optimum_lies_on_the_grid_and_ties_go_small() {
    // Flat load at night only: PV never offsets anything, so every size costs money.
    let per_day = 96;
    let week: Vec<f64> = (0..7 * per_day)
        .map(|i| if (i % per_day) < 20 { 2.0 } else { 0.0 })
        .collect();
    let h = BillingHorizon::tiled_year(&week, 900, &[1.0; 12], &PvShape::default()).unwrap();
    let r = optimal_size(&h, &tariff(), &PvCostModel::default(), &SizingGrid::default()).unwrap();
    assert_eq!(r.optimal_kw, 0.0);

    let free = PvCostModel {
        a_pv_usd_per_kw: 0.0,
        ..PvCostModel::default()
    };
    let r = optimal_size(&h, &tariff(), &free, &SizingGrid::default()).unwrap();
    assert_eq!(r.optimal_kw, 0.0, "zero benefit everywhere ties to the smallest size");
}

#[test]
fn bad_grid_and_misaligned_inputs_are_errors() {
    let h = single_hour(0, 0, 1.0, 0.0);
    let grid = SizingGrid {
        min_kw: 0.0,
        max_kw: 10.0,
        step_kw: 0.0,
    };
    assert!(optimal_size(&h, &tariff(), &PvCostModel::default(), &grid).is_err());
    assert!(BillingHorizon::tiled_year(&[1.0; 10], 900, &[1.0; 12], &PvShape::default()).is_err());
    assert!(BillingHorizon::from_series(0, 3600, &[1.0, 2.0], &[0.0]).is_err());
    assert!(BillingHorizon::from_series(0, 7, &[1.0], &[0.0]).is_err());
}
