//! Command implementations. Work runs inside the caller's rayon pool; files
//! are written afterwards from the folded, ordered results.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;

use feederhc::feeder::{parse_feeder, FeederModel};
use feederhc::hosting::{feeder_peak_kva, run_study, HostingCapacityResult, StochasticConfig, Strategy, StudyInputs};
use feederhc::load::{
    allocate_feeder, feeder_head_series, generate_synthetic_pool, ingest_csv, nodal_loads, total_houses, LoadPool,
};
use feederhc::power_flow::QstsOptions;
use feederhc::pv_sizing::{read_shape_csv, size_weekly_profiles, PvShape, TariffSchedule};
use feederhc::zonal::{partition, resolution_comparison, ResolutionCase};

use crate::artifacts::*;
use crate::config::{PoolSource, ShapeSource};
use crate::{CliError, Context, HostingArgs, ZonalArgs};

fn input(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn out_path(ctx: &Context, name: &str) -> PathBuf {
    ctx.out.join(name)
}

fn load_feeder(ctx: &Context) -> Result<FeederModel, CliError> {
    parse_feeder(&ctx.config.feeder).map_err(input)
}

fn load_pool(ctx: &Context) -> Result<LoadPool, CliError> {
    match &ctx.config.pool {
        PoolSource::Synthetic { n_houses, resolution_s } => {
            generate_synthetic_pool(*n_houses, ctx.seed, *resolution_s).map_err(input)
        }
        PoolSource::Csv { path, resolution_s } => ingest_csv(path, *resolution_s).map_err(input),
    }
}

fn pool_at(pool: &LoadPool, resolution_s: u32) -> Result<LoadPool, CliError> {
    if pool.resolution_s == resolution_s {
        Ok(pool.clone())
    } else {
        pool.resampled(resolution_s).map_err(input)
    }
}

fn load_shape(ctx: &Context) -> Result<PvShape, CliError> {
    match &ctx.config.pv_shape {
        ShapeSource::Builtin => Ok(PvShape::default()),
        ShapeSource::Csv { path, resolution_s } => read_shape_csv(path, *resolution_s).map_err(input),
    }
}

fn shape_week(ctx: &Context, shape: &PvShape, resolution_s: u32) -> Result<Vec<f64>, CliError> {
    let month = ctx.config.qsts.pv_month;
    if !(1..=12).contains(&month) {
        return Err(CliError::Input(format!("qsts.pv_month must be 1-12, got {month}")));
    }
    shape.week(month - 1, resolution_s).map_err(input)
}

fn qsts_options(ctx: &Context) -> QstsOptions {
    ctx.config.qsts.options()
}

/// Reads allocation.json and checks it matches the current config and seed.
fn load_allocation(ctx: &Context, feeder: &FeederModel, pool: &LoadPool) -> Result<AllocationArtifact, CliError> {
    let art: AllocationArtifact = read_json(&out_path(ctx, ALLOCATION_JSON), "allocate")?;
    if art.seed != ctx.seed
        || art.feeder != feeder.name
        || art.pool_size != pool.len()
        || art.pool_resolution_s != pool.resolution_s
        || art.nodes.len() != feeder.load_nodes.len()
    {
        return Err(CliError::Input(format!(
            "{ALLOCATION_JSON} does not match the current feeder, pool or seed; re-run `allocate`"
        )));
    }
    Ok(art)
}

fn load_sizing(ctx: &Context, pool: &LoadPool) -> Result<SizingArtifact, CliError> {
    let art: SizingArtifact = read_json(&out_path(ctx, SIZING_JSON), "size")?;
    if art.seed != ctx.seed || art.pool_resolution_s != pool.resolution_s {
        return Err(CliError::Input(format!(
            "{SIZING_JSON} does not match the current pool or seed; re-run `size`"
        )));
    }
    Ok(art)
}

fn stochastic(ctx: &Context, strategy: Strategy, scenarios: Option<usize>, fixed_kw: Option<f64>) -> StochasticConfig {
    let base = &ctx.config.stochastic;
    StochasticConfig {
        strategy,
        rng_seed: ctx.seed,
        m_scenarios: scenarios.unwrap_or(base.m_scenarios),
        fixed_kw: fixed_kw.unwrap_or(base.fixed_kw),
        ..base.clone()
    }
}

pub fn allocate(ctx: &Context) -> Result<(), CliError> {
    let feeder = load_feeder(ctx)?;
    let pool = load_pool(ctx)?;
    let allocs = allocate_feeder(&feeder, &pool, &ctx.config.allocation_config(ctx.seed)).map_err(input)?;
    let head = feeder_head_series(&nodal_loads(&allocs, &pool));
    let nodes = allocs
        .iter()
        .map(|a| {
            let ln = &feeder.load_nodes[a.node];
            NodeEntry {
                node: a.node,
                bus: ln.bus_id.clone(),
                phase: ln.phase.to_string(),
                peak_kw: ln.peak_kw,
                aggregate_peak_kw: a.aggregate_peak_kw,
                n_houses: a.n_houses(),
                houses: a
                    .profiles
                    .iter()
                    .enumerate()
                    .map(|(k, &p)| HouseEntry {
                        id: a.house_id(k),
                        profile: pool.profiles[p].house_id.clone(),
                        pool_index: p,
                    })
                    .collect(),
            }
        })
        .collect();
    let art = AllocationArtifact {
        feeder: feeder.name.clone(),
        seed: ctx.seed,
        pool_resolution_s: pool.resolution_s,
        pool_size: pool.len(),
        total_houses: total_houses(&allocs),
        feeder_peak_kw: head.iter().copied().fold(0.0, f64::max),
        nodes,
    };
    write_json(&out_path(ctx, ALLOCATION_JSON), &art)?;
    println!(
        "allocated {} houses to {} load nodes; feeder peak {:.1} kW",
        art.total_houses,
        art.nodes.len(),
        art.feeder_peak_kw
    );
    Ok(())
}

/// Resolutions at which sizing is needed: the pool's own and every zonal one.
fn sizing_resolutions(ctx: &Context, pool: &LoadPool) -> BTreeSet<u32> {
    let mut set: BTreeSet<u32> = ctx.config.zonal.resolutions.iter().copied().collect();
    set.insert(pool.resolution_s);
    set
}

pub fn size(ctx: &Context) -> Result<(), CliError> {
    let feeder = load_feeder(ctx)?;
    let pool = load_pool(ctx)?;
    let alloc = load_allocation(ctx, &feeder, &pool)?;
    let tariff = TariffSchedule::load(&ctx.config.tariff).map_err(input)?;
    let shape = load_shape(ctx)?;
    let used: BTreeSet<usize> = alloc.nodes.iter().flat_map(|n| n.houses.iter().map(|h| h.pool_index)).collect();
    let used: Vec<usize> = used.into_iter().collect();

    let mut resolutions = Vec::new();
    for res in sizing_resolutions(ctx, &pool) {
        let p = pool_at(&pool, res)?;
        let weeks: Vec<&[f64]> = used.iter().map(|&i| p.profiles[i].kw.as_slice()).collect();
        let results = size_weekly_profiles(
            &weeks,
            res,
            &ctx.config.monthly_scale,
            &shape,
            &tariff,
            &ctx.config.cost,
            &ctx.config.sizing_grid,
        )
        .map_err(input)?;
        resolutions.push(ResolutionSizing {
            resolution_s: res,
            profiles: used
                .iter()
                .zip(results)
                .map(|(&i, r)| ProfileSizing {
                    pool_index: i,
                    profile: pool.profiles[i].house_id.clone(),
                    optimal_kw: r.optimal_kw,
                    candidates: r.candidates,
                })
                .collect(),
        });
    }
    let own = resolutions
        .iter()
        .find(|r| r.resolution_s == pool.resolution_s)
        .expect("pool resolution is always sized");
    let houses = alloc
        .nodes
        .iter()
        .flat_map(|n| {
            n.houses.iter().map(|h| HouseSizing {
                id: h.id.clone(),
                bus: n.bus.clone(),
                pool_index: h.pool_index,
                optimal_kw: own
                    .profiles
                    .iter()
                    .find(|p| p.pool_index == h.pool_index)
                    .map_or(0.0, |p| p.optimal_kw),
            })
        })
        .collect::<Vec<_>>();
    let total: f64 = houses.iter().map(|h| h.optimal_kw).sum();
    let art = SizingArtifact {
        seed: ctx.seed,
        pool_resolution_s: pool.resolution_s,
        houses,
        resolutions,
    };
    write_json(&out_path(ctx, SIZING_JSON), &art)?;
    println!(
        "sized {} profiles at {} resolution(s); optimal total {:.1} kW over {} houses",
        used.len(),
        art.resolutions.len(),
        total,
        art.houses.len()
    );
    Ok(())
}

fn nominal_penetration_pct(step: usize, n_steps: usize) -> f64 {
    100.0 * step as f64 / n_steps as f64
}

fn write_hosting_csvs(ctx: &Context, results: &[HostingCapacityResult]) -> Result<(), CliError> {
    let mut w = csv_writer(&out_path(ctx, FIGS_7_9_CSV))?;
    w.write_record([
        "strategy",
        "scenario",
        "step",
        "penetration_pct",
        "n_deployed",
        "installed_kw",
        "max_v_pu",
        "violation",
    ])
    .map_err(input)?;
    for r in results {
        for rec in &r.records {
            w.write_record([
                r.config.strategy.to_string(),
                rec.scenario.to_string(),
                rec.step.to_string(),
                format!("{:.2}", nominal_penetration_pct(rec.step, r.config.n_steps)),
                rec.n_deployed.to_string(),
                format!("{:.3}", rec.total_kw),
                format!("{:.6}", rec.max_v_pu),
                rec.violation.to_string(),
            ])
            .map_err(input)?;
        }
    }
    w.flush().map_err(input)?;

    let mut w = csv_writer(&out_path(ctx, FIG_10_CSV))?;
    let mut header = vec!["strategy".to_string(), "step".into(), "penetration_pct".into()];
    header.extend(
        feederhc::hosting::PercentileSummary::LABELS
            .iter()
            .map(|l| format!("max_v_{l}")),
    );
    w.write_record(&header).map_err(input)?;
    for r in results {
        for s in &r.step_summaries {
            let mut row = vec![
                r.config.strategy.to_string(),
                s.step.to_string(),
                format!("{:.2}", nominal_penetration_pct(s.step, r.config.n_steps)),
            ];
            row.extend(s.values().iter().map(|v| format!("{v:.6}")));
            w.write_record(&row).map_err(input)?;
        }
    }
    w.flush().map_err(input)
}

pub fn hosting(ctx: &Context, args: &HostingArgs) -> Result<(), CliError> {
    let feeder = load_feeder(ctx)?;
    let pool = load_pool(ctx)?;
    let alloc = load_allocation(ctx, &feeder, &pool)?;
    let allocs = alloc.allocations();
    let strategies: Vec<Strategy> = match args.strategy {
        Some(s) => vec![s],
        None => Strategy::ALL.to_vec(),
    };
    let res = pool.resolution_s;
    let optimal = if strategies.contains(&Strategy::Optimal) {
        Some(load_sizing(ctx, &pool)?.house_kw(&alloc, res)?)
    } else {
        None
    };
    let nodal = nodal_loads(&allocs, &pool);
    let shape = shape_week(ctx, &load_shape(ctx)?, res)?;
    let qsts = qsts_options(ctx);
    let basis = feeder_peak_kva(&nodal, qsts.power_factor);
    let inputs = StudyInputs {
        feeder: &feeder,
        allocations: &allocs,
        nodal_loads: &nodal,
        pv_shape: &shape,
        resolution_s: res,
        basis_kva: basis,
        optimal_kw: optimal.as_deref(),
        qsts: &qsts,
    };
    let mut results = Vec::new();
    for s in strategies {
        let config = stochastic(ctx, s, args.scenarios, args.fixed_kw);
        let r = run_study(&inputs, &config)?;
        println!(
            "{s}: minimum hosting capacity {:.1} kW ({})",
            r.min_hosting_capacity_kw,
            if r.violation_observed {
                "overvoltage observed"
            } else {
                "no overvoltage at any step"
            }
        );
        results.push(r);
    }
    write_hosting_csvs(ctx, &results)?;
    let art = HostingArtifact {
        feeder: feeder.name.clone(),
        seed: ctx.seed,
        resolution_s: res,
        basis_kva: basis,
        results,
    };
    write_json(&out_path(ctx, HOSTING_JSON), &art)
}

pub fn zonal(ctx: &Context, args: &ZonalArgs) -> Result<(), CliError> {
    let feeder = load_feeder(ctx)?;
    let pool = load_pool(ctx)?;
    let alloc = load_allocation(ctx, &feeder, &pool)?;
    let allocs = alloc.allocations();
    let settings = &ctx.config.zonal;
    let k = args.k.unwrap_or(settings.k);
    let zones = partition(&feeder, k)?;
    let strategies: Vec<Strategy> = settings
        .strategies
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if strategies.is_empty() || settings.resolutions.is_empty() {
        return Err(CliError::Input("zonal.strategies and zonal.resolutions must be non-empty".into()));
    }
    let resolutions: BTreeSet<u32> = settings.resolutions.iter().copied().collect();
    let sizing = if strategies.contains(&Strategy::Optimal) {
        Some(load_sizing(ctx, &pool)?)
    } else {
        None
    };
    let qsts = qsts_options(ctx);
    let shape = load_shape(ctx)?;
    // One capacity basis for every resolution, from the finest data.
    let basis = feeder_peak_kva(&nodal_loads(&allocs, &pool), qsts.power_factor);

    struct Owned {
        resolution_s: u32,
        nodal: Vec<Vec<f64>>,
        shape: Vec<f64>,
        optimal: Option<Vec<f64>>,
    }
    let mut owned = Vec::new();
    for &res in &resolutions {
        let p = pool_at(&pool, res)?;
        owned.push(Owned {
            resolution_s: res,
            nodal: nodal_loads(&allocs, &p),
            shape: shape_week(ctx, &shape, res)?,
            optimal: sizing.as_ref().map(|s| s.house_kw(&alloc, res)).transpose()?,
        });
    }
    let cases: Vec<ResolutionCase<'_>> = owned
        .iter()
        .map(|o| ResolutionCase {
            resolution_s: o.resolution_s,
            nodal_loads: &o.nodal,
            pv_shape: &o.shape,
            optimal_kw: o.optimal.as_deref(),
        })
        .collect();
    let base = stochastic(ctx, Strategy::Optimal, args.scenarios, None);
    let cmp = resolution_comparison(&feeder, &allocs, &zones, &strategies, &cases, &base, basis, &qsts)?;

    let zone_entries: Vec<ZoneEntry> = zones
        .iter()
        .map(|z| {
            let load_buses: BTreeSet<&str> = z.load_nodes.iter().map(|&n| feeder.load_nodes[n].bus_id.as_str()).collect();
            ZoneEntry {
                id: z.id,
                buses: z.buses.clone(),
                load_buses: load_buses.into_iter().map(str::to_string).collect(),
                centroid_ohm: z.centroid_ohm,
            }
        })
        .collect();
    write_json(&out_path(ctx, ZONES_JSON), &zone_entries)?;

    let mut w = csv_writer(&out_path(ctx, ZONAL_CSV))?;
    w.write_record([
        "zone",
        "strategy",
        "resolution_s",
        "centroid_ohm",
        "n_load_nodes",
        "installed_kw",
        "max_v_without_pu",
        "max_v_with_pu",
        "delta_v_pu",
    ])
    .map_err(input)?;
    let mut deltas = cmp.zonal.deltas.clone();
    deltas.sort_by_key(|a| (a.zone, a.strategy, a.resolution_s));
    for d in &deltas {
        let z = &zones[d.zone - 1];
        w.write_record([
            d.zone.to_string(),
            d.strategy.to_string(),
            d.resolution_s.to_string(),
            format!("{:.6}", z.centroid_ohm),
            z.load_nodes.len().to_string(),
            format!("{:.3}", d.installed_kw),
            format!("{:.6}", d.max_v_without),
            format!("{:.6}", d.max_v_with),
            format!("{:.6}", d.delta_v_pu),
        ])
        .map_err(input)?;
    }
    w.flush().map_err(input)?;

    let mut w = csv_writer(&out_path(ctx, TABLE2_CSV))?;
    let mut header = vec!["strategy".to_string()];
    header.extend(resolutions.iter().map(|r| format!("min_hc_kw_{r}s")));
    w.write_record(&header).map_err(input)?;
    for &s in &strategies {
        let mut row = vec![s.to_string()];
        for &res in &resolutions {
            let cell = cmp
                .table
                .iter()
                .find(|c| c.strategy == s && c.resolution_s == res)
                .expect("every strategy and resolution is studied");
            row.push(format!("{:.1}", cell.min_hosting_capacity_kw));
        }
        w.write_record(&row).map_err(input)?;
    }
    w.flush().map_err(input)?;

    let art = ZonalArtifact {
        feeder: feeder.name.clone(),
        seed: ctx.seed,
        k,
        basis_kva: basis,
        zones: zone_entries,
        deltas,
        table: cmp.table,
    };
    write_json(&out_path(ctx, ZONAL_JSON), &art)?;
    println!("{} zones; table written to {}", zones.len(), out_path(ctx, TABLE2_CSV).display());
    Ok(())
}

pub fn report(ctx: &Context) -> Result<(), CliError> {
    let hosting_path = out_path(ctx, HOSTING_JSON);
    let zonal_path = out_path(ctx, ZONAL_JSON);
    if !hosting_path.exists() && !zonal_path.exists() {
        return Err(CliError::Input(format!(
            "no study results in {} (run `hosting` or `zonal` first)",
            ctx.out.display()
        )));
    }
    let mut text = String::new();
    if hosting_path.exists() {
        let h: HostingArtifact = read_json(&hosting_path, "hosting")?;
        let _ = writeln!(
            text,
            "Hosting capacity: {} at {} s, basis {:.1} kVA, seed {}",
            h.feeder, h.resolution_s, h.basis_kva, h.seed
        );
        for r in &h.results {
            let first: Vec<String> = r
                .first_violation_step
                .iter()
                .map(|s| s.map_or("-".to_string(), |s| s.to_string()))
                .collect();
            let _ = writeln!(
                text,
                "  {:<8} M={:<4} min HC {:>9.1} kW  violation {:<5}  first violating steps [{}]",
                r.config.strategy.to_string(),
                r.config.m_scenarios,
                r.min_hosting_capacity_kw,
                r.violation_observed,
                first.join(" ")
            );
        }
    }
    if zonal_path.exists() {
        let z: ZonalArtifact = read_json(&zonal_path, "zonal")?;
        let resolutions: BTreeSet<u32> = z.table.iter().map(|c| c.resolution_s).collect();
        let strategies: BTreeSet<Strategy> = z.table.iter().map(|c| c.strategy).collect();
        let _ = writeln!(text, "Minimum hosting capacity (kW) by data resolution: {}", z.feeder);
        let _ = write!(text, "  {:<8}", "");
        for r in &resolutions {
            let _ = write!(text, " {:>10}", format!("{r} s"));
        }
        text.push('\n');
        for s in &strategies {
            let _ = write!(text, "  {:<8}", s.to_string());
            for r in &resolutions {
                match z.table.iter().find(|c| c.strategy == *s && c.resolution_s == *r) {
                    Some(c) => {
                        let _ = write!(text, " {:>10.1}", c.min_hosting_capacity_kw);
                    }
                    None => {
                        let _ = write!(text, " {:>10}", "-");
                    }
                }
            }
            text.push('\n');
        }
        let _ = writeln!(text, "Zonal voltage change (pu), k={}:", z.k);
        for r in &resolutions {
            for s in &strategies {
                let row: Vec<String> = z
                    .deltas
                    .iter()
                    .filter(|d| d.resolution_s == *r && d.strategy == *s)
                    .map(|d| format!("{:.4}", d.delta_v_pu))
                    .collect();
                let _ = writeln!(text, "  {:>5} s {:<8} {}", r, s.to_string(), row.join(" "));
            }
        }
    }
    std::fs::write(out_path(ctx, REPORT_TXT), &text).map_err(input)?;
    print!("{text}");
    Ok(())
}
