use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use feederhc::fixtures::{fixture_path, DUKE_TOU_2018, IEEE123, LADDER};
use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_feederhc"))
}

/// Small but complete study on the 123-bus fixture at coarse resolution.
fn small_config(dir: &Path, extra: Value) -> PathBuf {
    let mut config = json!({
        "feeder": fixture_path(IEEE123),
        "pool": { "synthetic": { "n_houses": 120, "resolution_s": 1800 } },
        "tariff": fixture_path(DUKE_TOU_2018),
        "seed": 42,
        "stochastic": { "m_scenarios": 3, "n_steps": 4 },
        "zonal": { "k": 4, "resolutions": [1800, 3600] }
    });
    if let (Some(base), Some(more)) = (config.as_object_mut(), extra.as_object()) {
        for (k, v) in more {
            base.insert(k.clone(), v.clone());
        }
    }
    let path = dir.join("study.json");
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}

fn run(config: &Path, out: &Path, args: &[&str]) -> Output {
    bin()
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .unwrap()
}

fn ok(o: &Output) {
    assert!(
        o.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        o.status.code(),
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn allocate_writes_every_load_node_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), json!({}));
    let out = dir.path().join("out");
    ok(&run(&config, &out, &["allocate"]));
    let first = read(out.join("allocation.json"));
    let v: Value = serde_json::from_str(&first).unwrap();
    assert_eq!(v["nodes"].as_array().unwrap().len(), 91);
    let total: u64 = v["nodes"].as_array().unwrap().iter().map(|n| n["n_houses"].as_u64().unwrap()).sum();
    assert_eq!(v["total_houses"].as_u64().unwrap(), total);
    for n in v["nodes"].as_array().unwrap() {
        let (peak, agg) = (n["peak_kw"].as_f64().unwrap(), n["aggregate_peak_kw"].as_f64().unwrap());
        assert!(agg > 0.97 * peak && agg <= 1.03 * peak);
    }
    ok(&run(&config, &out, &["allocate"]));
    assert_eq!(first, read(out.join("allocation.json")));
}

#[test]
fn missing_feeder_is_an_input_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), json!({ "feeder": "no/such/feeder.json" }));
    let o = run(&config, &dir.path().join("out"), &["allocate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no/such/feeder.json"));
}

#[test]
fn size_needs_allocation() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), json!({}));
    let o = run(&config, &dir.path().join("out"), &["size"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("allocation.json"));
}

#[test]
fn artifacts_from_another_seed_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), json!({}));
    let out = dir.path().join("out");
    ok(&run(&config, &out, &["allocate"]));
    let o = run(&config, &out, &["--seed", "7", "size"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn full_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), json!({}));
    let out = dir.path().join("out");
    ok(&run(&config, &out, &["allocate"]));
    ok(&run(&config, &out, &["size"]));

    let sizing: Value = serde_json::from_str(&read(out.join("sizing.json"))).unwrap();
    let resolutions = sizing["resolutions"].as_array().unwrap();
    assert_eq!(resolutions.len(), 2);
    for r in resolutions {
        for p in r["profiles"].as_array().unwrap() {
            let kw = p["optimal_kw"].as_f64().unwrap();
            assert!((0.0..=20.0).contains(&kw) && (kw * 2.0).fract() == 0.0);
            assert_eq!(p["candidates"].as_array().unwrap().len(), 41);
        }
    }
    let first_sizing = read(out.join("sizing.json"));
    ok(&run(&config, &out, &["size"]));
    assert_eq!(first_sizing, read(out.join("sizing.json")));

    ok(&run(&config, &out, &["--workers", "1", "hosting"]));
    let h1 = read(out.join("hosting.json"));
    ok(&run(&config, &out, &["--workers", "8", "hosting"]));
    assert_eq!(h1, read(out.join("hosting.json")), "worker count changed hosting.json");
    let hosting: Value = serde_json::from_str(&h1).unwrap();
    assert_eq!(hosting["results"].as_array().unwrap().len(), 3);

    let fig10 = read(out.join("fig10.csv"));
    let mut lines = fig10.lines();
    assert_eq!(
        lines.next().unwrap(),
        "strategy,step,penetration_pct,max_v_min,max_v_p5,max_v_p25,max_v_p50,max_v_p75,max_v_p95,max_v_max"
    );
    assert_eq!(lines.count(), 3 * 5);

    ok(&run(&config, &out, &["zonal"]));
    let table = read(out.join("table2.csv"));
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows[0], "strategy,min_hc_kw_1800s,min_hc_kw_3600s");
    assert_eq!(rows.len(), 4);
    for row in &rows[1..] {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells.len(), 3);
        for c in &cells[1..] {
            assert!(c.parse::<f64>().unwrap() > 0.0);
        }
    }
    let zones: Value = serde_json::from_str(&read(out.join("zones.json"))).unwrap();
    assert_eq!(zones.as_array().unwrap().len(), 4);
    let zonal = read(out.join("zonal.csv"));
    assert_eq!(zonal.lines().count(), 1 + 4 * 3 * 2);
    let z1 = read(out.join("zonal.json"));
    ok(&run(&config, &out, &["--workers", "3", "zonal"]));
    assert_eq!(z1, read(out.join("zonal.json")));

    let o = run(&config, &out, &["report"]);
    ok(&o);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("optimal") && text.contains("1800 s"));
    assert_eq!(read(out.join("report.txt")), text);
}

#[test]
fn fixed_strategy_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), json!({}));
    let out = dir.path().join("out");
    ok(&run(&config, &out, &["allocate"]));
    // Fixed-size runs need no sizing artifact.
    ok(&run(&config, &out, &["hosting", "--strategy", "fixed", "--fixed-kw", "10"]));
    let hosting: Value = serde_json::from_str(&read(out.join("hosting.json"))).unwrap();
    let results = hosting["results"].as_array().unwrap();
    assert_eq!(results.len(), 1);
    assert_eq!(results[0]["config"]["strategy"], "fixed");
    assert_eq!(results[0]["config"]["fixed_kw"], 10.0);
    let csv = read(out.join("figs7-9.csv"));
    assert!(csv.starts_with("strategy,scenario,step,penetration_pct,n_deployed,installed_kw,max_v_pu,violation\n"));
    assert_eq!(csv.lines().count(), 1 + 3 * 5);
    for line in csv.lines().skip(1) {
        assert!(line.starts_with("fixed,"));
        let cols: Vec<&str> = line.split(',').collect();
        let (n, kw): (f64, f64) = (cols[4].parse().unwrap(), cols[5].parse().unwrap());
        assert!((kw - 10.0 * n).abs() < 1e-6);
    }
}

#[test]
fn optimal_hosting_needs_sizing() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), json!({}));
    let out = dir.path().join("out");
    ok(&run(&config, &out, &["allocate"]));
    let o = run(&config, &out, &["hosting", "--strategy", "optimal"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sizing.json"));
}

#[test]
fn solver_failure_exits_three_with_coordinates() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), json!({ "qsts": { "max_iterations": 1 } }));
    let out = dir.path().join("out");
    ok(&run(&config, &out, &["allocate"]));
    let o = run(&config, &out, &["hosting", "--strategy", "fixed"]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("scenario") && err.contains("step") && err.contains("timestep"), "{err}");
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), json!({}));
    assert_eq!(bin().output().unwrap().status.code(), Some(1));
    assert_eq!(bin().arg("allocate").output().unwrap().status.code(), Some(1));
    assert_eq!(bin().args(["--bogus", "allocate"]).output().unwrap().status.code(), Some(1));
    let o = run(&config, &dir.path().join("out"), &["--workers", "0", "allocate"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&config, &dir.path().join("out"), &["hosting", "--strategy", "biggest"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(bin().arg("--help").output().unwrap().status.success());
}

#[test]
fn seed_is_mandatory() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), json!({ "seed": null }));
    let o = run(&config, &dir.path().join("out"), &["allocate"]);
    assert_eq!(o.status.code(), Some(1));
    ok(&run(&config, &dir.path().join("out"), &["--seed", "5", "allocate"]));
}

#[test]
fn unknown_config_keys_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), json!({ "colour": "blue" }));
    assert_eq!(run(&config, &dir.path().join("out"), &["allocate"]).status.code(), Some(2));
}

#[test]
fn report_without_results_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), json!({}));
    assert_eq!(run(&config, &dir.path().join("out"), &["report"]).status.code(), Some(2));
}

#[test]
fn relative_paths_resolve_against_the_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(fixture_path(LADDER), dir.path().join("ladder.json")).unwrap();
    let config = small_config(
        dir.path(),
        json!({ "feeder": "ladder.json", "out": "results", "pool": { "synthetic": { "n_houses": 60, "resolution_s": 1800 } } }),
    );
    let o = bin().arg("--config").arg(&config).arg("allocate").output().unwrap();
    ok(&o);
    assert!(dir.path().join("results/allocation.json").exists());
}
