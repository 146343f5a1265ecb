use std::time::Instant;

use feederhc::feeder::{
    parse_feeder, BranchRecord, BusRecord, FeederFile, FeederModel, LoadNodeRecord, Phase, RegulatorRecord,
};
use feederhc::fixtures::{fixture_path, IEEE123, LADDER};
use feederhc::power_flow::{
    injections_to_pu, run_qsts, solve_snapshot, tap_ratios, Injection, PvProfiles, QstsOptions, SolverOptions,
    SweepNetwork, SweepSolver, NO_PARENT,
};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const KV: f64 = 4.16;

/// Random radial feeder: ABC trunk near the source, single- and two-phase
/// laterals further out, and a regulator on some trees.
fn random_feeder(rng: &mut ChaCha8Rng, n_bus: usize) -> (FeederModel, Vec<i32>) {
    let mut buses = vec![BusRecord {
        id: "b0".into(),
        phases: "ABC".into(),
        kv_ll: KV,
        source: true,
    }];
    let mut phases = vec!["ABC".to_string()];
    let mut branches = Vec::new();
    for k in 1..n_bus {
        let parent = rng.random_range(0..k);
        let pp = phases[parent].clone();
        let ph = match (pp.len(), rng.random_range(0..4)) {
            (3, 0) => ["A", "B", "C"][rng.random_range(0..3)].to_string(),
            (3, 1) => ["AB", "BC", "AC"][rng.random_range(0..3)].to_string(),
            (2, 0) => pp[rng.random_range(0..2)..][..1].to_string(),
            _ => pp.clone(),
        };
        buses.push(BusRecord {
            id: format!("b{k}"),
            phases: ph.clone(),
            kv_ll: KV,
            source: false,
        });
        branches.push(BranchRecord {
            id: format!("l{k}"),
            from: format!("b{parent}"),
            to: format!("b{k}"),
            phases: ph.clone(),
            r_ohm: rng.random_range(0.02..0.25),
            x_ohm: rng.random_range(0.02..0.25),
            length_factor: 1.0,
        });
        phases.push(ph);
    }
    let mut regulators = Vec::new();
    let mut taps = Vec::new();
    if n_bus > 3 && rng.random_bool(0.6) {
        let k = rng.random_range(1..n_bus);
        let tap = rng.random_range(-8..=8);
        regulators.push(RegulatorRecord {
            branch: format!("l{k}"),
            setpoint_pu: 1.0,
            bandwidth_pu: 0.02,
            tap_step_pu: 0.00625,
            delay_s: 30.0,
            tap_min: -16,
            tap_max: 16,
            tap,
        });
        taps.push(tap);
    }
    let load_nodes = (1..n_bus)
        .filter(|_| rng.random_bool(0.8))
        .map(|k| LoadNodeRecord {
            bus: format!("b{k}"),
            phase: phases[k][..1].to_string(),
            peak_kw: 10.0,
        })
        .collect();
    let file = FeederFile {
        name: "random".into(),
        base_kva: 1000.0,
        buses,
        branches,
        regulators,
        load_nodes,
    };
    (FeederModel::from_file(file).expect("valid random feeder"), taps)
}

/// Random demand on every energized bus phase; some negative (generation).
fn random_injections(rng: &mut ChaCha8Rng, feeder: &FeederModel, scale_kw: f64) -> Vec<Injection> {
    let mut out = Vec::new();
    for bus in feeder.buses.iter().filter(|b| !b.is_source) {
        for phase in bus.phases.iter() {
            let p = rng.random_range(-0.4..1.0) * scale_kw;
            let q = rng.random_range(-0.1..0.5) * scale_kw;
            out.push(Injection {
                bus_id: bus.id.clone(),
                phase,
                p_kw: p,
                q_kvar: q,
            });
        }
    }
    out
}

/// Newton-Raphson on the nodal admittance matrix of one phase, in rectangular
/// coordinates, with the source bus as slack. Returns complex voltages per
/// network node index (only entries of this phase are set).
fn newton_phase(net: &SweepNetwork, s_pu: &[Complex64], ratios: &[f64], phase: Phase, source_pu: f64) -> Vec<(usize, Complex64)> {
    let members: Vec<usize> = (0..net.len()).filter(|&k| net.nodes[k].phase == phase).collect();
    let local = |k: usize| members.iter().position(|&m| m == k).unwrap();
    let n = members.len();
    let mut y = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    let mut slack = None;
    for (i, &k) in members.iter().enumerate() {
        let node = &net.nodes[k];
        if node.parent == NO_PARENT {
            slack = Some(i);
            continue;
        }
        let a = node.regulator.map_or(1.0, |r| ratios[r]);
        let yb = 1.0 / node.z_pu;
        let p = local(node.parent);
        y[i][i] += yb;
        y[p][p] += yb * a * a;
        y[i][p] -= yb * a;
        y[p][i] -= yb * a;
    }
    let slack = slack.expect("phase has a source node");
    let v_src = Complex64::from_polar(source_pu, phase.angle_rad());
    let unknown: Vec<usize> = (0..n).filter(|&i| i != slack).collect();
    let m = unknown.len();
    let mut v: Vec<Complex64> = vec![v_src; n];
    for _ in 0..50 {
        let current: Vec<Complex64> = (0..n).map(|i| (0..n).map(|j| y[i][j] * v[j]).sum()).collect();
        let mut f = DVector::<f64>::zeros(2 * m);
        for (r, &i) in unknown.iter().enumerate() {
            // Injected power plus demand must vanish.
            let mismatch = v[i] * current[i].conj() + s_pu[members[i]];
            f[r] = mismatch.re;
            f[m + r] = mismatch.im;
        }
        if f.amax() < 1e-13 {
            break;
        }
        let mut jac = DMatrix::<f64>::zeros(2 * m, 2 * m);
        for (r, &i) in unknown.iter().enumerate() {
            let (e, fi) = (v[i].re, v[i].im);
            let (a, b) = (current[i].re, current[i].im);
            for (c, &j) in unknown.iter().enumerate() {
                let (g, bb) = (y[i][j].re, y[i][j].im);
                if g == 0.0 && bb == 0.0 && i != j {
                    continue;
                }
                let d = if i == j { 1.0 } else { 0.0 };
                jac[(r, c)] = e * g + fi * bb + d * a;
                jac[(r, m + c)] = -e * bb + fi * g + d * b;
                jac[(m + r, c)] = fi * g - e * bb - d * b;
                jac[(m + r, m + c)] = -fi * bb - e * g + d * a;
            }
        }
        let dx = jac.lu().solve(&(-f)).expect("non-singular Jacobian");
        for (c, &j) in unknown.iter().enumerate() {
            v[j] += Complex64::new(dx[c], dx[m + c]);
        }
    }
    members.iter().enumerate().map(|(i, &k)| (k, v[i])).collect()
}

#[test]
fn sweep_matches_newton_oracle_on_random_networks() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let opts = SolverOptions {
        tolerance_pu: 1e-12,
        ..SolverOptions::default()
    };
    let mut sizes: Vec<usize> = vec![2, 3, 130];
    sizes.extend((0..21).map(|_| rng.random_range(2..=130)));
    let mut worst: f64 = 0.0;
    for (case, &n_bus) in sizes.iter().enumerate() {
        let (feeder, taps) = random_feeder(&mut rng, n_bus);
        let scale = rng.random_range(5.0..60.0);
        let injections = random_injections(&mut rng, &feeder, scale);
        let net = SweepNetwork::new(&feeder);
        let s = injections_to_pu(&feeder, &net, &injections).unwrap();
        let ratios = tap_ratios(&feeder, &taps).unwrap();
        let mut solver = SweepSolver::new(&net);
        let stats = solver.solve(&net, &s, &ratios, &opts);
        assert!(stats.converged, "case {case} ({n_bus} buses) did not converge");
        for phase in Phase::ALL {
            for (k, v) in newton_phase(&net, &s, &ratios, phase, opts.source_pu) {
                let err = (solver.voltage[k] - v).norm();
                worst = worst.max(err);
                assert!(err < 1e-6, "case {case}: node {k} off by {err:e} pu");
            }
        }
    }
    assert!(sizes.len() >= 20);
    assert!(worst < 1e-6);
    assert!(start.elapsed().as_secs_f64() < 10.0, "oracle suite took {:?}", start.elapsed());
}

fn two_bus(r_ohm: f64, x_ohm: f64) -> FeederModel {
    let file = FeederFile {
        name: "two-bus".into(),
        base_kva: 1000.0,
        buses: vec![
            BusRecord {
                id: "s".into(),
                phases: "ABC".into(),
                kv_ll: KV,
                source: true,
            },
            BusRecord {
                id: "r".into(),
                phases: "ABC".into(),
                kv_ll: KV,
                source: false,
            },
        ],
        branches: vec![BranchRecord {
            id: "line".into(),
            from: "s".into(),
            to: "r".into(),
            phases: "ABC".into(),
            r_ohm,
            x_ohm,
            length_factor: 1.0,
        }],
        regulators: vec![],
        load_nodes: vec![LoadNodeRecord {
            bus: "r".into(),
            phase: "ABC".into(),
            peak_kw: 100.0,
        }],
    };
    FeederModel::from_file(file).unwrap()
}

#[test]
fn two_bus_matches_closed_form() {
    // |V2|^4 + (2(PR + QX) - |V1|^2)|V2|^2 + |Z|^2 |S|^2 = 0, per phase in pu.
    for &(r, x, p_kw, q_kvar) in &[(0.5, 1.0, 300.0, 100.0), (1.2, 0.6, -250.0, 0.0), (0.1, 0.3, 50.0, -20.0)] {
        let feeder = two_bus(r, x);
        let injections: Vec<Injection> = Phase::ALL
            .iter()
            .map(|&phase| Injection {
                bus_id: "r".into(),
                phase,
                p_kw,
                q_kvar,
            })
            .collect();
        let sol = solve_snapshot(&feeder, &injections, &[], &SolverOptions::default()).unwrap();
        assert!(sol.converged);
        let z_base = feeder.z_base_ohm(KV);
        let (rp, xp) = (r / z_base, x / z_base);
        let base = feeder.phase_base_kva();
        let (pp, qp) = (p_kw / base, q_kvar / base);
        let b = 2.0 * (pp * rp + qp * xp) - 1.0;
        let c = (rp * rp + xp * xp) * (pp * pp + qp * qp);
        let v2 = ((-b + (b * b - 4.0 * c).sqrt()) / 2.0).sqrt();
        for phase in Phase::ALL {
            let got = sol.v_pu("r", phase).unwrap();
            assert!((got - v2).abs() < 1e-9, "{phase}: {got} vs {v2}");
        }
    }
}

#[test]
fn complex_power_is_conserved() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for n_bus in [5, 40, 120] {
        let (feeder, taps) = random_feeder(&mut rng, n_bus);
        let injections = random_injections(&mut rng, &feeder, 30.0);
        let net = SweepNetwork::new(&feeder);
        let s = injections_to_pu(&feeder, &net, &injections).unwrap();
        let ratios = tap_ratios(&feeder, &taps).unwrap();
        let mut solver = SweepSolver::new(&net);
        assert!(solver.solve(&net, &s, &ratios, &SolverOptions::default()).converged);
        let mut supplied = Complex64::new(0.0, 0.0);
        let mut losses = Complex64::new(0.0, 0.0);
        for (k, node) in net.nodes.iter().enumerate() {
            let j = solver.branch_current[k];
            if node.parent == NO_PARENT {
                supplied += solver.voltage[k] * j.conj();
            } else {
                losses += node.z_pu * j.norm_sqr();
            }
        }
        let demand: Complex64 = s.iter().sum();
        let gap = (supplied - demand - losses).norm();
        assert!(gap < 1e-7, "{n_bus} buses: imbalance {gap:e} pu");
    }
}

#[test]
fn no_load_profile_is_flat() {
    let feeder = parse_feeder(fixture_path(LADDER)).unwrap();
    let sol = solve_snapshot(&feeder, &[], &[], &SolverOptions::default()).unwrap();
    assert!(sol.converged);
    for v in &sol.voltages {
        assert!((v.v_pu - 1.0).abs() < 1e-12);
    }
}

#[test]
fn unknown_bus_and_missing_phase_are_errors() {
    let feeder = parse_feeder(fixture_path(IEEE123)).unwrap();
    let bad = |bus: &str, phase| Injection {
        bus_id: bus.into(),
        phase,
        p_kw: 1.0,
        q_kvar: 0.0,
    };
    let taps = vec![0; feeder.regulators.len()];
    let opts = SolverOptions::default();
    assert!(solve_snapshot(&feeder, &[bad("nope", Phase::A)], &taps, &opts).is_err());
    let single = feeder.buses.iter().find(|b| b.phases.len() == 1).unwrap();
    let missing = Phase::ALL.into_iter().find(|p| !single.phases.contains(*p)).unwrap();
    assert!(solve_snapshot(&feeder, &[bad(&single.id, missing)], &taps, &opts).is_err());
    assert!(!feeder.regulators.is_empty());
    assert!(solve_snapshot(&feeder, &[], &[], &opts).is_err());
}

#[test]
fn non_convergence_is_reported() {
    let feeder = two_bus(40.0, 40.0);
    let injections: Vec<Injection> = Phase::ALL
        .iter()
        .map(|&phase| Injection {
            bus_id: "r".into(),
            phase,
            p_kw: 2000.0,
            q_kvar: 1000.0,
        })
        .collect();
    let sol = solve_snapshot(&feeder, &injections, &[], &SolverOptions::default()).unwrap();
    assert!(!sol.converged);
    assert_eq!(sol.iterations, 100);
}

fn ieee123_week(resolution_s: u32) -> (FeederModel, Vec<Vec<f64>>) {
    let feeder = parse_feeder(fixture_path(IEEE123)).unwrap();
    let steps = (7 * 86_400 / resolution_s) as usize;
    let loads = feeder
        .load_nodes
        .iter()
        .map(|n| {
            (0..steps)
                .map(|t| {
                    let h = (t as f64 * f64::from(resolution_s) / 3600.0) % 24.0;
                    n.peak_kw * (0.45 + 0.55 * (std::f64::consts::PI * (h - 4.0) / 24.0).sin().powi(2))
                })
                .collect()
        })
        .collect();
    (feeder, loads)
}

#[test]
fn qsts_moves_each_regulator_at_most_one_tap_per_step() {
    let (feeder, loads) = ieee123_week(900);
    let net = SweepNetwork::new(&feeder);
    let res = run_qsts(&feeder, &net, &loads, PvProfiles::None, 900, &QstsOptions::default()).unwrap();
    assert_eq!(res.steps.len(), loads[0].len());
    let mut moved = 0;
    for w in res.tap_trace.windows(2) {
        for (a, b) in w[0].iter().zip(&w[1]) {
            assert!((a - b).abs() <= 1);
            moved += usize::from(a != b);
        }
    }
    assert!(moved > 0, "daily load swing should move some regulator");
    for taps in &res.tap_trace {
        for (t, r) in taps.iter().zip(&feeder.regulators) {
            assert!((r.tap_min..=r.tap_max).contains(t));
        }
    }
}

#[test]
fn qsts_without_regulation_equals_independent_snapshots() {
    let (feeder, loads) = ieee123_week(3600);
    let net = SweepNetwork::new(&feeder);
    let opts = QstsOptions {
        regulators_enabled: false,
        ..QstsOptions::default()
    };
    let res = run_qsts(&feeder, &net, &loads, PvProfiles::None, 3600, &opts).unwrap();
    let taps: Vec<i32> = feeder.regulators.iter().map(|r| r.current_tap).collect();
    let tan_phi = (1.0 / (0.95f64 * 0.95) - 1.0).sqrt();
    for t in [0, 13, 100] {
        let mut injections = Vec::new();
        for (n, node) in feeder.load_nodes.iter().enumerate() {
            let phases: Vec<Phase> = node.phase.phases().iter().collect();
            for &phase in &phases {
                let p = loads[n][t] / phases.len() as f64;
                injections.push(Injection {
                    bus_id: node.bus_id.clone(),
                    phase,
                    p_kw: p,
                    q_kvar: p * tan_phi,
                });
            }
        }
        let sol = solve_snapshot(&feeder, &injections, &taps, &SolverOptions::default()).unwrap();
        assert!((sol.max_v_pu() - res.steps[t].max_v_pu).abs() < 1e-9);
        assert!((sol.min_v_pu() - res.steps[t].min_v_pu).abs() < 1e-9);
        assert_eq!(res.tap_trace[t], taps);
    }
}

#[test]
fn pv_raises_voltage() {
    let (feeder, loads) = ieee123_week(3600);
    let net = SweepNetwork::new(&feeder);
    let opts = QstsOptions {
        regulators_enabled: false,
        ..QstsOptions::default()
    };
    let shape: Vec<f64> = (0..loads[0].len())
        .map(|t| {
            let h = (t % 24) as f64;
            if (7.0..19.0).contains(&h) {
                (std::f64::consts::PI * (h - 7.0) / 12.0).sin().powi(2)
            } else {
                0.0
            }
        })
        .collect();
    let node_kw = vec![40.0; feeder.load_nodes.len()];
    let base = run_qsts(&feeder, &net, &loads, PvProfiles::None, 3600, &opts).unwrap();
    let pv = run_qsts(
        &feeder,
        &net,
        &loads,
        PvProfiles::Scaled {
            node_kw: &node_kw,
            shape: &shape,
        },
        3600,
        &opts,
    )
    .unwrap();
    for t in 0..shape.len() {
        if shape[t] == 0.0 {
            assert_eq!(base.steps[t].max_v_pu, pv.steps[t].max_v_pu);
        } else {
            assert!(pv.steps[t].min_v_pu > base.steps[t].min_v_pu);
        }
    }
}

#[test]
fn qsts_rejects_mismatched_series() {
    let (feeder, mut loads) = ieee123_week(3600);
    let net = SweepNetwork::new(&feeder);
    loads[3].pop();
    assert!(run_qsts(&feeder, &net, &loads, PvProfiles::None, 3600, &QstsOptions::default()).is_err());
}
