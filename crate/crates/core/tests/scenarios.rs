use ddesc::analysis::{oracle_r_controllable, oracle_r_observable};
use ddesc::linalg;
use ddesc::scenarios::{
    build_power, build_water, default_case1_config, default_case2_config, parse_run_config,
    tracking_summary, Link, LinkKind, Node, PlantConfig, PowerConfig, WaterConfig,
};
use ddesc::simulate::simulate;
use ddesc::Error;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_inputs(m: usize, len: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0)))
        .collect()
}

fn states(sc: &ddesc::scenarios::Scenario<f64>, u: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let traj = simulate(&sc.qw, sc.z1_0(), u).unwrap().with_states(&sc.qw);
    traj.x.unwrap()
}

#[test]
fn power_dimensions_and_structure() {
    let cfg = PowerConfig::default();
    let sc = build_power::<f64>(&cfg).unwrap();
    let e = sc.system.e();
    assert_eq!(sc.system.n(), 12);
    assert_eq!(linalg::rank(e), 2 * cfg.g);
    assert_eq!(sc.qw.q() + sc.qw.r(), 12);
    assert_eq!(sc.qw.s(), 1);
    assert_eq!(cfg.tau, 0.1);
    let lap = cfg.laplacian();
    for i in 0..cfg.n_bus {
        assert!(lap.row(i).sum().abs() < 1e-15);
    }
    assert!(oracle_r_observable(&sc.qw));
    assert!(!oracle_r_controllable(&sc.qw));
}

// Entry-by-entry rebuild of the swing model, written against the physical
// equations rather than the block layout.
#[test]
fn power_matches_hand_built_model() {
    let cfg = PowerConfig::default();
    let sc = build_power::<f64>(&cfg).unwrap();
    let (g, nb, tau) = (cfg.g, cfg.n_bus, cfg.tau);
    let n = g + nb;
    let omega = |i: usize| i;
    let theta = |bus: usize| g + bus;
    let mut e = DMatrix::zeros(n, n);
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, 3);
    for i in 0..g {
        // θ_i(k+1) = θ_i(k) + τ ω_i(k)
        e[(i, theta(i))] = 1.0;
        a[(i, theta(i))] = 1.0;
        a[(i, omega(i))] = tau;
        // M ω(k+1) = M ω(k) − τ D ω(k) − τ Σ_j b_ij (θ_i − θ_j) + τ P
        let r = g + i;
        e[(r, omega(i))] = cfg.inertia[i];
        a[(r, omega(i))] = cfg.inertia[i] - tau * cfg.damping[i];
        for k in 0..3 {
            b[(r, k)] = tau * cfg.b_pattern[(i, k)];
        }
    }
    for i in 0..nb {
        let r = g + i;
        for j in 0..nb {
            let bij = cfg.susceptance[(i, j)];
            if bij != 0.0 {
                a[(r, theta(i))] -= tau * bij;
                a[(r, theta(j))] += tau * bij;
            }
        }
    }
    assert!((sc.system.e() - &e).amax() < 1e-15);
    assert!((sc.system.a() - &a).amax() < 1e-15);
    assert!((sc.system.b() - &b).amax() < 1e-15);
}

#[test]
fn power_conserved_quantity_and_frozen_bus() {
    let cfg = PowerConfig::default();
    let sc = build_power::<f64>(&cfg).unwrap();
    let x = states(&sc, &random_inputs(3, 80, 5));
    let g = cfg.g;
    let invariant = |x: &DVector<f64>| -> f64 {
        (0..g)
            .map(|i| cfg.inertia[i] * x[i] + cfg.damping[i] * x[g + i])
            .sum()
    };
    for xk in &x {
        assert!(invariant(xk).abs() < 1e-10);
        assert!(xk[6].abs() < 1e-10);
    }
    assert!(x.iter().any(|xk| xk[0].abs() > 1e-2));
}

#[test]
fn power_rejects_bad_networks() {
    let mut cfg = PowerConfig::default();
    for j in 0..cfg.n_bus {
        cfg.susceptance[(8, j)] = 0.0;
        cfg.susceptance[(j, 8)] = 0.0;
    }
    assert_eq!(
        build_power::<f64>(&cfg).unwrap_err(),
        Error::DisconnectedNetwork
    );

    let mut cfg = PowerConfig::default();
    cfg.susceptance[(0, 4)] = -1.0;
    assert!(matches!(build_power::<f64>(&cfg), Err(Error::Config(_))));
}

#[test]
fn water_layout_and_structure() {
    let cfg = WaterConfig::default();
    let layout = cfg.layout();
    assert_eq!(layout.blocks, [1, 4, 1, 5]);
    assert_eq!(layout.order[0], Node::Reservoir(1));
    assert_eq!(layout.order[1], Node::Reservoir(0));
    let sc = build_water::<f64>(&cfg).unwrap();
    assert_eq!(sc.system.n(), 11);
    assert_eq!(sc.qw.q(), 5);
    assert_eq!(sc.qw.s(), 1);
    assert!(oracle_r_observable(&sc.qw));
    assert!(!oracle_r_controllable(&sc.qw));
    assert_eq!(sc.output_labels, vec!["R1", "T3"]);
}

#[test]
fn water_level_network_stays_put() {
    let cfg = WaterConfig {
        heads: vec![
            (Node::Reservoir(0), 2.5),
            (Node::Reservoir(1), 2.5),
            (Node::Tank(0), 2.5),
            (Node::Tank(1), 2.5),
            (Node::Tank(2), 2.5),
        ],
        ..WaterConfig::default()
    };
    let sc = build_water::<f64>(&cfg).unwrap();
    let zero = vec![DVector::zeros(3); 30];
    for xk in states(&sc, &zero) {
        assert!(xk.iter().all(|&h| (h - 2.5).abs() < 1e-12), "{xk}");
    }
}

#[test]
fn water_reservoir_heads_are_constant() {
    let cfg = WaterConfig::default();
    let sc = build_water::<f64>(&cfg).unwrap();
    let layout = cfg.layout();
    let (r1, r2) = (
        layout.index(Node::Reservoir(0)).unwrap(),
        layout.index(Node::Reservoir(1)).unwrap(),
    );
    for xk in states(&sc, &random_inputs(3, 60, 2)) {
        assert!(xk[r1].abs() < 1e-12);
        assert!((xk[r2] - 6.0).abs() < 1e-12);
    }
}

#[test]
fn water_rejects_bad_networks() {
    let mut cfg = WaterConfig::default();
    cfg.links.retain(|l| l.to != Node::Tank(2));
    assert_eq!(
        build_water::<f64>(&cfg).unwrap_err(),
        Error::DisconnectedNetwork
    );

    // a tank hanging directly off the fixed reservoir breaks the block pattern
    let mut cfg = WaterConfig::default();
    cfg.links.push(Link {
        kind: LinkKind::Valve,
        from: Node::Reservoir(1),
        to: Node::Tank(0),
        conductance: 1.0,
    });
    assert!(matches!(build_water::<f64>(&cfg), Err(Error::Config(_))));
}

#[test]
fn case_defaults() {
    for (rc, n_past, horizon) in [
        (default_case1_config(), 6, 14),
        (default_case2_config(), 5, 12),
    ] {
        let d = &rc.deepc;
        assert_eq!(
            (d.n_past, d.horizon, d.t_data, d.k_total),
            (n_past, horizon, 100, 200)
        );
        assert_eq!(d.q_weight, DMatrix::identity(2, 2) * 5.0);
        assert_eq!(d.r_weight, DMatrix::identity(3, 3));
        assert_eq!(d.u_box, vec![(-1.0, 1.0); 3]);
        // T − N − L − s + 2 columns in the data matrix
        assert_eq!(d.alpha_len(1).unwrap(), 100 - n_past - horizon + 1);
        rc.validate().unwrap();
    }
    assert_eq!(default_case1_config().schedule.switches[0].0, 151);
    assert_eq!(default_case2_config().schedule.switches[0].0, 161);
}

#[test]
fn terminal_constraint_needs_equilibrium_setpoints() {
    let mut rc = default_case1_config();
    rc.deepc.terminal_enabled = true;
    // a nonzero frequency is not a zero-input equilibrium
    assert!(matches!(rc.validate(), Err(Error::Config(_))));
    rc.schedule.initial = DVector::from_vec(vec![0.0, 3.0]);
    rc.schedule.switches[0].1 = DVector::from_vec(vec![0.0, 5.0]);
    rc.validate().unwrap();
}

#[test]
fn config_text_round_trips() {
    for rc in [default_case1_config(), default_case2_config()] {
        let text = rc.to_text();
        let back = parse_run_config(&text).unwrap();
        assert_eq!(back.plant, rc.plant);
        assert_eq!(back.deepc, rc.deepc);
        assert_eq!(back.schedule, rc.schedule);
        assert_eq!(back.to_text(), text);
    }
}

#[test]
fn config_text_overrides() {
    let text = r#"
        # lighter horizon, shifted setpoints
        [water]
        tau = 0.1
        links = [
            { kind = "pipe", from = "R2", to = "J1", conductance = 0.5 },
            { kind = "pump", from = "J1", to = "J2", conductance = 12 },
            { kind = "pipe", from = "J2", to = "J3", conductance = 9 },
            { kind = "pipe", from = "J3", to = "J4", conductance = 9 },
            { kind = "valve", from = "J4", to = "J5", conductance = 6 },
            { kind = "pipe", from = "J2", to = "J6", conductance = 9 },
            { kind = "pipe", from = "J6", to = "J4", conductance = 6 },
            { kind = "pipe", from = "J5", to = "R1", conductance = 0.2 },
            { kind = "pipe", from = "J3", to = "T1", conductance = 3 },
            { kind = "pipe", from = "J5", to = "T2", conductance = 3 },
            { kind = "pipe", from = "J6", to = "T3", conductance = 6 },
        ]

        [deepc]
        horizon = 10
        u_max = [2, 2, 1.5]
        q_weight = 3
        delta = "q"

        [schedule]
        initial = [4, 2]
        switches = [{ t = 150, ys = [3, 3] }]
    "#;
    let rc = parse_run_config(text).unwrap();
    let PlantConfig::Water(w) = &rc.plant else {
        panic!("water plant expected")
    };
    assert_eq!(w.links[0].conductance, 0.5);
    assert_eq!(w.links[1].kind, LinkKind::Pump);
    assert_eq!(rc.deepc.horizon, 10);
    assert_eq!(rc.deepc.n_past, 5);
    assert_eq!(rc.deepc.u_box[2], (-1.0, 1.5));
    assert_eq!(rc.deepc.q_weight, DMatrix::identity(2, 2) * 3.0);
    assert_eq!(rc.deepc.delta, None);
    assert_eq!(
        rc.schedule.switches,
        vec![(150, DVector::from_vec(vec![3.0, 3.0]))]
    );
}

#[test]
fn config_text_errors() {
    let line_of = |text: &str| match parse_run_config(text) {
        Err(Error::Parse { line, .. }) => Some(line),
        _ => None,
    };
    assert_eq!(line_of("[power]\nfoo = 1"), Some(2));
    assert_eq!(line_of("[power]\n\n[gas]"), Some(3));
    assert_eq!(line_of("[power]\n[deepc]\nhorizon = -1"), Some(3));
    assert_eq!(line_of("[power]\ng = 3 3"), Some(2));
    let config_err = |text: &str| matches!(parse_run_config(text), Err(Error::Config(_)));
    assert!(config_err(""));
    assert!(config_err("[power]\n[water]"));
    assert!(config_err("[water]\noutputs = [\"R1\", \"X2\"]"));
    assert!(config_err("[power]\n[deepc]\nr_weight = [1, 2]"));
    assert!(config_err("[power]\n[deepc]\ndelta = \"n\""));
    assert!(config_err("[power]\n[schedule]\ninitial = [1, 2, 3]"));
    assert!(config_err("[power]\nlines = [[1, 10, 0.5]]"));
}

#[test]
fn summary_splits_at_switches() {
    let mut rc = default_case2_config();
    rc.deepc.k_total = 120;
    rc.schedule.switches[0].0 = 110;
    let log = rc.run().unwrap();
    let summary = tracking_summary(&log, &rc.schedule);
    assert_eq!(summary.len(), 4);
    assert_eq!((summary[0].start, summary[0].end), (100, 109));
    assert_eq!((summary[2].start, summary[2].end), (110, 120));
    assert_eq!(summary[3].setpoint, 5.0);
}
