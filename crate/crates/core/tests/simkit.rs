mod common;

use common::*;
use gridid::netmodel::{
    apply_event, assemble_ybus, EventKind, GridEvent, Line, Network, Node, Phase, Terminal,
};
use gridid::phasors::DEFAULT_RANK_TOL;
use gridid::simkit::*;
use gridid::{CMat, Error, C64};

#[test]
fn ten_node_radial_feeder_is_a_sparse_tree() {
    let net = generate_feeder(&NetworkSpec::radial(10, PhaseMix::Single), 4).unwrap();
    assert_eq!(net.lines.len(), 9);
    assert!(net.switches.is_empty());
    assert!(net.is_connected());
    let y = assemble_ybus(&net).unwrap();
    let n = y.dim() as f64;
    assert!((y.sparsity() - (1.0 - (3.0 * n - 2.0) / (n * n))).abs() < 1e-12);
    let off = y.nnz() as f64 - n;
    let off_sparsity = 1.0 - off / (n * n - n);
    assert!(off_sparsity > 0.75, "off-diagonal sparsity {off_sparsity}");
}

#[test]
fn feeder_generation_is_deterministic() {
    let mut spec = NetworkSpec::radial(12, PhaseMix::Mixed);
    spec.switches = 2;
    spec.ties = 1;
    assert_eq!(generate_feeder(&spec, 9).unwrap(), generate_feeder(&spec, 9).unwrap());
    assert_ne!(generate_feeder(&spec, 9).unwrap(), generate_feeder(&spec, 10).unwrap());
}

#[test]
fn switch_class_dominates_the_admittance_magnitudes() {
    let mut spec = NetworkSpec::radial(10, PhaseMix::Single);
    spec.switches = 1;
    let y = assemble_ybus(&generate_feeder(&spec, 2).unwrap()).unwrap();
    let mut mags: Vec<f64> = y.matrix().iter().map(|z| z.norm()).filter(|&m| m > 0.0).collect();
    mags.sort_by(f64::total_cmp);
    let ratio = mags[mags.len() - 1] / mags[mags.len() / 2];
    assert!(ratio >= 1e3, "max/median = {ratio}");
}

#[test]
fn mixed_phase_feeders_are_valid() {
    for seed in 0..5 {
        let mut spec = NetworkSpec::radial(15, PhaseMix::Mixed);
        spec.loopy = true;
        spec.extra_lines = 2;
        let net = generate_feeder(&spec, seed).unwrap();
        net.validate().unwrap();
        let y = assemble_ybus(&net).unwrap();
        assert!(y.max_row_sum() <= 1e-9 * y.matrix().iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
}

#[test]
fn zero_magnitude_loads_give_zero_injections() {
    let net = generate_feeder(&NetworkSpec::radial(6, PhaseMix::Three), 1).unwrap();
    let spec = LoadSpec {
        base_range: [0.0, 0.0],
        ..Default::default()
    };
    let inj = generate_loads(&net, &spec, 3, 20).unwrap();
    assert!(inj.iter().all(|z| z.norm() == 0.0));
}

#[test]
fn loads_draw_power_at_the_requested_factor() {
    let net = generate_feeder(&NetworkSpec::radial(6, PhaseMix::Three), 1).unwrap();
    let inj = generate_loads(&net, &LoadSpec::default(), 3, 30).unwrap();
    let terms = net.terminals();
    let mut checked = 0;
    for (r, t) in terms.iter().enumerate() {
        let v = C64::from_polar(1.0, t.phase.nominal_angle());
        for k in 0..30 {
            let i = inj[(r, k)];
            if i.norm() == 0.0 {
                continue;
            }
            let s = v * i.conj();
            assert!((s.re.abs() / s.norm() - 0.95).abs() < 1e-9);
            checked += 1;
        }
    }
    assert!(checked > 0);
    let slack_rows: Vec<usize> = (0..terms.len()).filter(|&r| terms[r].node == net.slack).collect();
    assert!(slack_rows.iter().all(|&r| inj.row(r).iter().all(|z| z.norm() == 0.0)));
}

fn lag1_autocorrelation(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    let cov: f64 = x.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
    cov / var
}

#[test]
fn correlation_knob_controls_memory_and_rank() {
    let net = generate_feeder(&NetworkSpec::radial(10, PhaseMix::Single), 5).unwrap();
    let inj = generate_loads(&net, &LoadSpec::default(), 6, 2000).unwrap();
    let row: Vec<f64> = inj.row(3).iter().map(|z| z.norm()).collect();
    assert!(lag1_autocorrelation(&row).abs() < 0.1);

    let low = ScenarioSpec::new(5, 300, NetworkSpec::radial(10, PhaseMix::Single));
    let sc = run_scenario(&low).unwrap();
    assert_eq!(sc.dataset.numerical_rank(DEFAULT_RANK_TOL), sc.dataset.dim());

    let mut high = low.clone();
    high.loads.correlation = 1.0;
    high.loads.factors = 2;
    let sc = run_scenario(&high).unwrap();
    assert!(sc.dataset.numerical_rank(DEFAULT_RANK_TOL) < sc.dataset.dim());
}

#[test]
fn zero_injections_give_flat_profile() {
    let net = generate_feeder(&NetworkSpec::radial(5, PhaseMix::Three), 2).unwrap();
    let y = assemble_ybus(&net).unwrap();
    let slack = net.slack_terminals();
    let sv = nominal_slack_voltage(&slack);
    let (v, i) = solve_steady_state(&y, &slack, &CMat::from_fn(slack.len(), 2, |r, _| sv[r]), &CMat::zeros(y.dim(), 2)).unwrap();
    for (r, t) in y.index().terminals().iter().enumerate() {
        let want = C64::from_polar(1.0, t.phase.nominal_angle());
        assert!((v[(r, 0)] - want).norm() < 1e-12);
    }
    assert!(i.iter().all(|z| z.norm() < 1e-9));
}

#[test]
fn two_node_voltage_rise_is_z_times_injection() {
    let z = C64::new(0.02, 0.08);
    let net = Network {
        nodes: vec![
            Node { id: 0, phases: vec![Phase::A] },
            Node { id: 1, phases: vec![Phase::A] },
        ],
        lines: vec![Line {
            id: "L".into(),
            from: 0,
            to: 1,
            phases: vec![Phase::A],
            z: CMat::from_element(1, 1, z),
            ys: None,
            in_service: true,
        }],
        switches: vec![],
        slack: 0,
    };
    let y = assemble_ybus(&net).unwrap();
    let slack = vec![Terminal::new(0, Phase::A)];
    let i2 = C64::new(-0.3, 0.1);
    let inj = CMat::from_column_slice(2, 1, &[C64::new(0.0, 0.0), i2]);
    let v1 = C64::new(1.0, 0.0);
    let (v, i) = solve_steady_state(&y, &slack, &CMat::from_element(1, 1, v1), &inj).unwrap();
    assert!((v[(1, 0)] - (v1 + z * i2)).norm() < 1e-12);
    assert!((i[(1, 0)] - i2).norm() < 1e-12);
    assert!((i[(0, 0)] + i2).norm() < 1e-12);
}

#[test]
fn every_slot_satisfies_ohms_law() {
    let mut spec = switching_spec(8, PhaseMix::Mixed, 3, 120, 60, false, 1e5);
    spec.loads.correlation = 0.5;
    let sc = run_scenario(&spec).unwrap();
    let worst = ohm_deviation(&spec, &sc);
    assert!(worst <= 1e-10, "{worst}");
}

#[test]
fn intervals_follow_events() {
    let plain = single_phase_spec(6, 1, 50);
    let sc = run_scenario(&plain).unwrap();
    assert_eq!(sc.truth.intervals.len(), 1);
    assert!(sc.truth.events.is_empty());

    let spec = switching_spec(8, PhaseMix::Three, 2, 50, 20, false, 1e3);
    let sc = run_scenario(&spec).unwrap();
    assert_eq!(sc.truth.intervals.len(), 2);
    assert_eq!((sc.truth.intervals[0].start, sc.truth.intervals[0].end), (0, 20));
    assert_eq!((sc.truth.intervals[1].start, sc.truth.intervals[1].end), (20, 50));
    let (_, delta) = apply_event(&sc.network, &spec.events[0]).unwrap();
    assert_eq!(sc.truth.events[0].delta, delta);
    let diff = sc.truth.intervals[1].ybus.difference(&sc.truth.intervals[0].ybus).unwrap();
    assert!(frob(&(diff.matrix() - delta.matrix())) <= 1e-12 * frob(delta.matrix()));

    let tie = sc.network.switches.iter().find(|s| s.id == "T0").unwrap();
    let touched = [tie.from, tie.to];
    for (r, c, _) in delta.lower_triplets() {
        let (a, b) = (delta.index().terminal(r), delta.index().terminal(c));
        assert!(touched.contains(&a.node) && touched.contains(&b.node));
    }
}

#[test]
fn transfer_changes_six_blocks_around_the_shared_node() {
    let spec = switching_spec(8, PhaseMix::Three, 4, 50, 20, true, 1e3);
    let sc = run_scenario(&spec).unwrap();
    let delta = &sc.truth.events[0].delta;
    let mut blocks = std::collections::BTreeSet::new();
    for (r, c, _) in delta.lower_triplets() {
        let (a, b) = (delta.index().terminal(r).node, delta.index().terminal(c).node);
        blocks.insert((a.max(b), a.min(b)));
    }
    let full: usize = blocks.iter().map(|(a, b)| if a == b { 1 } else { 2 }).sum();
    assert_eq!(full, 6, "blocks {blocks:?}");
}

#[test]
fn scenarios_are_reproducible() {
    let mut spec = switching_spec(7, PhaseMix::Mixed, 8, 40, 10, false, 1e4);
    spec.noise.sigma = 1e-3;
    let a = run_scenario(&spec).unwrap();
    let b = run_scenario(&spec).unwrap();
    assert_eq!(a.dataset, b.dataset);
    assert_eq!(a.truth, b.truth);
}

#[test]
fn invalid_specs_name_the_field() {
    let mut spec = single_phase_spec(5, 1, 10);
    spec.loads.power_factor = 1.5;
    let msg = spec.validate().unwrap_err().to_string();
    assert!(msg.contains("loads.power_factor"), "{msg}");

    let mut spec = single_phase_spec(5, 1, 10);
    spec.events = vec![
        GridEvent::new(5, "L1", EventKind::LineTrip),
        GridEvent::new(5, "L2", EventKind::LineTrip),
    ];
    let msg = spec.validate().unwrap_err().to_string();
    assert!(msg.contains("events[1].slot"), "{msg}");

    let err = ScenarioSpec::from_json_str("{\"seed\": 1,\n \"slots\": \"x\"}").unwrap_err();
    assert!(matches!(err, Error::InvalidScenario(_)));
    assert!(err.to_string().contains("line 2"), "{err}");
}

#[test]
fn spec_json_round_trip() {
    let spec = switching_spec(9, PhaseMix::Mixed, 3, 80, 30, true, 2e4);
    let back = ScenarioSpec::from_json_str(&spec.to_json_string()).unwrap();
    assert_eq!(back, spec);
}

#[test]
fn ground_truth_json_round_trip() {
    let spec = switching_spec(6, PhaseMix::Three, 3, 30, 12, false, 1e5);
    let sc = run_scenario(&spec).unwrap();
    let back = GroundTruth::from_json_str(&sc.truth.to_json_string()).unwrap();
    assert_eq!(back, sc.truth);
}

#[test]
fn slack_fluctuation_can_be_disabled() {
    let mut spec = single_phase_spec(5, 2, 30);
    spec.loads.slack_variation = 0.0;
    let sc = run_scenario(&spec).unwrap();
    let slack = sc.network.slack_terminals();
    let row = sc.dataset.index().position(slack[0]).unwrap();
    assert!(sc.dataset.v().row(row).iter().all(|z| (z - C64::new(1.0, 0.0)).norm() == 0.0));
    let series = slack_voltage_series(&slack, 0.01, 50, 3);
    let mags: Vec<f64> = series.row(0).iter().map(|z| z.norm()).collect();
    assert!(mags.iter().any(|m| (m - 1.0).abs() > 1e-4));
    assert!(mags.iter().all(|m| (m - 1.0).abs() < 0.1));
}
