use capswitch::engine::{
    assemble_matrix, effective_event_time, simulate, stamps_for, Integrator, SimConfig, Simulator,
};
use capswitch::netlist::{Element, ElementKind, Netlist, Probe};
use capswitch::oracle::{reference_rlc_waveform, RlcCircuit};
use capswitch::studies::{
    build_case1, mv_base, phase_a_peak_time, source, utility_bank_capacitance,
};
use capswitch::{NetlistF64, SimConfigF64};
use proptest::prelude::*;

fn rc_discharge(r: f64, c: f64, v0: f64) -> NetlistF64 {
    let mut n = Netlist::new();
    n.push(Element::charged_capacitor("C", 1, 0, c, v0))
        .push(Element::resistor("R", 1, 0, r))
        .add_probe(Probe::voltage("v", 1));
    n
}

#[test]
fn rc_discharge_matches_exponential() {
    let (r, c, v0) = (1e3, 10e-6, 100.0);
    let tau = r * c;
    let dt = 2e-6;
    let w = simulate(&rc_discharge(r, c, v0), &SimConfig::new(dt, 1000.0 * dt)).unwrap();
    assert_eq!(w[0].len(), 1001);
    for (k, v) in w[0].samples.iter().enumerate() {
        let exact = v0 * (-(k as f64) * dt / tau).exp();
        assert!((v / exact - 1.0).abs() < 1e-6, "step {k}: {v} vs {exact}");
    }
}

#[test]
fn rc_discharge_in_single_precision() {
    let mut n: Netlist<f32> = Netlist::new();
    n.push(Element::charged_capacitor("C", 1, 0, 10e-6, 100.0))
        .push(Element::resistor("R", 1, 0, 1e3))
        .add_probe(Probe::voltage("v", 1));
    let w = simulate(&n, &SimConfig::new(2e-6_f32, 2e-3)).unwrap();
    let last = *w[0].samples.last().unwrap();
    let exact = 100.0 * (-0.2_f32).exp();
    assert!((last / exact - 1.0).abs() < 1e-4, "{last} vs {exact}");
}

#[test]
fn lossless_lc_conserves_energy() {
    let (l, c, v0) = (1e-3, 100e-6, 100.0_f64);
    let mut n = Netlist::new();
    n.push(Element::charged_capacitor("C", 1, 0, c, v0))
        .push(Element::inductor("L", 1, 0, l));
    let mut sim = Simulator::new(n, SimConfig::new(2e-6, 0.02)).unwrap();
    let e0 = 0.5 * c * v0 * v0;
    assert!((sim.stored_energy() / e0 - 1.0).abs() < 1e-12);
    for _ in 0..10_000 {
        sim.step().unwrap();
    }
    let drift = (sim.stored_energy() / e0 - 1.0).abs();
    assert!(drift < 1e-3, "drift {drift}");
}

fn series_rlc(close: f64) -> NetlistF64 {
    let s = source();
    let mut n = Netlist::new();
    n.push(Element::sine_source(
        "V",
        1,
        0,
        mv_base(),
        60.0,
        -std::f64::consts::FRAC_PI_2,
    ))
    .push(Element::resistor("R", 1, 2, s.r_s))
    .push(Element::inductor("L", 2, 3, s.l_s))
    .push(Element::switch("S", 3, 4, close, None))
    .push(Element::capacitor("C", 4, 0, utility_bank_capacitance()))
    .add_probe(Probe::voltage("vc", 4));
    n
}

/// Largest deviation from the reference RLC waveform over 30 ms after
/// closing, relative to the reference peak.
fn oracle_error(dt: f64) -> f64 {
    let close = phase_a_peak_time();
    let duration = close + 0.03;
    let config = SimConfig::new(dt, duration);
    let w = simulate(&series_rlc(close), &config).unwrap();
    let circuit = RlcCircuit {
        r: source().r_s,
        l: source().l_s,
        c: utility_bank_capacitance(),
        v_m: mv_base(),
        f_sys: 60.0,
        phase: -std::f64::consts::FRAC_PI_2,
    };
    let reference = reference_rlc_waveform(
        &circuit,
        effective_event_time(close, dt),
        dt,
        config.sample_count(),
        50,
    )
    .unwrap();
    let peak = reference
        .capacitor_voltage
        .samples
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    w[0].samples
        .iter()
        .zip(&reference.capacitor_voltage.samples)
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
        / peak
}

#[test]
fn series_rlc_matches_reference_with_second_order_convergence() {
    let coarse = oracle_error(2e-6);
    let fine = oracle_error(1e-6);
    assert!(coarse <= 5e-3, "error at 2 us: {coarse}");
    assert!(
        coarse / fine >= 3.5,
        "error ratio {} ({coarse} / {fine})",
        coarse / fine
    );
}

#[test]
fn case1_layout_counts() {
    let case = build_case1();
    let sim = Simulator::new(case.netlist.clone(), SimConfig::new(2e-6, 2e-6)).unwrap();
    // per phase: source, R-L junction, L-switch junction and bank nodes plus
    // the source branch current
    assert_eq!(sim.layout().node_unknowns, 12);
    assert_eq!(sim.layout().size, 15);
}

#[test]
fn all_switches_open_still_factors() {
    let mut case = build_case1();
    for e in &mut case.netlist.elements {
        if let ElementKind::TimedSwitch { close_time, .. } = &mut e.kind {
            *close_time = 1.0;
        }
    }
    let w = simulate(&case.netlist, &SimConfig::new(2e-6, 1e-3)).unwrap();
    assert!(w[0].samples.iter().all(|v| v.abs() < 1.0));
}

#[test]
fn switch_toggle_changes_only_its_stamp() {
    let case = build_case1();
    let n = &case.netlist;
    let sim = Simulator::new(n.clone(), SimConfig::new(2e-6, 2e-6)).unwrap();
    let layout = sim.layout();
    let history = vec![Default::default(); n.elements.len()];
    let open = vec![false; n.elements.len()];
    for (i, e) in n.elements.iter().enumerate() {
        if !matches!(e.kind, ElementKind::TimedSwitch { .. }) {
            continue;
        }
        let mut closed = open.clone();
        closed[i] = true;
        let a = assemble_matrix(
            n,
            layout,
            &stamps_for(n, &history, &open, 2e-6, 0.0, Integrator::Trapezoidal),
        );
        let b = assemble_matrix(
            n,
            layout,
            &stamps_for(n, &history, &closed, 2e-6, 0.0, Integrator::Trapezoidal),
        );
        let rows = [layout.row(e.pos), layout.row(e.neg)];
        let mut changed = Vec::new();
        for r in 0..layout.size {
            for c in 0..layout.size {
                if a.get(r, c) != b.get(r, c) {
                    changed.push((r, c));
                }
            }
        }
        let mut expected = Vec::new();
        for r in rows.iter().flatten() {
            for c in rows.iter().flatten() {
                expected.push((*r, *c));
            }
        }
        changed.sort_unstable();
        expected.sort_unstable();
        assert_eq!(changed, expected, "switch {}", e.label);
        assert_eq!(changed.len(), 4);
    }
}

#[test]
fn runs_are_bit_identical() {
    let case = build_case1();
    let config = SimConfig::new(2e-6, 0.03);
    let a = simulate(&case.netlist, &config).unwrap();
    let b = simulate(&case.netlist, &config).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!(x
            .samples
            .iter()
            .zip(&y.samples)
            .all(|(p, q)| p.to_bits() == q.to_bits()));
    }
}

#[test]
fn one_step_run_has_two_samples() {
    let w = simulate(&rc_discharge(1.0, 1.0, 1.0), &SimConfig::new(1e-3, 1e-3)).unwrap();
    assert_eq!(w[0].len(), 2);
    // the initial solve holds the capacitor through a step of dt / 1000
    assert!((w[0].samples[0] - 1.0).abs() < 1e-5);
}

#[test]
fn rejects_bad_config() {
    let n = rc_discharge(1.0, 1.0, 1.0);
    assert!(simulate(&n, &SimConfig::new(0.0, 1.0)).is_err());
    assert!(simulate(&n, &SimConfig::new(1e-3, 1e-4)).is_err());
}

fn six_pulse_bridge() -> NetlistF64 {
    let v = 391.9;
    let mut n = Netlist::new();
    let dc_pos = 4;
    let dc_neg = 5;
    for (k, p) in ["a", "b", "c"].iter().enumerate() {
        let node = k + 1;
        let phase = -std::f64::consts::FRAC_PI_2 - k as f64 * std::f64::consts::TAU / 3.0;
        n.push(Element::sine_source(
            format!("V.{p}"),
            node,
            0,
            v,
            60.0,
            phase,
        ))
        .push(Element::diode(format!("Dp.{p}"), node, dc_pos))
        .push(Element::diode(format!("Dn.{p}"), dc_neg, node));
    }
    // a large DC choke keeps the load current nearly constant
    n.push(Element::inductor("Ldc", dc_pos, 6, 0.5))
        .push(Element::resistor("Rload", 6, dc_neg, 5.0));
    n
}

#[test]
fn six_pulse_bridge_conducts_in_pairs() {
    let dt = 2e-6;
    let mut sim = Simulator::new(six_pulse_bridge(), SimConfig::new(dt, 0.2)).unwrap();
    let diodes: Vec<(usize, usize, bool)> = sim
        .netlist()
        .elements
        .iter()
        .enumerate()
        .filter(|(_, e)| matches!(e.kind, ElementKind::Diode { .. }))
        .map(|(i, e)| {
            (
                i,
                "abc".find(e.label.chars().last().unwrap()).unwrap(),
                e.label.starts_with("Dp"),
            )
        })
        .collect();
    let mut checked = 0;
    for step in 1..=60_000 {
        sim.step().unwrap();
        if step < 25_000 {
            continue;
        }
        let t = sim.time();
        let phase_v: Vec<f64> = (0..3)
            .map(|k| {
                (std::f64::consts::TAU * 60.0 * t
                    - std::f64::consts::FRAC_PI_2
                    - k as f64 * std::f64::consts::TAU / 3.0)
                    .cos()
            })
            .collect();
        let mut order: Vec<usize> = (0..3).collect();
        order.sort_by(|a, b| phase_v[*a].total_cmp(&phase_v[*b]));
        let (low, mid, high) = (order[0], order[1], order[2]);
        // skip steps near a commutation, where two phases tie
        let gap = (phase_v[high] - phase_v[mid]).min(phase_v[mid] - phase_v[low]);
        if gap < 0.05 {
            continue;
        }
        let on: Vec<_> = diodes
            .iter()
            .filter(|(i, _, _)| sim.state().conducting[*i])
            .collect();
        assert_eq!(on.len(), 2, "t = {t}");
        for (_, phase, upper) in on {
            assert_eq!(*phase, if *upper { high } else { low }, "t = {t}");
        }
        checked += 1;
    }
    assert!(checked > 20_000);
}

/// Random passive network: a resistor ladder to ground, then a mix
/// of R, L, C, switch and diode branches between random nodes.
fn passive_netlist() -> impl Strategy<Value = NetlistF64> {
    let nodes = 2..6usize;
    nodes
        .prop_flat_map(|count| {
            let branch = (
                0..6u8,
                0..=count,
                0..=count,
                0.0..1.0_f64,
                -100.0..100.0_f64,
            );
            (
                Just(count),
                proptest::collection::vec(1.0..1e3_f64, count),
                proptest::collection::vec(branch, 1..10),
            )
        })
        .prop_map(|(count, grounds, branches)| {
            let mut n = Netlist::new();
            for (k, r) in grounds.iter().enumerate() {
                n.push(Element::resistor(format!("Rg{k}"), k + 1, 0, *r));
                if k + 1 < count {
                    n.push(Element::resistor(format!("Rc{k}"), k + 1, k + 2, *r));
                }
            }
            for (i, (kind, a, b, x, v0)) in branches.into_iter().enumerate() {
                let b = if a == b { (b + 1) % (count + 1) } else { b };
                let e = match kind {
                    0 => Element::resistor(format!("R{i}"), a, b, 1.0 + 100.0 * x),
                    1 => Element::inductor(format!("L{i}"), a, b, 1e-4 + 1e-2 * x),
                    2 | 3 => Element::charged_capacitor(format!("C{i}"), a, b, 1e-6 + 1e-4 * x, v0),
                    4 => Element::switch(format!("S{i}"), a, b, 1e-3 * x, None),
                    _ => Element::diode(format!("D{i}"), a, b),
                };
                n.push(e);
            }
            n
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn unforced_networks_never_gain_energy(n in passive_netlist()) {
        let mut sim = Simulator::new(n, SimConfigF64::new(1e-5, 2e-3)).unwrap();
        let mut last = sim.stored_energy();
        for _ in 0..200 {
            sim.step().unwrap();
            let e = sim.stored_energy();
            prop_assert!(e <= last * (1.0 + 1e-9) + 1e-12, "{e} > {last}");
            last = e;
        }
    }

    #[test]
    fn diode_states_are_consistent(n in passive_netlist(), amplitude in 1.0..1e3_f64) {
        let mut n = n;
        n.push(Element::sine_source("Vdrive", 1, 0, amplitude, 60.0, 0.3));
        let mut sim = Simulator::new(n, SimConfigF64::new(1e-5, 5e-3)).unwrap();
        for _ in 0..500 {
            sim.step().unwrap();
            let scale = sim.state().node_voltages.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
            let tol = 1e-6 * scale;
            for (i, e) in sim.netlist().elements.iter().enumerate() {
                if let ElementKind::Diode { on_resistance, forward_drop, .. } = e.kind {
                    let h = sim.state().history[i];
                    if sim.state().conducting[i] {
                        prop_assert!(h.current >= -tol / on_resistance, "{} reverse current {}", e.label, h.current);
                    } else {
                        prop_assert!(h.voltage <= forward_drop + tol, "{} forward bias {}", e.label, h.voltage);
                    }
                }
            }
        }
    }
}
