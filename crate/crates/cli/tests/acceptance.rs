//! One PASS/FAIL line per acceptance criterion. Tolerances are pinned here,
//! independent of the pass flags the study reports compute for themselves.

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use capswitch::engine::{effective_event_time, simulate, SimConfig, Simulator};
use capswitch::netlist::{Element, ElementKind, Netlist, Probe};
use capswitch::oracle::*;
use capswitch::studies::{
    build_case, facility_bank_capacitance, mv_base, phase_a_peak_time, simulate_case, source,
    stress_rows, table_ratings, turns_ratio, utility_bank_capacitance, CaseId, ValidationReport,
    LEAKAGE, L_DRIVE_FILTER,
};
use capswitch::{NetlistF64, SimConfigF64};
use capswitch_cli::{
    execute, report_render, run, CaseSelector, Cli, ReportFormat, RunArgs, EXIT_ERROR,
    EXIT_METRIC_FAIL, EXIT_PASS,
};
use clap::Parser;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRng, TestRunner};

const FORMULA_TOL: f64 = 5e-3;
const RLC_MAX_ERROR: f64 = 5e-3;
const RLC_MIN_RATIO: f64 = 3.5;
const LC_MAX_DRIFT: f64 = 1e-3;
const RANDOM_NETLISTS: u32 = 64;
const CASE_TIME_LIMIT: Duration = Duration::from_secs(20);
const MARGIN_TOL_PCT: f64 = 1.0;

struct Check {
    pass: bool,
    detail: String,
}

impl Check {
    fn new() -> Self {
        Check {
            pass: true,
            detail: String::new(),
        }
    }

    fn record(&mut self, ok: bool, what: String) {
        self.pass &= ok;
        if !self.detail.is_empty() {
            self.detail.push_str("; ");
        }
        self.detail.push_str(&what);
        if !ok {
            self.detail.push_str(" [miss]");
        }
    }

    fn rel(&mut self, name: &str, got: f64, want: f64, tol: f64) {
        let ok = (got / want - 1.0).abs() <= tol;
        self.record(
            ok,
            format!("{name} {got:.5} vs {want} (±{:.1}%)", tol * 100.0),
        );
    }

    fn range(&mut self, name: &str, got: f64, lo: f64, hi: f64) {
        self.record(
            (lo..=hi).contains(&got),
            format!("{name} {got:.4} in [{lo}, {hi}]"),
        );
    }
}

fn criterion1() -> Check {
    let mut c = Check::new();
    let s = source_equivalent(13.8e3, 500e6, 10.0, 60.0);
    c.rel("Z_s", s.z_s, 0.381, FORMULA_TOL);
    c.rel("L_s", s.l_s, 1.005e-3, FORMULA_TOL);
    c.rel("R_s", s.r_s, 37.9e-3, FORMULA_TOL);
    c
}

fn criterion2() -> Check {
    let mut c = Check::new();
    c.rel(
        "C_util",
        bank_capacitance(10e6, 13.8e3, 60.0),
        139.3e-6,
        FORMULA_TOL,
    );
    c.rel(
        "C_fac",
        bank_capacitance(500e3, 480.0, 60.0),
        5756.5e-6,
        FORMULA_TOL,
    );
    c
}

fn criterion3() -> Check {
    let mut c = Check::new();
    let s = source();
    c.rel(
        "f_util",
        natural_frequency(s.l_s, utility_bank_capacitance()),
        425.0,
        FORMULA_TOL,
    );
    c.rel(
        "f_fac",
        natural_frequency(LEAKAGE, facility_bank_capacitance()),
        562.0,
        FORMULA_TOL,
    );
    c.rel(
        "f_drive",
        natural_frequency(L_DRIVE_FILTER, facility_bank_capacitance()),
        190.0,
        FORMULA_TOL,
    );
    let referred = s.l_s + refer_to_primary(LEAKAGE, turns_ratio());
    c.rel(
        "f_composite (leakage referred by ratio^2)",
        natural_frequency(referred, utility_bank_capacitance()),
        425.0,
        FORMULA_TOL,
    );
    c.rel(
        "f_composite (leakage taken as HV-side)",
        natural_frequency(s.l_s + LEAKAGE, utility_bank_capacitance()),
        425.0,
        FORMULA_TOL,
    );
    c.rel(
        "f_alt",
        alt_natural_frequency(60.0, 500e6, 10e6),
        424.3,
        FORMULA_TOL,
    );
    c
}

fn criterion4(case3: &ValidationReport) -> Check {
    let mut c = Check::new();
    c.rel(
        "I_peak",
        peak_inrush(mv_base(), 1.005e-3, 139.3e-6),
        4190.0,
        FORMULA_TOL,
    );
    let d = damping_and_q(37.9e-3, 1.005e-3, 139.3e-6);
    c.range("Q", d.q_factor, 70.0, 72.0);
    c.rel("V_dc", ideal_dc_voltage(480.0), 648.0, FORMULA_TOL);
    let flagged = case3
        .notes
        .iter()
        .any(|n| n.contains("0.0071") && n.contains("0.051") && n.contains("discrepancy"));
    c.record(flagged, format!("zeta discrepancy flag present: {flagged}"));
    c
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

fn rlc_error(dt: f64) -> f64 {
    let close = phase_a_peak_time();
    let config = SimConfig::new(dt, close + 0.03);
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
    let v = &reference.capacitor_voltage.samples;
    let peak = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    w[0].samples
        .iter()
        .zip(v)
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
        / peak
}

fn criterion5() -> Check {
    let mut c = Check::new();
    let coarse = rlc_error(2e-6);
    let fine = rlc_error(1e-6);
    c.record(
        coarse <= RLC_MAX_ERROR,
        format!(
            "max error at 2 us {:.4}% of peak (<= {}%)",
            coarse * 100.0,
            RLC_MAX_ERROR * 100.0
        ),
    );
    c.record(
        coarse / fine >= RLC_MIN_RATIO,
        format!(
            "error ratio on halving {:.2} (>= {RLC_MIN_RATIO})",
            coarse / fine
        ),
    );
    c
}

/// Resistor ladder to ground plus random R, L, C, switch and diode branches.
fn passive_netlist() -> impl Strategy<Value = NetlistF64> {
    (2..6usize)
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
                n.push(match kind {
                    0 => Element::resistor(format!("R{i}"), a, b, 1.0 + 100.0 * x),
                    1 => Element::inductor(format!("L{i}"), a, b, 1e-4 + 1e-2 * x),
                    2 | 3 => Element::charged_capacitor(format!("C{i}"), a, b, 1e-6 + 1e-4 * x, v0),
                    4 => Element::switch(format!("S{i}"), a, b, 1e-3 * x, None),
                    _ => Element::diode(format!("D{i}"), a, b),
                });
            }
            n
        })
}

fn passivity_holds(n: NetlistF64) -> Result<(), TestCaseError> {
    let mut sim = Simulator::new(n, SimConfigF64::new(1e-5, 2e-3)).unwrap();
    let mut last = sim.stored_energy();
    for _ in 0..200 {
        sim.step().unwrap();
        let e = sim.stored_energy();
        prop_assert!(e <= last * (1.0 + 1e-9) + 1e-12, "{e} > {last}");
        last = e;
    }
    Ok(())
}

fn diodes_complementary(mut n: NetlistF64, amplitude: f64) -> Result<(), TestCaseError> {
    n.push(Element::sine_source("Vdrive", 1, 0, amplitude, 60.0, 0.3));
    let mut sim = Simulator::new(n, SimConfigF64::new(1e-5, 5e-3)).unwrap();
    for _ in 0..500 {
        sim.step().unwrap();
        let state = sim.state();
        let scale = state
            .node_voltages
            .iter()
            .fold(1.0_f64, |m, v| m.max(v.abs()));
        let tol = 1e-6 * scale;
        for (i, e) in sim.netlist().elements.iter().enumerate() {
            if let ElementKind::Diode {
                on_resistance,
                forward_drop,
                ..
            } = e.kind
            {
                let h = state.history[i];
                if state.conducting[i] {
                    prop_assert!(h.current >= -tol / on_resistance, "{} reverse", e.label);
                } else {
                    prop_assert!(h.voltage <= forward_drop + tol, "{} forward", e.label);
                }
            }
        }
    }
    Ok(())
}

fn criterion6() -> Check {
    let mut c = Check::new();
    let (l, cap, v0) = (1e-3, 100e-6, 100.0_f64);
    let mut n = Netlist::new();
    n.push(Element::charged_capacitor("C", 1, 0, cap, v0))
        .push(Element::inductor("L", 1, 0, l));
    let mut sim = Simulator::new(n, SimConfig::new(2e-6, 0.02)).unwrap();
    let e0 = sim.stored_energy();
    for _ in 0..10_000 {
        sim.step().unwrap();
    }
    let drift = (sim.stored_energy() / e0 - 1.0).abs();
    c.record(
        drift < LC_MAX_DRIFT,
        format!("LC drift {:.2e} over 10k steps (< {LC_MAX_DRIFT})", drift),
    );
    let config = Config {
        cases: RANDOM_NETLISTS,
        failure_persistence: None,
        ..Config::default()
    };
    let seeded = || {
        TestRunner::new_with_rng(
            config.clone(),
            TestRng::deterministic_rng(config.rng_algorithm),
        )
    };
    let passive = seeded().run(&passive_netlist(), passivity_holds);
    c.record(
        passive.is_ok(),
        format!("passivity on {RANDOM_NETLISTS} random netlists: {passive:?}"),
    );
    let diodes = seeded().run(&(passive_netlist(), 1.0..1e3_f64), |(n, a)| {
        diodes_complementary(n, a)
    });
    c.record(
        diodes.is_ok(),
        format!("diode complementarity on {RANDOM_NETLISTS} random netlists: {diodes:?}"),
    );
    c
}

struct CaseRun {
    report: ValidationReport,
    elapsed: Duration,
}

fn run_case(case: CaseSelector, out: &Path) -> CaseRun {
    let start = Instant::now();
    let outcome = run(&run_args(case, out)).unwrap();
    CaseRun {
        elapsed: start.elapsed(),
        report: outcome.reports.into_iter().next().unwrap(),
    }
}

fn run_args(case: CaseSelector, out: &Path) -> RunArgs {
    RunArgs {
        case: Some(case),
        netlist: None,
        dt: None,
        duration: None,
        out: out.to_path_buf(),
        spectrum: Vec::new(),
        format: ReportFormat::Text,
    }
}

fn value(r: &ValidationReport, name: &str) -> f64 {
    r.row(name)
        .unwrap_or_else(|| panic!("{}: no row {name}", r.case))
        .simulated
}

fn timed(c: &mut Check, run: &CaseRun) {
    c.record(
        run.elapsed < CASE_TIME_LIMIT,
        format!("cold start {:.1} s", run.elapsed.as_secs_f64()),
    );
}

fn criterion7(run: &CaseRun) -> Check {
    let mut c = Check::new();
    let r = &run.report;
    c.rel("frequency", value(r, "Oscillation freq. (Hz)"), 425.0, 0.02);
    c.range("peak p.u.", value(r, "Peak voltage (p.u.)"), 1.85, 2.0);
    c.rel(
        "inrush kA",
        value(r, "Peak inrush current (kA)"),
        4.19,
        0.15,
    );
    timed(&mut c, run);
    c
}

fn criterion8(run: &CaseRun) -> Check {
    let mut c = Check::new();
    let r = &run.report;
    let k = value(r, "Magnification factor");
    c.range("magnification", k, 0.79 - 0.08, 0.79 + 0.08);
    let mv = value(r, "MV peak transient (p.u.)");
    c.range("MV peak p.u.", mv, 1.89 - 0.15, 1.89 + 0.15);
    let lv = value(r, "LV peak transient (p.u.)");
    c.range("LV peak p.u.", lv, 1.3, f64::INFINITY);
    let f = value(r, "Dominant frequency (Hz)");
    c.range("frequency", f, 375.0, 425.0);
    timed(&mut c, run);
    c
}

fn criterion9(run: &CaseRun) -> Check {
    let mut c = Check::new();
    let r = &run.report;
    let a = value(r, "Phase A bank peak (p.u.)");
    c.range("phase A p.u.", a, 1.69 - 0.15, 1.69 + 0.15);
    c.range(
        "phase B p.u.",
        value(r, "Phase B bank peak (p.u.)"),
        1.15,
        1.45,
    );
    c.range(
        "phase C p.u.",
        value(r, "Phase C bank peak (p.u.)"),
        1.15,
        1.45,
    );
    c.rel("DC mean V", value(r, "DC bus mean (V)"), 633.7, 0.03);
    c.rel(
        "DC ripple pk-pk V",
        value(r, "DC ripple pk-pk (V)"),
        100.0,
        0.25,
    );
    let f = value(r, "DC ripple frequency (Hz)");
    c.record(
        (f - 360.0).abs() <= 20.0 || (f - 720.0).abs() <= 20.0,
        format!("ripple bin {f:.1} Hz (360 or 720)"),
    );
    let inrush = value(r, "DC inrush peak (V)");
    c.range("DC inrush V", inrush, 842.0, f64::INFINITY);
    c.rel("DC power kW", value(r, "VFD power (kW)"), 475.0, 0.07);
    timed(&mut c, run);
    c
}

fn criterion10() -> Check {
    let mut c = Check::new();
    let stresses = [37.1e3, 1e3, 37.1e3, 887.0, 1027.0, 1027.0];
    let expected = [-35.7, 98.0, -138.0, 12.0, -22.0, -14.0];
    let rows = stress_rows(&table_ratings(), &stresses).rows;
    for (row, want) in rows.iter().zip(expected) {
        c.record(
            (row.margin_pct - want).abs() <= MARGIN_TOL_PCT,
            format!("{} {:+.1}% vs {want:+}%", row.label, row.margin_pct),
        );
    }
    let multiple = rows[2].dielectric_multiple.unwrap_or(f64::NAN);
    c.range("dielectric multiple", multiple, 6.8, 7.0);
    c
}

fn exit_status(argv: &[&str]) -> i32 {
    execute(Cli::try_parse_from(argv).unwrap())
}

/// Column `label` of a waveform CSV.
fn column(csv: &str, label: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<_> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == label).unwrap();
    lines
        .map(|l| l.split(',').nth(k).unwrap().parse().unwrap())
        .collect()
}

fn criterion11(first: &Path, case3: &CaseRun) -> Check {
    let mut c = Check::new();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let pass = exit_status(&["capswitch", "run", "--case", "1", "--out", out]);
    c.record(pass == EXIT_PASS, format!("case 1 exit {pass}"));
    let fail = exit_status(&["capswitch", "run", "--case", "2", "--out", out]);
    c.record(fail == EXIT_METRIC_FAIL, format!("case 2 exit {fail}"));
    let missing = dir.path().join("missing.ckt");
    let error = exit_status(&[
        "capswitch",
        "run",
        "--netlist",
        missing.to_str().unwrap(),
        "--out",
        out,
    ]);
    c.record(error == EXIT_ERROR, format!("missing netlist exit {error}"));

    let csv = fs::read_to_string(first.join("case1_bank_voltage.csv")).unwrap();
    let waves = simulate_case(&build_case(CaseId::Case1)).unwrap();
    let exact = ["a", "b", "c"].iter().all(|p| {
        let label = format!("bank_voltage.{p}");
        let parsed = column(&csv, &label);
        let samples = &waves[&label].samples;
        parsed.len() == samples.len()
            && parsed
                .iter()
                .zip(samples)
                .all(|(x, y)| x.to_bits() == y.to_bits())
    });
    c.record(exact, format!("CSV round trip bit-exact: {exact}"));

    let again = run_case(CaseSelector::Three, dir.path());
    let golden = fs::read(first.join("case3_report.txt")).unwrap();
    let second = fs::read(dir.path().join("case3_report.txt")).unwrap();
    let stable = golden == second
        && report_render(&again.report) == report_render(&case3.report)
        && fs::read(first.join("case3_dc_bus.csv")).unwrap()
            == fs::read(dir.path().join("case3_dc_bus.csv")).unwrap();
    c.record(
        stable,
        format!("case 3 outputs identical across runs: {stable}"),
    );
    c
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let case1 = run_case(CaseSelector::One, dir.path());
    let case2 = run_case(CaseSelector::Two, dir.path());
    let case3 = run_case(CaseSelector::Three, dir.path());
    let checks = [
        ("source equivalent", criterion1()),
        ("bank capacitance", criterion2()),
        ("natural frequencies", criterion3()),
        (
            "inrush, Q, DC voltage, damping flag",
            criterion4(&case3.report),
        ),
        ("engine vs series-RLC reference", criterion5()),
        ("energy and property suites", criterion6()),
        ("case 1 utility bank energization", criterion7(&case1)),
        ("case 2 voltage magnification", criterion8(&case2)),
        ("case 3 VFD interaction", criterion9(&case3)),
        ("stress margins", criterion10()),
        (
            "CLI contracts and determinism",
            criterion11(dir.path(), &case3),
        ),
    ];
    let mut failed = 0;
    for (k, (name, check)) in checks.iter().enumerate() {
        let verdict = if check.pass { "PASS" } else { "FAIL" };
        println!("{verdict} criterion {}: {name}: {}", k + 1, check.detail);
        failed += usize::from(!check.pass);
    }
    println!(
        "{} of {} criteria pass",
        checks.len() - failed,
        checks.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
