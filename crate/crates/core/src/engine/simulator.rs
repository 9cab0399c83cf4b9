use std::collections::HashMap;

use crate::analysis::{Unit, Waveform};
use crate::error::{Error, Result};
use crate::netlist::{validate, ElementKind, Netlist, Probe, ProbeKind};
use crate::Scalar;

use super::lu::LuFactors;
use super::stamp::{BranchHistory, CompanionStamp, Integrator};
use super::system::{assemble_matrix, assemble_rhs, stamps_for, Layout};
use super::SimConfig;

/// Step used for the consistent-initialization solve, as a fraction of `dt`.
const INIT_STEP_FRACTION: f64 = 1e-3;

/// Relative voltage tolerance of the diode consistency test.
const DIODE_TOLERANCE: f64 = 1e-9;

type TopologyKey = (Vec<bool>, Integrator);

#[derive(Clone, Debug)]
pub struct SimState<S> {
    pub time: S,
    pub step: usize,
    /// Indexed by node id; entry 0 is ground and always zero.
    pub node_voltages: Vec<S>,
    /// Branch voltage and current per element at `time`. For sources and
    /// transformers the current is the MNA branch unknown.
    pub history: Vec<BranchHistory<S>>,
    /// Switch closed / diode on, per element.
    pub conducting: Vec<bool>,
    /// Topology and integrator of the last accepted step.
    pub signature: Option<TopologyKey>,
}

/// Single-threaded transient run over one netlist.
pub struct Simulator<S> {
    netlist: Netlist<S>,
    config: SimConfig<S>,
    layout: Layout,
    state: SimState<S>,
    factors: HashMap<TopologyKey, LuFactors<S>>,
    factorizations: usize,
}

fn switch_closed<S: Scalar>(kind: &ElementKind<S>, time: S, tol: S) -> Option<bool> {
    match kind {
        ElementKind::TimedSwitch {
            close_time,
            open_time,
        } => {
            let closed = *close_time <= time + tol;
            let opened = open_time.is_some_and(|t| t <= time + tol);
            Some(closed && !opened)
        }
        _ => None,
    }
}

/// Grid instant at which a timed event scheduled for `t_event` takes effect:
/// the first step boundary at or after it.
pub fn effective_event_time<S: Scalar>(t_event: S, dt: S) -> S {
    let k = (t_event / dt - S::lit(1e-6)).ceil().max(S::zero());
    k * dt
}

impl<S: Scalar> Simulator<S> {
    pub fn new(netlist: Netlist<S>, config: SimConfig<S>) -> Result<Self> {
        config.validate()?;
        let diagnostics = validate(&netlist);
        if !diagnostics.is_empty() {
            return Err(Error::InvalidNetlist(diagnostics));
        }
        let layout = Layout::new(&netlist);
        let history = netlist
            .elements
            .iter()
            .map(|e| match e.kind {
                ElementKind::Capacitor {
                    initial_voltage, ..
                } => BranchHistory {
                    voltage: initial_voltage,
                    current: S::zero(),
                },
                _ => BranchHistory::default(),
            })
            .collect();
        let n = netlist.elements.len();
        let mut sim = Self {
            state: SimState {
                time: S::zero(),
                step: 0,
                node_voltages: vec![S::zero(); netlist.node_count()],
                history,
                conducting: vec![false; n],
                signature: None,
            },
            netlist,
            config,
            layout,
            factors: HashMap::new(),
            factorizations: 0,
        };
        sim.initialize()?;
        Ok(sim)
    }

    pub fn netlist(&self) -> &Netlist<S> {
        &self.netlist
    }

    pub fn config(&self) -> &SimConfig<S> {
        &self.config
    }

    pub fn state(&self) -> &SimState<S> {
        &self.state
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    /// Number of LU factorizations performed so far.
    pub fn factorizations(&self) -> usize {
        self.factorizations
    }

    pub fn time(&self) -> S {
        self.state.time
    }

    fn event_tolerance(&self) -> S {
        self.config.dt * S::lit(1e-6)
    }

    fn apply_switch_events(&mut self, time: S) {
        let tol = self.event_tolerance();
        for (flag, e) in self.state.conducting.iter_mut().zip(&self.netlist.elements) {
            if let Some(closed) = switch_closed(&e.kind, time, tol) {
                *flag = closed;
            }
        }
    }

    /// Solve for node voltages at t = 0 with a very short backward-Euler step,
    /// so capacitors hold their initial voltage and inductors carry no current.
    /// State variables are not advanced.
    fn initialize(&mut self) -> Result<()> {
        self.apply_switch_events(S::zero());
        let h = self.config.dt * S::lit(INIT_STEP_FRACTION);
        let mut guess = self.state.conducting.clone();
        let (x, stamps, _) = self.solve_consistent(&mut guess, h, S::zero(), None)?;
        let initial = self.state.history.clone();
        self.commit(&x, &stamps, guess, None, S::zero());
        // factors above were built for the short step `h`, not `dt`
        self.factors.clear();
        // restore exact state variables
        for ((h, init), e) in self
            .state
            .history
            .iter_mut()
            .zip(initial)
            .zip(&self.netlist.elements)
        {
            match e.kind {
                ElementKind::Capacitor { .. } => h.voltage = init.voltage,
                ElementKind::Inductor { .. } => h.current = init.current,
                _ => {}
            }
        }
        Ok(())
    }

    fn factor_for(
        &mut self,
        key: &TopologyKey,
        stamps: &[CompanionStamp<S>],
        time: S,
    ) -> Result<()> {
        if self.factors.contains_key(key) {
            return Ok(());
        }
        let matrix = assemble_matrix(&self.netlist, &self.layout, stamps);
        let lu = LuFactors::factor(matrix).map_err(|cols| Error::Singular {
            time: time.as_f64(),
            unknowns: cols
                .into_iter()
                .map(|c| self.layout.describe(&self.netlist, c))
                .collect(),
        })?;
        self.factorizations += 1;
        self.factors.insert(key.clone(), lu);
        Ok(())
    }

    /// Diode-state iteration. `previous` is the topology of the last accepted
    /// step; once a guess differs from it, the rest of the step uses backward
    /// Euler.
    fn solve_consistent(
        &mut self,
        guess: &mut Vec<bool>,
        h: S,
        time: S,
        previous: Option<&Vec<bool>>,
    ) -> Result<(Vec<S>, Vec<CompanionStamp<S>>, Integrator)> {
        let cap = self.config.diode_iteration_cap;
        let mut visited: Vec<Vec<bool>> = Vec::new();
        let mut flipped: Vec<usize> = Vec::new();
        // once the topology departs from the previous step, stay on backward
        // Euler: switching integrator with the guess can itself cause cycling
        let mut integrator = Integrator::Trapezoidal;
        for _ in 0..cap {
            if previous != Some(&*guess) {
                integrator = Integrator::BackwardEuler;
            }
            let stamps = stamps_for(
                &self.netlist,
                &self.state.history,
                guess,
                h,
                time,
                integrator,
            );
            let key = (guess.clone(), integrator);
            self.factor_for(&key, &stamps, time)?;
            let mut x = assemble_rhs(&self.netlist, &self.layout, &stamps);
            self.factors[&key].solve_in_place(&mut x);

            let violations = self.diode_violations(&x, guess);
            if violations.is_empty() {
                return Ok((x, stamps, integrator));
            }
            visited.push(guess.clone());
            let mut next = guess.clone();
            for &(i, _) in &violations {
                next[i] = !next[i];
            }
            if visited.contains(&next) {
                // flipping everything cycles; flip only the worst offender
                let worst = violations
                    .iter()
                    .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
                    .map(|v| v.0)
                    .expect("non-empty");
                next = guess.clone();
                next[worst] = !next[worst];
            }
            for &(i, _) in &violations {
                if !flipped.contains(&i) {
                    flipped.push(i);
                }
            }
            *guess = next;
        }
        Err(Error::DiodeChatter {
            time: time.as_f64(),
            cap,
            diodes: flipped
                .into_iter()
                .map(|i| self.netlist.elements[i].label.clone())
                .collect(),
        })
    }

    fn node_voltage_of(&self, x: &[S], node: crate::netlist::NodeRef) -> S {
        self.layout.row(node).map_or(S::zero(), |r| x[r])
    }

    /// Diodes whose assumed state contradicts the solution, with the size of
    /// the violation in volts.
    fn diode_violations(&self, x: &[S], conducting: &[bool]) -> Vec<(usize, S)> {
        let scale = x[..self.layout.node_unknowns]
            .iter()
            .fold(S::one(), |m, v| m.max(v.abs()));
        let tol = scale * S::lit(DIODE_TOLERANCE);
        let mut out = Vec::new();
        for (i, e) in self.netlist.elements.iter().enumerate() {
            if let ElementKind::Diode { forward_drop, .. } = e.kind {
                let v = self.node_voltage_of(x, e.pos) - self.node_voltage_of(x, e.neg);
                let excess = v - forward_drop;
                if conducting[i] && excess < -tol {
                    out.push((i, -excess));
                } else if !conducting[i] && excess > tol {
                    out.push((i, excess));
                }
            }
        }
        out
    }

    fn commit(
        &mut self,
        x: &[S],
        stamps: &[CompanionStamp<S>],
        conducting: Vec<bool>,
        signature: Option<TopologyKey>,
        time: S,
    ) {
        for (node, v) in self.state.node_voltages.iter_mut().enumerate().skip(1) {
            *v = x[node - 1];
        }
        for (i, (e, s)) in self.netlist.elements.iter().zip(stamps).enumerate() {
            let v = self.state.node_voltages[e.pos.0] - self.state.node_voltages[e.neg.0];
            let current = match s {
                CompanionStamp::Norton {
                    conductance,
                    history_current,
                } => *conductance * v + *history_current,
                _ => x[self.layout.branch_unknown[i].expect("branch unknown")],
            };
            self.state.history[i] = BranchHistory {
                voltage: v,
                current,
            };
        }
        self.state.conducting = conducting;
        self.state.signature = signature;
        self.state.time = time;
    }

    /// Advance one step of `dt`.
    pub fn step(&mut self) -> Result<()> {
        let dt = self.config.dt;
        let t = S::from_usize_lossy(self.state.step) * dt;
        let t_next = S::from_usize_lossy(self.state.step + 1) * dt;
        self.apply_switch_events(t);
        let previous = self
            .state
            .signature
            .as_ref()
            .map(|(topology, _)| topology.clone());
        let mut guess = self.state.conducting.clone();
        let (x, stamps, integrator) =
            self.solve_consistent(&mut guess, dt, t_next, previous.as_ref())?;
        self.commit(
            &x,
            &stamps,
            guess.clone(),
            Some((guess, integrator)),
            t_next,
        );
        self.state.step += 1;
        Ok(())
    }

    pub fn probe_value(&self, probe: &Probe) -> Result<S> {
        let v = &self.state.node_voltages;
        let at = |n: crate::netlist::NodeRef| {
            v.get(n.0)
                .copied()
                .ok_or_else(|| Error::UnresolvedProbe(probe.label.clone()))
        };
        match &probe.kind {
            ProbeKind::NodeVoltage(n) => at(*n),
            ProbeKind::Differential(a, b) => Ok(at(*a)? - at(*b)?),
            ProbeKind::BranchCurrent(label) => self
                .netlist
                .element_index(label)
                .map(|i| self.state.history[i].current)
                .ok_or_else(|| Error::UnresolvedProbe(probe.label.clone())),
        }
    }

    pub fn branch_current(&self, label: &str) -> Option<S> {
        self.netlist
            .element_index(label)
            .map(|i| self.state.history[i].current)
    }

    pub fn branch_voltage(&self, label: &str) -> Option<S> {
        self.netlist
            .element_index(label)
            .map(|i| self.state.history[i].voltage)
    }

    /// Energy held in capacitors and inductors.
    pub fn stored_energy(&self) -> S {
        let half = S::lit(0.5);
        self.netlist
            .elements
            .iter()
            .zip(&self.state.history)
            .map(|(e, h)| match e.kind {
                ElementKind::Capacitor { farads, .. } => half * farads * h.voltage * h.voltage,
                ElementKind::Inductor { henries } => half * henries * h.current * h.current,
                _ => S::zero(),
            })
            .sum()
    }

    /// Run to `duration`, sampling every probe every `record_decimation` steps.
    pub fn run(&mut self) -> Result<Vec<Waveform<S>>> {
        let probes = self.netlist.probes.clone();
        let steps = self.config.step_count();
        let decimation = self.config.record_decimation;
        let mut series: Vec<Vec<S>> = probes
            .iter()
            .map(|_| Vec::with_capacity(steps / decimation + 1))
            .collect();
        let record = |sim: &Self, series: &mut Vec<Vec<S>>| -> Result<()> {
            for (p, s) in probes.iter().zip(series.iter_mut()) {
                s.push(sim.probe_value(p)?);
            }
            Ok(())
        };
        record(self, &mut series)?;
        for k in 1..=steps {
            self.step()?;
            if k % decimation == 0 {
                record(self, &mut series)?;
            }
        }
        let dt = self.config.dt * S::from_usize_lossy(decimation);
        Ok(probes
            .iter()
            .zip(series)
            .map(|(p, samples)| Waveform {
                label: p.label.clone(),
                dt,
                samples,
                unit: match p.kind {
                    ProbeKind::BranchCurrent(_) => Unit::Ampere,
                    _ => Unit::Volt,
                },
                pu_base: None,
            })
            .collect())
    }
}

/// Simulate a netlist and return one waveform per probe, in probe order.
pub fn simulate<S: Scalar>(
    netlist: &Netlist<S>,
    config: &SimConfig<S>,
) -> Result<Vec<Waveform<S>>> {
    Simulator::new(netlist.clone(), config.clone())?.run()
}
