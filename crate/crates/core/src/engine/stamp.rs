//! Companion models.
//!
//! Every two-terminal branch is reduced to a Norton pair: a conductance `G` in
//! parallel with a history current source, so that the branch current from
//! `pos` to `neg` is `i = G * v + history_current`. Ideal sources and
//! transformers become constraint rows with their own current unknown.

use crate::netlist::ElementKind;
use crate::Scalar;

/// Conductance of a closed timed switch (1 µΩ).
pub const SWITCH_ON_CONDUCTANCE: f64 = 1e6;
/// Leakage conductance of an open timed switch.
pub const SWITCH_OFF_CONDUCTANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Integrator {
    Trapezoidal,
    /// Used for the first step after any topology change.
    BackwardEuler,
}

/// Branch voltage and current at the last accepted time point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BranchHistory<S> {
    pub voltage: S,
    pub current: S,
}

#[derive(Clone, Copy, Debug)]
pub struct StampContext<S> {
    pub dt: S,
    /// Time of the solution being computed.
    pub time: S,
    pub integrator: Integrator,
    /// Switch closed / diode on. Ignored by other elements.
    pub conducting: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CompanionStamp<S> {
    Norton {
        conductance: S,
        history_current: S,
    },
    /// Constraint row `v(pos) - v(neg) = value`.
    VoltageSource {
        value: S,
    },
    /// Constraint row `v(p1) - v(n1) - ratio * (v(p2) - v(n2)) = 0`; the
    /// secondary carries `-ratio` times the primary current.
    Transformer {
        ratio: S,
    },
}

impl<S: Scalar> CompanionStamp<S> {
    pub fn conductance(&self) -> Option<S> {
        match self {
            CompanionStamp::Norton { conductance, .. } => Some(*conductance),
            _ => None,
        }
    }
}

pub fn stamp<S: Scalar>(
    kind: &ElementKind<S>,
    ctx: &StampContext<S>,
    prev: BranchHistory<S>,
) -> CompanionStamp<S> {
    let two = S::lit(2.0);
    match kind {
        ElementKind::Resistor { ohms } => CompanionStamp::Norton {
            conductance: S::one() / *ohms,
            history_current: S::zero(),
        },
        ElementKind::Inductor { henries } => match ctx.integrator {
            Integrator::Trapezoidal => {
                let g = ctx.dt / (two * *henries);
                CompanionStamp::Norton {
                    conductance: g,
                    history_current: prev.current + g * prev.voltage,
                }
            }
            Integrator::BackwardEuler => CompanionStamp::Norton {
                conductance: ctx.dt / *henries,
                history_current: prev.current,
            },
        },
        ElementKind::Capacitor { farads, .. } => match ctx.integrator {
            Integrator::Trapezoidal => {
                let g = two * *farads / ctx.dt;
                CompanionStamp::Norton {
                    conductance: g,
                    history_current: -prev.current - g * prev.voltage,
                }
            }
            Integrator::BackwardEuler => {
                let g = *farads / ctx.dt;
                CompanionStamp::Norton {
                    conductance: g,
                    history_current: -g * prev.voltage,
                }
            }
        },
        ElementKind::TimedSwitch { .. } => CompanionStamp::Norton {
            conductance: if ctx.conducting {
                S::lit(SWITCH_ON_CONDUCTANCE)
            } else {
                S::lit(SWITCH_OFF_CONDUCTANCE)
            },
            history_current: S::zero(),
        },
        ElementKind::Diode {
            on_resistance,
            off_conductance,
            forward_drop,
        } => {
            if ctx.conducting {
                let g = S::one() / *on_resistance;
                CompanionStamp::Norton {
                    conductance: g,
                    history_current: -g * *forward_drop,
                }
            } else {
                CompanionStamp::Norton {
                    conductance: *off_conductance,
                    history_current: S::zero(),
                }
            }
        }
        ElementKind::SineSource {
            amplitude,
            frequency,
            phase,
        } => CompanionStamp::VoltageSource {
            value: *amplitude * (S::TAU() * *frequency * ctx.time + *phase).cos(),
        },
        ElementKind::Transformer { ratio, .. } => CompanionStamp::Transformer { ratio: *ratio },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(dt: f64) -> StampContext<f64> {
        StampContext {
            dt,
            time: 0.0,
            integrator: Integrator::Trapezoidal,
            conducting: false,
        }
    }

    #[test]
    fn inductor_conductance_from_source_inductance() {
        let s = stamp(
            &ElementKind::Inductor { henries: 1.005e-3 },
            &ctx(2e-6),
            BranchHistory::default(),
        );
        let g = s.conductance().unwrap();
        assert!((g - 9.9502e-4).abs() / 9.9502e-4 < 1e-4, "{g}");
    }

    #[test]
    fn zero_state_capacitor_has_no_history() {
        let s = stamp(
            &ElementKind::Capacitor {
                farads: 139.3e-6,
                initial_voltage: 0.0,
            },
            &ctx(2e-6),
            BranchHistory::default(),
        );
        assert_eq!(
            s,
            CompanionStamp::Norton {
                conductance: 2.0 * 139.3e-6 / 2e-6,
                history_current: 0.0
            }
        );
    }

    #[test]
    fn trapezoidal_history_terms() {
        let prev = BranchHistory {
            voltage: 3.0,
            current: 2.0,
        };
        let l = stamp(&ElementKind::Inductor { henries: 0.5 }, &ctx(0.1), prev);
        assert_eq!(
            l,
            CompanionStamp::Norton {
                conductance: 0.1,
                history_current: 2.0 + 0.1 * 3.0
            }
        );
        let c = stamp(
            &ElementKind::Capacitor {
                farads: 0.5,
                initial_voltage: 0.0,
            },
            &ctx(0.1),
            prev,
        );
        assert_eq!(
            c,
            CompanionStamp::Norton {
                conductance: 10.0,
                history_current: -2.0 - 10.0 * 3.0
            }
        );
    }

    #[test]
    fn diode_states() {
        let d = ElementKind::Diode {
            on_resistance: 1e-3,
            off_conductance: 1e-9,
            forward_drop: 0.7,
        };
        let mut c = ctx(1e-6);
        assert_eq!(
            stamp(&d, &c, BranchHistory::default()),
            CompanionStamp::Norton {
                conductance: 1e-9,
                history_current: 0.0
            }
        );
        c.conducting = true;
        assert_eq!(
            stamp(&d, &c, BranchHistory::default()),
            CompanionStamp::Norton {
                conductance: 1000.0,
                history_current: -700.0
            }
        );
    }
}
