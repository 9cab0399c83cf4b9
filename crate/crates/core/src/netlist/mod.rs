//! Typed circuit description consumed by the engine.
//!
//! Parameters are stored in SI base units. The text format (see [`parse_netlist`])
//! carries engineering suffixes; conversion happens only at the file boundary.

mod format;
mod validate;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::Scalar;

pub use format::{format_si, parse_netlist, parse_si, serialize_netlist};
pub use validate::{validate, Diagnostic, DiagnosticKind};

/// Default diode on-state resistance (ohms).
pub const DEFAULT_DIODE_RON: f64 = 1e-3;
/// Default diode off-state conductance (siemens).
pub const DEFAULT_DIODE_GOFF: f64 = 1e-9;

/// Index of a circuit node. Node 0 is the ground reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeRef(pub usize);

impl NodeRef {
    pub const GROUND: NodeRef = NodeRef(0);

    #[inline]
    pub fn is_ground(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ElementKind<S> {
    Resistor {
        ohms: S,
    },
    Inductor {
        henries: S,
    },
    Capacitor {
        farads: S,
        initial_voltage: S,
    },
    /// Ideal voltage source `amplitude * cos(2*pi*frequency*t + phase)`.
    SineSource {
        amplitude: S,
        frequency: S,
        phase: S,
    },
    /// Open until `close_time`, closed until `open_time` (if any).
    TimedSwitch {
        close_time: S,
        open_time: Option<S>,
    },
    Diode {
        on_resistance: S,
        off_conductance: S,
        forward_drop: S,
    },
    /// Ideal two-winding transformer. The primary is `pos -> neg`; `ratio` is
    /// primary turns over secondary turns, so `v_primary = ratio * v_secondary`.
    Transformer {
        ratio: S,
        secondary: (NodeRef, NodeRef),
    },
}

impl<S> ElementKind<S> {
    /// Single-letter (or two-letter) tag used in the text format.
    pub fn tag(&self) -> &'static str {
        match self {
            ElementKind::Resistor { .. } => "R",
            ElementKind::Inductor { .. } => "L",
            ElementKind::Capacitor { .. } => "C",
            ElementKind::SineSource { .. } => "VS",
            ElementKind::TimedSwitch { .. } => "SW",
            ElementKind::Diode { .. } => "D",
            ElementKind::Transformer { .. } => "XF",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Element<S> {
    pub label: String,
    pub pos: NodeRef,
    pub neg: NodeRef,
    pub kind: ElementKind<S>,
}

impl<S: Scalar> Element<S> {
    fn new(label: impl Into<String>, pos: usize, neg: usize, kind: ElementKind<S>) -> Self {
        Self {
            label: label.into(),
            pos: NodeRef(pos),
            neg: NodeRef(neg),
            kind,
        }
    }

    pub fn resistor(label: impl Into<String>, pos: usize, neg: usize, ohms: S) -> Self {
        Self::new(label, pos, neg, ElementKind::Resistor { ohms })
    }

    pub fn inductor(label: impl Into<String>, pos: usize, neg: usize, henries: S) -> Self {
        Self::new(label, pos, neg, ElementKind::Inductor { henries })
    }

    pub fn capacitor(label: impl Into<String>, pos: usize, neg: usize, farads: S) -> Self {
        Self::new(
            label,
            pos,
            neg,
            ElementKind::Capacitor {
                farads,
                initial_voltage: S::zero(),
            },
        )
    }

    pub fn charged_capacitor(
        label: impl Into<String>,
        pos: usize,
        neg: usize,
        farads: S,
        initial_voltage: S,
    ) -> Self {
        Self::new(
            label,
            pos,
            neg,
            ElementKind::Capacitor {
                farads,
                initial_voltage,
            },
        )
    }

    pub fn sine_source(
        label: impl Into<String>,
        pos: usize,
        neg: usize,
        amplitude: S,
        frequency: S,
        phase: S,
    ) -> Self {
        Self::new(
            label,
            pos,
            neg,
            ElementKind::SineSource {
                amplitude,
                frequency,
                phase,
            },
        )
    }

    pub fn switch(
        label: impl Into<String>,
        pos: usize,
        neg: usize,
        close_time: S,
        open_time: Option<S>,
    ) -> Self {
        Self::new(
            label,
            pos,
            neg,
            ElementKind::TimedSwitch {
                close_time,
                open_time,
            },
        )
    }

    /// Diode with default on-resistance, off-conductance and zero forward drop.
    pub fn diode(label: impl Into<String>, anode: usize, cathode: usize) -> Self {
        Self::new(
            label,
            anode,
            cathode,
            ElementKind::Diode {
                on_resistance: S::lit(DEFAULT_DIODE_RON),
                off_conductance: S::lit(DEFAULT_DIODE_GOFF),
                forward_drop: S::zero(),
            },
        )
    }

    pub fn transformer(
        label: impl Into<String>,
        primary: (usize, usize),
        secondary: (usize, usize),
        ratio: S,
    ) -> Self {
        Self::new(
            label,
            primary.0,
            primary.1,
            ElementKind::Transformer {
                ratio,
                secondary: (NodeRef(secondary.0), NodeRef(secondary.1)),
            },
        )
    }

    /// Every terminal node, in declaration order.
    pub fn terminals(&self) -> Vec<NodeRef> {
        self.winding_pairs()
            .into_iter()
            .flat_map(|(a, b)| [a, b])
            .collect()
    }

    /// Node pairs joined by a conductive branch (one pair, or two for a transformer).
    pub fn winding_pairs(&self) -> Vec<(NodeRef, NodeRef)> {
        match &self.kind {
            ElementKind::Transformer { secondary, .. } => {
                vec![(self.pos, self.neg), *secondary]
            }
            _ => vec![(self.pos, self.neg)],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbeKind {
    NodeVoltage(NodeRef),
    /// Current through the named element, positive from `pos` to `neg`
    /// (primary winding for a transformer).
    BranchCurrent(String),
    /// `v(pos) - v(neg)`.
    Differential(NodeRef, NodeRef),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Probe {
    pub label: String,
    pub kind: ProbeKind,
}

impl Probe {
    pub fn voltage(label: impl Into<String>, node: usize) -> Self {
        Self {
            label: label.into(),
            kind: ProbeKind::NodeVoltage(NodeRef(node)),
        }
    }

    pub fn current(label: impl Into<String>, element: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            kind: ProbeKind::BranchCurrent(element.into()),
        }
    }

    pub fn differential(label: impl Into<String>, pos: usize, neg: usize) -> Self {
        Self {
            label: label.into(),
            kind: ProbeKind::Differential(NodeRef(pos), NodeRef(neg)),
        }
    }
}

/// Ordered element list plus probes. Immutable once handed to the engine.
#[derive(Clone, Debug, PartialEq)]
pub struct Netlist<S> {
    pub elements: Vec<Element<S>>,
    pub probes: Vec<Probe>,
}

impl<S> Default for Netlist<S> {
    fn default() -> Self {
        Self {
            elements: Vec::new(),
            probes: Vec::new(),
        }
    }
}

impl<S: Scalar> Netlist<S> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, element: Element<S>) -> &mut Self {
        self.elements.push(element);
        self
    }

    pub fn add_probe(&mut self, probe: Probe) -> &mut Self {
        self.probes.push(probe);
        self
    }

    /// Number of nodes including ground: one past the highest node id referenced
    /// by any element or probe.
    pub fn node_count(&self) -> usize {
        let from_elements = self
            .elements
            .iter()
            .flat_map(|e| e.terminals())
            .map(|n| n.0);
        let from_probes = self.probes.iter().flat_map(|p| match &p.kind {
            ProbeKind::NodeVoltage(n) => vec![n.0],
            ProbeKind::Differential(a, b) => vec![a.0, b.0],
            ProbeKind::BranchCurrent(_) => vec![],
        });
        from_elements.chain(from_probes).max().map_or(1, |m| m + 1)
    }

    pub fn element(&self, label: &str) -> Option<&Element<S>> {
        self.elements.iter().find(|e| e.label == label)
    }

    pub fn element_index(&self, label: &str) -> Option<usize> {
        self.elements.iter().position(|e| e.label == label)
    }

    pub fn probe(&self, label: &str) -> Option<&Probe> {
        self.probes.iter().find(|p| p.label == label)
    }

    /// Same circuit in another scalar type.
    pub fn cast<T: Scalar>(&self) -> Netlist<T> {
        let c = |x: S| T::lit(x.as_f64());
        let elements = self
            .elements
            .iter()
            .map(|e| Element {
                label: e.label.clone(),
                pos: e.pos,
                neg: e.neg,
                kind: match &e.kind {
                    ElementKind::Resistor { ohms } => ElementKind::Resistor { ohms: c(*ohms) },
                    ElementKind::Inductor { henries } => ElementKind::Inductor {
                        henries: c(*henries),
                    },
                    ElementKind::Capacitor {
                        farads,
                        initial_voltage,
                    } => ElementKind::Capacitor {
                        farads: c(*farads),
                        initial_voltage: c(*initial_voltage),
                    },
                    ElementKind::SineSource {
                        amplitude,
                        frequency,
                        phase,
                    } => ElementKind::SineSource {
                        amplitude: c(*amplitude),
                        frequency: c(*frequency),
                        phase: c(*phase),
                    },
                    ElementKind::TimedSwitch {
                        close_time,
                        open_time,
                    } => ElementKind::TimedSwitch {
                        close_time: c(*close_time),
                        open_time: open_time.map(c),
                    },
                    ElementKind::Diode {
                        on_resistance,
                        off_conductance,
                        forward_drop,
                    } => ElementKind::Diode {
                        on_resistance: c(*on_resistance),
                        off_conductance: c(*off_conductance),
                        forward_drop: c(*forward_drop),
                    },
                    ElementKind::Transformer { ratio, secondary } => ElementKind::Transformer {
                        ratio: c(*ratio),
                        secondary: *secondary,
                    },
                },
            })
            .collect();
        Netlist {
            elements,
            probes: self.probes.clone(),
        }
    }
}
