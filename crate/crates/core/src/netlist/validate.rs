use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use crate::Scalar;

use super::{ElementKind, Netlist, NodeRef, ProbeKind};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum DiagnosticKind {
    /// No conductive path to ground; the nodal matrix would be singular.
    FloatingNode(NodeRef),
    /// Node touched by exactly one element terminal.
    DanglingTerminal {
        element: String,
        node: NodeRef,
    },
    /// Node id below `node_count` that no element references.
    UnreferencedNode(NodeRef),
    /// Element with both terminals of a winding on the same node.
    ShortedElement(String),
    DuplicateLabel(String),
    NonPositiveParameter {
        element: String,
        field: &'static str,
    },
    UnresolvedProbe(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            DiagnosticKind::FloatingNode(n) => write!(f, "node {n} has no path to ground"),
            DiagnosticKind::DanglingTerminal { element, node } => {
                write!(f, "node {node} is only connected to `{element}`")
            }
            DiagnosticKind::UnreferencedNode(n) => write!(f, "node {n} is not used by any element"),
            DiagnosticKind::ShortedElement(e) => write!(f, "`{e}` has both terminals on one node"),
            DiagnosticKind::DuplicateLabel(l) => write!(f, "label `{l}` is used more than once"),
            DiagnosticKind::NonPositiveParameter { element, field } => {
                write!(f, "`{element}`: parameter `{field}` must be positive")
            }
            DiagnosticKind::UnresolvedProbe(p) => {
                write!(f, "probe `{p}` refers to a missing node or element")
            }
        }
    }
}

impl From<DiagnosticKind> for Diagnostic {
    fn from(kind: DiagnosticKind) -> Self {
        Self { kind }
    }
}

struct DisjointSet(Vec<usize>);

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn positive_fields<S: Scalar>(kind: &ElementKind<S>) -> Vec<(&'static str, S)> {
    match kind {
        ElementKind::Resistor { ohms } => vec![("r", *ohms)],
        ElementKind::Inductor { henries } => vec![("l", *henries)],
        ElementKind::Capacitor { farads, .. } => vec![("c", *farads)],
        ElementKind::SineSource {
            amplitude,
            frequency,
            ..
        } => vec![("amp", *amplitude), ("freq", *frequency)],
        ElementKind::TimedSwitch {
            close_time,
            open_time,
        } => {
            let mut v = vec![("tclose", *close_time)];
            if let Some(t) = open_time {
                // must open after it closes
                v.push(("topen", *t - *close_time));
            }
            v
        }
        ElementKind::Diode {
            on_resistance,
            off_conductance,
            forward_drop,
        } => vec![
            ("ron", *on_resistance),
            ("goff", *off_conductance),
            // zero forward drop is allowed
            ("vf", *forward_drop + S::epsilon()),
        ],
        ElementKind::Transformer { ratio, .. } => vec![("ratio", *ratio)],
    }
}

/// Structural and parametric checks. An empty result means the engine can
/// assemble a non-singular system for every switch and diode state.
///
/// Each node gets at most one connectivity diagnostic: floating takes
/// precedence over dangling.
pub fn validate<S: Scalar>(netlist: &Netlist<S>) -> Vec<Diagnostic> {
    let mut out: Vec<Diagnostic> = Vec::new();
    let node_count = netlist.node_count();

    let mut seen = HashSet::new();
    for e in &netlist.elements {
        if !seen.insert(e.label.as_str()) {
            out.push(DiagnosticKind::DuplicateLabel(e.label.clone()).into());
        }
    }
    let mut seen_probes = HashSet::new();
    for p in &netlist.probes {
        if !seen_probes.insert(p.label.as_str()) {
            out.push(DiagnosticKind::DuplicateLabel(p.label.clone()).into());
        }
    }

    for e in &netlist.elements {
        for (field, value) in positive_fields(&e.kind) {
            if !(value > S::zero()) || !value.is_finite() {
                out.push(
                    DiagnosticKind::NonPositiveParameter {
                        element: e.label.clone(),
                        field,
                    }
                    .into(),
                );
            }
        }
        if e.winding_pairs().iter().any(|(a, b)| a == b) {
            out.push(DiagnosticKind::ShortedElement(e.label.clone()).into());
        }
    }

    // Connectivity: every element winding is a conductive branch (switches and
    // diodes leak through their off-conductance, capacitors and inductors through
    // their companion conductance).
    let mut sets = DisjointSet::new(node_count);
    let mut incidence: HashMap<NodeRef, Vec<&str>> = HashMap::new();
    for e in &netlist.elements {
        for (a, b) in e.winding_pairs() {
            sets.union(a.0, b.0);
        }
        for n in e.terminals() {
            incidence.entry(n).or_default().push(e.label.as_str());
        }
    }
    let ground_root = sets.find(0);
    for id in 1..node_count {
        let node = NodeRef(id);
        let users = incidence.get(&node).map(Vec::as_slice).unwrap_or(&[]);
        if users.is_empty() {
            out.push(DiagnosticKind::UnreferencedNode(node).into());
        } else if sets.find(id) != ground_root {
            out.push(DiagnosticKind::FloatingNode(node).into());
        } else if users.len() == 1 {
            out.push(
                DiagnosticKind::DanglingTerminal {
                    element: users[0].to_string(),
                    node,
                }
                .into(),
            );
        }
    }

    for p in &netlist.probes {
        let ok = match &p.kind {
            ProbeKind::NodeVoltage(n) => n.is_ground() || incidence.contains_key(n),
            ProbeKind::Differential(a, b) => [a, b]
                .iter()
                .all(|n| n.is_ground() || incidence.contains_key(n)),
            ProbeKind::BranchCurrent(label) => netlist.element(label).is_some(),
        };
        if !ok {
            out.push(DiagnosticKind::UnresolvedProbe(p.label.clone()).into());
        }
    }
    out
}
