//! Unknown layout and nodal/MNA assembly.
//!
//! Unknown order is deterministic: non-ground nodes `1..node_count` first, then
//! one branch-current unknown per source or transformer in element order.

use crate::error::{Error, Result};
use crate::netlist::{ElementKind, Netlist, NodeRef};
use crate::Scalar;

use super::lu::DenseMatrix;
use super::stamp::{stamp, BranchHistory, CompanionStamp, Integrator, StampContext};

#[derive(Clone, Debug)]
pub struct Layout {
    pub node_unknowns: usize,
    /// Branch-current unknown per element (sources and transformers only).
    pub branch_unknown: Vec<Option<usize>>,
    pub size: usize,
}

impl Layout {
    pub fn new<S: Scalar>(netlist: &Netlist<S>) -> Self {
        let node_unknowns = netlist.node_count() - 1;
        let mut next = node_unknowns;
        let branch_unknown = netlist
            .elements
            .iter()
            .map(|e| match e.kind {
                ElementKind::SineSource { .. } | ElementKind::Transformer { .. } => {
                    next += 1;
                    Some(next - 1)
                }
                _ => None,
            })
            .collect();
        Self {
            node_unknowns,
            branch_unknown,
            size: next,
        }
    }

    #[inline]
    pub fn row(&self, node: NodeRef) -> Option<usize> {
        (!node.is_ground()).then(|| node.0 - 1)
    }

    /// Human-readable name of an unknown, for diagnostics.
    pub fn describe<S: Scalar>(&self, netlist: &Netlist<S>, unknown: usize) -> String {
        if unknown < self.node_unknowns {
            return format!("node {}", unknown + 1);
        }
        self.branch_unknown
            .iter()
            .position(|b| *b == Some(unknown))
            .map(|i| format!("branch current of `{}`", netlist.elements[i].label))
            .unwrap_or_else(|| format!("unknown {unknown}"))
    }
}

/// Companion stamps for every element at one time point.
pub fn stamps_for<S: Scalar>(
    netlist: &Netlist<S>,
    history: &[BranchHistory<S>],
    conducting: &[bool],
    dt: S,
    time: S,
    integrator: Integrator,
) -> Vec<CompanionStamp<S>> {
    netlist
        .elements
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let ctx = StampContext {
                dt,
                time,
                integrator,
                conducting: conducting[i],
            };
            stamp(&e.kind, &ctx, history[i])
        })
        .collect()
}

fn add_conductance<S: Scalar>(m: &mut DenseMatrix<S>, p: Option<usize>, n: Option<usize>, g: S) {
    if let Some(p) = p {
        m.add(p, p, g);
    }
    if let Some(n) = n {
        m.add(n, n, g);
    }
    if let (Some(p), Some(n)) = (p, n) {
        m.add(p, n, -g);
        m.add(n, p, -g);
    }
}

/// System matrix for the given stamps. Depends only on conductances, ratios
/// and layout, never on history terms.
pub fn assemble_matrix<S: Scalar>(
    netlist: &Netlist<S>,
    layout: &Layout,
    stamps: &[CompanionStamp<S>],
) -> DenseMatrix<S> {
    let mut m = DenseMatrix::zeros(layout.size);
    for (i, (e, s)) in netlist.elements.iter().zip(stamps).enumerate() {
        let p = layout.row(e.pos);
        let n = layout.row(e.neg);
        match (s, &e.kind) {
            (CompanionStamp::Norton { conductance, .. }, _) => {
                add_conductance(&mut m, p, n, *conductance)
            }
            (CompanionStamp::VoltageSource { .. }, _) => {
                let k = layout.branch_unknown[i].expect("source has a branch unknown");
                for (node, sign) in [(p, S::one()), (n, -S::one())] {
                    if let Some(r) = node {
                        m.add(r, k, sign);
                        m.add(k, r, sign);
                    }
                }
            }
            (CompanionStamp::Transformer { ratio }, ElementKind::Transformer { secondary, .. }) => {
                let k = layout.branch_unknown[i].expect("transformer has a branch unknown");
                let p2 = layout.row(secondary.0);
                let n2 = layout.row(secondary.1);
                for (node, coeff) in [(p, S::one()), (n, -S::one()), (p2, -*ratio), (n2, *ratio)] {
                    if let Some(r) = node {
                        m.add(r, k, coeff);
                        m.add(k, r, coeff);
                    }
                }
            }
            (CompanionStamp::Transformer { .. }, _) => {
                unreachable!("transformer stamp on non-transformer")
            }
        }
    }
    m
}

pub fn assemble_rhs<S: Scalar>(
    netlist: &Netlist<S>,
    layout: &Layout,
    stamps: &[CompanionStamp<S>],
) -> Vec<S> {
    let mut b = vec![S::zero(); layout.size];
    for (i, (e, s)) in netlist.elements.iter().zip(stamps).enumerate() {
        match s {
            CompanionStamp::Norton {
                history_current, ..
            } => {
                if let Some(p) = layout.row(e.pos) {
                    b[p] -= *history_current;
                }
                if let Some(n) = layout.row(e.neg) {
                    b[n] += *history_current;
                }
            }
            CompanionStamp::VoltageSource { value } => {
                b[layout.branch_unknown[i].expect("source has a branch unknown")] = *value;
            }
            CompanionStamp::Transformer { .. } => {}
        }
    }
    b
}

/// Assembled system for one topology: matrix plus a right-hand-side builder.
pub struct Assembly<'a, S> {
    pub netlist: &'a Netlist<S>,
    pub layout: Layout,
    pub matrix: DenseMatrix<S>,
    conducting: Vec<bool>,
    dt: S,
    integrator: Integrator,
}

impl<'a, S: Scalar> Assembly<'a, S> {
    /// Right-hand side at `time` given the per-element history.
    pub fn rhs(&self, time: S, history: &[BranchHistory<S>]) -> Vec<S> {
        let stamps = stamps_for(
            self.netlist,
            history,
            &self.conducting,
            self.dt,
            time,
            self.integrator,
        );
        assemble_rhs(self.netlist, &self.layout, &stamps)
    }
}

/// Assemble the trapezoidal system matrix for a netlist under the given
/// conduction states (one flag per element; only switches and diodes read it).
pub fn assemble<'a, S: Scalar>(
    netlist: &'a Netlist<S>,
    dt: S,
    conducting: &[bool],
) -> Result<Assembly<'a, S>> {
    if conducting.len() != netlist.elements.len() {
        return Err(Error::Config(format!(
            "{} conduction flags for {} elements",
            conducting.len(),
            netlist.elements.len()
        )));
    }
    let layout = Layout::new(netlist);
    let history = vec![BranchHistory::default(); netlist.elements.len()];
    let stamps = stamps_for(
        netlist,
        &history,
        conducting,
        dt,
        S::zero(),
        Integrator::Trapezoidal,
    );
    let matrix = assemble_matrix(netlist, &layout, &stamps);
    Ok(Assembly {
        netlist,
        layout,
        matrix,
        conducting: conducting.to_vec(),
        dt,
        integrator: Integrator::Trapezoidal,
    })
}
