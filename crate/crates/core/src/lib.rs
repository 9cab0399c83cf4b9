//! Electromagnetic-transient (EMT) circuit solver with a validation harness for
//! industrial capacitor-switching studies.
//!
//! The numeric layers ([`netlist`], [`engine`], [`oracle`], [`analysis`]) are
//! generic over [`Scalar`] (`f32` or `f64`). The [`studies`] layer builds the
//! three reference cases in `f64`. Concrete `f64` aliases are exported at the
//! crate root for the common case.

// `!(a > b)` comparisons are used on purpose so that NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod engine;
pub mod error;
pub mod netlist;
pub mod oracle;
pub mod scalar;
pub mod studies;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type ElementF64 = netlist::Element<f64>;
pub type NetlistF64 = netlist::Netlist<f64>;
pub type SimConfigF64 = engine::SimConfig<f64>;
pub type SimulatorF64 = engine::Simulator<f64>;
pub type WaveformF64 = analysis::Waveform<f64>;
pub type SpectrumF64 = analysis::Spectrum<f64>;

pub type NetlistF32 = netlist::Netlist<f32>;
pub type SimConfigF32 = engine::SimConfig<f32>;
pub type WaveformF32 = analysis::Waveform<f32>;
