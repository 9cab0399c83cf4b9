//! Fixed-step transient engine: trapezoidal companion models stamped into a
//! nodal/MNA system, solved by LU each step.
//!
//! The factorization is cached per topology (switch and diode states plus the
//! integrator), so steady stretches only rebuild the right-hand side. The
//! first step after any topology change, and the first step of a run, use
//! backward Euler; every other step is trapezoidal.

mod lu;
mod simulator;
mod stamp;
mod system;

use crate::error::{Error, Result};
use crate::Scalar;

pub use lu::{DenseMatrix, LuFactors};
pub use simulator::{effective_event_time, simulate, SimState, Simulator};
pub use stamp::{
    stamp, BranchHistory, CompanionStamp, Integrator, StampContext, SWITCH_OFF_CONDUCTANCE,
    SWITCH_ON_CONDUCTANCE,
};
pub use system::{assemble, assemble_matrix, assemble_rhs, stamps_for, Assembly, Layout};

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig<S> {
    pub dt: S,
    pub duration: S,
    pub record_decimation: usize,
    pub diode_iteration_cap: usize,
}

impl<S: Scalar> Default for SimConfig<S> {
    fn default() -> Self {
        Self {
            dt: S::lit(2e-6),
            duration: S::lit(0.2),
            record_decimation: 1,
            diode_iteration_cap: 50,
        }
    }
}

impl<S: Scalar> SimConfig<S> {
    pub fn new(dt: S, duration: S) -> Self {
        Self {
            dt,
            duration,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > S::zero()) || !self.dt.is_finite() {
            return Err(Error::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.duration >= self.dt * (S::one() - S::lit(1e-9))) {
            return Err(Error::Config(format!(
                "duration {} is shorter than dt {}",
                self.duration, self.dt
            )));
        }
        if self.record_decimation == 0 {
            return Err(Error::Config("record_decimation must be at least 1".into()));
        }
        if self.diode_iteration_cap == 0 {
            return Err(Error::Config(
                "diode_iteration_cap must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// `floor(duration / dt)`, tolerant of round-off in the quotient.
    pub fn step_count(&self) -> usize {
        (self.duration / self.dt + S::lit(1e-9))
            .floor()
            .to_usize()
            .unwrap_or(0)
    }

    /// Samples per waveform: `step_count / record_decimation + 1`.
    pub fn sample_count(&self) -> usize {
        self.step_count() / self.record_decimation + 1
    }
}
