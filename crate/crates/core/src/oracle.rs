//! Closed-form predictions for capacitor energization and an independent
//! explicit RK4 reference integrator for the series RLC circuit.
//!
//! Voltage arguments are peak line-to-neutral unless the name says otherwise
//! (`v_ll` is RMS line-to-line).

use serde::Serialize;

use crate::analysis::{Unit, Waveform};
use crate::error::{Error, Result};
use crate::Scalar;

/// Largest damping ratio accepted by [`reference_rlc_waveform`].
pub const REFERENCE_MAX_ZETA: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SourceEquivalent<S> {
    pub z_s: S,
    pub l_s: S,
    pub r_s: S,
}

fn omega<S: Scalar>(f_sys: S) -> S {
    S::TAU() * f_sys
}

/// Thevenin source impedance from short-circuit level and X/R.
pub fn source_equivalent<S: Scalar>(
    v_ll: S,
    s_sc: S,
    x_over_r: S,
    f_sys: S,
) -> SourceEquivalent<S> {
    let z_s = v_ll * v_ll / s_sc;
    let w = omega(f_sys);
    let l_s = z_s / w * (x_over_r / (S::one() + x_over_r * x_over_r).sqrt());
    let r_s = w * l_s / x_over_r;
    SourceEquivalent { z_s, l_s, r_s }
}

/// Per-phase (wye) capacitance of a three-phase bank of `q` var.
pub fn bank_capacitance<S: Scalar>(q: S, v_ll: S, f_sys: S) -> S {
    q / (v_ll * v_ll * omega(f_sys))
}

pub fn natural_frequency<S: Scalar>(l: S, c: S) -> S {
    S::one() / (S::TAU() * (l * c).sqrt())
}

/// `f_sys * sqrt(s_sc / q_c)`: the same resonance expressed through the
/// short-circuit level and the bank size.
pub fn alt_natural_frequency<S: Scalar>(f_sys: S, s_sc: S, q_c: S) -> S {
    f_sys * (s_sc / q_c).sqrt()
}

/// Undamped inrush peak `v_m * sqrt(c / l)`.
pub fn peak_inrush<S: Scalar>(v_m: S, l: S, c: S) -> S {
    v_m * (c / l).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Damping<S> {
    pub zeta: S,
    pub q_factor: S,
}

/// Series-RLC damping ratio and quality factor; `2 * zeta * q_factor == 1`.
pub fn damping_and_q<S: Scalar>(r: S, l: S, c: S) -> Damping<S> {
    Damping {
        zeta: r / S::lit(2.0) * (c / l).sqrt(),
        q_factor: (l / c).sqrt() / r,
    }
}

/// Average output of an ideal 6-pulse bridge, `3*sqrt(2)/pi * v_ll`.
pub fn ideal_dc_voltage<S: Scalar>(v_ll: S) -> S {
    S::lit(3.0) * S::SQRT_2() / S::PI() * v_ll
}

/// Inductance seen from the primary of a winding inductance on the secondary.
pub fn refer_to_primary<S: Scalar>(l_secondary: S, ratio: S) -> S {
    l_secondary * ratio * ratio
}

/// Peak line-to-neutral voltage of a system given in RMS line-to-line.
pub fn peak_line_to_neutral<S: Scalar>(v_ll: S) -> S {
    v_ll * S::SQRT_2() / S::lit(3.0).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResonanceSummary<S> {
    pub f_n: S,
    pub zeta: S,
    pub q_factor: S,
    pub i_peak: S,
    pub tuning_ratio: Option<S>,
}

pub fn resonance_summary<S: Scalar>(r: S, l: S, c: S, v_m: S) -> ResonanceSummary<S> {
    let d = damping_and_q(r, l, c);
    ResonanceSummary {
        f_n: natural_frequency(l, c),
        zeta: d.zeta,
        q_factor: d.q_factor,
        i_peak: peak_inrush(v_m, l, c),
        tuning_ratio: None,
    }
}

/// Series RLC driven by `v_m * cos(2*pi*f_sys*t + phase)` through a switch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RlcCircuit<S> {
    pub r: S,
    pub l: S,
    pub c: S,
    pub v_m: S,
    pub f_sys: S,
    pub phase: S,
}

#[derive(Clone, Debug)]
pub struct RlcReference<S> {
    pub capacitor_voltage: Waveform<S>,
    pub current: Waveform<S>,
    /// Largest change seen when the reference step was halved, relative to
    /// the peak capacitor voltage.
    pub richardson_change: S,
}

/// Maximum relative change tolerated by the Richardson self-check.
pub const RICHARDSON_LIMIT: f64 = 1e-8;

impl<S: Scalar> RlcCircuit<S> {
    fn source(&self, t: S) -> S {
        self.v_m * (S::TAU() * self.f_sys * t + self.phase).cos()
    }

    /// d/dt of (capacitor voltage, loop current).
    fn derivative(&self, t: S, v: S, i: S) -> (S, S) {
        (i / self.c, (self.source(t) - self.r * i - v) / self.l)
    }

    fn rk4(&self, t: S, v: S, i: S, h: S) -> (S, S) {
        let half = S::lit(0.5);
        let (k1v, k1i) = self.derivative(t, v, i);
        let (k2v, k2i) = self.derivative(t + half * h, v + half * h * k1v, i + half * h * k1i);
        let (k3v, k3i) = self.derivative(t + half * h, v + half * h * k2v, i + half * h * k2i);
        let (k4v, k4i) = self.derivative(t + h, v + h * k3v, i + h * k3i);
        let sixth = h / S::lit(6.0);
        (
            v + sixth * (k1v + S::lit(2.0) * (k2v + k3v) + k4v),
            i + sixth * (k1i + S::lit(2.0) * (k2i + k3i) + k4i),
        )
    }

    /// Integrate from rest at `close_time`, sampling on `i * dt` for
    /// `i < samples`, with `substeps` RK4 steps per sample interval.
    fn integrate(&self, close_time: S, dt: S, samples: usize, substeps: usize) -> (Vec<S>, Vec<S>) {
        let mut vs = Vec::with_capacity(samples);
        let mut is = Vec::with_capacity(samples);
        let (mut v, mut i) = (S::zero(), S::zero());
        let mut t = close_time;
        for k in 0..samples {
            let target = S::from_usize_lossy(k) * dt;
            if target > t {
                // whole sample intervals use `substeps`; the partial first
                // interval is split proportionally (at least once)
                let span = target - t;
                let n = ((span / dt) * S::from_usize_lossy(substeps))
                    .ceil()
                    .to_usize()
                    .unwrap_or(1)
                    .max(1);
                let h = span / S::from_usize_lossy(n);
                for j in 0..n {
                    let (nv, ni) = self.rk4(t + S::from_usize_lossy(j) * h, v, i, h);
                    v = nv;
                    i = ni;
                }
                t = target;
            }
            vs.push(v);
            is.push(i);
        }
        (vs, is)
    }
}

/// High-accuracy series-RLC energization waveform on the grid `k * dt`,
/// `k < samples`. State is zero before `close_time`.
///
/// Uses classical RK4 with `substeps >= 50` steps per grid interval and
/// rejects the result unless doubling `substeps` changes it by less than
/// [`RICHARDSON_LIMIT`] of the peak.
pub fn reference_rlc_waveform<S: Scalar>(
    circuit: &RlcCircuit<S>,
    close_time: S,
    dt: S,
    samples: usize,
    substeps: usize,
) -> Result<RlcReference<S>> {
    let d = damping_and_q(circuit.r, circuit.l, circuit.c);
    if !(d.zeta < S::lit(REFERENCE_MAX_ZETA)) {
        return Err(Error::OutOfScope(format!(
            "reference RLC waveform covers lightly damped circuits only (zeta = {} >= {REFERENCE_MAX_ZETA})",
            d.zeta
        )));
    }
    if substeps < 50 {
        return Err(Error::Config(format!(
            "reference integrator needs at least 50 substeps per sample, got {substeps}"
        )));
    }
    let (v1, _) = circuit.integrate(close_time, dt, samples, substeps);
    let (v2, i2) = circuit.integrate(close_time, dt, samples, substeps * 2);
    let peak = v2.iter().fold(S::zero(), |m, x| m.max(x.abs()));
    let change = v1
        .iter()
        .zip(&v2)
        .fold(S::zero(), |m, (a, b)| m.max((*a - *b).abs()))
        / peak.max(S::min_positive_value());
    if change > S::lit(RICHARDSON_LIMIT) {
        return Err(Error::OutOfScope(format!(
            "reference integrator failed its Richardson check (relative change {change})"
        )));
    }
    Ok(RlcReference {
        capacitor_voltage: Waveform::new("reference_vc", dt, v2, Unit::Volt),
        current: Waveform::new("reference_i", dt, i2, Unit::Ampere),
        richardson_change: change,
    })
}
