//! Post-processing of simulated waveforms: spectra, peaks, DC ripple and
//! voltage magnification.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::Scalar;

/// Shortest slice accepted for spectral and ripple analysis: three cycles of
/// 60 Hz, giving a 20 Hz bin.
pub const MIN_ANALYSIS_WINDOW: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Unit {
    Volt,
    Ampere,
    Watt,
    Dimensionless,
}

impl Unit {
    pub fn symbol(self) -> &'static str {
        match self {
            Unit::Volt => "V",
            Unit::Ampere => "A",
            Unit::Watt => "W",
            Unit::Dimensionless => "",
        }
    }
}

/// Uniformly sampled time series starting at t = 0.
#[derive(Clone, Debug, PartialEq)]
pub struct Waveform<S> {
    pub label: String,
    pub dt: S,
    pub samples: Vec<S>,
    pub unit: Unit,
    /// Per-unit base (peak basis).
    pub pu_base: Option<S>,
}

/// Time range in seconds, `start <= t < end`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Window<S> {
    pub start: S,
    pub end: S,
}

impl<S: Scalar> Window<S> {
    pub fn new(start: S, end: S) -> Self {
        Self { start, end }
    }

    pub fn length(&self) -> S {
        self.end - self.start
    }
}

impl<S: Scalar> Waveform<S> {
    pub fn new(label: impl Into<String>, dt: S, samples: Vec<S>, unit: Unit) -> Self {
        Self {
            label: label.into(),
            dt,
            samples,
            unit,
            pu_base: None,
        }
    }

    pub fn with_base(mut self, base: S) -> Self {
        self.pu_base = Some(base);
        self
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time_at(&self, index: usize) -> S {
        S::from_usize_lossy(index) * self.dt
    }

    /// Time of the last sample.
    pub fn extent(&self) -> S {
        self.time_at(self.samples.len().saturating_sub(1))
    }

    /// Samples inside `window`: `round(length / dt)` samples starting at the
    /// sample nearest `window.start`.
    pub fn slice(&self, window: Window<S>) -> Result<&[S]> {
        let out_of_range = || Error::WindowOutOfRange {
            start: window.start.as_f64(),
            end: window.end.as_f64(),
            extent: self.extent().as_f64(),
        };
        if !(window.start >= S::zero()) || !(window.end > window.start) {
            return Err(out_of_range());
        }
        let first = (window.start / self.dt)
            .round()
            .to_usize()
            .ok_or_else(out_of_range)?;
        let count = (window.length() / self.dt)
            .round()
            .to_usize()
            .ok_or_else(out_of_range)?;
        if count == 0 || first + count > self.samples.len() {
            return Err(out_of_range());
        }
        Ok(&self.samples[first..first + count])
    }

    pub fn mean_in(&self, window: Window<S>) -> Result<S> {
        let s = self.slice(window)?;
        Ok(s.iter().copied().sum::<S>() / S::from_usize_lossy(s.len()))
    }

    pub fn rms_in(&self, window: Window<S>) -> Result<S> {
        let s = self.slice(window)?;
        Ok((s.iter().map(|&x| x * x).sum::<S>() / S::from_usize_lossy(s.len())).sqrt())
    }

    /// Pointwise product (e.g. voltage times current).
    pub fn product(&self, other: &Waveform<S>, label: impl Into<String>, unit: Unit) -> Self {
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(&a, &b)| a * b)
            .collect();
        Waveform::new(label, self.dt, samples, unit)
    }
}

/// Single-sided DFT amplitude spectrum of a rectangular-windowed slice.
///
/// `magnitudes[k]` is the peak amplitude at `k * bin_width`: `|X_0|/N` at DC,
/// `2|X_k|/N` for `0 < k < N/2`, and `|X_{N/2}|/N` at Nyquist for even `N`.
/// With that scaling Parseval reads
/// `sum(x^2) = N * (m_0^2 + sum_{0<k<N/2} m_k^2 / 2 + m_{N/2}^2)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Spectrum<S> {
    pub bin_width: S,
    pub magnitudes: Vec<S>,
    pub window: Window<S>,
    pub sample_count: usize,
}

impl<S: Scalar> Spectrum<S> {
    pub fn frequency(&self, bin: usize) -> S {
        S::from_usize_lossy(bin) * self.bin_width
    }

    /// Right-hand side of the Parseval identity above.
    pub fn parseval_energy(&self) -> S {
        let n = self.sample_count;
        let mut acc = S::zero();
        for (k, &m) in self.magnitudes.iter().enumerate() {
            let nyquist = n.is_multiple_of(2) && k == n / 2;
            acc += if k == 0 || nyquist {
                m * m
            } else {
                m * m * S::lit(0.5)
            };
        }
        acc * S::from_usize_lossy(n)
    }

    /// Amplitude of the bin nearest `frequency`.
    pub fn amplitude_near(&self, frequency: S) -> S {
        let k = (frequency / self.bin_width)
            .round()
            .to_usize()
            .unwrap_or(0)
            .min(self.magnitudes.len() - 1);
        self.magnitudes[k]
    }
}

/// Rectangular-window DFT magnitude of the slice. `detrend` removes the slice
/// mean first (DC-bus ripple).
pub fn spectrum<S: Scalar>(
    w: &Waveform<S>,
    window: Window<S>,
    detrend: bool,
) -> Result<Spectrum<S>> {
    if window.length() < S::lit(MIN_ANALYSIS_WINDOW) * (S::one() - S::lit(1e-9)) {
        return Err(Error::WindowTooShort {
            length: window.length().as_f64(),
            required: MIN_ANALYSIS_WINDOW,
        });
    }
    let slice = w.slice(window)?;
    let n = slice.len();
    let mean = if detrend {
        slice.iter().copied().sum::<S>() / S::from_usize_lossy(n)
    } else {
        S::zero()
    };
    let mut buf: Vec<rustfft::num_complex::Complex<S>> = slice
        .iter()
        .map(|&x| rustfft::num_complex::Complex::new(x - mean, S::zero()))
        .collect();
    rustfft::FftPlanner::new()
        .plan_fft_forward(n)
        .process(&mut buf);
    let nf = S::from_usize_lossy(n);
    let two = S::lit(2.0);
    let magnitudes = buf[..=n / 2]
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let m = c.norm() / nf;
            if k == 0 || (n.is_multiple_of(2) && k == n / 2) {
                m
            } else {
                two * m
            }
        })
        .collect();
    Ok(Spectrum {
        bin_width: S::one() / (nf * w.dt),
        magnitudes,
        window,
        sample_count: n,
    })
}

/// Frequency of the strongest bin inside `band`, refined by a parabola
/// through the log-magnitudes of it and its two neighbours.
pub fn dominant_frequency<S: Scalar>(s: &Spectrum<S>, band: (S, S)) -> Result<S> {
    let (low, high) = band;
    let empty = || Error::EmptyBand {
        low: low.as_f64(),
        high: high.as_f64(),
    };
    let first = (low / s.bin_width)
        .ceil()
        .max(S::zero())
        .to_usize()
        .ok_or_else(empty)?;
    let last = (high / s.bin_width)
        .floor()
        .to_usize()
        .ok_or_else(empty)?
        .min(s.magnitudes.len().saturating_sub(1));
    if last < first + 2 {
        return Err(empty());
    }
    let peak = (first..=last)
        .max_by(|&a, &b| {
            s.magnitudes[a]
                .partial_cmp(&s.magnitudes[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .expect("non-empty band");
    if peak == 0 || peak + 1 >= s.magnitudes.len() {
        return Ok(s.frequency(peak));
    }
    let (a, b, c) = (
        s.magnitudes[peak - 1],
        s.magnitudes[peak],
        s.magnitudes[peak + 1],
    );
    let tiny = S::min_positive_value();
    let offset = if a > tiny && c > tiny {
        let (la, lb, lc) = (a.ln(), b.ln(), c.ln());
        let denom = la - S::lit(2.0) * lb + lc;
        if denom < S::zero() {
            S::lit(0.5) * (la - lc) / denom
        } else {
            S::zero()
        }
    } else {
        S::zero()
    };
    Ok((S::from_usize_lossy(peak) + offset) * s.bin_width)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PeakMetrics<S> {
    pub peak_abs: S,
    pub peak_pu: Option<S>,
    pub time_of_peak: S,
}

impl<S: Scalar> PeakMetrics<S> {
    pub fn pu(&self, label: &str) -> Result<S> {
        self.peak_pu
            .ok_or_else(|| Error::MissingBase(label.to_string()))
    }
}

/// Largest absolute sample and the time it is first reached.
pub fn peak_metrics<S: Scalar>(w: &Waveform<S>) -> PeakMetrics<S> {
    let (index, peak) = w
        .samples
        .iter()
        .enumerate()
        .fold((0, S::zero()), |best, (i, &x)| {
            if x.abs() > best.1 {
                (i, x.abs())
            } else {
                best
            }
        });
    PeakMetrics {
        peak_abs: peak,
        peak_pu: w.pu_base.map(|b| peak / b),
        time_of_peak: w.time_at(index),
    }
}

/// [`peak_metrics`] restricted to samples at or after `from`.
pub fn peak_metrics_after<S: Scalar>(w: &Waveform<S>, from: S) -> PeakMetrics<S> {
    let skip = (from / w.dt).ceil().to_usize().unwrap_or(0).min(w.len());
    let tail = Waveform {
        label: w.label.clone(),
        dt: w.dt,
        samples: w.samples[skip..].to_vec(),
        unit: w.unit,
        pu_base: w.pu_base,
    };
    let mut m = peak_metrics(&tail);
    m.time_of_peak += w.time_at(skip);
    m
}

/// Peak metrics that require a per-unit base.
pub fn peak_metrics_pu<S: Scalar>(w: &Waveform<S>) -> Result<PeakMetrics<S>> {
    let m = peak_metrics(w);
    m.pu(&w.label)?;
    Ok(m)
}

/// Band searched for the dominant ripple component.
pub const RIPPLE_BAND: (f64, f64) = (100.0, 2000.0);

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RippleMetrics<S> {
    pub mean: S,
    pub pk_pk: S,
    /// `pk_pk / mean`
    pub pct: S,
    pub dominant_hz: S,
}

pub fn ripple_metrics<S: Scalar>(w: &Waveform<S>, steady: Window<S>) -> Result<RippleMetrics<S>> {
    let slice = w.slice(steady)?;
    let mean = slice.iter().copied().sum::<S>() / S::from_usize_lossy(slice.len());
    let (lo, hi) = slice
        .iter()
        .fold((S::infinity(), S::neg_infinity()), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    let pk_pk = hi - lo;
    let spec = spectrum(w, steady, true)?;
    let dominant_hz = if pk_pk > S::zero() {
        dominant_frequency(&spec, (S::lit(RIPPLE_BAND.0), S::lit(RIPPLE_BAND.1)))?
    } else {
        S::zero()
    };
    Ok(RippleMetrics {
        mean,
        pk_pk,
        pct: if mean != S::zero() {
            pk_pk / mean
        } else {
            S::zero()
        },
        dominant_hz,
    })
}

pub fn magnification_factor<S: Scalar>(mv_peak_pu: S, lv_peak_pu: S) -> S {
    lv_peak_pu / mv_peak_pu
}
