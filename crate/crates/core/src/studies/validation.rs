use std::collections::BTreeMap;

use serde::Serialize;

use crate::analysis::{
    dominant_frequency, magnification_factor, peak_metrics, peak_metrics_after, ripple_metrics,
    spectrum, Waveform, Window,
};
use crate::engine::simulate;
use crate::error::{Error, Result};

use super::stress::{stress_analysis, StressReport};
use super::CaseDefinition;

/// How a simulated number is extracted from the probe waveforms.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Metric {
    /// Peak |v| over the whole run, in p.u. of the probe's base.
    PeakPu {
        probe: String,
    },
    /// Largest per-unit peak among `probes`, at or after `from`.
    PeakPuAny {
        probes: Vec<String>,
        from: f64,
    },
    /// Peak |x| over the whole run, multiplied by `scale`.
    PeakAbs {
        probe: String,
        scale: f64,
    },
    PeakAbsAfter {
        probe: String,
        from: f64,
    },
    DominantFrequency {
        probe: String,
        window: (f64, f64),
        band: (f64, f64),
    },
    /// LV over MV per-unit peak, each the largest over its phases.
    Magnification {
        mv: Vec<String>,
        lv: Vec<String>,
        from: f64,
    },
    Mean {
        probe: String,
        window: (f64, f64),
    },
    RmsPu {
        probe: String,
        window: (f64, f64),
    },
    RipplePkPk {
        probe: String,
        window: (f64, f64),
    },
    RippleFrequency {
        probe: String,
        window: (f64, f64),
    },
    /// Mean of `voltage * current` times `scale`.
    MeanPower {
        voltage: String,
        current: String,
        window: (f64, f64),
        scale: f64,
    },
}

impl Metric {
    pub fn probes(&self) -> Vec<&str> {
        match self {
            Metric::PeakPu { probe }
            | Metric::PeakAbs { probe, .. }
            | Metric::PeakAbsAfter { probe, .. }
            | Metric::DominantFrequency { probe, .. }
            | Metric::Mean { probe, .. }
            | Metric::RmsPu { probe, .. }
            | Metric::RipplePkPk { probe, .. }
            | Metric::RippleFrequency { probe, .. } => vec![probe.as_str()],
            Metric::PeakPuAny { probes, .. } => probes.iter().map(String::as_str).collect(),
            Metric::Magnification { mv, lv, .. } => {
                mv.iter().chain(lv).map(String::as_str).collect()
            }
            Metric::MeanPower {
                voltage, current, ..
            } => vec![voltage.as_str(), current.as_str()],
        }
    }
}

/// Pass condition for a metric.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Check {
    Relative {
        target: f64,
        tolerance: f64,
    },
    Absolute {
        target: f64,
        tolerance: f64,
    },
    Range {
        low: f64,
        high: f64,
    },
    AtLeast(f64),
    /// Within `tolerance` of any of `targets`.
    AnyOf {
        targets: Vec<f64>,
        tolerance: f64,
    },
}

impl Check {
    pub fn passes(&self, value: f64) -> bool {
        match self {
            Check::Relative { target, tolerance } => {
                (value - target).abs() <= tolerance * target.abs()
            }
            Check::Absolute { target, tolerance } => (value - target).abs() <= *tolerance,
            Check::Range { low, high } => (*low..=*high).contains(&value),
            Check::AtLeast(min) => value >= *min,
            Check::AnyOf { targets, tolerance } => {
                targets.iter().any(|t| (value - t).abs() <= *tolerance)
            }
        }
    }

    /// Tolerance width; always positive for a well-formed check.
    pub fn width(&self) -> f64 {
        match self {
            Check::Relative { tolerance, .. }
            | Check::Absolute { tolerance, .. }
            | Check::AnyOf { tolerance, .. } => *tolerance,
            Check::Range { low, high } => high - low,
            Check::AtLeast(_) => f64::INFINITY,
        }
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Check::Relative { target, tolerance } => {
                write!(f, "{} ±{}%", fmt_num(*target), fmt_num(tolerance * 100.0))
            }
            Check::Absolute { target, tolerance } => {
                write!(f, "{} ±{}", fmt_num(*target), fmt_num(*tolerance))
            }
            Check::Range { low, high } => write!(f, "[{}, {}]", fmt_num(*low), fmt_num(*high)),
            Check::AtLeast(min) => write!(f, ">= {}", fmt_num(*min)),
            Check::AnyOf { targets, tolerance } => {
                let t: Vec<String> = targets.iter().map(|t| fmt_num(*t)).collect();
                write!(f, "{} ±{}", t.join(" or "), fmt_num(*tolerance))
            }
        }
    }
}

/// Compact fixed-point rendering used in reports.
pub(crate) fn fmt_num(x: f64) -> String {
    let a = x.abs();
    let s = if a == 0.0 {
        "0".to_string()
    } else if a >= 100.0 {
        format!("{x:.1}")
    } else if a >= 1.0 {
        format!("{x:.3}")
    } else {
        format!("{x:.4}")
    };
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpectedMetric {
    pub name: String,
    pub metric: Metric,
    pub check: Check,
    /// Closed-form prediction, where one exists.
    pub analytic: Option<f64>,
    /// Value reported by the reference study.
    pub published: Option<f64>,
    /// Where the published value comes from.
    pub source: String,
}

impl ExpectedMetric {
    pub fn new(name: impl Into<String>, metric: Metric, check: Check) -> Self {
        Self {
            name: name.into(),
            metric,
            check,
            analytic: None,
            published: None,
            source: String::new(),
        }
    }

    pub fn analytic(mut self, value: f64) -> Self {
        self.analytic = Some(value);
        self
    }

    pub fn published(mut self, value: f64) -> Self {
        self.published = Some(value);
        self
    }

    pub fn source(mut self, source: impl Into<String>) -> Self {
        self.source = source.into();
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationRow {
    pub name: String,
    pub analytic: Option<f64>,
    pub simulated: f64,
    pub published: Option<f64>,
    /// Simulated relative to published (or analytic when nothing is
    /// published), in percent.
    pub error_pct: Option<f64>,
    pub criterion: String,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub case: String,
    pub rows: Vec<ValidationRow>,
    pub stress: Option<StressReport>,
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn row(&self, name: &str) -> Option<&ValidationRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn window(w: (f64, f64)) -> Window<f64> {
    Window::new(w.0, w.1)
}

fn lookup<'a>(
    waves: &'a BTreeMap<String, Waveform<f64>>,
    probe: &str,
) -> Result<&'a Waveform<f64>> {
    waves
        .get(probe)
        .ok_or_else(|| Error::UnresolvedProbe(probe.to_string()))
}

fn peak_pu_after(
    waves: &BTreeMap<String, Waveform<f64>>,
    probes: &[String],
    from: f64,
) -> Result<f64> {
    probes.iter().try_fold(0.0_f64, |best, p| {
        let w = lookup(waves, p)?;
        Ok(best.max(peak_metrics_after(w, from).pu(p)?))
    })
}

/// Evaluate one metric on a set of labelled waveforms.
pub fn evaluate_metric(metric: &Metric, waves: &BTreeMap<String, Waveform<f64>>) -> Result<f64> {
    match metric {
        Metric::PeakPu { probe } => peak_metrics(lookup(waves, probe)?).pu(probe),
        Metric::PeakPuAny { probes, from } => peak_pu_after(waves, probes, *from),
        Metric::PeakAbs { probe, scale } => {
            Ok(peak_metrics(lookup(waves, probe)?).peak_abs * scale)
        }
        Metric::PeakAbsAfter { probe, from } => {
            Ok(peak_metrics_after(lookup(waves, probe)?, *from).peak_abs)
        }
        Metric::DominantFrequency {
            probe,
            window: w,
            band,
        } => {
            let s = spectrum(lookup(waves, probe)?, window(*w), false)?;
            dominant_frequency(&s, *band)
        }
        Metric::Magnification { mv, lv, from } => Ok(magnification_factor(
            peak_pu_after(waves, mv, *from)?,
            peak_pu_after(waves, lv, *from)?,
        )),
        Metric::Mean { probe, window: w } => lookup(waves, probe)?.mean_in(window(*w)),
        Metric::RmsPu { probe, window: w } => {
            let wave = lookup(waves, probe)?;
            let base = wave
                .pu_base
                .ok_or_else(|| Error::MissingBase(probe.clone()))?;
            // RMS relative to the RMS of a base-amplitude sine
            Ok(wave.rms_in(window(*w))? * std::f64::consts::SQRT_2 / base)
        }
        Metric::RipplePkPk { probe, window: w } => {
            Ok(ripple_metrics(lookup(waves, probe)?, window(*w))?.pk_pk)
        }
        Metric::RippleFrequency { probe, window: w } => {
            Ok(ripple_metrics(lookup(waves, probe)?, window(*w))?.dominant_hz)
        }
        Metric::MeanPower {
            voltage,
            current,
            window: w,
            scale,
        } => {
            let v = lookup(waves, voltage)?;
            let i = lookup(waves, current)?;
            let p = v.product(i, "power", crate::analysis::Unit::Watt);
            Ok(p.mean_in(window(*w))? * scale)
        }
    }
}

/// Simulate a case and attach per-unit bases to its waveforms.
pub fn simulate_case(case: &CaseDefinition) -> Result<BTreeMap<String, Waveform<f64>>> {
    let waves = simulate(&case.netlist, &case.sim).map_err(|e| Error::Case {
        case: case.id.to_string(),
        source: Box::new(e),
    })?;
    Ok(waves
        .into_iter()
        .map(|w| {
            let w = match case.pu_bases.get(&w.label) {
                Some(b) => w.with_base(*b),
                None => w,
            };
            (w.label.clone(), w)
        })
        .collect())
}

/// Simulate `case` and compare every expected metric.
pub fn run_validation(case: &CaseDefinition) -> Result<ValidationReport> {
    let waves = simulate_case(case)?;
    validate_waveforms(case, &waves)
}

pub fn validate_waveforms(
    case: &CaseDefinition,
    waves: &BTreeMap<String, Waveform<f64>>,
) -> Result<ValidationReport> {
    let wrap = |e: Error| Error::Case {
        case: case.id.to_string(),
        source: Box::new(e),
    };
    let mut rows = Vec::with_capacity(case.expected.len());
    for m in &case.expected {
        let simulated = evaluate_metric(&m.metric, waves).map_err(wrap)?;
        let reference = m.published.or(m.analytic);
        rows.push(ValidationRow {
            name: m.name.clone(),
            analytic: m.analytic,
            simulated,
            published: m.published,
            error_pct: reference
                .filter(|r| *r != 0.0)
                .map(|r| (simulated - r) / r * 100.0),
            criterion: m.check.to_string(),
            pass: m.check.passes(simulated),
        });
    }
    let stress = if case.ratings.is_empty() {
        None
    } else {
        Some(stress_analysis(&case.ratings, waves).map_err(wrap)?)
    };
    Ok(ValidationReport {
        case: case.id.to_string(),
        rows,
        stress,
        notes: case.notes.clone(),
    })
}
