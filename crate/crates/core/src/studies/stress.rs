use std::collections::BTreeMap;

use serde::Serialize;

use crate::analysis::{peak_metrics, Unit, Waveform};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StressKind {
    PeakVoltage,
    PeakCurrent,
    Energy,
    DcPeak,
}

/// Where the stress for a rating comes from.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum StressSource {
    Probe(String),
    /// Integral of `voltage * current` over `window`.
    Energy {
        voltage: String,
        current: String,
        window: (f64, f64),
    },
    /// Supplied directly, for quantities the network does not model.
    Given {
        value: f64,
        note: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquipmentRating {
    pub label: String,
    pub rating: f64,
    pub kind: StressKind,
    pub source: StressSource,
    /// Nameplate peak used for the dielectric multiple (capacitor rows).
    pub rated_peak: Option<f64>,
}

impl EquipmentRating {
    pub fn new(
        label: impl Into<String>,
        rating: f64,
        kind: StressKind,
        source: StressSource,
    ) -> Self {
        Self {
            label: label.into(),
            rating,
            kind,
            source,
            rated_peak: None,
        }
    }

    pub fn with_rated_peak(mut self, peak: f64) -> Self {
        self.rated_peak = Some(peak);
        self
    }

    pub fn unit(&self) -> &'static str {
        match self.kind {
            StressKind::PeakVoltage | StressKind::DcPeak => "V",
            StressKind::PeakCurrent => "A",
            StressKind::Energy => "J",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StressRow {
    pub label: String,
    pub rating: f64,
    pub stress: f64,
    /// Signed margin in percent; negative means the rating is exceeded.
    pub margin_pct: f64,
    pub dielectric_multiple: Option<f64>,
    pub unit: String,
    pub note: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct StressReport {
    pub rows: Vec<StressRow>,
}

/// `(rating - stress) / rating`.
pub fn margin(rating: f64, stress: f64) -> f64 {
    (rating - stress) / rating
}

/// `(stress / rated_peak)^2`.
pub fn dielectric_multiple(stress: f64, rated_peak: f64) -> f64 {
    let r = stress / rated_peak;
    r * r
}

/// Stress rows for ratings whose stresses are already known, in order.
pub fn stress_rows(ratings: &[EquipmentRating], stresses: &[f64]) -> StressReport {
    StressReport {
        rows: ratings
            .iter()
            .zip(stresses)
            .map(|(r, &stress)| StressRow {
                label: r.label.clone(),
                rating: r.rating,
                stress,
                margin_pct: margin(r.rating, stress) * 100.0,
                dielectric_multiple: r.rated_peak.map(|p| dielectric_multiple(stress, p)),
                unit: r.unit().to_string(),
                note: match &r.source {
                    StressSource::Given { note, .. } => Some(note.clone()),
                    _ => None,
                },
            })
            .collect(),
    }
}

fn stress_of(rating: &EquipmentRating, waves: &BTreeMap<String, Waveform<f64>>) -> Result<f64> {
    let get = |label: &str| {
        waves
            .get(label)
            .ok_or_else(|| Error::UnresolvedProbe(label.to_string()))
    };
    match &rating.source {
        StressSource::Given { value, .. } => Ok(*value),
        StressSource::Probe(label) => Ok(peak_metrics(get(label)?).peak_abs),
        StressSource::Energy {
            voltage,
            current,
            window,
        } => {
            let v = get(voltage)?;
            let p = v.product(get(current)?, "power", Unit::Watt);
            let slice = p.slice(crate::analysis::Window::new(window.0, window.1))?;
            Ok(slice.iter().sum::<f64>() * p.dt)
        }
    }
}

/// Evaluate each rating against the simulated waveforms.
pub fn stress_analysis(
    ratings: &[EquipmentRating],
    waves: &BTreeMap<String, Waveform<f64>>,
) -> Result<StressReport> {
    let stresses = ratings
        .iter()
        .map(|r| stress_of(r, waves))
        .collect::<Result<Vec<_>>>()?;
    Ok(stress_rows(ratings, &stresses))
}
