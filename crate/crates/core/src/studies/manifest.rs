//! Study manifest: the structured companion of a case's netlist file.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::netlist::serialize_netlist;

use super::{CaseDefinition, Check, Metric, StressKind};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ManifestMetric {
    pub name: String,
    pub metric: Metric,
    pub check: Check,
    pub analytic: Option<f64>,
    pub published: Option<f64>,
    pub source: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ManifestRating {
    pub label: String,
    pub rating: f64,
    pub kind: StressKind,
    pub rated_peak: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Manifest {
    pub case: String,
    pub netlist_file: String,
    pub dt: f64,
    pub duration: f64,
    pub probes: Vec<String>,
    pub pu_bases: BTreeMap<String, f64>,
    pub expected: Vec<ManifestMetric>,
    pub ratings: Vec<ManifestRating>,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

/// Netlist text of a case, with a short comment header.
pub fn case_file(case: &CaseDefinition) -> String {
    format!(
        "# {} reference network\n{}",
        case.id,
        serialize_netlist(&case.netlist)
    )
}

pub fn manifest(case: &CaseDefinition) -> Manifest {
    Manifest {
        case: case.id.slug().to_string(),
        netlist_file: format!("{}.ckt", case.id.slug()),
        dt: case.sim.dt,
        duration: case.sim.duration,
        probes: case
            .netlist
            .probes
            .iter()
            .map(|p| p.label.clone())
            .collect(),
        pu_bases: case.pu_bases.clone(),
        expected: case
            .expected
            .iter()
            .map(|m| ManifestMetric {
                name: m.name.clone(),
                metric: m.metric.clone(),
                check: m.check.clone(),
                analytic: m.analytic,
                published: m.published,
                source: m.source.clone(),
            })
            .collect(),
        ratings: case
            .ratings
            .iter()
            .map(|r| ManifestRating {
                label: r.label.clone(),
                rating: r.rating,
                kind: r.kind,
                rated_peak: r.rated_peak,
            })
            .collect(),
    }
}
