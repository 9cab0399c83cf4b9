//! Reference case studies, validation against published values and
//! equipment stress margins. Everything here is `f64`.

mod cases;
mod manifest;
mod stress;
mod validation;

pub use cases::*;
pub use manifest::{case_file, manifest, Manifest, ManifestMetric, ManifestRating};
pub use stress::{
    dielectric_multiple, margin, stress_analysis, stress_rows, EquipmentRating, StressKind,
    StressReport, StressRow, StressSource,
};
pub use validation::{
    evaluate_metric, run_validation, simulate_case, validate_waveforms, Check, ExpectedMetric,
    Metric, ValidationReport, ValidationRow,
};
