use thiserror::Error;

use crate::netlist::Diagnostic;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("line {line}: unknown element kind `{kind}`")]
    UnknownKind { line: usize, kind: String },

    #[error("line {line}: unit suffix on dimensionless field `{field}` (`{literal}`)")]
    SuffixOnDimensionless {
        line: usize,
        field: String,
        literal: String,
    },

    #[error("netlist failed validation:\n{}", render_diagnostics(.0))]
    InvalidNetlist(Vec<Diagnostic>),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("singular system matrix at t = {time:e} s; unresolved unknowns: {}", .unknowns.join(", "))]
    Singular { time: f64, unknowns: Vec<String> },

    #[error("diode iteration exceeded {cap} passes at t = {time:e} s; oscillating: {}", .diodes.join(", "))]
    DiodeChatter {
        time: f64,
        cap: usize,
        diodes: Vec<String>,
    },

    #[error("unresolved probe `{0}`")]
    UnresolvedProbe(String),

    #[error(
        "analysis window [{start:e}, {end:e}] s is outside the waveform extent [0, {extent:e}] s"
    )]
    WindowOutOfRange { start: f64, end: f64, extent: f64 },

    #[error("analysis window of {length:e} s is shorter than the required {required:e} s")]
    WindowTooShort { length: f64, required: f64 },

    #[error("frequency band [{low}, {high}] Hz holds fewer than 3 spectrum bins")]
    EmptyBand { low: f64, high: f64 },

    #[error("waveform `{0}` carries no per-unit base")]
    MissingBase(String),

    #[error("{0}")]
    OutOfScope(String),

    #[error("{case}: {source}")]
    Case {
        case: String,
        #[source]
        source: Box<Error>,
    },
}

fn render_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| format!("  - {d}"))
        .collect::<Vec<_>>()
        .join("\n")
}
