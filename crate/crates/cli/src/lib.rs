//! Command-line front end: runs the reference cases or a user netlist, writes
//! waveform and spectrum CSVs and a validation report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use capswitch::analysis::{spectrum, Waveform, Window};
use capswitch::netlist::{parse_netlist, parse_si};
use capswitch::studies::{
    build_case, case_file, manifest, simulate_case, validate_waveforms, CaseDefinition, CaseId,
    StressReport, ValidationReport,
};
use capswitch::{engine, NetlistF64, SimConfigF64};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Exit status when every expected metric passes.
pub const EXIT_PASS: i32 = 0;
/// Exit status for a simulation, input or I/O error.
pub const EXIT_ERROR: i32 = 1;
/// Exit status when at least one metric misses its tolerance.
pub const EXIT_METRIC_FAIL: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "capswitch",
    version,
    about = "Capacitor-switching transient studies"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a reference case or a netlist file.
    Run(RunArgs),
    /// Write the reference case netlists and study manifests.
    Export(ExportArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CaseSelector {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    #[value(name = "3")]
    Three,
    All,
}

impl CaseSelector {
    fn cases(self) -> Vec<CaseId> {
        match self {
            CaseSelector::One => vec![CaseId::Case1],
            CaseSelector::Two => vec![CaseId::Case2],
            CaseSelector::Three => vec![CaseId::Case3],
            CaseSelector::All => CaseId::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    #[default]
    Text,
    Structured,
}

fn parse_seconds(s: &str) -> Result<f64, String> {
    match parse_si::<f64>(s) {
        Some((v, _)) if v > 0.0 && v.is_finite() => Ok(v),
        Some(_) => Err(format!("`{s}` must be a positive time")),
        None => Err(format!("`{s}` is not a number (SI suffixes allowed)")),
    }
}

#[derive(Clone, Debug, Args)]
pub struct RunArgs {
    /// Reference case to run.
    #[arg(
        long,
        value_enum,
        conflicts_with = "netlist",
        required_unless_present = "netlist"
    )]
    pub case: Option<CaseSelector>,
    /// Netlist file to simulate instead of a reference case.
    #[arg(long)]
    pub netlist: Option<PathBuf>,
    /// Time step override in seconds, e.g. `4u`.
    #[arg(long, value_parser = parse_seconds)]
    pub dt: Option<f64>,
    /// Duration override in seconds, e.g. `100m`.
    #[arg(long, value_parser = parse_seconds)]
    pub duration: Option<f64>,
    /// Output directory.
    #[arg(long, env = "CAPSWITCH_OUT", default_value = ".")]
    pub out: PathBuf,
    /// Also write the amplitude spectrum of this probe (repeatable).
    #[arg(long)]
    pub spectrum: Vec<String>,
    #[arg(long, value_enum, default_value_t)]
    pub format: ReportFormat,
}

#[derive(Clone, Debug, Args)]
pub struct ExportArgs {
    #[arg(long, env = "CAPSWITCH_OUT", default_value = ".")]
    pub out: PathBuf,
}

/// Result of one `run` invocation.
#[derive(Debug, Default)]
pub struct Outcome {
    pub reports: Vec<ValidationReport>,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(ValidationReport::all_pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.all_pass() {
            EXIT_PASS
        } else {
            EXIT_METRIC_FAIL
        }
    }
}

/// Execute a parsed command line and return the process exit status.
pub fn execute(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Run(args) => run(&args).map(|o| o.exit_code()),
        Command::Export(args) => export(&args.out).map(|_| EXIT_PASS),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    }
}

fn apply_overrides(sim: &mut SimConfigF64, args: &RunArgs, notes: &mut Vec<String>) {
    if let Some(dt) = args.dt {
        sim.dt = dt;
        notes.push(format!("time step overridden to {dt} s"));
    }
    if let Some(d) = args.duration {
        sim.duration = d;
        notes.push(format!("duration overridden to {d} s"));
    }
}

pub fn run(args: &RunArgs) -> anyhow::Result<Outcome> {
    fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create output directory {}", args.out.display()))?;
    let mut outcome = Outcome::default();
    if let Some(path) = &args.netlist {
        run_netlist(path, args, &mut outcome)?;
        return Ok(outcome);
    }
    let ids = args.case.map(CaseSelector::cases).unwrap_or_default();
    let cases: Vec<CaseDefinition> = ids
        .into_iter()
        .map(|id| {
            let mut case = build_case(id);
            apply_overrides(&mut case.sim, args, &mut case.notes);
            case
        })
        .collect();
    for probe in &args.spectrum {
        if !cases
            .iter()
            .any(|c| c.netlist.probes.iter().any(|p| &p.label == probe))
        {
            bail!("spectrum probe `{probe}` is not defined by the selected case");
        }
    }
    // independent simulations; run them side by side
    let results: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = cases
            .iter()
            .map(|case| s.spawn(move || simulate_case(case)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    });
    for (case, waves) in cases.iter().zip(results) {
        let waves = waves?;
        let report = validate_waveforms(case, &waves)?;
        let order: Vec<String> = case
            .netlist
            .probes
            .iter()
            .map(|p| p.label.clone())
            .collect();
        emit(case.id.slug(), &waves, &order, &report, args, &mut outcome)?;
        outcome.reports.push(report);
    }
    Ok(outcome)
}

fn run_netlist(path: &Path, args: &RunArgs, outcome: &mut Outcome) -> anyhow::Result<()> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read netlist {}", path.display()))?;
    let netlist: NetlistF64 =
        parse_netlist(&text).with_context(|| format!("in netlist {}", path.display()))?;
    let mut sim = SimConfigF64::default();
    let mut notes = Vec::new();
    apply_overrides(&mut sim, args, &mut notes);
    let order: Vec<String> = netlist.probes.iter().map(|p| p.label.clone()).collect();
    if let Some(probe) = args.spectrum.iter().find(|p| !order.contains(p)) {
        bail!(
            "spectrum probe `{probe}` is not defined in {}",
            path.display()
        );
    }
    let waves: BTreeMap<String, Waveform<f64>> = engine::simulate(&netlist, &sim)
        .with_context(|| format!("simulating {}", path.display()))?
        .into_iter()
        .map(|w| (w.label.clone(), w))
        .collect();
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "netlist".into());
    let report = ValidationReport {
        case: stem.clone(),
        rows: Vec::new(),
        stress: None,
        notes,
    };
    emit(&stem, &waves, &order, &report, args, outcome)?;
    outcome.reports.push(report);
    Ok(())
}

fn emit(
    prefix: &str,
    waves: &BTreeMap<String, Waveform<f64>>,
    order: &[String],
    report: &ValidationReport,
    args: &RunArgs,
    outcome: &mut Outcome,
) -> anyhow::Result<()> {
    let ordered: Vec<&Waveform<f64>> = order.iter().filter_map(|l| waves.get(l)).collect();
    for (group, members) in group_by_prefix(&ordered) {
        let path = args.out.join(format!("{prefix}_{group}.csv"));
        write_file(&path, &waveform_csv(&members)?)?;
        outcome.files.push(path);
    }
    for probe in &args.spectrum {
        // with `--case all` a probe may exist in only some cases
        let Some(w) = waves.get(probe) else {
            continue;
        };
        let window = Window::new(0.0, w.dt * w.len() as f64);
        let s = spectrum(w, window, false).with_context(|| format!("spectrum of {probe}"))?;
        let mut text = String::from("frequency_hz,amplitude\n");
        for (k, m) in s.magnitudes.iter().enumerate() {
            writeln!(text, "{},{}", s.frequency(k), m).expect("write to string");
        }
        let path = args.out.join(format!("{prefix}_spectrum_{probe}.csv"));
        write_file(&path, &text)?;
        outcome.files.push(path);
    }
    let (name, body) = match args.format {
        ReportFormat::Text => (format!("{prefix}_report.txt"), report_render(report)),
        ReportFormat::Structured => (format!("{prefix}_report.json"), report.to_json()),
    };
    let path = args.out.join(name);
    write_file(&path, &body)?;
    outcome.files.push(path);
    Ok(())
}

fn write_file(path: &Path, body: &str) -> anyhow::Result<()> {
    fs::write(path, body).with_context(|| format!("cannot write {}", path.display()))
}

/// Probe groups keyed by the label text before the first `.`.
pub fn group_by_prefix<'a>(waves: &[&'a Waveform<f64>]) -> Vec<(String, Vec<&'a Waveform<f64>>)> {
    let mut groups: Vec<(String, Vec<&Waveform<f64>>)> = Vec::new();
    for w in waves {
        let key = w.label.split('.').next().unwrap_or(&w.label).to_string();
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(w),
            None => groups.push((key, vec![w])),
        }
    }
    groups
}

/// `time_s,<label>...` CSV with shortest round-trip float formatting.
pub fn waveform_csv(waves: &[&Waveform<f64>]) -> anyhow::Result<String> {
    let Some(first) = waves.first() else {
        bail!("no waveforms to write");
    };
    if waves
        .iter()
        .any(|w| w.len() != first.len() || w.dt != first.dt)
    {
        bail!("waveforms in one CSV must share the time grid");
    }
    let mut out = String::from("time_s");
    for w in waves {
        out.push(',');
        out.push_str(&w.label);
    }
    out.push('\n');
    for i in 0..first.len() {
        write!(out, "{}", first.time_at(i)).expect("write to string");
        for w in waves {
            write!(out, ",{}", w.samples[i]).expect("write to string");
        }
        out.push('\n');
    }
    Ok(out)
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_else(|| "-".into())
}

fn fmt_num(x: f64) -> String {
    let a = x.abs();
    let s = if a == 0.0 {
        return "0".into();
    } else if a >= 100.0 {
        format!("{x:.1}")
    } else if a >= 1.0 {
        format!("{x:.3}")
    } else {
        format!("{x:.4}")
    };
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            let pad = w - c.chars().count();
            s.push_str(c);
            s.push_str(&" ".repeat(pad));
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    out.push_str(
        &widths
            .iter()
            .map(|w| "-".repeat(*w))
            .collect::<Vec<_>>()
            .join("  "),
    );
    out.push('\n');
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
    }
    out
}

fn render_stress(stress: &StressReport) -> String {
    let rows: Vec<Vec<String>> = stress
        .rows
        .iter()
        .map(|r| {
            vec![
                r.label.clone(),
                format!("{} {}", fmt_num(r.rating), r.unit),
                format!("{} {}", fmt_num(r.stress), r.unit),
                format!("{:+.1}%", r.margin_pct),
                opt(r.dielectric_multiple),
            ]
        })
        .collect();
    let mut out = table(
        &["Equipment", "Rating", "Stress", "Margin", "Dielectric"],
        &rows,
    );
    for r in &stress.rows {
        if let Some(n) = &r.note {
            writeln!(out, "  {}: {}", r.label, n).expect("write to string");
        }
    }
    out
}

/// Aligned, deterministic text rendering of a validation report.
pub fn report_render(report: &ValidationReport) -> String {
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.name.clone(),
                opt(r.analytic),
                fmt_num(r.simulated),
                opt(r.published),
                r.error_pct
                    .map(|e| format!("{e:+.1}%"))
                    .unwrap_or_else(|| "-".into()),
                r.criterion.clone(),
                if r.pass { "PASS" } else { "FAIL" }.to_string(),
            ]
        })
        .collect();
    let mut out = format!("{} validation\n\n", report.case);
    out.push_str(&table(
        &[
            "Parameter",
            "Analytic",
            "Simulated",
            "Reference",
            "Error",
            "Criterion",
            "Verdict",
        ],
        &rows,
    ));
    if let Some(stress) = &report.stress {
        out.push_str("\nEquipment stress\n\n");
        out.push_str(&render_stress(stress));
    }
    if !report.notes.is_empty() {
        out.push_str("\nNotes\n");
        for n in &report.notes {
            writeln!(out, "- {n}").expect("write to string");
        }
    }
    out
}

/// Write `<case>.ckt` and `<case>.manifest.json` for every reference case.
pub fn export(out: &Path) -> anyhow::Result<Vec<PathBuf>> {
    fs::create_dir_all(out)
        .with_context(|| format!("cannot create output directory {}", out.display()))?;
    let mut files = Vec::new();
    for id in CaseId::ALL {
        let case = build_case(id);
        let ckt = out.join(format!("{}.ckt", id.slug()));
        write_file(&ckt, &case_file(&case))?;
        let json = out.join(format!("{}.manifest.json", id.slug()));
        write_file(&json, &(manifest(&case).to_json() + "\n"))?;
        files.extend([ckt, json]);
    }
    Ok(files)
}
