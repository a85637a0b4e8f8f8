//! Scenario execution: evaluate the grid (optionally in parallel), write
//! the CSV, metadata, and plot files, and report engine agreement.
//!
//! Grid points are pure functions of the scenario, evaluated independently
//! and collected in index order, so the written files are byte-identical
//! across runs and across thread counts.

use crate::config::{EngineChoice, Scenario};
use crate::plot::render_svg;
use crate::table::{format_value, render_csv};
use beatsim::scan::{scan_point, Engine, Preset, ScanResult};
use beatsim::SimError;
use num_complex::Complex64;
use rayon::prelude::*;
use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Command-line overrides applied on top of a parsed scenario.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Replaces the scenario's engine selection when set.
    pub engine: Option<EngineChoice>,
    /// Directory that relative output paths are resolved against.
    pub out_dir: Option<PathBuf>,
    /// Worker threads for grid evaluation; 0 picks the machine default.
    pub threads: usize,
}

/// Why a run failed, split by exit-code class: computation versus file I/O.
#[derive(Debug)]
pub enum RunFailure {
    Compute(SimError),
    Io { path: PathBuf, source: std::io::Error },
}

impl fmt::Display for RunFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunFailure::Compute(e) => write!(f, "{e}"),
            RunFailure::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl From<SimError> for RunFailure {
    fn from(e: SimError) -> Self {
        RunFailure::Compute(e)
    }
}

/// Agreement statistics between the two engines over one grid: the mean and
/// coefficient of variation of the point-wise history-sum / closed-form
/// ratio, over points where both engines report more than 1e-20.
#[derive(Debug, Clone, Copy)]
pub struct Agreement {
    pub points_compared: usize,
    pub ratio_mean: f64,
    pub ratio_cv: f64,
}

/// One engine's outputs: where its files went and the values themselves.
/// Names are as configured (relative, for the metadata echo); paths are the
/// resolved locations actually written.
#[derive(Debug)]
pub struct EngineRun {
    pub engine: Engine,
    pub csv_name: String,
    pub csv_path: PathBuf,
    pub plot_name: Option<String>,
    pub plot_path: Option<PathBuf>,
    pub result: ScanResult,
}

/// Everything a completed run produced.
#[derive(Debug)]
pub struct RunReport {
    pub runs: Vec<EngineRun>,
    pub metadata_path: PathBuf,
    pub agreement: Option<Agreement>,
}

/// Evaluate the grid for one engine, in parallel over grid points. Negative
/// values beyond -1e-15 are computation errors; tiny negative round-off is
/// clamped to zero.
fn evaluate(scenario: &Scenario, engine: Engine, threads: usize) -> Result<ScanResult, SimError> {
    let setup = &scenario.setup;
    let axes = &scenario.axes;
    let total: usize = axes.iter().map(|a| a.steps).product();
    let compute = || -> Result<Vec<f64>, SimError> {
        (0..total)
            .into_par_iter()
            .map(|flat| scan_point(setup, axes, engine, flat))
            .collect()
    };
    let raw = if threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| SimError::InvalidParameter(format!("cannot start {threads} worker threads: {e}")))?;
        pool.install(compute)?
    } else {
        compute()?
    };
    let mut values = Vec::with_capacity(total);
    for (flat, v) in raw.into_iter().enumerate() {
        if v < -1e-15 {
            return Err(SimError::InvalidParameter(format!(
                "scan point {flat} produced probability {v} below -1e-15"
            )));
        }
        values.push(v.max(0.0));
    }
    Ok(ScanResult { axes: axes.clone(), values, engine })
}

/// Tag a file name with the engine before its extension:
/// `scan.csv` → `scan.closed_form.csv`.
fn tagged(path: &str, engine: Engine) -> String {
    match path.rsplit_once('.') {
        Some((stem, ext)) if !stem.is_empty() => format!("{stem}.{engine}.{ext}"),
        _ => format!("{path}.{engine}"),
    }
}

/// Resolve a configured output path against the `--out-dir` override.
fn resolve(out_dir: Option<&Path>, name: &str) -> PathBuf {
    let p = PathBuf::from(name);
    match out_dir {
        Some(d) if p.is_relative() => d.join(p),
        _ => p,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), RunFailure> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|source| RunFailure::Io { path: parent.to_path_buf(), source })?;
        }
    }
    std::fs::write(path, contents).map_err(|source| RunFailure::Io { path: path.to_path_buf(), source })
}

fn agreement_between(closed: &ScanResult, history: &ScanResult) -> Agreement {
    let mut ratios = Vec::new();
    for (&c, &h) in closed.values.iter().zip(&history.values) {
        if c > 1e-20 && h > 1e-20 {
            ratios.push(h / c);
        }
    }
    if ratios.is_empty() {
        return Agreement { points_compared: 0, ratio_mean: f64::NAN, ratio_cv: f64::NAN };
    }
    let n = ratios.len() as f64;
    let mean = ratios.iter().sum::<f64>() / n;
    let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    Agreement { points_compared: ratios.len(), ratio_mean: mean, ratio_cv: var.sqrt() / mean }
}

fn echo_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else {
        format!("{}{}{}i", z.re, if z.im < 0.0 { "" } else { "+" }, z.im)
    }
}

/// Render the metadata sidecar: the fully resolved configuration (defaults
/// included), the files written, and the engine-agreement diagnostics. Uses
/// the configuration syntax itself, so a sidecar documents a reproducible
/// scenario. Contains no timestamps or absolute paths.
fn render_metadata(
    scenario: &Scenario,
    effective: EngineChoice,
    runs: &[EngineRun],
    agreement: Option<&Agreement>,
) -> String {
    let mut out = String::new();
    out.push_str("# resolved scenario (defaults included)\n");
    out.push_str("[device]\n");
    match scenario.setup.device {
        Preset::Feedback(fp) => {
            let _ = writeln!(out, "preset = fig1");
            let _ = writeln!(out, "input_delay = {}", fp.input_delay);
            let _ = writeln!(out, "shifter_delay = {}", fp.shifter_delay);
            let _ = writeln!(out, "loop_delay = {}", fp.loop_delay);
            let _ = writeln!(out, "mirror_reflectivity = {}", echo_complex(fp.mirror_reflectivity));
        }
        Preset::BeamSplitter => {
            let _ = writeln!(out, "preset = beamsplitter");
        }
        Preset::PassThrough { delay_1, delay_2 } => {
            let _ = writeln!(out, "preset = passthrough");
            let _ = writeln!(out, "delay_1 = {delay_1}");
            let _ = writeln!(out, "delay_2 = {delay_2}");
        }
    }
    for (name, decl) in [("source.1", &scenario.source_1), ("source.2", &scenario.source_2)] {
        let _ = writeln!(out, "\n[{name}]");
        let _ = writeln!(out, "port = {}", decl.port);
        let _ = writeln!(out, "center_time = {}", decl.packet.center_time);
        let _ = writeln!(out, "width = {}", decl.packet.width);
        let _ = writeln!(out, "carrier_freq = {}", decl.packet.carrier_freq);
        let _ = writeln!(out, "phase_offset = {}", decl.packet.phase_offset);
    }
    out.push_str("\n[scan]\n");
    for a in &scenario.axes {
        let _ = writeln!(out, "axis = {} {} {} {}", a.axis, a.start, a.stop, a.steps);
    }
    let _ = writeln!(out, "t0 = {}", scenario.setup.base_t0);
    let _ = writeln!(out, "max_passes = {}", scenario.setup.max_passes);
    let _ = writeln!(out, "engine = {effective}");
    out.push_str("\n[output]\n");
    let _ = writeln!(out, "csv = {}", scenario.csv);
    let _ = writeln!(out, "metadata = {}", scenario.metadata);
    if let Some(plot) = &scenario.plot {
        let _ = writeln!(out, "plot = {plot}");
    }
    out.push_str("\n# files written by this run\n[files]\n");
    for run in runs {
        let _ = writeln!(out, "csv_{} = {}", run.engine, run.csv_name);
        if let Some(plot_name) = &run.plot_name {
            let _ = writeln!(out, "plot_{} = {plot_name}", run.engine);
        }
    }
    let _ = writeln!(out, "grid_points = {}", runs.first().map_or(0, |r| r.result.values.len()));
    if let Some(a) = agreement {
        out.push_str("\n# point-wise history_sum / closed_form ratio where both exceed 1e-20\n");
        out.push_str("[engine_agreement]\n");
        let _ = writeln!(out, "points_compared = {}", a.points_compared);
        let _ = writeln!(out, "ratio_mean = {}", format_value(a.ratio_mean));
        let _ = writeln!(out, "ratio_cv = {:.3e}", a.ratio_cv);
    }
    out
}

/// Execute a scenario end to end. Writes one CSV per selected engine (names
/// tagged with the engine when both run), one metadata sidecar, and one
/// plot per engine when configured.
pub fn run_scenario(scenario: &Scenario, opts: &RunOptions) -> Result<RunReport, RunFailure> {
    let effective = opts.engine.unwrap_or(scenario.engine);
    let engines = effective.engines();
    let out_dir = opts.out_dir.as_deref();

    let mut runs = Vec::new();
    for engine in &engines {
        let result = evaluate(scenario, *engine, opts.threads)?;
        let csv_name = if engines.len() > 1 { tagged(&scenario.csv, *engine) } else { scenario.csv.clone() };
        let csv_path = resolve(out_dir, &csv_name);
        write_file(&csv_path, &render_csv(&result))?;
        let (plot_name, plot_path) = match &scenario.plot {
            Some(plot) => {
                let name = if engines.len() > 1 { tagged(plot, *engine) } else { plot.clone() };
                let path = resolve(out_dir, &name);
                write_file(&path, &render_svg(&result)?)?;
                (Some(name), Some(path))
            }
            None => (None, None),
        };
        runs.push(EngineRun { engine: *engine, csv_name, csv_path, plot_name, plot_path, result });
    }

    let agreement = match &runs[..] {
        [closed, history] => Some(agreement_between(&closed.result, &history.result)),
        _ => None,
    };

    let metadata = render_metadata(scenario, effective, &runs, agreement.as_ref());
    let metadata_path = resolve(out_dir, &scenario.metadata);
    write_file(&metadata_path, &metadata)?;

    Ok(RunReport { runs, metadata_path, agreement })
}
