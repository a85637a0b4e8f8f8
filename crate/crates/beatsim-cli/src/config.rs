//! Line-oriented scenario configuration.
//!
//! A document is a sequence of `[section]` headers and `key = value` lines;
//! `#` starts a comment, blank lines are ignored. Sections: `[device]`,
//! `[source.1]`, `[source.2]`, `[scan]`, `[output]`. Every unknown section
//! or key is an error carrying its line number — nothing is silently
//! ignored — and all errors in a document are reported together.

use beatsim::device::FeedbackParams;
use beatsim::scan::{AxisSpec, Engine, Preset, ScanAxis, ScanSetup};
use beatsim::wavepacket::WavepacketParams;
use num_complex::Complex64;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

/// One problem in a configuration document. `line` is 1-based; 0 marks a
/// document-level problem (e.g. a missing required section).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self { line, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}: {}", self.line, self.message)
        } else {
            f.write_str(&self.message)
        }
    }
}

/// Engine selection; `both` runs the closed form and the history sum and
/// reports their agreement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineChoice {
    ClosedForm,
    HistorySum,
    Both,
}

impl EngineChoice {
    pub fn engines(self) -> Vec<Engine> {
        match self {
            EngineChoice::ClosedForm => vec![Engine::ClosedForm],
            EngineChoice::HistorySum => vec![Engine::HistorySum],
            EngineChoice::Both => vec![Engine::ClosedForm, Engine::HistorySum],
        }
    }
}

impl fmt::Display for EngineChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EngineChoice::ClosedForm => "closed_form",
            EngineChoice::HistorySum => "history_sum",
            EngineChoice::Both => "both",
        })
    }
}

impl FromStr for EngineChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "closed_form" => Ok(EngineChoice::ClosedForm),
            "history_sum" => Ok(EngineChoice::HistorySum),
            "both" => Ok(EngineChoice::Both),
            other => Err(format!(
                "unknown engine '{other}'; valid engines: closed_form, history_sum, both"
            )),
        }
    }
}

/// A source as declared: which device input port it feeds plus its packet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceDecl {
    pub port: usize,
    pub packet: WavepacketParams,
}

/// A fully resolved scenario: every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub setup: ScanSetup,
    pub axes: Vec<AxisSpec>,
    pub engine: EngineChoice,
    pub source_1: SourceDecl,
    pub source_2: SourceDecl,
    pub csv: String,
    pub metadata: String,
    pub plot: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Device,
    Source1,
    Source2,
    Scan,
    Output,
}

impl Section {
    fn name(self) -> &'static str {
        match self {
            Section::Device => "device",
            Section::Source1 => "source.1",
            Section::Source2 => "source.2",
            Section::Scan => "scan",
            Section::Output => "output",
        }
    }
}

/// A raw `key = value` occurrence.
#[derive(Debug, Clone)]
struct RawEntry {
    line: usize,
    value: String,
}

#[derive(Debug, Default)]
struct RawSection {
    /// Single-valued keys (duplicates rejected).
    entries: HashMap<String, RawEntry>,
    /// The repeatable `axis` key, in document order.
    axes: Vec<RawEntry>,
}

const DEVICE_KEYS_FIG1: &[&str] =
    &["input_delay", "shifter_delay", "loop_delay", "mirror_reflectivity"];
const DEVICE_KEYS_PASSTHROUGH: &[&str] = &["delay_1", "delay_2"];
const SOURCE_KEYS: &[&str] = &["center_time", "width", "carrier_freq", "phase_offset", "port"];
const SCAN_KEYS: &[&str] = &["axis", "t0", "max_passes", "engine"];
const OUTPUT_KEYS: &[&str] = &["csv", "metadata", "plot"];

fn known_keys(section: Section) -> &'static [&'static str] {
    match section {
        // preset-specific keys are validated against the preset later
        Section::Device => &[
            "preset",
            "input_delay",
            "shifter_delay",
            "loop_delay",
            "mirror_reflectivity",
            "delay_1",
            "delay_2",
        ],
        Section::Source1 | Section::Source2 => SOURCE_KEYS,
        Section::Scan => SCAN_KEYS,
        Section::Output => OUTPUT_KEYS,
    }
}

fn parse_f64(key: &str, raw: &RawEntry, errors: &mut Vec<ConfigError>) -> Option<f64> {
    match raw.value.parse::<f64>() {
        Ok(v) if v.is_finite() => Some(v),
        _ => {
            errors.push(ConfigError::at(
                raw.line,
                format!("{key}: expected a finite number, got '{}'", raw.value),
            ));
            None
        }
    }
}

/// Parse and fully validate a configuration document. All problems are
/// collected and reported together, each anchored to its line.
pub fn parse_config(text: &str) -> Result<Scenario, Vec<ConfigError>> {
    let mut errors = Vec::new();
    let mut sections: HashMap<&'static str, RawSection> = HashMap::new();
    let mut current: Option<Section> = None;
    let mut skipping_unknown_section = false;

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(p) => &raw_line[..p],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(inner) = line.strip_prefix('[') {
            let Some(name) = inner.strip_suffix(']') else {
                errors.push(ConfigError::at(line_no, format!("malformed section header '{line}'")));
                current = None;
                skipping_unknown_section = true;
                continue;
            };
            let section = match name {
                "device" => Some(Section::Device),
                "source.1" => Some(Section::Source1),
                "source.2" => Some(Section::Source2),
                "scan" => Some(Section::Scan),
                "output" => Some(Section::Output),
                other => {
                    errors.push(ConfigError::at(
                        line_no,
                        format!(
                            "unknown section '{other}'; valid sections: device, source.1, source.2, scan, output"
                        ),
                    ));
                    None
                }
            };
            skipping_unknown_section = section.is_none();
            current = section;
            if let Some(s) = section {
                sections.entry(s.name()).or_default();
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errors.push(ConfigError::at(
                line_no,
                format!("expected 'key = value' or '[section]', got '{line}'"),
            ));
            continue;
        };
        let key = key.trim();
        let value = value.trim();
        let Some(section) = current else {
            if !skipping_unknown_section {
                errors.push(ConfigError::at(
                    line_no,
                    format!("key '{key}' appears before any section header"),
                ));
            }
            continue;
        };
        if !known_keys(section).contains(&key) {
            errors.push(ConfigError::at(
                line_no,
                format!(
                    "unknown key '{key}' in [{}]; valid keys: {}",
                    section.name(),
                    known_keys(section).join(", ")
                ),
            ));
            continue;
        }
        let raw = RawEntry { line: line_no, value: value.to_string() };
        let bucket = sections.entry(section.name()).or_default();
        if section == Section::Scan && key == "axis" {
            bucket.axes.push(raw);
            continue;
        }
        if let Some(prev) = bucket.entries.insert(key.to_string(), raw) {
            errors.push(ConfigError::at(
                line_no,
                format!(
                    "duplicate key '{key}' in [{}]; first set on line {}",
                    section.name(),
                    prev.line
                ),
            ));
        }
    }

    let device = assemble_device(sections.get("device"), &mut errors);
    let source_1 = assemble_source(sections.get("source.1"), 1, &mut errors);
    let source_2 = assemble_source(sections.get("source.2"), 2, &mut errors);
    let (axes, t0, max_passes, engine) = assemble_scan(sections.get("scan"), &mut errors);
    let (csv, metadata, plot) = assemble_output(sections.get("output"), &mut errors);

    if let (Some(a), Some(b)) = (&source_1, &source_2) {
        if a.port == b.port {
            errors.push(ConfigError::at(
                0,
                format!("source.1 and source.2 both claim port {}", a.port),
            ));
        }
    }

    if !errors.is_empty() {
        errors.sort_by_key(|e| e.line);
        return Err(errors);
    }
    let (device, source_1, source_2) = (device.unwrap(), source_1.unwrap(), source_2.unwrap());
    // the packet feeding device input 1 is whichever source declared port 1
    let (p1, p2) = if source_1.port == 1 {
        (source_1.packet, source_2.packet)
    } else {
        (source_2.packet, source_1.packet)
    };
    Ok(Scenario {
        setup: ScanSetup {
            device,
            source_1: p1,
            source_2: p2,
            base_t0: t0,
            max_passes,
        },
        axes,
        engine,
        source_1,
        source_2,
        csv,
        metadata,
        plot,
    })
}

fn assemble_device(raw: Option<&RawSection>, errors: &mut Vec<ConfigError>) -> Option<Preset> {
    let Some(raw) = raw else {
        errors.push(ConfigError::at(0, "missing [device] section with a preset"));
        return None;
    };
    let Some(preset_entry) = raw.entries.get("preset") else {
        errors.push(ConfigError::at(0, "[device] needs a preset (fig1, beamsplitter, passthrough)"));
        return None;
    };
    let preset_name = preset_entry.value.as_str();
    let allowed: &[&str] = match preset_name {
        "fig1" => DEVICE_KEYS_FIG1,
        "beamsplitter" => &[],
        "passthrough" => DEVICE_KEYS_PASSTHROUGH,
        other => {
            errors.push(ConfigError::at(
                preset_entry.line,
                format!("unknown preset '{other}'; valid presets: fig1, beamsplitter, passthrough"),
            ));
            return None;
        }
    };
    for (key, entry) in &raw.entries {
        if key != "preset" && !allowed.contains(&key.as_str()) {
            errors.push(ConfigError::at(
                entry.line,
                format!("key '{key}' does not apply to preset '{preset_name}'"),
            ));
        }
    }
    let get = |key: &str, default: f64, errors: &mut Vec<ConfigError>| -> Option<f64> {
        match raw.entries.get(key) {
            Some(entry) => parse_f64(key, entry, errors),
            None => Some(default),
        }
    };
    match preset_name {
        "fig1" => {
            let input_delay = get("input_delay", 0.0, errors)?;
            let shifter_delay = get("shifter_delay", 0.0, errors)?;
            let loop_delay = get("loop_delay", 0.0, errors)?;
            let reflectivity = get("mirror_reflectivity", -1.0, errors)?;
            for (key, v) in [
                ("input_delay", input_delay),
                ("shifter_delay", shifter_delay),
                ("loop_delay", loop_delay),
            ] {
                if v < 0.0 {
                    let line = raw.entries.get(key).map_or(0, |e| e.line);
                    errors.push(ConfigError::at(line, format!("{key} must be non-negative, got {v}")));
                    return None;
                }
            }
            if reflectivity.abs() > 1.0 {
                let line = raw.entries.get("mirror_reflectivity").map_or(0, |e| e.line);
                errors.push(ConfigError::at(
                    line,
                    format!("mirror_reflectivity must satisfy |r| ≤ 1, got {reflectivity}"),
                ));
                return None;
            }
            let fp = FeedbackParams::new(input_delay, shifter_delay, loop_delay)
                .and_then(|p| p.with_reflectivity(Complex64::new(reflectivity, 0.0)));
            match fp {
                Ok(fp) => Some(Preset::Feedback(fp)),
                Err(e) => {
                    errors.push(ConfigError::at(0, e.to_string()));
                    None
                }
            }
        }
        "beamsplitter" => Some(Preset::BeamSplitter),
        "passthrough" => {
            let delay_1 = get("delay_1", 0.0, errors)?;
            let delay_2 = get("delay_2", 0.0, errors)?;
            for (key, v) in [("delay_1", delay_1), ("delay_2", delay_2)] {
                if v < 0.0 {
                    let line = raw.entries.get(key).map_or(0, |e| e.line);
                    errors.push(ConfigError::at(line, format!("{key} must be non-negative, got {v}")));
                    return None;
                }
            }
            Some(Preset::PassThrough { delay_1, delay_2 })
        }
        _ => unreachable!(),
    }
}

fn assemble_source(
    raw: Option<&RawSection>,
    default_port: usize,
    errors: &mut Vec<ConfigError>,
) -> Option<SourceDecl> {
    let empty = RawSection::default();
    let raw = raw.unwrap_or(&empty);
    let get = |key: &str, default: f64, errors: &mut Vec<ConfigError>| -> Option<f64> {
        match raw.entries.get(key) {
            Some(entry) => parse_f64(key, entry, errors),
            None => Some(default),
        }
    };
    let center_time = get("center_time", 0.0, errors)?;
    let width = get("width", 1.0, errors)?;
    let carrier_freq = get("carrier_freq", 0.0, errors)?;
    let phase_offset = get("phase_offset", 0.0, errors)?;
    let port = match raw.entries.get("port") {
        Some(entry) => match entry.value.parse::<usize>() {
            Ok(p @ (1 | 2)) => p,
            _ => {
                errors.push(ConfigError::at(
                    entry.line,
                    format!("port must be 1 or 2, got '{}'", entry.value),
                ));
                return None;
            }
        },
        None => default_port,
    };
    if width <= 0.0 {
        let line = raw.entries.get("width").map_or(0, |e| e.line);
        errors.push(ConfigError::at(line, format!("width must be positive, got {width}")));
        return None;
    }
    match WavepacketParams::new(center_time, width, carrier_freq, phase_offset) {
        Ok(packet) => Some(SourceDecl { port, packet }),
        Err(e) => {
            errors.push(ConfigError::at(0, e.to_string()));
            None
        }
    }
}

fn assemble_scan(
    raw: Option<&RawSection>,
    errors: &mut Vec<ConfigError>,
) -> (Vec<AxisSpec>, f64, u32, EngineChoice) {
    let empty = RawSection::default();
    let raw = raw.unwrap_or(&empty);
    let mut axes = Vec::new();
    for entry in &raw.axes {
        let tokens: Vec<&str> = entry.value.split_whitespace().collect();
        if tokens.len() != 4 {
            errors.push(ConfigError::at(
                entry.line,
                format!(
                    "axis: expected '<name> <start> <stop> <steps>', got '{}'",
                    entry.value
                ),
            ));
            continue;
        }
        let axis = match tokens[0].parse::<ScanAxis>() {
            Ok(a) => a,
            Err(e) => {
                errors.push(ConfigError::at(entry.line, e.to_string()));
                continue;
            }
        };
        let bounds: Option<(f64, f64)> = match (tokens[1].parse(), tokens[2].parse()) {
            (Ok(a), Ok(b)) => Some((a, b)),
            _ => {
                errors.push(ConfigError::at(
                    entry.line,
                    format!("axis {axis}: bounds must be numbers, got '{}' '{}'", tokens[1], tokens[2]),
                ));
                None
            }
        };
        let steps: Option<usize> = match tokens[3].parse() {
            Ok(s) => Some(s),
            Err(_) => {
                errors.push(ConfigError::at(
                    entry.line,
                    format!("axis {axis}: steps must be a non-negative integer, got '{}'", tokens[3]),
                ));
                None
            }
        };
        if let (Some((start, stop)), Some(steps)) = (bounds, steps) {
            match AxisSpec::new(axis, start, stop, steps) {
                Ok(spec) => axes.push(spec),
                Err(e) => errors.push(ConfigError::at(entry.line, e.to_string())),
            }
        }
    }
    if raw.axes.is_empty() {
        errors.push(ConfigError::at(0, "[scan] needs at least one axis"));
    } else if axes.len() > 2 {
        errors.push(ConfigError::at(
            raw.axes[2].line,
            format!("at most two axes are supported, got {}", raw.axes.len()),
        ));
    }
    let t0 = raw
        .entries
        .get("t0")
        .and_then(|e| parse_f64("t0", e, errors))
        .unwrap_or(0.0);
    let max_passes = match raw.entries.get("max_passes") {
        Some(entry) => match entry.value.parse::<u32>() {
            Ok(v) => v,
            Err(_) => {
                errors.push(ConfigError::at(
                    entry.line,
                    format!("max_passes must be a non-negative integer, got '{}'", entry.value),
                ));
                2
            }
        },
        None => 2,
    };
    let engine = match raw.entries.get("engine") {
        Some(entry) => match entry.value.parse::<EngineChoice>() {
            Ok(e) => e,
            Err(msg) => {
                errors.push(ConfigError::at(entry.line, msg));
                EngineChoice::Both
            }
        },
        None => EngineChoice::Both,
    };
    (axes, t0, max_passes, engine)
}

fn assemble_output(
    raw: Option<&RawSection>,
    errors: &mut Vec<ConfigError>,
) -> (String, String, Option<String>) {
    let empty = RawSection::default();
    let raw = raw.unwrap_or(&empty);
    let csv = raw
        .entries
        .get("csv")
        .map(|e| e.value.clone())
        .unwrap_or_else(|| "scan.csv".to_string());
    if csv.is_empty() {
        errors.push(ConfigError::at(
            raw.entries.get("csv").map_or(0, |e| e.line),
            "csv path must not be empty",
        ));
    }
    let metadata = raw
        .entries
        .get("metadata")
        .map(|e| e.value.clone())
        .unwrap_or_else(|| default_metadata_path(&csv));
    let plot = raw.entries.get("plot").map(|e| e.value.clone());
    (csv, metadata, plot)
}

/// The default metadata path: the CSV path with its extension replaced by
/// `.meta`.
pub fn default_metadata_path(csv: &str) -> String {
    match csv.rsplit_once('.') {
        Some((stem, _ext)) if !stem.is_empty() => format!("{stem}.meta"),
        _ => format!("{csv}.meta"),
    }
}

/// Human-readable catalog of the bundled presets for the `presets`
/// subcommand.
pub fn preset_catalog() -> String {
    let mut s = String::new();
    s.push_str("fig1          recursive feedback interferometer\n");
    s.push_str("              keys: input_delay (τ ≥ 0, default 0), shifter_delay (δτ ≥ 0, default 0),\n");
    s.push_str("                    loop_delay (λ ≥ 0, default 0), mirror_reflectivity (|r| ≤ 1, default -1)\n");
    s.push_str("              axes: tau, dtau, t0, detuning, dt_sep\n");
    s.push_str("beamsplitter  one balanced splitter, two detectors (Hong-Ou-Mandel baseline)\n");
    s.push_str("              keys: none\n");
    s.push_str("              axes: tau, detuning\n");
    s.push_str("passthrough   two uncoupled delay lines (product-state reference)\n");
    s.push_str("              keys: delay_1 (≥ 0, default 0), delay_2 (≥ 0, default 0)\n");
    s.push_str("              axes: none (validation and entanglement baselines only)\n");
    s
}
