//! CSV serialization of scan results.
//!
//! Layout: a header row naming each axis followed by `probability`, then one
//! data row per grid point in row-major axis order (last axis fastest).
//! Every float is written with 17 significant digits so that parsing the
//! file reproduces the exact bit pattern; lines end with LF.

use beatsim::scan::{decode_flat, ScanResult};
use std::fmt::Write as _;

/// Format one float with 17 significant digits (16 after the point in
/// scientific notation), enough to round-trip any f64 exactly.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Render a scan result as a CSV document.
pub fn render_csv(result: &ScanResult) -> String {
    let mut out = String::new();
    let names: Vec<String> = result.axes.iter().map(|a| a.axis.to_string()).collect();
    out.push_str(&names.join(","));
    if !names.is_empty() {
        out.push(',');
    }
    out.push_str("probability\n");
    for (flat, &p) in result.values.iter().enumerate() {
        let coords = decode_flat(&result.axes, flat).expect("value index within grid");
        for (axis, &i) in result.axes.iter().zip(&coords) {
            let _ = write!(out, "{},", format_value(axis.value(i)));
        }
        let _ = writeln!(out, "{}", format_value(p));
    }
    out
}

/// Parse a CSV document produced by [`render_csv`] back into its header and
/// numeric rows. Used to check the round-trip invariant.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), String> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or("empty document")?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(str::parse).collect();
        let row = row.map_err(|e| format!("row {}: {e}", i + 1))?;
        if row.len() != header.len() {
            return Err(format!(
                "row {}: {} fields, header has {}",
                i + 1,
                row.len(),
                header.len()
            ));
        }
        rows.push(row);
    }
    Ok((header, rows))
}
