//! Deterministic SVG rendering of scan results.
//!
//! One axis produces a line plot, two axes a heat map. More than two axes is
//! an error, as is an empty grid — in both cases no file content is
//! produced. The output contains no timestamps or random identifiers, so
//! the same result always renders to the same bytes.

use beatsim::scan::ScanResult;
use beatsim::{Result, SimError};
use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 50.0;

/// Render a scan result as an SVG document.
pub fn render_svg(result: &ScanResult) -> Result<String> {
    if result.values.is_empty() {
        return Err(SimError::InvalidParameter(
            "nothing to plot: the scan grid is empty".into(),
        ));
    }
    match result.axes.len() {
        1 => Ok(render_line(result)),
        2 => Ok(render_heatmap(result)),
        n => Err(SimError::InvalidParameter(format!(
            "plotting supports 1 axis (line) or 2 axes (heat map), got {n}"
        ))),
    }
}

fn coord(v: f64) -> String {
    // two decimals keeps the file small and the mapping deterministic
    format!("{v:.2}")
}

fn header(out: &mut String) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(out, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
}

fn axis_label_x(out: &mut String, label: &str) {
    let x = MARGIN_LEFT + (WIDTH - MARGIN_LEFT - MARGIN_RIGHT) / 2.0;
    let y = HEIGHT - 12.0;
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{label}</text>",
        coord(x),
        coord(y)
    );
}

fn axis_label_y(out: &mut String, label: &str) {
    let x = 16.0;
    let y = MARGIN_TOP + (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM) / 2.0;
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 {} {})\">{label}</text>",
        coord(x),
        coord(y),
        coord(x),
        coord(y)
    );
}

fn tick_text(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn render_line(result: &ScanResult) -> String {
    let axis = &result.axes[0];
    let xs = axis.values();
    let ys = &result.values;
    let (x_lo, x_hi) = (xs[0].min(*xs.last().unwrap()), xs[0].max(*xs.last().unwrap()));
    let y_max = ys.iter().cloned().fold(0.0_f64, f64::max).max(f64::MIN_POSITIVE);
    let x_span = if x_hi > x_lo { x_hi - x_lo } else { 1.0 };
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let to_x = |v: f64| MARGIN_LEFT + (v - x_lo) / x_span * plot_w;
    // y runs from 0 at the baseline to y_max at the top margin
    let to_y = |p: f64| MARGIN_TOP + (1.0 - p / y_max) * plot_h;

    let mut out = String::new();
    header(&mut out);
    // frame
    let _ = writeln!(
        out,
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>",
        coord(MARGIN_LEFT),
        coord(MARGIN_TOP),
        coord(plot_w),
        coord(plot_h)
    );
    // x ticks at both ends and the midpoint
    for v in [x_lo, (x_lo + x_hi) / 2.0, x_hi] {
        let x = to_x(v);
        let _ = writeln!(
            out,
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#444\"/>",
            coord(x),
            coord(MARGIN_TOP + plot_h),
            coord(MARGIN_TOP + plot_h + 5.0)
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            coord(x),
            coord(MARGIN_TOP + plot_h + 18.0),
            tick_text(v)
        );
    }
    // y ticks at 0 and the maximum
    for p in [0.0, y_max] {
        let y = to_y(p);
        let _ = writeln!(
            out,
            "<line x1=\"{0}\" y1=\"{2}\" x2=\"{1}\" y2=\"{2}\" stroke=\"#444\"/>",
            coord(MARGIN_LEFT - 5.0),
            coord(MARGIN_LEFT),
            coord(y)
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
            coord(MARGIN_LEFT - 8.0),
            coord(y + 4.0),
            tick_text(p)
        );
    }
    if xs.len() == 1 {
        let _ = writeln!(
            out,
            "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"#1f77b4\"/>",
            coord(to_x(xs[0])),
            coord(to_y(ys[0]))
        );
    } else {
        let points: Vec<String> =
            xs.iter().zip(ys).map(|(&x, &p)| format!("{},{}", coord(to_x(x)), coord(to_y(p)))).collect();
        let _ = writeln!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>",
            points.join(" ")
        );
    }
    axis_label_x(&mut out, &axis.axis.to_string());
    axis_label_y(&mut out, "probability");
    out.push_str("</svg>\n");
    out
}

/// Map a unit value to a white → dark blue fill.
fn heat_color(u: f64) -> String {
    let u = u.clamp(0.0, 1.0);
    let r = (255.0 - 224.0 * u).round() as u8;
    let g = (255.0 - 136.0 * u).round() as u8;
    let b = (255.0 - 75.0 * u).round() as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

fn render_heatmap(result: &ScanResult) -> String {
    let (ax, ay) = (&result.axes[0], &result.axes[1]);
    let (n_rows, n_cols) = (ax.steps, ay.steps);
    let v_max = result.values.iter().cloned().fold(0.0_f64, f64::max).max(f64::MIN_POSITIVE);
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let cell_w = plot_w / n_cols as f64;
    let cell_h = plot_h / n_rows as f64;

    let mut out = String::new();
    header(&mut out);
    for i in 0..n_rows {
        for j in 0..n_cols {
            let v = result.values[i * n_cols + j];
            // first axis runs upward: row 0 sits at the bottom
            let x = MARGIN_LEFT + j as f64 * cell_w;
            let y = MARGIN_TOP + (n_rows - 1 - i) as f64 * cell_h;
            let _ = writeln!(
                out,
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>",
                coord(x),
                coord(y),
                coord(cell_w + 0.5),
                coord(cell_h + 0.5),
                heat_color(v / v_max)
            );
        }
    }
    let _ = writeln!(
        out,
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>",
        coord(MARGIN_LEFT),
        coord(MARGIN_TOP),
        coord(plot_w),
        coord(plot_h)
    );
    // corner tick labels for both axes
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
        coord(MARGIN_LEFT),
        coord(MARGIN_TOP + plot_h + 18.0),
        tick_text(ay.start)
    );
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
        coord(MARGIN_LEFT + plot_w),
        coord(MARGIN_TOP + plot_h + 18.0),
        tick_text(ay.stop)
    );
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
        coord(MARGIN_LEFT - 8.0),
        coord(MARGIN_TOP + plot_h),
        tick_text(ax.start)
    );
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
        coord(MARGIN_LEFT - 8.0),
        coord(MARGIN_TOP + 10.0),
        tick_text(ax.stop)
    );
    axis_label_x(&mut out, &ay.axis.to_string());
    axis_label_y(&mut out, &ax.axis.to_string());
    out.push_str("</svg>\n");
    out
}
