//! Hand-built SVG line plots. No plotting dependency: the output is a plain
//! polyline chart with min-max autoscaling and a fixed ten-division grid,
//! and it contains nothing run-dependent beyond the data itself, so the
//! same series always produce byte-identical files.

use crate::CliError;
use std::fmt::Write as _;

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

const MARGIN_LEFT: f64 = 62.0;
const MARGIN_RIGHT: f64 = 14.0;
const MARGIN_TOP: f64 = 14.0;
const MARGIN_BOTTOM: f64 = 42.0;
const TICKS: usize = 10;

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if (0.01..10000.0).contains(&a) {
        let s = format!("{v:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{v:.2e}")
    }
}

/// Renders the series into a standalone SVG document.
pub fn render(
    series: &[Series],
    x_label: &str,
    y_label: &str,
    width: u32,
    height: u32,
) -> Result<String, CliError> {
    if series.is_empty() || series.iter().all(|s| s.points.is_empty()) {
        return Err(CliError::Validation(vec![
            "/output/plot: nothing to plot (no series)".into(),
        ]));
    }
    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in series {
        for &(x, y) in &s.points {
            if !(x.is_finite() && y.is_finite()) {
                return Err(CliError::Validation(vec![
                    "/output/plot: non-finite plot data".into(),
                ]));
            }
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
    }
    // Degenerate ranges get a unit pad so every point stays drawable.
    if x_max - x_min < 1e-12 {
        x_min -= 0.5;
        x_max += 0.5;
    }
    if y_max - y_min < 1e-12 {
        y_min -= 0.5;
        y_max += 0.5;
    }
    let x_pad = 0.05 * (x_max - x_min);
    let y_pad = 0.05 * (y_max - y_min);
    x_min -= x_pad;
    x_max += x_pad;
    y_min -= y_pad;
    y_max += y_pad;

    let w = width as f64;
    let h = height as f64;
    let plot_w = w - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = h - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| MARGIN_TOP + (y_max - y) / (y_max - y_min) * plot_h;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">"
    );
    let _ = writeln!(out, "<rect width=\"{width}\" height=\"{height}\" fill=\"#ffffff\"/>");

    // Grid: a fixed number of divisions in each direction with tick labels.
    for i in 0..=TICKS {
        let fx = x_min + (x_max - x_min) * i as f64 / TICKS as f64;
        let px = sx(fx);
        let _ = writeln!(
            out,
            "<line x1=\"{px:.3}\" y1=\"{:.3}\" x2=\"{px:.3}\" y2=\"{:.3}\" stroke=\"#dddddd\" stroke-width=\"1\"/>",
            MARGIN_TOP,
            MARGIN_TOP + plot_h
        );
        let _ = writeln!(
            out,
            "<text x=\"{px:.3}\" y=\"{:.3}\" font-size=\"10\" text-anchor=\"middle\" fill=\"#444444\">{}</text>",
            MARGIN_TOP + plot_h + 14.0,
            fmt_tick(fx)
        );
        let fy = y_min + (y_max - y_min) * i as f64 / TICKS as f64;
        let py = sy(fy);
        let _ = writeln!(
            out,
            "<line x1=\"{:.3}\" y1=\"{py:.3}\" x2=\"{:.3}\" y2=\"{py:.3}\" stroke=\"#dddddd\" stroke-width=\"1\"/>",
            MARGIN_LEFT,
            MARGIN_LEFT + plot_w
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.3}\" y=\"{:.3}\" font-size=\"10\" text-anchor=\"end\" fill=\"#444444\">{}</text>",
            MARGIN_LEFT - 6.0,
            py + 3.0,
            fmt_tick(fy)
        );
    }

    // Axes frame.
    let _ = writeln!(
        out,
        "<rect x=\"{:.3}\" y=\"{:.3}\" width=\"{plot_w:.3}\" height=\"{plot_h:.3}\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>",
        MARGIN_LEFT, MARGIN_TOP
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.3}\" y=\"{:.3}\" font-size=\"11\" text-anchor=\"middle\" fill=\"#000000\">{x_label}</text>",
        MARGIN_LEFT + plot_w / 2.0,
        h - 8.0
    );
    let _ = writeln!(
        out,
        "<text x=\"12\" y=\"{:.3}\" font-size=\"11\" text-anchor=\"middle\" fill=\"#000000\" transform=\"rotate(-90 12 {:.3})\">{y_label}</text>",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    );

    for (i, s) in series.iter().enumerate() {
        if s.points.is_empty() {
            continue;
        }
        let color = PALETTE[i % PALETTE.len()];
        let mut coords = String::new();
        for &(x, y) in &s.points {
            let _ = write!(coords, "{:.3},{:.3} ", sx(x), sy(y));
        }
        let _ = writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"><title>{}</title></polyline>",
            coords.trim_end(),
            s.label
        );
    }
    let _ = writeln!(out, "</svg>");
    Ok(out)
}
