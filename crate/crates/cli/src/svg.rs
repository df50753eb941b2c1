//! Static SVG rendering: threshold sweeps of a colouring and trajectory plots.

use std::fmt::Write as _;
use std::path::Path;

use coalesce::interval::{ColoredInterval, Colour};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SvgError {
    #[error("thresholds must be finite, non-negative and increasing")]
    Thresholds,
    #[error("nothing to plot")]
    Empty,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

const RED: &str = "#c0392b";
const BLUE: &str = "#2e6fb7";
const LEFT: f64 = 110.0;
const WIDTH: f64 = 800.0;
const BAR: f64 = 18.0;
const GAP: f64 = 12.0;

fn fill(c: Colour) -> &'static str {
    match c {
        Colour::Red => RED,
        Colour::Blue => BLUE,
    }
}

/// One bar per threshold `l`: the state after recolouring every recolourable
/// segment shorter than `l`, drawn to scale.
pub fn render_snapshots(c: &ColoredInterval<f64>, thresholds: &[f64]) -> Result<String, SvgError> {
    if thresholds.is_empty() || c.is_empty() {
        return Err(SvgError::Empty);
    }
    if thresholds.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || thresholds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SvgError::Thresholds);
    }
    let total = c.total_length();
    let height = GAP + thresholds.len() as f64 * (BAR + GAP);
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{:.0}" height="{height:.0}" viewBox="0 0 {:.0} {height:.0}">"#,
        LEFT + WIDTH + 10.0,
        LEFT + WIDTH + 10.0
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    for (row, &t) in thresholds.iter().enumerate() {
        let y = GAP + row as f64 * (BAR + GAP);
        let state = c.closure_below(t);
        writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="end">l = {}</text>"#,
            LEFT - 8.0,
            y + BAR - 4.0,
            fmt_num(t)
        )
        .unwrap();
        let mut start = 0.0;
        for (colour, len) in state.segments() {
            let x0 = LEFT + WIDTH * start / total;
            start += len;
            let x1 = LEFT + WIDTH * start / total;
            writeln!(
                s,
                r#"<rect x="{x0:.3}" y="{y:.1}" width="{:.3}" height="{BAR:.1}" fill="{}"/>"#,
                x1 - x0,
                fill(colour)
            )
            .unwrap();
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn write_snapshots(c: &ColoredInterval<f64>, thresholds: &[f64], path: &Path) -> Result<(), SvgError> {
    std::fs::write(path, render_snapshots(c, thresholds)?)?;
    Ok(())
}

/// `0`, then `count - 1` geometric steps from the smallest segment length up
/// to the largest segment of the closure.
pub fn auto_thresholds(c: &ColoredInterval<f64>, closure: &ColoredInterval<f64>, count: usize) -> Vec<f64> {
    let lo = c.lengths().iter().copied().fold(f64::INFINITY, f64::min);
    let hi = closure.lengths().iter().copied().fold(0.0, f64::max);
    let mut out = vec![0.0];
    if count < 2 || lo.is_nan() || hi.is_nan() || lo >= hi {
        if count >= 2 && hi > 0.0 {
            out.push(hi);
        }
        return out;
    }
    for i in 0..count - 1 {
        let f = i as f64 / (count - 2).max(1) as f64;
        let t = if i == count - 2 { hi } else { lo * (hi / lo).powf(f) };
        if t > *out.last().unwrap() {
            out.push(t);
        }
    }
    out
}

fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if (1e-3..1e5).contains(&x.abs()) {
        format!("{}", (x * 1e4).round() / 1e4)
    } else {
        format!("{x:.3e}")
    }
}

/// Line plots of named series against a shared abscissa, one panel each.
pub fn render_series(x: &[f64], series: &[(&str, Vec<f64>)]) -> Result<String, SvgError> {
    if x.len() < 2 || series.is_empty() {
        return Err(SvgError::Empty);
    }
    let panel = 160.0;
    let height = GAP + series.len() as f64 * (panel + 3.0 * GAP);
    let (x_min, x_max) = (x[0], x[x.len() - 1]);
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{:.0}" height="{height:.0}" viewBox="0 0 {:.0} {height:.0}">"#,
        LEFT + WIDTH + 10.0,
        LEFT + WIDTH + 10.0
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    for (row, (name, ys)) in series.iter().enumerate() {
        let top = 2.0 * GAP + row as f64 * (panel + 3.0 * GAP);
        let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = if hi > lo { hi - lo } else { 1.0 };
        writeln!(
            s,
            r#"<rect x="{LEFT:.1}" y="{top:.1}" width="{WIDTH:.1}" height="{panel:.1}" fill="none" stroke="black"/>"#
        )
        .unwrap();
        for (label, v, dy) in [(name.to_string(), hi, 4.0), (fmt_num(lo), lo, 0.0)] {
            let y = top + panel * (hi - v) / span + dy;
            writeln!(
                s,
                r#"<text x="{:.1}" y="{y:.1}" font-family="sans-serif" font-size="12" text-anchor="end">{label}</text>"#,
                LEFT - 8.0
            )
            .unwrap();
        }
        writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">max {}</text>"#,
            LEFT + WIDTH,
            top - 3.0,
            fmt_num(hi)
        )
        .unwrap();
        let mut pts = String::new();
        for (&xi, &yi) in x.iter().zip(ys) {
            let px = LEFT + WIDTH * (xi - x_min) / (x_max - x_min).max(f64::MIN_POSITIVE);
            let py = top + panel * (hi - yi) / span;
            write!(pts, "{px:.2},{py:.2} ").unwrap();
        }
        writeln!(s, r#"<polyline points="{}" fill="none" stroke="{BLUE}" stroke-width="1.5"/>"#, pts.trim_end())
            .unwrap();
    }
    s.push_str("</svg>\n");
    Ok(s)
}
