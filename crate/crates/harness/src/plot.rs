//! Hand-written SVG scatter plots in fit coordinates.

use std::fmt::Write as _;
use std::path::Path;

use pdhl_core::constants_lab::{ScalingFit, XTransform};

use crate::error::{HarnessError, Result};

const W: f64 = 480.0;
const H: f64 = 360.0;
const MARGIN: f64 = 56.0;

fn x_of(t: XTransform, x: f64) -> f64 {
    match t {
        XTransform::Log => x.ln(),
        XTransform::LogLogInv => (1.0 / x).ln().ln(),
    }
}

fn x_label(t: XTransform) -> &'static str {
    match t {
        XTransform::Log => "ln x",
        XTransform::LogLogInv => "ln ln(1/x)",
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    let pad = if hi > lo { 0.08 * (hi - lo) } else { 0.5 };
    (lo - pad, hi + pad)
}

/// Writes a log-log scatter of `points` with the fitted line of `fit`, if
/// any. Points with nonpositive coordinates are skipped.
pub fn emit_plot(fit: Option<&ScalingFit>, points: &[(f64, f64)], transform: XTransform, path: &Path) -> Result<()> {
    let svg = render(fit, points, transform).map_err(|m| HarnessError::output(path, m))?;
    std::fs::write(path, svg).map_err(|e| HarnessError::output(path, e))
}

pub fn render(fit: Option<&ScalingFit>, points: &[(f64, f64)], transform: XTransform) -> std::result::Result<String, String> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .map(|&(x, y)| (x_of(transform, x), y.ln()))
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    if pts.is_empty() {
        return Err("no plottable points".into());
    }
    let (x0, x1) = padded(
        pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
        pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
    );
    let (y0, y1) = padded(
        pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
        pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
    );
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let sy = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let (l, r, t, b) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
    let _ = writeln!(s, r#"<path d="M{l} {t} L{l} {b} L{r} {b}" stroke="black" fill="none"/>"#);
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(s, r#"<line x1="{px:.2}" y1="{b}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#, b + 4.0);
        let _ = writeln!(
            s,
            r#"<text x="{px:.2}" y="{:.2}" font-size="10" text-anchor="middle">{xv:.2}</text>"#,
            b + 16.0
        );
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{py:.2}" x2="{l}" y2="{py:.2}" stroke="black"/>"#, l - 4.0);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{yv:.2}</text>"#,
            l - 6.0,
            py + 3.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 12.0,
        x_label(transform)
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.2})">ln y</text>"#,
        H / 2.0,
        H / 2.0
    );
    for &(x, y) in &pts {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="steelblue"/>"#, sx(x), sy(y));
    }
    if let Some(fit) = fit.filter(|_| pts.len() > 1) {
        let line = |x: f64| fit.intercept + fit.slope * x;
        let (a, b) = (x0, x1);
        let _ = writeln!(
            s,
            r#"<line class="fit" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="firebrick"/>"#,
            sx(a),
            sy(line(a)),
            sx(b),
            sy(line(b))
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" fill="firebrick">slope {:.2}</text>"#,
            l + 8.0,
            t - 12.0,
            fit.slope
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fitted_line_stays_inside_the_plot_for_flat_data() {
        let pts = [(1.0, 2.0), (2.0, 2.0), (4.0, 2.0)];
        let fit = pdhl_core::constants_lab::fit_exponent(&pts, XTransform::Log).unwrap();
        let svg = render(Some(&fit), &pts, XTransform::Log).unwrap();
        assert!(svg.contains("slope 0.00") || svg.contains("slope -0.00"));
        assert!(!svg.contains("NaN"));
    }
}
