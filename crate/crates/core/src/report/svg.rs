use std::fmt::Write as _;

use super::ReportError;
use crate::protocol::RdPoint;

pub const SVG_WIDTH: f64 = 800.0;
pub const SVG_HEIGHT: f64 = 600.0;

const LEFT: f64 = 80.0;
const RIGHT: f64 = 40.0;
const TOP: f64 = 60.0;
const BOTTOM: f64 = 70.0;
const TICKS: usize = 5;

struct Axis {
    lo: f64,
    hi: f64,
}

impl Axis {
    fn spanning(values: impl Iterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi - lo < 1e-9 {
            lo -= 1.0;
            hi += 1.0;
        }
        let pad = 0.05 * (hi - lo);
        Self {
            lo: lo - pad,
            hi: hi + pad,
        }
    }

    fn frac(&self, v: f64) -> f64 {
        (v - self.lo) / (self.hi - self.lo)
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn finite(points: &[RdPoint]) -> Vec<(f64, f64)> {
    points
        .iter()
        .filter(|p| p.mean_bpp.is_finite() && p.mean_psnr.is_finite())
        .map(|p| (p.mean_bpp, p.mean_psnr))
        .collect()
}

/// Single-pass versus multi-round RD figure: bpp on x, PSNR (dB) on y, one
/// polyline with vertex markers per curve. Points with non-finite PSNR are
/// dropped and counted in a note.
pub fn render_svg(
    rd_single: &[RdPoint],
    rd_multi: &[RdPoint],
    title: &str,
) -> Result<Vec<u8>, ReportError> {
    let single = finite(rd_single);
    let multi = finite(rd_multi);
    if single.is_empty() {
        return Err(ReportError::EmptyCurve("single-pass"));
    }
    if multi.is_empty() {
        return Err(ReportError::EmptyCurve("multi-round"));
    }
    let dropped = rd_single.len() + rd_multi.len() - single.len() - multi.len();

    let x_axis = Axis::spanning(single.iter().chain(&multi).map(|p| p.0));
    let y_axis = Axis::spanning(single.iter().chain(&multi).map(|p| p.1));
    let plot_w = SVG_WIDTH - LEFT - RIGHT;
    let plot_h = SVG_HEIGHT - TOP - BOTTOM;
    let px = |v: f64| LEFT + x_axis.frac(v) * plot_w;
    let py = |v: f64| TOP + (1.0 - y_axis.frac(v)) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = SVG_WIDTH,
        h = SVG_HEIGHT
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="32" text-anchor="middle" font-family="sans-serif" font-size="18">{}</text>"#,
        SVG_WIDTH / 2.0,
        escape(title)
    );

    // Frame, grid and ticks.
    let _ = writeln!(
        s,
        r##"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="#333"/>"##
    );
    for i in 0..=TICKS {
        let t = i as f64 / TICKS as f64;
        let xv = x_axis.lo + t * (x_axis.hi - x_axis.lo);
        let yv = y_axis.lo + t * (y_axis.hi - y_axis.lo);
        let (gx, gy) = (px(xv), py(yv));
        let _ = writeln!(
            s,
            r##"<line x1="{gx:.2}" y1="{TOP:.2}" x2="{gx:.2}" y2="{:.2}" stroke="#ddd"/>"##,
            TOP + plot_h
        );
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT:.2}" y1="{gy:.2}" x2="{:.2}" y2="{gy:.2}" stroke="#ddd"/>"##,
            LEFT + plot_w
        );
        let _ = writeln!(
            s,
            r#"<text x="{gx:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="12">{xv:.3}</text>"#,
            TOP + plot_h + 18.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="12">{yv:.2}</text>"#,
            LEFT - 8.0,
            gy + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="14">bpp</text>"#,
        LEFT + plot_w / 2.0,
        SVG_HEIGHT - 22.0
    );
    let _ = writeln!(
        s,
        r#"<text x="22" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="14" transform="rotate(-90 22 {:.2})">PSNR (dB)</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for (points, color, dash, label) in [
        (&single, "#1f77b4", "", "single-pass"),
        (
            &multi,
            "#d62728",
            r#" stroke-dasharray="6 4""#,
            "multi-round",
        ),
    ] {
        let coords: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="{label}" points="{}" fill="none" stroke="{color}" stroke-width="2"{dash}/>"#,
            coords.join(" ")
        );
        for &(x, y) in points.iter() {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{color}"/>"#,
                px(x),
                py(y)
            );
        }
    }

    // Legend, top-left inside the plot.
    let (lx, ly) = (LEFT + 16.0, TOP + 20.0);
    for (i, (color, dash, label)) in [
        ("#1f77b4", "", "single-pass"),
        ("#d62728", r#" stroke-dasharray="6 4""#, "multi-round"),
    ]
    .into_iter()
    .enumerate()
    {
        let y = ly + 20.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"{dash}/>"#,
            lx + 28.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="13">{label}</text>"#,
            lx + 36.0,
            y + 4.0
        );
    }
    if dropped > 0 {
        let _ = writeln!(
            s,
            r##"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" fill="#666">note: {dropped} point(s) with infinite PSNR omitted</text>"##,
            LEFT,
            SVG_HEIGHT - 6.0
        );
    }
    s.push_str("</svg>\n");
    Ok(s.into_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::QualityLevel;

    fn pt(level: u32, bpp: f64, psnr: f64) -> RdPoint {
        RdPoint {
            level: QualityLevel::new(level),
            mean_bpp: bpp,
            mean_psnr: psnr,
            mean_mse: 0.0,
        }
    }

    fn polyline(svg: &str, class: &str) -> String {
        let key = format!(r#"class="{class}" points=""#);
        let start = svg.find(&key).unwrap() + key.len();
        svg[start..start + svg[start..].find('"').unwrap()].to_string()
    }

    #[test]
    fn identical_curves_share_coordinates() {
        let curve = vec![pt(1, 0.5, 20.0), pt(2, 1.0, 25.0), pt(3, 2.0, 31.0)];
        let svg = String::from_utf8(render_svg(&curve, &curve, "nested").unwrap()).unwrap();
        assert_eq!(polyline(&svg, "single-pass"), polyline(&svg, "multi-round"));
        assert!(svg.contains("PSNR (dB)") && svg.contains(">bpp<"));
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn single_point_curves() {
        let svg =
            String::from_utf8(render_svg(&[pt(1, 1.0, 30.0)], &[pt(1, 1.0, 28.0)], "t").unwrap())
                .unwrap();
        assert_eq!(svg.matches("<circle").count(), 2);
    }

    #[test]
    fn deterministic_and_escaped() {
        let a = vec![pt(1, 0.1, 10.0), pt(2, 0.9, 14.0)];
        let b = vec![pt(1, 0.2, 9.0), pt(2, f64::NAN, f64::INFINITY)];
        let one = render_svg(&a, &b, "x < y & z").unwrap();
        assert_eq!(one, render_svg(&a, &b, "x < y & z").unwrap());
        let text = String::from_utf8(one).unwrap();
        assert!(text.contains("x &lt; y &amp; z"));
        assert!(text.contains("1 point(s) with infinite PSNR omitted"));
    }

    #[test]
    fn empty_curves_rejected() {
        assert_eq!(
            render_svg(&[], &[pt(1, 1.0, 1.0)], "t"),
            Err(ReportError::EmptyCurve("single-pass"))
        );
        assert_eq!(
            render_svg(&[pt(1, 1.0, 1.0)], &[pt(1, 1.0, f64::INFINITY)], "t"),
            Err(ReportError::EmptyCurve("multi-round"))
        );
    }
}
