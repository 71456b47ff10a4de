//! Self-contained SVG log-log plot of the energy jumps.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 480.0;
const PAD: f64 = 60.0;

/// Points `(v, |dh1|)` with a fitted line `c v^p`.
pub fn loglog_svg(points: &[(f64, f64)], fit: Option<(f64, f64)>, title: &str) -> String {
    let pts: Vec<(f64, f64)> = points.iter().filter(|(x, y)| *x > 0.0 && y.abs() > 0.0).map(|(x, y)| (x.log10(), y.abs().log10())).collect();
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    if pts.is_empty() {
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">no nonzero data</text></svg>"#, W / 2.0, H / 2.0);
        return svg;
    }
    let (x0, x1) = bounds(pts.iter().map(|p| p.0));
    let (y0, y1) = bounds(pts.iter().map(|p| p.1));
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let _ = writeln!(svg, r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#, W - 2.0 * PAD, H - 2.0 * PAD);
    for d in (x0.ceil() as i32)..=(x1.floor() as i32) {
        let x = sx(d as f64);
        let _ = writeln!(svg, r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">1e{d}</text>"#, H - PAD, H - PAD + 5.0, H - PAD + 20.0);
    }
    for d in (y0.ceil() as i32)..=(y1.floor() as i32) {
        let y = sy(d as f64);
        let _ = writeln!(svg, r#"<line x1="{:.1}" y1="{y:.1}" x2="{PAD}" y2="{y:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end">1e{d}</text>"#, PAD - 5.0, PAD - 8.0, y + 4.0);
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">v</text>"#, W / 2.0, H - 15.0);
    let _ = writeln!(svg, r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">|dh1|</text>"#, H / 2.0, H / 2.0);
    if let Some((c, p)) = fit.filter(|(c, _)| *c > 0.0) {
        let (ya, yb) = (c.log10() + p * x0, c.log10() + p * x1);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="crimson" stroke-width="1.5"/><text x="{:.1}" y="{:.1}" fill="crimson">{c:.4} v^{p:.4}</text>"#,
            sx(x0), sy(ya), sx(x1), sy(yb), PAD + 10.0, PAD + 20.0
        );
    }
    for (x, y) in &pts {
        let _ = writeln!(svg, r#"<circle cx="{:.1}" cy="{:.1}" r="3.5" fill="steelblue"/>"#, sx(*x), sy(*y));
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(it: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let pad = ((hi - lo) * 0.05).max(0.05);
    (lo - pad, hi + pad)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_points_and_line() {
        let pts: Vec<(f64, f64)> = (0..5).map(|i| {
            let v = 1e-3 * 2f64.powi(i);
            (v, 11.8 * v.powf(8.0 / 3.0))
        }).collect();
        let s = loglog_svg(&pts, Some((11.8, 8.0 / 3.0)), "a < b");
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert_eq!(s.matches("<circle").count(), 5);
        assert!(s.contains("a &lt; b") && s.contains("crimson"));
        assert!(loglog_svg(&[(1e-3, 0.0)], None, "t").contains("no nonzero data"));
    }
}
