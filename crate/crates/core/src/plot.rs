//! Minimal SVG charts for the k sweep, cluster mean profiles and cluster
//! sizes. The CSVs next to them are the real output.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn header(title: &str) -> String {
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    svg
}

fn axes(svg: &mut String, x_label: &str, y_label: &str, (x0, x1): (f64, f64), (y0, y1): (f64, f64)) {
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN / 2.0, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        svg,
        r#"<path d="M{left} {top} V{bottom} H{right}" stroke="black" fill="none"/>"#
    );
    let font = r#"font-family="sans-serif" font-size="11""#;
    let _ = writeln!(svg, r#"<text x="{left}" y="{}" {font}>{}</text>"#, bottom + 14.0, fmt_tick(x0));
    let _ = writeln!(
        svg,
        r#"<text x="{right}" y="{}" text-anchor="end" {font}>{}</text>"#,
        bottom + 14.0,
        fmt_tick(x1)
    );
    let _ = writeln!(svg, r#"<text x="{}" y="{bottom}" text-anchor="end" {font}>{}</text>"#, left - 4.0, fmt_tick(y0));
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end" {font}>{}</text>"#, left - 4.0, top + 4.0, fmt_tick(y1));
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" {font}>{}</text>"#,
        (left + right) / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})" {font}>{}</text>"#,
        (top + bottom) / 2.0,
        (top + bottom) / 2.0,
        escape(y_label)
    );
}

fn fmt_tick(v: f64) -> String {
    if v.abs() >= 1000.0 || v == v.trunc() {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let xs = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let ys = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let sx = |x: f64| MARGIN + (x - xs.0) / (xs.1 - xs.0) * (WIDTH - 1.5 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - ys.0) / (ys.1 - ys.0) * (HEIGHT - 2.0 * MARGIN);
    let mut svg = header(title);
    axes(&mut svg, x_label, y_label, xs, ys);
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.1.is_finite())
            .map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            points.join(" ")
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
            WIDTH - MARGIN * 2.5,
            MARGIN + 14.0 * i as f64,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn bar_chart(title: &str, x_label: &str, y_label: &str, bars: &[(String, f64)]) -> String {
    let ys = (0.0, bars.iter().map(|b| b.1).fold(1.0, f64::max));
    let mut svg = header(title);
    axes(&mut svg, x_label, y_label, (0.0, bars.len() as f64), ys);
    let slot = (WIDTH - 1.5 * MARGIN) / bars.len().max(1) as f64;
    for (i, (label, value)) in bars.iter().enumerate() {
        let h = value / ys.1 * (HEIGHT - 2.0 * MARGIN);
        let x = MARGIN + slot * i as f64 + slot * 0.15;
        let _ = writeln!(
            svg,
            r#"<rect x="{x:.1}" y="{:.1}" width="{:.1}" height="{h:.1}" fill="{}"/>"#,
            HEIGHT - MARGIN - h,
            slot * 0.7,
            PALETTE[i % PALETTE.len()]
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="11">{}</text>"#,
            x + slot * 0.35,
            HEIGHT - MARGIN - h - 4.0,
            escape(label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_are_well_formed() {
        let line = line_chart(
            "k <sweep>",
            "k",
            "inertia",
            &[Series {
                label: "a".into(),
                points: vec![(2.0, 10.0), (3.0, 4.0), (4.0, f64::NAN)],
            }],
        );
        assert!(line.starts_with("<svg") && line.trim_end().ends_with("</svg>"));
        assert!(line.contains("k &lt;sweep&gt;"));
        let bars = bar_chart("sizes", "cluster", "melts", &[("0".into(), 3.0), ("1".into(), 5.0)]);
        assert_eq!(bars.matches("<rect").count(), 3);
    }

    #[test]
    fn constant_series_does_not_divide_by_zero() {
        let line = line_chart("c", "x", "y", &[Series { label: "c".into(), points: vec![(1.0, 2.0), (1.0, 2.0)] }]);
        assert!(!line.contains("NaN") && !line.contains("inf"));
    }
}
