//! Minimal SVG line charts.

use std::fmt::Write;

const W: f64 = 900.0;
const H: f64 = 420.0;
const PAD: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#7f7f7f"];

pub struct Line<'a> {
    pub label: &'a str,
    pub values: &'a [f64],
    /// Plot against the right-hand axis.
    pub right_axis: bool,
}

fn bounds<'a>(lines: impl Iterator<Item = &'a Line<'a>>) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in lines.flat_map(|l| l.values.iter()).filter(|v| v.is_finite()) {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    if !lo.is_finite() {
        return None;
    }
    if hi - lo < 1e-12 * hi.abs().max(1.0) {
        return Some((lo - 0.5, hi + 0.5));
    }
    Some((lo, hi))
}

fn fmt_tick(v: f64) -> String {
    if v.abs() >= 1e4 || (v != 0.0 && v.abs() < 1e-2) {
        format!("{v:.3e}")
    } else {
        format!("{v:.3}")
    }
}

/// Render series sharing an x index as polylines; `None` when nothing is finite.
pub fn line_chart(title: &str, lines: &[Line<'_>]) -> Option<String> {
    let left = bounds(lines.iter().filter(|l| !l.right_axis))?;
    let right = bounds(lines.iter().filter(|l| l.right_axis));
    let n = lines.iter().map(|l| l.values.len()).max().unwrap_or(0).max(2);
    let x = |i: usize| PAD + (W - 2.0 * PAD) * i as f64 / (n - 1) as f64;
    let y = |v: f64, (lo, hi): (f64, f64)| H - PAD - (H - 2.0 * PAD) * (v - lo) / (hi - lo);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        s,
        r##"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let yy = H - PAD - (H - 2.0 * PAD) * f;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{yy:.1}" text-anchor="end">{}</text>"#,
            PAD - 4.0,
            fmt_tick(left.0 + f * (left.1 - left.0))
        );
        if let Some(r) = right {
            let _ = writeln!(s, r#"<text x="{}" y="{yy:.1}">{}</text>"#, W - PAD + 4.0, fmt_tick(r.0 + f * (r.1 - r.0)));
        }
    }
    for (i, line) in lines.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let b = if line.right_axis { right.unwrap_or(left) } else { left };
        let mut pts = String::new();
        for (j, v) in line.values.iter().enumerate().filter(|(_, v)| v.is_finite()) {
            let _ = write!(pts, "{:.1},{:.1} ", x(j), y(*v, b));
        }
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#,
            pts.trim_end()
        );
        let ly = PAD + 16.0 * i as f64 + 12.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly:.1}" fill="{color}">{}</text>"#,
            PAD + 8.0,
            escape(line.label)
        );
    }
    s.push_str("</svg>\n");
    Some(s)
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_polylines_per_series() {
        let a = [1.0, 2.0, 3.0];
        let b = [0.1, f64::NAN, 0.3];
        let svg = line_chart(
            "t <1>",
            &[
                Line { label: "a", values: &a, right_axis: false },
                Line { label: "b", values: &b, right_axis: true },
            ],
        )
        .unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("t &lt;1&gt;"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn empty_input_has_no_chart() {
        assert!(line_chart("x", &[Line { label: "a", values: &[f64::NAN], right_axis: false }]).is_none());
    }
}
