use std::fmt::Write;

/// A named polyline.
#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Minimal self-contained line chart. The y axis is logarithmic when every
/// value is positive and the values span more than two decades.
pub fn line_chart_svg(title: &str, x_label: &str, series: &[Series]) -> String {
    let (w, h, pad) = (720.0, 420.0, 60.0);
    let finite = || {
        series
            .iter()
            .flat_map(|s| s.points.iter())
            .filter(|p| p.0.is_finite() && p.1.is_finite())
    };
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in finite() {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let log = y0 > 0.0 && y1 / y0 > 100.0;
    let ty = |y: f64| if log { y.log10() } else { y };
    let (mut ly0, mut ly1) = if x0.is_finite() { (ty(y0), ty(y1)) } else { (0.0, 1.0) };
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if ly1 == ly0 {
        ly0 -= 0.5;
        ly1 += 0.5;
    }
    let px = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let py = |y: f64| h - pad - (ty(y) - ly0) / (ly1 - ly0) * (h - 2.0 * pad);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        w / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<path d="M{pad} {pad} V{} H{}" fill="none" stroke="black"/>"#,
        h - pad,
        w - pad
    );
    let fmt_y = |v: f64| if log { format!("1e{v:.1}") } else { format!("{v:.4}") };
    for (v, y) in [(ly0, h - pad), (ly1, pad)] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#,
            pad - 4.0,
            y + 4.0,
            fmt_y(v)
        );
    }
    for (v, x) in [(x0, pad), (x1, w - pad)] {
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">{v}</text>"#,
            h - pad + 16.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">{}</text>"#,
        w / 2.0,
        h - 16.0,
        escape(x_label)
    );
    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = ser
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite() && (!log || p.1 > 0.0))
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = pad + 14.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{color}">{}</text>"#,
            w - pad - 120.0,
            ly + 12.0,
            escape(&ser.name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
