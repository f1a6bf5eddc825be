//! Minimal static SVG figures: matrix heatmaps, line charts, bar histograms.

use std::fmt::Write;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open(w: f64, h: f64, title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="18" text-anchor="middle" font-size="13">{}</text>"#, w / 2.0, esc(title));
    s
}

/// Grey-scale heatmap of a matrix with entries in [0, 1].
pub fn heatmap(matrix: &[Vec<f64>], title: &str) -> String {
    let n = matrix.len().max(1);
    let cell = (360.0 / n as f64).clamp(6.0, 48.0);
    let (left, top) = (40.0, 34.0);
    let size = cell * n as f64;
    let mut s = open(left + size + 20.0, top + size + 30.0, title);
    for (i, row) in matrix.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let shade = (255.0 * (1.0 - v.clamp(0.0, 1.0))).round() as u8;
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{cell:.2}" height="{cell:.2}" fill="rgb({shade},{shade},{shade})"><title>[{i},{j}] {v:.4}</title></rect>"#,
                left + j as f64 * cell,
                top + i as f64 * cell
            );
        }
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{i}</text>"#, left - 4.0, top + (i as f64 + 0.65) * cell);
    }
    let _ = writeln!(s, r#"<rect x="{left}" y="{top}" width="{size:.2}" height="{size:.2}" fill="none" stroke="black"/>"#);
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">to state (columns), from state (rows)</text>"#, left + size / 2.0, top + size + 20.0);
    s.push_str("</svg>\n");
    s
}

/// Line chart; each series is (label, points). `log_x` uses a log10 axis.
pub fn line_chart(series: &[(String, Vec<(f64, f64)>)], title: &str, x_label: &str, y_label: &str, log_x: bool) -> String {
    let (w, h, left, right, top, bottom) = (560.0, 360.0, 60.0, 130.0, 34.0, 44.0);
    let tx = |x: f64| if log_x { x.max(1e-12).log10() } else { x };
    let pts: Vec<(f64, f64)> = series.iter().flat_map(|(_, p)| p.iter().map(|&(x, y)| (tx(x), y))).collect();
    let (mut x0, mut x1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    if !x0.is_finite() || x1 <= x0 {
        x0 -= 0.5;
        x1 = x0 + 1.0;
    }
    let (y0, y1) = (0.0, 1.0);
    let px = |x: f64| left + (tx(x) - x0) / (x1 - x0) * (w - left - right);
    let py = |y: f64| h - bottom - (y.clamp(y0, y1) - y0) / (y1 - y0) * (h - top - bottom);
    let mut s = open(w, h, title);
    let _ = writeln!(s, r#"<rect x="{left}" y="{top}" width="{}" height="{}" fill="none" stroke="black"/>"#, w - left - right, h - top - bottom);
    for k in 0..=4 {
        let y = k as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{y:.2}</text>"#, left - 4.0, py(y) + 4.0);
    }
    let mut xs: Vec<f64> = series.iter().flat_map(|(_, p)| p.iter().map(|q| q.0)).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    for x in xs {
        let _ = writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle">{x}</text>"#, px(x), h - bottom + 14.0);
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#, left + (w - left - right) / 2.0, h - 8.0, esc(x_label));
    let _ = writeln!(s, r#"<text x="14" y="{:.1}" transform="rotate(-90 14 {:.1})" text-anchor="middle">{}</text>"#, h / 2.0, h / 2.0, esc(y_label));
    for (i, (name, p)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = p.iter().map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, path.join(" "));
        for &(x, y) in p {
            let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#, px(x), py(y));
        }
        let ly = top + 14.0 + 16.0 * i as f64;
        let _ = writeln!(s, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, w - right + 10.0, w - right + 30.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, w - right + 34.0, ly + 4.0, esc(name));
    }
    s.push_str("</svg>\n");
    s
}

/// Side-by-side bars per bin, one group member per labeled mass vector.
pub fn histogram(edges: &[f64], groups: &[(String, Vec<f64>)], title: &str, x_label: &str) -> String {
    let (w, h, left, right, top, bottom) = (560.0, 320.0, 50.0, 130.0, 34.0, 44.0);
    let bins = edges.len().saturating_sub(1).max(1);
    let plot_w = w - left - right;
    let bin_w = plot_w / bins as f64;
    let bar_w = bin_w / (groups.len().max(1) as f64 + 0.5);
    let py = |y: f64| h - bottom - y.clamp(0.0, 1.0) * (h - top - bottom);
    let mut s = open(w, h, title);
    let _ = writeln!(s, r#"<rect x="{left}" y="{top}" width="{plot_w}" height="{}" fill="none" stroke="black"/>"#, h - top - bottom);
    for (g, (name, mass)) in groups.iter().enumerate() {
        let color = PALETTE[g % PALETTE.len()];
        for (b, &m) in mass.iter().enumerate() {
            let x = left + b as f64 * bin_w + 0.25 * bar_w + g as f64 * bar_w;
            let _ = writeln!(s, r#"<rect x="{x:.1}" y="{:.1}" width="{bar_w:.1}" height="{:.1}" fill="{color}"><title>{m:.4}</title></rect>"#, py(m), py(0.0) - py(m));
        }
        let ly = top + 14.0 + 16.0 * g as f64;
        let _ = writeln!(s, r#"<rect x="{}" y="{}" width="12" height="10" fill="{color}"/>"#, w - right + 10.0, ly - 8.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, w - right + 26.0, ly + 1.0, esc(name));
    }
    for (b, e) in edges.iter().enumerate() {
        if b % 2 == 0 || edges.len() <= 6 {
            let _ = writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle">{e:.2}</text>"#, left + b as f64 * bin_w, h - bottom + 14.0);
        }
    }
    for k in 0..=4 {
        let y = k as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{y:.2}</text>"#, left - 4.0, py(y) + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#, left + plot_w / 2.0, h - 8.0, esc(x_label));
    s.push_str("</svg>\n");
    s
}
