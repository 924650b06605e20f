//! Deterministic SVG charts: a heatmap for combination grids and a grouped
//! bar chart for alignment tables. Coordinates are printed with fixed
//! precision so identical input always yields identical bytes.

use std::fmt::Write as _;

const CELL: f64 = 64.0;
const LABEL: f64 = 130.0;
const FONT: &str = "font-family=\"sans-serif\"";

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Linear blend from white (`t = 0`) to a dark blue (`t = 1`).
fn ramp(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(247.0, 8.0), lerp(251.0, 48.0), lerp(255.0, 107.0))
}

/// Heatmap of a symmetric grid. The color scale runs from `min(min, 0)` to
/// the largest finite value; NaN cells are hatched and the diagonal (each
/// metric alone) is outlined.
pub fn heatmap(names: &[String], values: &[Vec<f64>], title: &str) -> String {
    let n = names.len();
    let finite: Vec<f64> = values.iter().flatten().copied().filter(|v| v.is_finite()).collect();
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = finite.iter().copied().fold(0.0, f64::min);
    let (lo, hi) = if finite.is_empty() { (0.0, 1.0) } else { (lo, hi) };
    let scale = |v: f64| if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };

    let grid_w = CELL * n as f64;
    let width = LABEL + grid_w + 90.0;
    let height = 40.0 + grid_w + LABEL;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">"
    );
    s.push_str(
        "<defs><pattern id=\"hatch\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\" patternTransform=\"rotate(45)\">\
<rect width=\"6\" height=\"6\" fill=\"#eeeeee\"/><line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"6\" stroke=\"#999999\" stroke-width=\"2\"/></pattern>\
<linearGradient id=\"legend\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\">",
    );
    let _ = writeln!(
        s,
        "<stop offset=\"0\" stop-color=\"{}\"/><stop offset=\"1\" stop-color=\"{}\"/></linearGradient></defs>",
        ramp(0.0),
        ramp(1.0)
    );
    let _ = writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>");
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"24\" {FONT} font-size=\"14\" text-anchor=\"middle\">{}</text>",
        LABEL + grid_w / 2.0,
        esc(title)
    );
    let top = 40.0;
    for (i, row) in values.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let x = LABEL + CELL * j as f64;
            let y = top + CELL * i as f64;
            let (fill, label, ink) = if v.is_finite() {
                let t = scale(v);
                (ramp(t), format!("{v:.3}"), if t > 0.55 { "#ffffff" } else { "#000000" })
            } else {
                ("url(#hatch)".to_string(), "n/a".to_string(), "#000000")
            };
            let stroke = if i == j {
                " stroke=\"#000000\" stroke-width=\"2\""
            } else {
                " stroke=\"#ffffff\" stroke-width=\"1\""
            };
            let _ = writeln!(
                s,
                "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{CELL:.1}\" height=\"{CELL:.1}\" fill=\"{fill}\"{stroke}/>"
            );
            let _ = writeln!(
                s,
                "<text x=\"{:.1}\" y=\"{:.1}\" {FONT} font-size=\"12\" text-anchor=\"middle\" fill=\"{ink}\">{label}</text>",
                x + CELL / 2.0,
                y + CELL / 2.0 + 4.0
            );
        }
    }
    for (i, name) in names.iter().enumerate() {
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" {FONT} font-size=\"12\" text-anchor=\"end\">{}</text>",
            LABEL - 6.0,
            top + CELL * i as f64 + CELL / 2.0 + 4.0,
            esc(name)
        );
        let cx = LABEL + CELL * i as f64 + CELL / 2.0;
        let cy = top + grid_w + 8.0;
        let _ = writeln!(
            s,
            "<text x=\"{cx:.1}\" y=\"{cy:.1}\" {FONT} font-size=\"12\" text-anchor=\"end\" transform=\"rotate(-45 {cx:.1} {cy:.1})\">{}</text>",
            esc(name)
        );
    }
    let lx = LABEL + grid_w + 20.0;
    let lh = grid_w.max(CELL);
    let _ = writeln!(
        s,
        "<rect x=\"{lx:.1}\" y=\"{top:.1}\" width=\"16\" height=\"{lh:.1}\" fill=\"url(#legend)\" stroke=\"#000000\" stroke-width=\"0.5\"/>"
    );
    for (v, y) in [(hi, top + 10.0), (lo, top + lh)] {
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{y:.1}\" {FONT} font-size=\"11\">{v:.3}</text>",
            lx + 20.0
        );
    }
    s.push_str("</svg>\n");
    s
}

const STAT_LABELS: [&str; 3] = ["pairwise accuracy", "Kendall tau-b", "Pearson"];
const STAT_COLORS: [&str; 3] = ["#4c72b0", "#dd8452", "#55a868"];

/// Grouped bars, one group per metric and one bar per statistic, on a fixed
/// `[-1, 1]` axis. Missing statistics are marked `n/a`.
pub fn bar_chart(rows: &[(String, [f64; 3])], title: &str) -> String {
    let group = 90.0;
    let bar = 22.0;
    let left = 50.0;
    let top = 60.0;
    let plot_h = 300.0;
    let width = left + group * rows.len().max(1) as f64 + 20.0;
    let height = top + plot_h + LABEL;
    let y_of = |v: f64| top + (1.0 - v.clamp(-1.0, 1.0)) / 2.0 * plot_h;
    let zero = y_of(0.0);

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">"
    );
    let _ = writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>");
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"22\" {FONT} font-size=\"14\" text-anchor=\"middle\">{}</text>",
        width / 2.0,
        esc(title)
    );
    for (k, (label, color)) in STAT_LABELS.iter().zip(STAT_COLORS).enumerate() {
        let x = left + 130.0 * k as f64;
        let _ = writeln!(
            s,
            "<rect x=\"{x:.1}\" y=\"32\" width=\"10\" height=\"10\" fill=\"{color}\"/><text x=\"{:.1}\" y=\"41\" {FONT} font-size=\"11\">{label}</text>",
            x + 14.0
        );
    }
    for tick in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        let y = y_of(tick);
        let _ = writeln!(
            s,
            "<line x1=\"{left:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"{}\" stroke-width=\"1\"/><text x=\"{:.1}\" y=\"{:.1}\" {FONT} font-size=\"10\" text-anchor=\"end\">{tick:.1}</text>",
            width - 20.0,
            if tick == 0.0 { "#000000" } else { "#dddddd" },
            left - 4.0,
            y + 3.0
        );
    }
    for (g, (name, vals)) in rows.iter().enumerate() {
        let gx = left + group * g as f64 + (group - 3.0 * bar) / 2.0;
        for (k, &v) in vals.iter().enumerate() {
            let x = gx + bar * k as f64;
            if v.is_finite() {
                let y = y_of(v);
                let (y0, h) = if y < zero { (y, zero - y) } else { (zero, y - zero) };
                let _ = writeln!(
                    s,
                    "<rect x=\"{x:.1}\" y=\"{y0:.1}\" width=\"{:.1}\" height=\"{h:.1}\" fill=\"{}\"><title>{} {}: {v:.3}</title></rect>",
                    bar - 2.0,
                    STAT_COLORS[k],
                    esc(name),
                    STAT_LABELS[k]
                );
            } else {
                let _ = writeln!(
                    s,
                    "<text x=\"{:.1}\" y=\"{:.1}\" {FONT} font-size=\"8\" text-anchor=\"middle\">n/a</text>",
                    x + bar / 2.0 - 1.0,
                    zero - 3.0
                );
            }
        }
        let cx = left + group * g as f64 + group / 2.0;
        let cy = top + plot_h + 12.0;
        let _ = writeln!(
            s,
            "<text x=\"{cx:.1}\" y=\"{cy:.1}\" {FONT} font-size=\"11\" text-anchor=\"end\" transform=\"rotate(-40 {cx:.1} {cy:.1})\">{}</text>",
            esc(name)
        );
    }
    s.push_str("</svg>\n");
    s
}
