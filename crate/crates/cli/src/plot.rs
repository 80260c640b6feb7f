//! Minimal self-contained SVG charts.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// One curve: `(x, mean, std)` points, drawn as a line with a ±std band.
#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(out: &mut String, title: &str, stamp: Option<&str>) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    if let Some(s) = stamp {
        let _ = writeln!(out, "<!-- generated {} -->", escape(s));
    }
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + (WIDTH - LEFT - RIGHT) / 2.0,
        escape(title)
    );
}

/// Padded `[lo, hi]` covering `values`; a flat range is widened.
fn value_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.05 * hi.abs().max(1.0) };
    (lo - pad, hi + pad)
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.0e}")
    } else if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

fn axes(out: &mut String, x_label: &str, y_label: &str, y: (f64, f64)) {
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        out,
        r#"<path d="M{x0:.1},{y0:.1} L{x0:.1},{y1:.1} L{x1:.1},{y1:.1}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let v = y.0 + (y.1 - y.0) * i as f64 / 4.0;
        let py = y1 - (y1 - y0) * i as f64 / 4.0;
        let _ = writeln!(
            out,
            r##"<line x1="{:.1}" y1="{py:.1}" x2="{x0:.1}" y2="{py:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
            x0 - 4.0,
            x0 - 6.0,
            py + 4.0,
            fmt_tick(v)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 18.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text transform="translate(18,{:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

fn legend(out: &mut String, labels: &[String]) {
    let x = WIDTH - RIGHT + 14.0;
    for (i, label) in labels.iter().enumerate() {
        let y = TOP + 10.0 + 20.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{x:.1}" y="{:.1}" width="12" height="12" fill="{}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            y - 10.0,
            PALETTE[i % PALETTE.len()],
            x + 18.0,
            y,
            escape(label)
        );
    }
}

/// Line chart of `series`, with a log-scaled x axis when `log_x` is set.
/// Points with non-positive x are dropped on a log axis.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series], log_x: bool, stamp: Option<&str>) -> String {
    let tx = |x: f64| if log_x { x.log10() } else { x };
    let usable = |&&(x, _, _): &&(f64, f64, f64)| !log_x || x > 0.0;
    let xs: Vec<f64> = series.iter().flat_map(|s| s.points.iter().filter(usable).map(|p| tx(p.0))).collect();
    let (xmin, xmax) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let (xmin, xmax) = if !xmin.is_finite() {
        (0.0, 1.0)
    } else if xmax > xmin {
        (xmin, xmax)
    } else {
        (xmin - 0.5, xmax + 0.5)
    };
    let y = value_range(series.iter().flat_map(|s| s.points.iter().flat_map(|p| [p.1 - p.2, p.1 + p.2])));

    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let px = |x: f64| x0 + 10.0 + (x1 - x0 - 20.0) * (tx(x) - xmin) / (xmax - xmin);
    let py = |v: f64| y1 - (y1 - y0) * (v - y.0) / (y.1 - y.0);

    let mut out = String::new();
    header(&mut out, title, stamp);
    axes(&mut out, x_label, y_label, y);

    let mut ticks: Vec<f64> = series.iter().flat_map(|s| s.points.iter().filter(usable).map(|p| p.0)).collect();
    ticks.sort_by(f64::total_cmp);
    ticks.dedup();
    for t in ticks {
        let _ = writeln!(
            out,
            r#"<line x1="{0:.1}" y1="{y1:.1}" x2="{0:.1}" y2="{1:.1}" stroke="black"/><text x="{0:.1}" y="{2:.1}" text-anchor="middle">{3}</text>"#,
            px(t),
            y1 + 4.0,
            y1 + 18.0,
            fmt_tick(t)
        );
    }

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<&(f64, f64, f64)> = s.points.iter().filter(usable).collect();
        if pts.is_empty() {
            continue;
        }
        let mut band = String::new();
        for (k, p) in pts.iter().enumerate() {
            let _ = write!(band, "{}{:.2},{:.2} ", if k == 0 { "M" } else { "L" }, px(p.0), py(p.1 + p.2));
        }
        for p in pts.iter().rev() {
            let _ = write!(band, "L{:.2},{:.2} ", px(p.0), py(p.1 - p.2));
        }
        let _ = writeln!(out, r#"<path d="{}Z" fill="{color}" fill-opacity="0.2" stroke="none"/>"#, band);
        let line: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", px(p.0), py(p.1))).collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            line.join(" ")
        );
        for p in &pts {
            let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, px(p.0), py(p.1));
        }
    }
    legend(&mut out, &series.iter().map(|s| s.label.clone()).collect::<Vec<_>>());
    out.push_str("</svg>\n");
    out
}

/// Grouped bar chart: one group per entry of `groups`, one bar per metric in
/// each group. `values[m][g]` is `(mean, std)` of metric `m` in group `g`.
pub fn grouped_bars(
    title: &str,
    groups: &[String],
    metrics: &[String],
    values: &[Vec<(f64, f64)>],
    stamp: Option<&str>,
) -> String {
    let top = values.iter().flatten().map(|(m, s)| m + s).fold(0.0_f64, f64::max);
    let y = (0.0, if top > 0.0 { top * 1.1 } else { 1.0 });
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let py = |v: f64| y1 - (y1 - y0) * (v - y.0) / (y.1 - y.0);
    let slot = (x1 - x0) / groups.len().max(1) as f64;
    let bar = slot * 0.8 / metrics.len().max(1) as f64;

    let mut out = String::new();
    header(&mut out, title, stamp);
    axes(&mut out, "variant", "value", y);
    for (g, name) in groups.iter().enumerate() {
        let gx = x0 + slot * g as f64 + slot * 0.1;
        for (m, series) in values.iter().enumerate() {
            let (mean, std) = series[g];
            let bx = gx + bar * m as f64;
            let _ = writeln!(
                out,
                r#"<rect x="{bx:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                py(mean.max(0.0)),
                bar * 0.9,
                (py(0.0) - py(mean.max(0.0))).max(0.0),
                PALETTE[m % PALETTE.len()]
            );
            if std > 0.0 {
                let cx = bx + bar * 0.45;
                let _ = writeln!(
                    out,
                    r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="black"/>"#,
                    py((mean - std).max(0.0)),
                    py(mean + std)
                );
            }
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            x0 + slot * (g as f64 + 0.5),
            y1 + 18.0,
            escape(name)
        );
    }
    legend(&mut out, metrics);
    out.push_str("</svg>\n");
    out
}
