//! Deterministic standalone SVG line charts.

use std::fmt::Write as _;
use std::path::Path;

use frameprobe::metrics::select_best;
use frameprobe::{Error, Result};

use crate::report::{AblationTable, ReportTable, Transform};

pub const WIDTH: f64 = 640.0;
pub const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
}

fn nice_step(raw: f64) -> f64 {
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| s >= raw)
        .unwrap_or(10.0 * mag)
}

/// Values inside `[0, 1]` get ticks at 0, 0.25, 0.5, 0.75 and 1; anything
/// else gets about five ticks at a 1/2/2.5/5 step covering the data.
pub fn y_ticks(min: f64, max: f64) -> Vec<f64> {
    if min >= 0.0 && max <= 1.0 {
        return vec![0.0, 0.25, 0.5, 0.75, 1.0];
    }
    let (lo, hi) = if max > min { (min, max) } else { (min - 0.5, max + 0.5) };
    let step = nice_step((hi - lo) / 4.0);
    let first = (lo / step).floor() as i64;
    let last = (hi / step).ceil() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn label(v: f64) -> String {
    let r = (v * 1e6).round() / 1e6;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub fn render_svg(spec: &PlotSpec, series: &[Series]) -> Result<String> {
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    if all.is_empty() {
        return Err(Error::DegenerateInput("nothing to plot".into()));
    }
    let (mut xmin, mut xmax) = all.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    if xmin == xmax {
        xmin -= 1.0;
        xmax += 1.0;
    }
    let (ymin, ymax) = all.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let ticks = y_ticks(ymin, ymax);
    let (y0, y1) = (ticks[0], *ticks.last().expect("nonempty"));
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - xmin) / (xmax - xmin) * pw;
    let sy = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut xs: Vec<f64> = all.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() > 12 {
        xs = (0..=4).map(|k| xmin + (xmax - xmin) * k as f64 / 4.0).collect();
    }

    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(w, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        escape(&spec.title)
    );
    for &t in &ticks {
        let y = sy(t);
        let _ = writeln!(
            w,
            r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            LEFT + pw
        );
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" class="ytick">{}</text>"#,
            LEFT - 6.0,
            y + 4.0,
            label(t)
        );
    }
    for &x in &xs {
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" class="xtick">{}</text>"#,
            sx(x),
            TOP + ph + 18.0,
            label(x)
        );
    }
    let _ = writeln!(
        w,
        r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 16.0,
        escape(&spec.x_label)
    );
    let _ = writeln!(
        w,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&spec.y_label)
    );
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut pts = s.points.clone();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            w,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"{dash}/>"#,
            coords.join(" ")
        );
        if !s.dashed {
            for &(x, y) in &pts {
                let _ = writeln!(w, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, sx(x), sy(y));
            }
        }
        let ly = TOP + 14.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(
            w,
            r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"{dash}/>"#,
            ly - 4.0,
            lx + 20.0,
            ly - 4.0
        );
        let _ = writeln!(w, r#"<text x="{:.2}" y="{ly:.2}">{}</text>"#, lx + 26.0, escape(&s.label));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn emit_plot(spec: &PlotSpec, series: &[Series], path: &Path) -> Result<()> {
    std::fs::write(path, render_svg(spec, series)?).map_err(|e| Error::io_at(path, e))
}

fn baseline_series(value: f64, xs: impl Iterator<Item = f64> + Clone) -> Series {
    let lo = xs.clone().fold(f64::INFINITY, f64::min);
    let hi = xs.fold(f64::NEG_INFINITY, f64::max);
    Series {
        label: "random".into(),
        points: vec![(lo, value), (hi, value)],
        dashed: true,
    }
}

/// Per layer, the test metric of the learning rate chosen on dev.
pub fn layer_curve(table: &ReportTable) -> Vec<(f64, f64)> {
    let mut layers: Vec<u32> = table.rows.iter().map(|r| r.layer).collect();
    layers.sort_unstable();
    layers.dedup();
    layers
        .into_iter()
        .map(|l| {
            let rows: Vec<_> = table.rows.iter().copied().filter(|r| r.layer == l).collect();
            let best = select_best(&rows).expect("layer has rows");
            (l as f64, best.test_metric)
        })
        .collect()
}

pub fn sweep_plot(table: &ReportTable, title: &str) -> (PlotSpec, Vec<Series>) {
    let curve = layer_curve(table);
    let head = table.best_row().head;
    let spec = PlotSpec {
        title: title.to_string(),
        x_label: "layer".into(),
        y_label: format!("test {}", table.metric.as_str()),
    };
    let baseline = baseline_series(table.baseline, curve.iter().map(|p| p.0));
    (
        spec,
        vec![
            Series {
                label: head.to_string(),
                points: curve,
                dashed: false,
            },
            baseline,
        ],
    )
}

pub fn ablation_plot(table: &AblationTable, title: &str) -> (PlotSpec, Vec<Series>) {
    let points: Vec<(f64, f64)> = table.rows.iter().map(|r| (r.level, r.test_metric)).collect();
    let spec = PlotSpec {
        title: title.to_string(),
        x_label: match table.transform {
            Transform::Noise => "SNR (dB)".into(),
            Transform::Pitch => "pitch factor".into(),
        },
        y_label: format!("test {}", table.metric.as_str()),
    };
    let baseline = baseline_series(table.baseline, points.iter().map(|p| p.0));
    (
        spec,
        vec![
            Series {
                label: format!("{} layer {}", table.head, table.layer),
                points,
                dashed: false,
            },
            baseline,
        ],
    )
}
