//! Self-contained SVG line plots of dimensionless curves.

use std::fmt::Write;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `true` marks a diverged (hidden) point.
    pub mask: Vec<bool>,
}

impl Series {
    pub fn new(label: impl Into<String>, x: Vec<f64>, y: Vec<f64>) -> Self {
        let mask = y.iter().map(|v| !v.is_finite()).collect();
        Self { label: label.into(), x, y, mask }
    }

    pub fn with_mask(mut self, mask: Vec<bool>) -> Self {
        self.mask = mask;
        self
    }

    fn visible(&self, i: usize) -> bool {
        !self.mask.get(i).copied().unwrap_or(false) && self.y[i].is_finite() && self.x[i].is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotOptions {
    pub width: u32,
    pub height: u32,
    pub title: Option<String>,
    pub x_label: String,
    pub y_label: String,
    /// Shaded x-intervals. `None` derives them from runs of masked points.
    pub windows: Option<Vec<(f64, f64)>>,
}

impl Default for PlotOptions {
    fn default() -> Self {
        Self {
            width: 800,
            height: 480,
            title: None,
            x_label: "ct/d".into(),
            y_label: "E/eps0, F d/eps0".into(),
            windows: None,
        }
    }
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 50.0;

/// Masked runs of all series, merged where they overlap. A run spans from
/// its first to its last masked abscissa.
pub fn mask_windows(series: &[Series]) -> Vec<(f64, f64)> {
    let mut runs: Vec<(f64, f64)> = Vec::new();
    for s in series {
        let mut start: Option<f64> = None;
        let mut last = 0.0;
        for i in 0..s.x.len() {
            if s.mask.get(i).copied().unwrap_or(false) {
                start.get_or_insert(s.x[i]);
                last = s.x[i];
            } else if let Some(a) = start.take() {
                runs.push((a, last));
            }
        }
        if let Some(a) = start {
            runs.push((a, last));
        }
    }
    runs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for r in runs {
        match merged.last_mut() {
            Some(m) if r.0 <= m.1 => m.1 = m.1.max(r.1),
            _ => merged.push(r),
        }
    }
    merged
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    let idx = p * (sorted.len() - 1) as f64;
    let (lo, hi) = (idx.floor() as usize, idx.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (idx - lo as f64)
}

/// y-range from the 2nd to 98th percentile of visible values (all of them
/// when fewer than 50), widened by 10% and always containing zero.
fn y_range(series: &[Series]) -> (f64, f64) {
    let mut ys: Vec<f64> =
        series.iter().flat_map(|s| (0..s.y.len()).filter(|&i| s.visible(i)).map(|i| s.y[i])).collect();
    ys.sort_by(f64::total_cmp);
    if ys.is_empty() {
        return (-1.0, 1.0);
    }
    let (mut lo, mut hi) = if ys.len() < 50 {
        (ys[0], ys[ys.len() - 1])
    } else {
        (percentile(&ys, 0.02), percentile(&ys, 0.98))
    };
    lo = lo.min(0.0);
    hi = hi.max(0.0);
    if hi - lo <= f64::EPSILON * (hi.abs() + lo.abs()).max(1e-300) {
        return (lo - 1.0, hi + 1.0);
    }
    let pad = 0.1 * (hi - lo);
    (lo - pad, hi + pad)
}

fn nice_step(span: f64, target: usize) -> f64 {
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm < 1.5 {
        1.0
    } else if norm < 3.0 {
        2.0
    } else if norm < 7.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = nice_step(hi - lo, 5);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders the series as an SVG document: axes with ticks, a zero line,
/// shaded diverged windows (`<rect class="diverged">`), one polyline per
/// visible stretch of each series and a legend.
pub fn emit_plot(series: &[Series], opts: &PlotOptions) -> Result<String> {
    if series.is_empty() || series.iter().all(|s| s.x.is_empty()) {
        return Err(Error::Empty("plot series"));
    }
    for s in series {
        if s.x.len() != s.y.len() {
            return Err(crate::error::domain(format!("series '{}' has {} x and {} y values", s.label, s.x.len(), s.y.len())));
        }
    }
    let (w, h) = (opts.width as f64, opts.height as f64);
    let xs = series.iter().flat_map(|s| s.x.iter().copied()).filter(|v| v.is_finite());
    let (mut x0, mut x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !(x1 > x0) {
        x0 -= 1.0;
        x1 += 1.0;
    }
    let (y0, y1) = y_range(series);
    let pw = w - MARGIN_L - MARGIN_R;
    let ph = h - MARGIN_T - MARGIN_B;
    let px = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| MARGIN_T + (y1 - y.clamp(y0, y1)) / (y1 - y0) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif" font-size="12">"#,
        opts.width, opts.height, opts.width, opts.height
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if let Some(title) = &opts.title {
        let _ = writeln!(svg, r#"<text x="{:.2}" y="18" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(title));
    }

    let windows = opts.windows.clone().unwrap_or_else(|| mask_windows(series));
    for (a, b) in windows {
        let (ca, cb) = (a.max(x0), b.min(x1));
        if cb < ca {
            continue;
        }
        let _ = writeln!(
            svg,
            r##"<rect class="diverged" data-x0="{a}" data-x1="{b}" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#bbbbbb" fill-opacity="0.5"/>"##,
            px(ca),
            MARGIN_T,
            (px(cb) - px(ca)).max(1.0),
            ph
        );
    }

    // Axes and ticks.
    let _ = writeln!(
        svg,
        r#"<rect class="frame" x="{MARGIN_L:.2}" y="{MARGIN_T:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
    );
    for t in ticks(x0, x1) {
        let _ = writeln!(
            svg,
            r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="black"/><text x="{0:.2}" y="{3:.2}" text-anchor="middle">{4}</text>"#,
            px(t),
            MARGIN_T + ph,
            MARGIN_T + ph + 5.0,
            MARGIN_T + ph + 18.0,
            fmt_tick(t)
        );
    }
    for t in ticks(y0, y1) {
        let _ = writeln!(
            svg,
            r#"<line x1="{0:.2}" y1="{1:.2}" x2="{2:.2}" y2="{1:.2}" stroke="black"/><text x="{3:.2}" y="{4:.2}" text-anchor="end">{5}</text>"#,
            MARGIN_L - 5.0,
            py(t),
            MARGIN_L,
            MARGIN_L - 8.0,
            py(t) + 4.0,
            fmt_tick(t)
        );
    }
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, MARGIN_L + pw / 2.0, h - 10.0, escape(&opts.x_label));
    let _ = writeln!(
        svg,
        r#"<text transform="translate(16 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        MARGIN_T + ph / 2.0,
        escape(&opts.y_label)
    );
    let _ = writeln!(
        svg,
        r#"<line class="zero" x1="{0:.2}" y1="{1:.2}" x2="{2:.2}" y2="{1:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
        MARGIN_L,
        py(0.0),
        MARGIN_L + pw
    );

    for (idx, s) in series.iter().enumerate() {
        let color = COLORS[idx % COLORS.len()];
        let mut run: Vec<String> = Vec::new();
        let flush = |run: &mut Vec<String>, svg: &mut String| {
            if !run.is_empty() {
                let _ = writeln!(
                    svg,
                    r#"<polyline class="series" data-series="{}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    idx,
                    run.join(" ")
                );
                run.clear();
            }
        };
        for i in 0..s.x.len() {
            if s.visible(i) {
                run.push(format!("{:.2},{:.2}", px(s.x[i]), py(s.y[i])));
            } else {
                flush(&mut run, &mut svg);
            }
        }
        flush(&mut run, &mut svg);
    }

    if series.len() > 1 {
        let _ = writeln!(svg, r#"<g class="legend">"#);
        for (idx, s) in series.iter().enumerate() {
            let y = MARGIN_T + 14.0 + 16.0 * idx as f64;
            let x = MARGIN_L + pw - 150.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                x,
                x + 20.0,
                COLORS[idx % COLORS.len()],
                x + 26.0,
                y + 4.0,
                escape(&s.label)
            );
        }
        let _ = writeln!(svg, "</g>");
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}
