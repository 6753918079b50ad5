//! CSV, JSON, SVG and the human-readable summary.

use std::fmt::Write;

use cpdyn::cavity::ConvergenceReport;
use cpdyn::plot::{emit_plot, PlotOptions, Series};
use serde::Serialize;

use crate::config::{PlotSpec, RunConfig};
use crate::sweep::{light_cone_windows, Row, Summary};

pub const CSV_HEADER: &str = "t_over_d,energy_over_eps0,force_d_over_eps0,diverged,term1,term2,term3";

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn csv(rows: &[Row]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let term = |i: usize| r.terms.get(i).copied().flatten();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.t_over_d,
            cell(r.energy_over_eps0),
            cell(r.force_d_over_eps0),
            r.diverged,
            cell(term(0)),
            cell(term(1)),
            cell(term(2))
        );
    }
    out
}

#[derive(Serialize)]
struct JsonReport<'a> {
    config: &'a RunConfig,
    rows: &'a [Row],
    summary: &'a Summary,
}

pub fn json(cfg: &RunConfig, rows: &[Row], summary: &Summary) -> String {
    let mut s = serde_json::to_string_pretty(&JsonReport { config: cfg, rows, summary }).expect("report serializes");
    s.push('\n');
    s
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.8}")).collect::<Vec<_>>().join(", ")
}

pub fn summary_text(summary: &Summary) -> String {
    let mut out = String::new();
    if let Some(roots) = &summary.sign_changes_t_over_d {
        let _ = writeln!(out, "force sign changes at ct/d: [{}]", fmt_list(roots));
    }
    if let Some(a) = &summary.asymptote {
        let _ = writeln!(
            out,
            "asymptote (horizon ct/d = {}): E_static/eps0 = {:.7}, sup |E - E_static|/eps0 = {:.3e} (tol {:.3e}): {}",
            a.horizon,
            a.static_energy,
            a.sup_deviation,
            a.tolerance,
            a.note
        );
    }
    if summary.low_confidence_rows > 0 {
        let _ = writeln!(out, "{} rows contain a low-confidence |z| term", summary.low_confidence_rows);
    }
    if let Some(o) = &summary.oracle {
        let _ = writeln!(
            out,
            "oracle {:?}: max_rel_dev = {:.3e} {} tol {:e} ({} compared, {} skipped): {}",
            o.kind,
            o.max_rel_dev,
            if o.passed { "<=" } else { ">" },
            o.tol,
            o.compared,
            o.skipped,
            if o.passed { "pass" } else { "FAIL" }
        );
    }
    out
}

pub fn plot(cfg: &RunConfig, spec: &PlotSpec, rows: &[Row]) -> cpdyn::Result<String> {
    let x: Vec<f64> = rows.iter().map(|r| r.t_over_d).collect();
    let mut series = Vec::new();
    let mut series_of = |label: &str, get: &dyn Fn(&Row) -> Option<f64>| {
        let y: Vec<f64> = rows.iter().map(|r| get(r).unwrap_or(f64::NAN)).collect();
        let mask: Vec<bool> = rows.iter().map(|r| r.diverged || get(r).is_none()).collect();
        series.push(Series::new(label, x.clone(), y).with_mask(mask));
    };
    if cfg.outputs.energy {
        series_of("E/eps0", &|r| r.energy_over_eps0);
    }
    if cfg.outputs.force {
        series_of("F d/eps0", &|r| r.force_d_over_eps0);
    }
    let opts = PlotOptions {
        width: spec.width,
        height: spec.height,
        title: Some(format!("{} scenario, k0 d = {}", cfg.scenario.tag(), cfg.point.x0)),
        windows: Some(light_cone_windows(cfg.scenario, &cfg.point)),
        ..PlotOptions::default()
    };
    emit_plot(&series, &opts)
}

pub const CAVITY_HEADER: &str = "l_over_d,n_max,epsilon_d,value_over_eps0,tail_over_eps0,deviation";

pub fn cavity_csv(report: &ConvergenceReport, eps0: f64) -> String {
    let mut out = String::new();
    out.push_str(CAVITY_HEADER);
    out.push('\n');
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.l,
            r.n_max,
            r.epsilon,
            r.value / eps0,
            r.tail_estimate / eps0,
            r.deviation
        );
    }
    out
}

pub fn cavity_summary(report: &ConvergenceReport, eps0: f64, tol: f64) -> String {
    format!(
        "cavity: trend {:?}; extrapolated {:.7} +- {:.1e}, continuum {:.7} (eps0 units); deviation {:.3e} {} tol {:e}: {}\n{}\n",
        report.trend,
        report.extrapolated / eps0,
        report.extrapolation_err / eps0,
        report.continuum / eps0,
        report.deviation,
        if report.deviation.abs() <= tol { "<=" } else { ">" },
        tol,
        if report.deviation.abs() <= tol { "pass" } else { "FAIL" },
        report.note
    )
}
