//! WebAssembly bindings for the browser demo in `www/`.

use cpdyn::kernels::{dynamic_kernel, regulated_quadrature, KernelQuery, RegulatorSettings};
use cpdyn::plot::{emit_plot, PlotOptions, Series};
use cpdyn::scenarios::{echo_times, energy, force_series, sign_changes, ScenarioKind, ScenarioOptions};
use cpdyn::units::PhysicalParams;
use serde_json::json;
use wasm_bindgen::prelude::*;

fn err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn setup(kind: &str, x0: f64, x0p: f64, rho: f64, t_stop: f64, count: usize) -> Result<(ScenarioKind, PhysicalParams, Vec<f64>), JsValue> {
    let kind = ScenarioKind::from_tag(kind).ok_or_else(|| err(format!("unknown scenario '{kind}'")))?;
    let params = PhysicalParams::new(1.0, x0, x0p, 1.0, rho);
    params.validate().map_err(err)?;
    if !(t_stop > 0.0) || !(2..=2000).contains(&count) {
        return Err(err("need t_stop > 0 and 2 <= count <= 2000"));
    }
    let grid = (0..count).map(|i| t_stop * i as f64 / (count - 1) as f64).collect();
    Ok((kind, params, grid))
}

/// SVG of `E/eps0` and `F d/eps0` against `ct/d` with the light-cone windows
/// shaded. Parameters are reduced: `x0 = k0 d`, `x0p = k0' d`, `rho = d'/d`.
#[wasm_bindgen]
pub fn scenario_svg(kind: &str, x0: f64, x0p: f64, rho: f64, t_stop: f64, count: usize) -> Result<String, JsValue> {
    let (kind, params, grid) = setup(kind, x0, x0p, rho, t_stop, count)?;
    let eps0 = params.eps0();
    let mut e = Vec::with_capacity(grid.len());
    for &t in &grid {
        let s = energy(kind, &params, t).map_err(err)?;
        e.push(if s.diverged { f64::NAN } else { s.energy / eps0 });
    }
    let f: Vec<f64> = force_series(kind, &params, &grid, &ScenarioOptions::default())
        .map_err(err)?
        .iter()
        .map(|s| if s.diverged { f64::NAN } else { s.force / eps0 })
        .collect();
    let windows = echo_times(kind, &params).into_iter().map(|s| (s * (1.0 - 1e-3), s * (1.0 + 1e-3))).collect();
    let opts = PlotOptions {
        title: Some(format!("{} scenario, k0 d = {x0}", kind.tag())),
        windows: Some(windows),
        ..PlotOptions::default()
    };
    emit_plot(&[Series::new("E/eps0", grid.clone(), e), Series::new("F d/eps0", grid, f)], &opts).map_err(err)
}

/// Times `ct/d` at which the force changes sign, as a JSON array.
#[wasm_bindgen]
pub fn force_sign_changes(kind: &str, x0: f64, x0p: f64, rho: f64, t_stop: f64, count: usize) -> Result<String, JsValue> {
    let (kind, params, grid) = setup(kind, x0, x0p, rho, t_stop, count)?;
    Ok(json!(sign_changes(kind, &params, &grid).map_err(err)?).to_string())
}

/// Closed-form kernel against the regulated-quadrature oracle, as JSON.
#[wasm_bindgen]
pub fn kernel_check(a: f64, beta: f64, q: f64, tau: f64) -> Result<String, JsValue> {
    let query = KernelQuery::new(a, beta, q, tau);
    let closed = dynamic_kernel(&query).map_err(err)?;
    let oracle = regulated_quadrature(&query, true, &RegulatorSettings::default()).map_err(err)?;
    let rel_dev = (closed.value - oracle.value).abs() / oracle.value.abs().max(f64::MIN_POSITIVE);
    Ok(json!({
        "closed_form": closed.value,
        "oracle": oracle.value,
        "oracle_err": oracle.err_estimate,
        "rel_dev": if closed.diverged || oracle.diverged { None } else { Some(rel_dev) },
        "diverged": closed.diverged || oracle.diverged,
        "light_cone_distance": closed.light_cone_distance,
    })
    .to_string())
}
