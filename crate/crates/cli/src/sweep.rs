//! Grid evaluation in a worker pool, oracle comparison and the cavity check.

use cpdyn::cavity::{convergence_study, reference_ladder, CavityConfig, ConvergenceReport};
use cpdyn::oracle::{scenario_energy, OracleSettings};
use cpdyn::scenarios::{
    asymptote_check, echo_times, energy_with, force_with, sign_changes_with, static_energy, AsymptoteReport,
    ScenarioKind, ScenarioOptions,
};
use cpdyn::Error;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{OracleKind, ReducedPoint, RunConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub t_over_d: f64,
    pub energy_over_eps0: Option<f64>,
    pub force_d_over_eps0: Option<f64>,
    pub diverged: bool,
    /// Per-term energies; `None` for a diverged term.
    pub terms: Vec<Option<f64>>,
    pub low_confidence: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_energy_over_eps0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSummary {
    pub kind: OracleKind,
    pub tol: f64,
    pub max_rel_dev: f64,
    /// Grid time of the largest deviation.
    pub worst_t_over_d: Option<f64>,
    pub compared: usize,
    /// Points where either side diverged.
    pub skipped: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct Summary {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sign_changes_t_over_d: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub asymptote: Option<AsymptoteReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSummary>,
    pub low_confidence_rows: usize,
}

/// Runs `f` on a dedicated pool when a thread count is given, else on the
/// global one.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, String> {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| e.to_string())?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

fn options(cfg: &RunConfig) -> ScenarioOptions {
    ScenarioOptions { dm_mode: cfg.dm_mode, ..ScenarioOptions::default() }
}

/// Finite values with `-0` folded into `0`.
fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v + 0.0)
}

fn row(cfg: &RunConfig, t: f64) -> Result<Row, Error> {
    let params = cfg.point.params();
    let eps0 = params.eps0();
    let opts = options(cfg);
    let mut diverged = false;
    let mut terms = Vec::new();
    let mut low_confidence = false;
    let mut energy = None;
    if cfg.outputs.energy {
        let e = energy_with(cfg.scenario, &params, t, &opts)?;
        diverged |= e.diverged;
        low_confidence = e.terms.iter().any(|x| x.low_confidence);
        energy = if e.diverged { None } else { finite(e.energy / eps0) };
        terms = e.terms.iter().map(|x| if x.diverged { None } else { finite(x.value / eps0) }).collect();
    }
    let mut force = None;
    if cfg.outputs.force {
        match force_with(cfg.scenario, &params, t, &opts) {
            Ok(f) => {
                diverged |= f.diverged;
                force = if f.diverged { None } else { finite(f.force / eps0) };
            }
            Err(Error::StepCollision { .. }) => diverged = true,
            Err(e) => return Err(e),
        }
    }
    Ok(Row {
        t_over_d: t,
        energy_over_eps0: energy,
        force_d_over_eps0: force,
        diverged,
        terms,
        low_confidence,
        oracle_energy_over_eps0: None,
    })
}

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Compute(#[from] Error),
}

/// Rows in grid order plus the summary block.
pub fn evaluate(cfg: &RunConfig) -> Result<(Vec<Row>, Summary), SweepError> {
    if cfg.oracle.map(|o| o.kind) == Some(OracleKind::Cavity) && cfg.scenario != ScenarioKind::Bare {
        return Err(SweepError::Usage("the cavity oracle covers the bare scenario only".into()));
    }
    let grid = cfg.time_grid.points();
    with_threads(cfg.threads, || evaluate_in_pool(cfg, &grid)).map_err(SweepError::Usage)?
}

fn evaluate_in_pool(cfg: &RunConfig, grid: &[f64]) -> Result<(Vec<Row>, Summary), SweepError> {
    let params = cfg.point.params();
    let mut rows: Vec<Row> = grid.par_iter().map(|&t| row(cfg, t)).collect::<Result<_, _>>()?;
    let mut summary = Summary { low_confidence_rows: rows.iter().filter(|r| r.low_confidence).count(), ..Default::default() };
    if cfg.outputs.sign_changes && grid.len() >= 2 {
        summary.sign_changes_t_over_d = Some(sign_changes_with(cfg.scenario, &params, grid, &options(cfg))?);
    }
    if cfg.outputs.asymptote {
        let mut a = asymptote_check(cfg.scenario, &params, cfg.asymptote_horizon)?;
        let eps0 = params.eps0();
        a.static_energy /= eps0;
        a.sup_deviation /= eps0;
        a.tolerance /= eps0;
        summary.asymptote = Some(a);
    }
    if let Some(spec) = cfg.oracle {
        let eps0 = params.eps0();
        let reference: Vec<Option<f64>> = match spec.kind {
            OracleKind::Quadrature => grid
                .par_iter()
                .map(|&t| {
                    let s = scenario_energy(cfg.scenario, &params, t, &OracleSettings::default())?;
                    Ok(if s.diverged { None } else { finite(s.energy / eps0) })
                })
                .collect::<Result<_, Error>>()?,
            OracleKind::Cavity => grid
                .iter()
                .map(|&t| Ok(finite(convergence_study(&reference_ladder(1.0), &params, t)?.extrapolated / eps0)))
                .collect::<Result<_, Error>>()?,
            OracleKind::None => unreachable!(),
        };
        // Relative deviations are floored at 1e-3 of the stationary energy so
        // that points where the energy passes through zero stay meaningful.
        let floor = 1e-3 * (static_energy(&params)? / eps0).abs();
        let closed: Vec<Option<f64>> = match cfg.outputs.energy {
            true => rows.iter().map(|r| r.energy_over_eps0).collect(),
            false => grid
                .par_iter()
                .map(|&t| {
                    let e = energy_with(cfg.scenario, &params, t, &options(cfg))?;
                    Ok(if e.diverged { None } else { finite(e.energy / eps0) })
                })
                .collect::<Result<_, Error>>()?,
        };
        let mut s = OracleSummary {
            kind: spec.kind,
            tol: spec.tol,
            max_rel_dev: 0.0,
            worst_t_over_d: None,
            compared: 0,
            skipped: 0,
            passed: true,
        };
        for ((row, c), o) in rows.iter_mut().zip(&closed).zip(&reference) {
            row.oracle_energy_over_eps0 = *o;
            match (c, o) {
                (Some(c), Some(o)) => {
                    let dev = (c - o).abs() / o.abs().max(floor);
                    s.compared += 1;
                    if dev > s.max_rel_dev || s.worst_t_over_d.is_none() {
                        s.max_rel_dev = dev;
                        s.worst_t_over_d = Some(row.t_over_d);
                    }
                }
                _ => s.skipped += 1,
            }
        }
        s.passed = s.compared > 0 && s.max_rel_dev <= spec.tol;
        summary.oracle = Some(s);
    }
    Ok((rows, summary))
}

/// Light-cone windows `2L (1 +- exclusion)` in units of `d` for the lengths
/// that enter `kind`.
pub fn light_cone_windows(kind: ScenarioKind, point: &ReducedPoint) -> Vec<(f64, f64)> {
    let rel = cpdyn::kernels::DEFAULT_EXCLUSION_REL;
    echo_times(kind, &point.params()).into_iter().map(|s| (s * (1.0 - rel), s * (1.0 + rel))).collect()
}

/// Ladder for `cavity-check`: the reference ladder unless explicit rungs
/// `(L/d, eps d)` are given.
pub fn cavity_ladder(rungs: &[(f64, f64)], cutoff_product: f64) -> Vec<CavityConfig> {
    if rungs.is_empty() {
        reference_ladder(1.0)
    } else {
        rungs.iter().map(|&(l, e)| CavityConfig::with_cutoff_product(l, e, cutoff_product)).collect()
    }
}

pub fn cavity_check(point: &ReducedPoint, t: f64, ladder: &[CavityConfig], threads: Option<usize>) -> Result<ConvergenceReport, SweepError> {
    with_threads(threads, || convergence_study(ladder, &point.params(), t)).map_err(SweepError::Usage)?.map_err(SweepError::from)
}
