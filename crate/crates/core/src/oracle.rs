//! End-to-end check of the scenario energies that uses no special functions.
//!
//! Each energy term `-eps0(L) D^m [integral]` is evaluated in reduced units
//! (lengths in `d`) as a single regulated integral: the `m`-derivatives of
//! `D^m` become a fixed central-difference stencil in `m`, Richardson-combined
//! over the steps `h, h/2, h/4`, and the stencil weights multiply the
//! integrand before integration. The regulated values are extrapolated to
//! `eps -> 0` exactly as in [`crate::kernels::regulated_quadrature`].

use serde::{Deserialize, Serialize};

use crate::error::{require_nonnegative, Result};
use crate::kernels::{regulated_values, Wave, DEFAULT_EXCLUSION_REL};
use crate::numeric::{extrapolate_to_zero, richardson_even};
use crate::scenarios::ScenarioKind;
use crate::units::{eps0_at, PhysicalParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleSettings {
    /// Largest stencil step in `m`; shrunk near a light cone.
    pub fd_step: f64,
    /// Richardson halvings of the stencil step.
    pub fd_levels: usize,
    /// Number of regulators `0.2 R 2^-j`.
    pub eps_levels: usize,
    /// Extrapolation error (relative) below which a term counts as converged.
    pub rel_tol: f64,
    pub tail_tol: f64,
    pub exclusion_rel: f64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self { fd_step: 0.02, fd_levels: 2, eps_levels: 7, rel_tol: 1e-6, tail_tol: 1e-16, exclusion_rel: DEFAULT_EXCLUSION_REL }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleTerm {
    pub value: f64,
    pub err_estimate: f64,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSample {
    pub t: f64,
    pub energy: f64,
    pub err_estimate: f64,
    pub diverged: bool,
    pub terms: Vec<OracleTerm>,
}

/// `(offset, weight)` pairs such that `sum w F(1 + offset)` approximates
/// `D^m F` at `m = 1`.
pub fn dm_stencil(h: f64, levels: usize) -> Vec<(f64, f64)> {
    let n = levels + 1;
    let coef = |j: usize| {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        richardson_even(&e)
    };
    let mut out = vec![(0.0, 2.0)];
    for j in 0..n {
        let step = h * 0.5f64.powi(j as i32);
        let c = coef(j);
        // -2 (F+ - F-)/(2 step) + (F+ - 2 F0 + F-)/step^2
        out.push((step, c * (-1.0 / step + 1.0 / (step * step))));
        out.push((-step, c * (1.0 / step + 1.0 / (step * step))));
        out[0].1 += c * (-2.0 / (step * step));
    }
    out
}

struct Piece {
    coef: f64,
    beta: f64,
    time: bool,
}

/// `-eps0(L) D^m [sum_p coef_p int sin(2 m L k) [cos((k + x0) s)] / (k + beta_p) dk]`
/// in reduced units, returned in units of `mu^2 / d^3` scaled back by `d`.
fn term(length: f64, x0: f64, s: f64, pieces: &[Piece], settings: &OracleSettings) -> OracleTerm {
    let a0 = 2.0 * length;
    let distance = (a0 - s).abs();
    let timed = s > 0.0 && pieces.iter().any(|p| p.time);
    if timed && distance < settings.exclusion_rel * a0 {
        return OracleTerm { value: f64::NAN, err_estimate: f64::INFINITY, diverged: true };
    }
    // Keep the stencil a quarter of the light-cone distance away from it.
    let h = if timed { settings.fd_step.min(0.25 * distance / a0) } else { settings.fd_step };
    let stencil = dm_stencil(h, settings.fd_levels);
    let mut waves = Vec::with_capacity(stencil.len() * pieces.len());
    for &(offset, w) in &stencil {
        for p in pieces {
            waves.push(Wave {
                weight: w * p.coef,
                a: (1.0 + offset) * a0,
                beta: p.beta,
                time: p.time.then_some((s, x0 * s)),
            });
        }
    }
    let r = if timed {
        let lo = (1.0 - h) * a0;
        let hi = (1.0 + h) * a0;
        let near = if s < lo { lo - s } else if s > hi { s - hi } else { 0.0 };
        near.max(settings.exclusion_rel * a0).min(lo + s)
    } else {
        (1.0 - h) * a0
    };
    let eps: Vec<f64> = (0..settings.eps_levels).map(|j| 0.2 * r * 0.5f64.powi(j as i32)).collect();
    let values = regulated_values(&waves, &eps, settings.tail_tol);
    let (value, err) = extrapolate_to_zero(&eps, &values);
    let prefactor = -1.0 / (12.0 * std::f64::consts::PI * length.powi(3));
    let converged = err <= settings.rel_tol * value.abs();
    OracleTerm {
        value: prefactor * value,
        err_estimate: prefactor.abs() * err,
        diverged: timed && !converged && distance < 1e-2 * a0,
    }
}

/// Energy of `kind` at time `t` from the regulated-quadrature oracle.
pub fn scenario_energy(kind: ScenarioKind, params: &PhysicalParams, t: f64, settings: &OracleSettings) -> Result<OracleSample> {
    params.validate()?;
    require_nonnegative("t", t)?;
    let p = kind.effective_params(params);
    let x0 = p.k0 * p.d;
    let x0p = p.k0_prime * p.d;
    let s = p.c * t / p.d;
    let bare = |extra: bool| {
        let mut v = vec![Piece { coef: 1.0, beta: x0, time: false }, Piece { coef: -1.0, beta: x0, time: true }];
        if extra {
            v.push(Piece { coef: 1.0, beta: x0p, time: true });
        }
        v
    };
    let quench = [Piece { coef: 1.0, beta: x0p, time: true }];
    let reduced: Vec<OracleTerm> = match kind {
        ScenarioKind::Bare => vec![term(1.0, x0, s, &bare(false), settings)],
        ScenarioKind::DressedFrequencyQuench => vec![term(1.0, x0, s, &bare(true), settings)],
        ScenarioKind::DressedPositionFrequencyQuench => {
            let rho = p.d_prime / p.d;
            let zbar = 0.5 * (1.0 + rho);
            let z = 0.5 * (1.0 - rho).abs();
            let third = if z == 0.0 {
                OracleTerm { value: 0.0, err_estimate: 0.0, diverged: false }
            } else {
                term(z, x0, s, &quench, settings)
            };
            vec![term(1.0, x0, s, &bare(false), settings), term(zbar, x0, s, &quench, settings), third]
        }
    };
    // Reduced energies are in units of mu^2 / d^3.
    let unit = 12.0 * std::f64::consts::PI * eps0_at(p.mu, p.d);
    let terms: Vec<OracleTerm> = reduced
        .into_iter()
        .map(|r| OracleTerm { value: r.value * unit, err_estimate: r.err_estimate * unit, diverged: r.diverged })
        .collect();
    let diverged = terms.iter().any(|r| r.diverged);
    let energy = if diverged { f64::NAN } else { terms.iter().map(|r| r.value).sum() };
    let err_estimate = terms.iter().map(|r| r.err_estimate).sum();
    Ok(OracleSample { t, energy, err_estimate, diverged, terms })
}
