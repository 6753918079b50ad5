//! The two oscillatory integral families behind the dynamical potentials:
//!
//! ```text
//! S(a, beta)         = int_0^inf sin(a k) / (k + beta) dk
//! C(a, beta, q, tau) = int_0^inf sin(a k) cos((k + q) tau) / (k + beta) dk
//! ```
//!
//! Both reduce to the shifted sine kernel
//! `T(alpha, phi, beta) = int_0^inf sin(alpha k + phi) / (k + beta) dk`:
//! `S = T(a, 0, beta)` and, by product-to-sum,
//! `C = [T(a + tau, q tau, beta) + T(a - tau, -q tau, beta)] / 2`.
//!
//! For `alpha > 0`, substituting `u = k + beta` gives
//! `T = cos(phi - x)[pi/2 - Si(x)] - sin(phi - x) Ci(x)` with `x = alpha beta`,
//! which collapses to `T = f(x) cos(phi) + g(x) sin(phi)` in terms of the
//! auxiliary functions. Negative `alpha` uses `T(alpha, phi) = -T(-alpha, -phi)`;
//! at `alpha = 0` the integral diverges logarithmically unless `sin(phi) = 0`.
//! In `C` that happens at `a = tau`, the light cone (atom-mirror round trip).
//!
//! [`regulated_quadrature`] evaluates the same integrals without any special
//! functions: the integrand is damped by `exp(-eps k)`, integrated panel by
//! panel, and the results are extrapolated to `eps -> 0`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, require_nonnegative, require_positive, Error, Result};
use crate::numeric::{extrapolate_to_zero, integrate_adaptive, ordered_map, pairwise_sum};
use crate::specfun::{aux_fg, cosine_integral, sine_integral};

/// Default light-cone exclusion: `|a - tau| < 1e-3 a` is flagged diverged.
pub const DEFAULT_EXCLUSION_REL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelQuery {
    /// Conjugate length, e.g. `2 m d`.
    pub a: f64,
    /// Denominator shift (`k0` or `k0'`).
    pub beta: f64,
    /// Cosine frequency shift (always the post-quench `k0`).
    pub q: f64,
    /// `c t`.
    pub tau: f64,
}

impl KernelQuery {
    pub fn new(a: f64, beta: f64, q: f64, tau: f64) -> Self {
        Self { a, beta, q, tau }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("a", self.a)?;
        require_positive("beta", self.beta)?;
        require_positive("q", self.q)?;
        require_nonnegative("tau", self.tau)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelResult {
    pub value: f64,
    pub err_estimate: f64,
    /// `|a - tau|`
    pub light_cone_distance: f64,
    /// Set when the light-cone distance is inside the exclusion window; the
    /// value is then not meaningful.
    pub diverged: bool,
}

pub fn light_cone_distance(a: f64, tau: f64) -> f64 {
    (a - tau).abs()
}

/// `true` if `|a - tau| < exclusion_rel * a`.
pub fn in_light_cone(a: f64, tau: f64, exclusion_rel: f64) -> bool {
    light_cone_distance(a, tau) < exclusion_rel * a
}

/// `T(alpha, phi, beta)` and its first two `alpha` derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftedSine {
    pub value: f64,
    pub d_alpha: f64,
    pub d2_alpha: f64,
    pub abs_err: f64,
}

/// Closed form of `T(alpha, phi, beta)` with derivatives in `alpha`.
///
/// With `x = alpha beta > 0`:
/// `T_x = f sin(phi) - g cos(phi) - sin(phi)/x` and
/// `T_xx = -T + cos(phi)/x + sin(phi)/x^2`.
pub fn shifted_sine(alpha: f64, phi: f64, beta: f64) -> Result<ShiftedSine> {
    require_positive("beta", beta)?;
    if !alpha.is_finite() || !phi.is_finite() {
        return Err(domain(format!("shifted sine kernel needs finite arguments, got alpha={alpha}, phi={phi}")));
    }
    if alpha == 0.0 {
        if phi.sin() == 0.0 {
            return Ok(ShiftedSine { value: 0.0, d_alpha: f64::NAN, d2_alpha: f64::NAN, abs_err: 0.0 });
        }
        return Err(domain("shifted sine kernel diverges logarithmically at alpha = 0"));
    }
    if alpha < 0.0 {
        // T(alpha, phi) = -T(|alpha|, -phi): odd under (alpha, phi) -> (-alpha, -phi),
        // so the first alpha-derivative is even and the second odd.
        let r = shifted_sine(-alpha, -phi, beta)?;
        return Ok(ShiftedSine { value: -r.value, d_alpha: r.d_alpha, d2_alpha: -r.d2_alpha, abs_err: r.abs_err });
    }
    let x = alpha * beta;
    let (f, g) = aux_fg(x)?;
    let (s, c) = phi.sin_cos();
    let value = f.value * c + g.value * s;
    let t_x = f.value * s - g.value * c - s / x;
    let t_xx = -value + c / x + s / (x * x);
    Ok(ShiftedSine {
        value,
        d_alpha: beta * t_x,
        d2_alpha: beta * beta * t_xx,
        abs_err: f.abs_err_estimate * c.abs() + g.abs_err_estimate * s.abs(),
    })
}

/// The same kernel written with `Si`/`Ci` directly (no auxiliary functions).
/// Kept as an algebraically distinct route for cross-checks.
pub fn shifted_sine_sici(alpha: f64, phi: f64, beta: f64) -> Result<f64> {
    require_positive("beta", beta)?;
    if alpha < 0.0 {
        return shifted_sine_sici(-alpha, -phi, beta).map(|v| -v);
    }
    let x = alpha * beta;
    let psi = phi - x;
    Ok(psi.cos() * (std::f64::consts::FRAC_PI_2 - sine_integral(x)) - psi.sin() * cosine_integral(x)?)
}

pub fn static_kernel(a: f64, beta: f64) -> Result<KernelResult> {
    require_positive("a", a)?;
    require_positive("beta", beta)?;
    let (f, _) = aux_fg(a * beta)?;
    Ok(KernelResult { value: f.value, err_estimate: f.abs_err_estimate, light_cone_distance: a, diverged: false })
}

pub fn dynamic_kernel(query: &KernelQuery) -> Result<KernelResult> {
    dynamic_kernel_with(query, DEFAULT_EXCLUSION_REL)
}

pub fn dynamic_kernel_with(query: &KernelQuery, exclusion_rel: f64) -> Result<KernelResult> {
    query.validate()?;
    if query.tau == 0.0 {
        return static_kernel(query.a, query.beta);
    }
    let parts = dynamic_parts(query.a, query)?;
    let distance = light_cone_distance(query.a, query.tau);
    Ok(KernelResult {
        value: parts.value,
        err_estimate: parts.abs_err,
        light_cone_distance: distance,
        diverged: distance < exclusion_rel * query.a,
    })
}

/// `C` and its `a`-derivatives at conjugate length `a` (other arguments
/// taken from `query`). On the light cone itself the value is NaN.
pub(crate) fn dynamic_parts(a: f64, query: &KernelQuery) -> Result<ShiftedSine> {
    let phase = query.q * query.tau;
    let plus = shifted_sine(a + query.tau, phase, query.beta)?;
    let minus = match shifted_sine(a - query.tau, -phase, query.beta) {
        Ok(v) => v,
        Err(Error::Domain(_)) if a == query.tau => {
            ShiftedSine { value: f64::NAN, d_alpha: f64::NAN, d2_alpha: f64::NAN, abs_err: f64::INFINITY }
        }
        Err(e) => return Err(e),
    };
    Ok(ShiftedSine {
        value: 0.5 * (plus.value + minus.value),
        d_alpha: 0.5 * (plus.d_alpha + minus.d_alpha),
        d2_alpha: 0.5 * (plus.d2_alpha + minus.d2_alpha),
        abs_err: 0.5 * (plus.abs_err + minus.abs_err),
    })
}

/// Settings for the regulated-quadrature oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct RegulatorSettings {
    /// Regulators `eps` (length units), strictly decreasing. `None` selects
    /// [`default_eps_sequence`].
    pub eps_sequence: Option<Vec<f64>>,
    /// Relative tolerance on the extrapolated value.
    pub rel_tol: f64,
    /// Dimensionless truncation tolerance for the `exp(-eps k)` tail.
    pub tail_tol: f64,
    pub exclusion_rel: f64,
}

impl Default for RegulatorSettings {
    fn default() -> Self {
        Self { eps_sequence: None, rel_tol: 1e-8, tail_tol: 1e-16, exclusion_rel: DEFAULT_EXCLUSION_REL }
    }
}

/// Scale-aware regulator sequence `0.2 R 2^-j`, `j = 0..6`, where `R` is the
/// smallest oscillation frequency (in `k`) present in the integrand. The
/// regulated integral is analytic in `eps` with branch points at `eps = +-i R`,
/// so polynomial extrapolation converges geometrically from this range.
pub fn default_eps_sequence(query: &KernelQuery, include_time_part: bool) -> Vec<f64> {
    let r = if include_time_part && query.tau > 0.0 {
        let slow = light_cone_distance(query.a, query.tau).max(DEFAULT_EXCLUSION_REL * query.a);
        slow.min(query.a + query.tau)
    } else {
        query.a
    };
    (0..7).map(|j| 0.2 * r * 0.5f64.powi(j)).collect()
}

pub(crate) fn check_eps_sequence(eps: &[f64]) -> Result<()> {
    if eps.len() < 3 {
        return Err(domain("regulator sequence needs at least 3 entries"));
    }
    if eps.iter().any(|&e| !(e > 0.0)) || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(domain("regulator sequence must be positive and strictly decreasing"));
    }
    Ok(())
}

/// One term `weight sin(a k) [cos(tau k + phase)] / (k + beta)` of a
/// regulated integrand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Wave {
    pub weight: f64,
    pub a: f64,
    pub beta: f64,
    /// `(tau, phase)` of the cosine factor, if any.
    pub time: Option<(f64, f64)>,
}

impl Wave {
    fn at(&self, k: f64) -> f64 {
        let s = (self.a * k).sin();
        let osc = match self.time {
            Some((tau, phase)) => s * (tau * k + phase).cos(),
            None => s,
        };
        self.weight * osc / (k + self.beta)
    }
}

/// `int_0^inf sum(waves) exp(-eps k) dk` for each `eps`.
///
/// The range is cut where `W exp(-eps K) / (eps beta_min)` falls below
/// `tail_tol` (`W` the summed weights) and split into panels of one period
/// `2 pi / max(a, tau)`, each integrated adaptively with Gauss-Kronrod 21.
/// Panel sums are reduced pairwise in panel order.
pub(crate) fn regulated_values(waves: &[Wave], eps_sequence: &[f64], tail_tol: f64) -> Vec<f64> {
    let weight: f64 = waves.iter().map(|w| w.weight.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
    let beta_min = waves.iter().map(|w| w.beta).fold(f64::INFINITY, f64::min);
    let fastest = waves.iter().map(|w| w.a.max(w.time.map_or(0.0, |t| t.0))).fold(0.0, f64::max);
    let period = 2.0 * std::f64::consts::PI / fastest;
    let panel_tol = tail_tol.max(1e-17) * weight;
    eps_sequence
        .iter()
        .map(|&eps| {
            let integrand = |k: f64| waves.iter().map(|w| w.at(k)).sum::<f64>() * (-eps * k).exp();
            let cutoff = (weight / (eps * beta_min.min(1.0) * tail_tol)).ln().max(1.0) / eps;
            let panels = (cutoff / period).ceil().max(1.0) as usize;
            let sums = ordered_map(panels, |i| {
                let lo = i as f64 * period;
                integrate_adaptive(&integrand, lo, lo + period, panel_tol).0
            });
            pairwise_sum(&sums)
        })
        .collect()
}

/// Regulated quadrature of `S` (`include_time_part = false`) or `C`
/// (`include_time_part = true`), independent of the special-function path.
///
/// For each `eps` the damped integrand is integrated over `[0, K]` with
/// `exp(-eps K) / eps` below the tail tolerance, split into panels one
/// oscillation period `2 pi / max(a, tau)` long, each integrated adaptively
/// with Gauss-Kronrod 21. Panel sums are reduced pairwise in panel order. The
/// sequence of regulated values is then extrapolated to `eps = 0`.
///
/// Near the light cone the extrapolants grow like `ln(1/eps)`; the result is
/// returned with `diverged = true` instead of an error.
pub fn regulated_quadrature(
    query: &KernelQuery,
    include_time_part: bool,
    settings: &RegulatorSettings,
) -> Result<KernelResult> {
    query.validate()?;
    let eps_sequence = match &settings.eps_sequence {
        Some(seq) => seq.clone(),
        None => default_eps_sequence(query, include_time_part),
    };
    check_eps_sequence(&eps_sequence)?;

    // Work in u = k beta: a' = a beta, tau' = tau beta, eps' = eps beta.
    let beta = query.beta;
    let time_part = include_time_part && query.tau > 0.0;
    let wave = Wave {
        weight: 1.0,
        a: query.a * beta,
        beta: 1.0,
        time: time_part.then_some((query.tau * beta, query.q * query.tau)),
    };
    let scaled: Vec<f64> = eps_sequence.iter().map(|e| e * beta).collect();
    let values = regulated_values(&[wave], &scaled, settings.tail_tol);

    let (value, err) = extrapolate_to_zero(&eps_sequence, &values);
    let distance = light_cone_distance(query.a, query.tau);
    let near_cone = time_part && distance < settings.exclusion_rel * query.a;
    let converged = err.is_finite() && err <= settings.rel_tol * value.abs().max(1e-300);
    if near_cone || (!converged && time_part && distance < 1e-2 * query.a) {
        return Ok(KernelResult { value, err_estimate: err, light_cone_distance: distance, diverged: true });
    }
    if !converged {
        return Err(Error::NonConvergence { err, tol: settings.rel_tol * value.abs() });
    }
    Ok(KernelResult { value, err_estimate: err, light_cone_distance: distance, diverged: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn light_cone_distance_examples() {
        assert_eq!(light_cone_distance(2.0, 2.0), 0.0);
        assert_eq!(light_cone_distance(2.0, 0.0), 2.0);
        assert_eq!(light_cone_distance(2.0, 5.0), 3.0);
    }

    #[test]
    fn static_kernel_examples() {
        let v = static_kernel(2.0, 1.0).unwrap();
        assert!((v.value - 0.399_020_988_594_183_8).abs() < 1e-14);
        assert!(!v.diverged);
        let far = static_kernel(1e3, 1.0).unwrap().value;
        assert!((far * 1e3 - 1.0).abs() < 0.01);
        let near = static_kernel(1e-8, 1.0).unwrap().value;
        assert!((near - std::f64::consts::FRAC_PI_2).abs() < 1e-6);
        assert!(static_kernel(0.0, 1.0).is_err());
        assert!(static_kernel(1.0, -1.0).is_err());
    }

    #[test]
    fn tau_zero_is_static_exactly() {
        for (a, beta) in [(0.5, 0.3), (2.0, 1.0), (5.0, 3.0)] {
            let s = static_kernel(a, beta).unwrap().value;
            let c = dynamic_kernel(&KernelQuery::new(a, beta, 2.0 * beta, 0.0)).unwrap().value;
            assert_eq!(s.to_bits(), c.to_bits());
        }
    }

    #[test]
    fn two_closed_forms_agree() {
        for &(alpha, phi, beta) in &[(2.0, 0.0, 1.0), (3.0, 1.3, 0.3), (-1.5, 0.7, 2.0), (0.2, -2.0, 1.0), (7.0, 11.0, 3.0)] {
            let a = shifted_sine(alpha, phi, beta).unwrap().value;
            let b = shifted_sine_sici(alpha, phi, beta).unwrap();
            assert!((a - b).abs() < 1e-13, "T({alpha},{phi},{beta}): {a} vs {b}");
        }
    }

    #[test]
    fn alpha_derivatives_match_finite_differences() {
        for &(alpha, phi, beta) in &[(2.0, 0.4, 1.0), (-1.5, 0.7, 2.0), (0.7, -2.0, 0.3)] {
            let t = |x: f64| shifted_sine(x, phi, beta).unwrap().value;
            let (d1, d2) = crate::numeric::central_derivatives(&t, alpha, 1e-3, 2);
            let r = shifted_sine(alpha, phi, beta).unwrap();
            assert!((r.d_alpha - d1).abs() < 1e-8 * d1.abs().max(1.0));
            assert!((r.d2_alpha - d2).abs() < 1e-6 * d2.abs().max(1.0));
        }
    }

    #[test]
    fn origin_behaviour() {
        assert_eq!(shifted_sine(0.0, 0.0, 1.0).unwrap().value, 0.0);
        assert!(shifted_sine(0.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn light_cone_is_flagged() {
        let r = dynamic_kernel(&KernelQuery::new(2.0, 1.0, 1.0, 2.0 + 1e-4)).unwrap();
        assert!(r.diverged);
        let r = dynamic_kernel(&KernelQuery::new(2.0, 1.0, 1.0, 2.0)).unwrap();
        assert!(r.diverged && r.value.is_nan());
        let r = dynamic_kernel(&KernelQuery::new(2.0, 1.0, 1.0, 2.1)).unwrap();
        assert!(!r.diverged && r.value.is_finite());
    }

    #[test]
    fn large_tau_decay() {
        let v = dynamic_kernel(&KernelQuery::new(2.0, 1.0, 1.0, 200.0)).unwrap().value;
        assert!(v.abs() <= 0.02);
    }

    #[test]
    fn oracle_static_example() {
        let r = regulated_quadrature(&KernelQuery::new(2.0, 1.0, 1.0, 0.0), false, &RegulatorSettings::default()).unwrap();
        assert!((r.value - 0.399_020_988_594_183_8).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn oracle_reduces_to_static_at_tau_zero() {
        let r = regulated_quadrature(&KernelQuery::new(2.0, 5.0, 5.0, 0.0), true, &RegulatorSettings::default()).unwrap();
        let f10 = crate::specfun::aux_f(10.0).unwrap().value;
        assert!((r.value - f10).abs() < 1e-9 * f10);
    }

    #[test]
    fn oracle_flags_light_cone() {
        let r = regulated_quadrature(&KernelQuery::new(1.0, 1.0, 1.0, 1.0), true, &RegulatorSettings::default()).unwrap();
        assert!(r.diverged);
    }

    #[test]
    fn oracle_rejects_bad_sequences() {
        let q = KernelQuery::new(2.0, 1.0, 1.0, 1.0);
        let s = |seq: Vec<f64>| RegulatorSettings { eps_sequence: Some(seq), ..Default::default() };
        assert!(regulated_quadrature(&q, true, &s(vec![0.1, 0.05])).is_err());
        assert!(regulated_quadrature(&q, true, &s(vec![0.1, 0.2, 0.05])).is_err());
        assert!(regulated_quadrature(&q, true, &s(vec![0.1, 0.05, -0.01])).is_err());
    }
}
