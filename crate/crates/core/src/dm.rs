//! The operator `D^m = 2 - 2 d/dm + d^2/dm^2`, evaluated at `m = 1`.
//!
//! The parameter `m` scales the conjugate length of a kernel, `a = m a0`, so a
//! kernel family is a scalar function of `m` together with (optionally) its
//! analytic first and second derivatives.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{dynamic_parts, in_light_cone, shifted_sine, KernelQuery, DEFAULT_EXCLUSION_REL};
use crate::numeric::central_derivatives;
use crate::specfun::aux_fg;

type Channel = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A kernel as a function of `m`.
#[derive(Clone)]
pub struct MFamily {
    eval: Channel,
    d1: Option<Channel>,
    d2: Option<Channel>,
    /// Typical magnitude; floors the denominator of relative comparisons.
    pub scale_hint: f64,
    /// Distance in `m` over which the family stays smooth (at most 1); the
    /// finite-difference step is `DmOptions::step` times this.
    pub step_scale: f64,
}

impl fmt::Debug for MFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MFamily")
            .field("analytic_d1", &self.d1.is_some())
            .field("analytic_d2", &self.d2.is_some())
            .field("scale_hint", &self.scale_hint)
            .field("step_scale", &self.step_scale)
            .finish()
    }
}

impl MFamily {
    /// Family without analytic derivatives.
    pub fn new(eval: impl Fn(f64) -> f64 + Send + Sync + 'static, scale_hint: f64) -> Self {
        Self { eval: Arc::new(eval), d1: None, d2: None, scale_hint, step_scale: 1.0 }
    }

    pub fn with_step_scale(mut self, step_scale: f64) -> Self {
        self.step_scale = step_scale;
        self
    }

    pub fn with_derivatives(
        mut self,
        d1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.d1 = Some(Arc::new(d1));
        self.d2 = Some(Arc::new(d2));
        self
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c, c.abs()).with_derivatives(|_| 0.0, |_| 0.0)
    }

    /// `sum_i coeffs[i] m^i`.
    pub fn polynomial(coeffs: &[f64]) -> Self {
        let c: Arc<[f64]> = coeffs.into();
        let horner = |c: &[f64], m: f64| c.iter().rev().fold(0.0, |acc, &ci| acc * m + ci);
        let d1c: Arc<[f64]> = c.iter().enumerate().skip(1).map(|(i, &ci)| i as f64 * ci).collect();
        let d2c: Arc<[f64]> = d1c.iter().enumerate().skip(1).map(|(i, &ci)| i as f64 * ci).collect();
        let scale = c.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        let c0 = c.clone();
        Self::new(move |m| horner(&c0, m), scale)
            .with_derivatives(move |m| horner(&d1c, m), move |m| horner(&d2c, m))
    }

    pub fn eval(&self, m: f64) -> f64 {
        (self.eval)(m)
    }

    pub fn has_analytic(&self) -> bool {
        self.d1.is_some() && self.d2.is_some()
    }

    /// `alpha F + beta G`; analytic channels survive only if both have them.
    pub fn linear_combination(alpha: f64, f: &MFamily, beta: f64, g: &MFamily) -> MFamily {
        let combine = |x: &Channel, y: &Channel| -> Channel {
            let (x, y) = (x.clone(), y.clone());
            Arc::new(move |m| alpha * x(m) + beta * y(m))
        };
        MFamily {
            eval: combine(&f.eval, &g.eval),
            d1: f.d1.as_ref().zip(g.d1.as_ref()).map(|(x, y)| combine(x, y)),
            d2: f.d2.as_ref().zip(g.d2.as_ref()).map(|(x, y)| combine(x, y)),
            scale_hint: alpha.abs() * f.scale_hint + beta.abs() * g.scale_hint,
            step_scale: f.step_scale.min(g.step_scale),
        }
    }

    pub fn scaled(&self, alpha: f64) -> MFamily {
        MFamily::linear_combination(alpha, self, 0.0, &MFamily::constant(0.0))
    }

    /// Same family with the analytic channels dropped.
    pub fn without_derivatives(&self) -> MFamily {
        MFamily { d1: None, d2: None, ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DmMode {
    Analytic,
    FiniteDifference,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmResult {
    pub value: f64,
    pub method: DmMode,
    /// `|analytic - fd| / max(|analytic|, scale_hint)`; zero unless both ran.
    pub discrepancy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmOptions {
    /// Central-difference step in `m` for a family with unit step scale.
    pub step: f64,
    pub richardson_levels: usize,
    pub cross_check_tol: f64,
}

impl Default for DmOptions {
    fn default() -> Self {
        Self { step: 5e-3, richardson_levels: 1, cross_check_tol: 1e-6 }
    }
}

pub fn apply_dm(family: &MFamily, mode: DmMode) -> Result<DmResult> {
    apply_dm_with(family, mode, &DmOptions::default())
}

pub fn apply_dm_with(family: &MFamily, mode: DmMode, opts: &DmOptions) -> Result<DmResult> {
    let analytic = || -> Result<f64> {
        match (&family.d1, &family.d2) {
            (Some(d1), Some(d2)) => Ok(2.0 * family.eval(1.0) - 2.0 * d1(1.0) + d2(1.0)),
            (None, _) => Err(Error::MissingDerivative("d/dm")),
            (_, None) => Err(Error::MissingDerivative("d2/dm2")),
        }
    };
    let fd = || {
        let f = |m: f64| family.eval(m);
        let (d1, d2) = central_derivatives(&f, 1.0, opts.step * family.step_scale, opts.richardson_levels);
        2.0 * family.eval(1.0) - 2.0 * d1 + d2
    };
    match mode {
        DmMode::Analytic => Ok(DmResult { value: analytic()?, method: mode, discrepancy: 0.0 }),
        DmMode::FiniteDifference => Ok(DmResult { value: fd(), method: mode, discrepancy: 0.0 }),
        DmMode::Both => {
            let a = analytic()?;
            let n = fd();
            let discrepancy = (a - n).abs() / a.abs().max(family.scale_hint).max(f64::MIN_POSITIVE);
            if !(discrepancy <= opts.cross_check_tol) {
                return Err(Error::CrossCheck { discrepancy, tolerance: opts.cross_check_tol });
            }
            Ok(DmResult { value: a, method: mode, discrepancy })
        }
    }
}

/// `m -> S(m a0, beta)`.
pub fn kernel_family_static(a0: f64, beta: f64) -> Result<MFamily> {
    crate::kernels::static_kernel(a0, beta)?;
    let x0 = a0 * beta;
    let fg = move |m: f64| aux_fg(m * x0).map(|(f, g)| (f.value, g.value)).unwrap_or((f64::NAN, f64::NAN));
    let scale = fg(1.0).0.abs();
    // d/dm f(m x0) = -x0 g, d2/dm2 = x0^2 (1/x - f)
    Ok(MFamily::new(move |m| fg(m).0, scale).with_derivatives(
        move |m| -x0 * fg(m).1,
        move |m| {
            let x = m * x0;
            x0 * x0 * (1.0 / x - fg(m).0)
        },
    ))
}

/// `m -> C(m a0, beta, q, tau)` with `a0 = query.a`. Refuses queries inside
/// the light-cone exclusion window.
pub fn kernel_family_dynamic(query: &KernelQuery) -> Result<MFamily> {
    query.validate()?;
    if query.tau == 0.0 {
        return kernel_family_static(query.a, query.beta);
    }
    if in_light_cone(query.a, query.tau, DEFAULT_EXCLUSION_REL) {
        return Err(crate::error::domain(format!(
            "dynamic family at a = {} lies inside the light-cone window of tau = {}",
            query.a, query.tau
        )));
    }
    let q = *query;
    let a0 = q.a;
    let parts = move |m: f64| {
        dynamic_parts(m * a0, &q).unwrap_or(crate::kernels::ShiftedSine {
            value: f64::NAN,
            d_alpha: f64::NAN,
            d2_alpha: f64::NAN,
            abs_err: f64::INFINITY,
        })
    };
    let plus = shifted_sine(a0 + q.tau, q.q * q.tau, q.beta)?;
    let scale = plus.value.abs().max(aux_fg(a0 * q.beta)?.0.value.abs());
    Ok(MFamily::new(move |m| parts(m).value, scale)
        .with_derivatives(move |m| a0 * parts(m).d_alpha, move |m| a0 * a0 * parts(m).d2_alpha)
        .with_step_scale(((a0 - q.tau).abs() / a0).min(1.0)))
}

/// `D^m f(m x)` at `m = 1` written in `x` alone:
/// `2 f - 2 x f' + x^2 f'' = 2 f + 2 x g + x - x^2 f`.
pub fn dm_static_xform(x: f64) -> Result<f64> {
    let (f, g) = aux_fg(x)?;
    Ok(2.0 * f.value + 2.0 * x * g.value + x - x * x * f.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_cases() {
        // Differences carry rounding noise of order eps / h^2.
        for (mode, tol) in [(DmMode::Analytic, 1e-12), (DmMode::Both, 1e-12), (DmMode::FiniteDifference, 1e-6)] {
            let c = apply_dm(&MFamily::constant(1.7), mode).unwrap().value;
            assert!((c - 3.4).abs() < tol, "{mode:?}");
            let sq = apply_dm(&MFamily::polynomial(&[0.0, 0.0, 1.0]), mode).unwrap().value;
            assert!(sq.abs() < tol, "{mode:?} {sq}");
            let cube = apply_dm(&MFamily::polynomial(&[0.0, 0.0, 0.0, 1.0]), mode).unwrap().value;
            assert!((cube - 2.0).abs() < tol, "{mode:?} {cube}");
        }
    }

    #[test]
    fn missing_channels() {
        let fam = MFamily::new(|m| m * m, 1.0);
        assert!(matches!(apply_dm(&fam, DmMode::Analytic), Err(Error::MissingDerivative(_))));
        assert!(apply_dm(&fam, DmMode::FiniteDifference).is_ok());
    }

    #[test]
    fn cross_check_failure_is_reported() {
        // Deliberately wrong derivative channel.
        let fam = MFamily::new(|m| m * m, 1.0).with_derivatives(|m| m, |_| 2.0);
        assert!(matches!(apply_dm(&fam, DmMode::Both), Err(Error::CrossCheck { .. })));
    }

    #[test]
    fn static_family_examples() {
        let fam = kernel_family_static(2.0, 1.0).unwrap();
        let f2 = aux_fg(2.0).unwrap();
        assert_eq!(fam.eval(1.0), f2.0.value);
        let d1 = fam.d1.as_ref().unwrap()(1.0);
        assert!((d1 + 2.0 * f2.1.value).abs() < 1e-15);
        let (fd1, _) = central_derivatives(&|m| fam.eval(m), 1.0, 1e-3, 2);
        assert!((fd1 - d1).abs() < 1e-6 * d1.abs());
    }

    #[test]
    fn xform_matches_family() {
        for (a0, beta) in [(2.0, 1.0), (2.0, 1e-3), (0.4, 3.0), (100.0, 1.0)] {
            let v = apply_dm(&kernel_family_static(a0, beta).unwrap(), DmMode::Analytic).unwrap().value;
            let x = dm_static_xform(a0 * beta).unwrap();
            assert!((v - x).abs() <= 1e-10 * x.abs(), "{a0} {beta}: {v} vs {x}");
        }
    }

    #[test]
    fn dynamic_at_tau_zero_is_static() {
        let s = kernel_family_static(2.0, 1.3).unwrap();
        let d = kernel_family_dynamic(&KernelQuery::new(2.0, 1.3, 1.3, 0.0)).unwrap();
        for i in 0..=20 {
            let m = 0.9 + 0.01 * i as f64;
            assert_eq!(s.eval(m), d.eval(m));
        }
    }

    #[test]
    fn dynamic_family_cross_check() {
        for &(a, beta, q, tau) in &[(2.0, 1.0, 1.0, 0.8), (2.0, 1.2, 1.0, 3.0), (1.6, 0.5, 1.0, 1.0), (2.0, 1.0, 1.0, 200.0)] {
            let fam = kernel_family_dynamic(&KernelQuery::new(a, beta, q, tau)).unwrap();
            let r = apply_dm(&fam, DmMode::Both).unwrap();
            assert!(r.discrepancy <= 1e-6, "{a} {tau}: {r:?}");
        }
        assert!(kernel_family_dynamic(&KernelQuery::new(2.0, 1.0, 1.0, 2.0005)).is_err());
    }

    #[test]
    fn linearity() {
        let f = kernel_family_static(2.0, 1.0).unwrap();
        let g = kernel_family_dynamic(&KernelQuery::new(2.0, 1.0, 1.0, 0.7)).unwrap();
        let h = MFamily::linear_combination(0.3, &f, -1.7, &g);
        let lhs = apply_dm(&h, DmMode::Analytic).unwrap().value;
        let rhs = 0.3 * apply_dm(&f, DmMode::Analytic).unwrap().value - 1.7 * apply_dm(&g, DmMode::Analytic).unwrap().value;
        assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs());
    }
}
