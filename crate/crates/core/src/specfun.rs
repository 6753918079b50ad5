//! Sine and cosine integrals, the auxiliary functions built from them, and
//! the complex time window `F(omega, t) = (exp(i omega t) - 1) / (i omega)`.
//!
//! The auxiliary functions are
//!
//! ```text
//! f(x) = Ci(x) sin x + [pi/2 - Si(x)] cos x = int_0^inf sin t / (t + x) dt
//! g(x) = -Ci(x) cos x + [pi/2 - Si(x)] sin x = int_0^inf cos t / (t + x) dt
//! ```
//!
//! with `f' = -g` and `g' = f - 1/x`.
//!
//! Two regimes:
//! * `|x| <= 4`: Maclaurin series for `Si` and `Ci - gamma - ln x`; `f`, `g`
//!   follow from their definitions.
//! * `x > 4`: `g - i f = exp(ix) E1(ix)` from the continued fraction of the
//!   exponential integral (modified Lentz). `Si` and `Ci` are then recovered
//!   from `f` and `g`, so neither branch suffers cancellation at large `x`.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::error::{domain, Result};

/// Euler-Mascheroni constant.
#[allow(clippy::excessive_precision)]
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;

/// Boundary between the series and continued-fraction regimes.
pub const SERIES_LIMIT: f64 = 4.0;

const EPS: f64 = f64::EPSILON;
const MAX_TERMS: usize = 200;

/// Value of an auxiliary function together with a conservative bound on its
/// absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxValue {
    pub value: f64,
    pub abs_err_estimate: f64,
}

/// `F(omega, t)` split into real and imaginary parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowValue {
    pub re: f64,
    pub im: f64,
}

impl WindowValue {
    pub fn to_complex(self) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.re, self.im)
    }

    pub fn norm(self) -> f64 {
        self.re.hypot(self.im)
    }
}

/// Series for `Si(x)` and `Ci(x) - gamma - ln x`, valid (and accurate) for
/// `|x| <= 4`.
fn small_series(x: f64) -> (f64, f64) {
    let x2 = x * x;

    let mut term = x;
    let mut si = x;
    for n in 1..MAX_TERMS {
        let k = (2 * n) as f64;
        term *= -x2 / (k * (k + 1.0));
        let contrib = term / (k + 1.0);
        si += contrib;
        if contrib.abs() <= EPS * si.abs() {
            break;
        }
    }

    let mut term = 1.0;
    let mut cin = 0.0;
    for n in 1..MAX_TERMS {
        let k = (2 * n) as f64;
        term *= -x2 / ((k - 1.0) * k);
        let contrib = term / k;
        cin += contrib;
        if contrib.abs() <= EPS * cin.abs() {
            break;
        }
    }
    (si, cin)
}

/// `exp(ix) E1(ix) = g(x) - i f(x)` by the continued fraction
/// `1/(z+1- 1/(z+3- 4/(z+5- ...)))` at `z = ix`. Returns `(f, g, rel_err)`.
fn continued_fraction(x: f64) -> (f64, f64, f64) {
    use num_complex::Complex64;
    const TINY: f64 = 1e-300;

    let mut b = Complex64::new(1.0, x);
    let mut c = Complex64::new(1.0 / TINY, 0.0);
    let mut d = b.inv();
    let mut h = d;
    let mut last = f64::INFINITY;
    for i in 2..=MAX_TERMS {
        let a = -(((i - 1) * (i - 1)) as f64);
        b += 2.0;
        d = (d * a + b).inv();
        c = b + c.inv() * a;
        let del = c * d;
        h *= del;
        last = (del - 1.0).norm();
        if last < EPS {
            break;
        }
    }
    (-h.im, h.re, last.max(EPS))
}

/// `(Si, Ci, f, g)` for `x > 0` with absolute error bounds on `f` and `g`.
fn evaluate(x: f64) -> (f64, f64, AuxValue, AuxValue) {
    debug_assert!(x > 0.0);
    let (s, c) = x.sin_cos();
    if x <= SERIES_LIMIT {
        let (si, cin) = small_series(x);
        let ci = EULER_GAMMA + x.ln() + cin;
        let p = FRAC_PI_2 - si;
        let f = ci * s + p * c;
        let g = -ci * c + p * s;
        // Series terms stay below ~10 in magnitude up to x = 4.
        let err = 64.0 * EPS * (1.0 + ci.abs() + p.abs());
        (si, ci, AuxValue { value: f, abs_err_estimate: err }, AuxValue { value: g, abs_err_estimate: err })
    } else if x.is_infinite() {
        let zero = AuxValue { value: 0.0, abs_err_estimate: 0.0 };
        (FRAC_PI_2, 0.0, zero, zero)
    } else {
        let (f, g, rel) = continued_fraction(x);
        let si = FRAC_PI_2 - f * c - g * s;
        let ci = f * s - g * c;
        let scale = f.hypot(g);
        let err = 16.0 * rel * scale;
        (si, ci, AuxValue { value: f, abs_err_estimate: err }, AuxValue { value: g, abs_err_estimate: err })
    }
}

/// `Si(x) = int_0^x sin(u)/u du`. Odd in `x`; total on finite and infinite
/// inputs.
pub fn sine_integral(x: f64) -> f64 {
    if x.is_nan() {
        return x;
    }
    if x == 0.0 {
        return 0.0;
    }
    let si = evaluate(x.abs()).0;
    if x < 0.0 {
        -si
    } else {
        si
    }
}

/// `Ci(x) = gamma + ln x + int_0^x (cos u - 1)/u du` for `x > 0`.
pub fn cosine_integral(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(domain(format!("Ci requires x > 0, got {x}")));
    }
    Ok(evaluate(x).1)
}

pub fn aux_f(x: f64) -> Result<AuxValue> {
    aux_fg(x).map(|(f, _)| f)
}

pub fn aux_g(x: f64) -> Result<AuxValue> {
    aux_fg(x).map(|(_, g)| g)
}

/// Both auxiliary functions from one evaluation.
pub fn aux_fg(x: f64) -> Result<(AuxValue, AuxValue)> {
    if !(x > 0.0) {
        return Err(domain(format!("auxiliary functions require x > 0, got {x}")));
    }
    let (_, _, f, g) = evaluate(x);
    Ok((f, g))
}

/// `F(omega, t) = (exp(i omega t) - 1) / (i omega)`.
///
/// Written as `sin(wt)/w + i 2 sin^2(wt/2)/w`; for `|omega t| < 1e-6` the
/// series `t (1 + i omega t / 2 - (omega t)^2 / 6)` is used instead.
pub fn window_function(omega: f64, t: f64) -> WindowValue {
    let phase = omega * t;
    if phase.abs() < 1e-6 {
        return WindowValue { re: t * (1.0 - phase * phase / 6.0), im: t * phase / 2.0 };
    }
    let half = (0.5 * phase).sin();
    WindowValue { re: phase.sin() / omega, im: 2.0 * half * half / omega }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    // 30-digit reference values (independent arbitrary-precision evaluation),
    // columns: x, Si, Ci, f, g.
    #[allow(clippy::excessive_precision)]
    const REFERENCE: &[(f64, f64, f64, f64, f64)] = &[
        (0.5, 0.49310741804306668916, -0.17778407880661290134, 0.86052676572615856228, 0.67269179286854911156),
        (1.0, 0.94608307036718301494, 0.33740392290096813466, 0.62144962423581335764, 0.34337796155642703283),
        (2.0, 1.6054129768026948486, 0.4229808287748649957, 0.39902098859418384689, 0.14454530303733242046),
        (4.0, 1.7582031389490530581, -0.14098169788693041164, 0.22919256802452697974, 0.049678155593656750529),
        (10.0, 1.6583475942188740493, -0.045456433004455372635, 0.098191035010170168733, 0.0094885390163548074071),
        (50.0, 1.5516170724859358947, -0.0056283863241163054402, 0.019984075898337289911, 0.00039904755453781961755),
        (100.0, 1.5622254668890562934, -0.0051488251426104921444, 0.0099980023928399618249, 0.000099940119499589493169),
        (1000.0, 1.5702331219687712181, 0.000826315511090682282, 0.00099999800002399928004, 9.9999400011999496036e-7),
    ];

    #[test]
    fn matches_reference_values() {
        for &(x, si, ci, f, g) in REFERENCE {
            assert!((sine_integral(x) - si).abs() <= 2e-15 * si.abs().max(1.0), "Si({x})");
            assert!((cosine_integral(x).unwrap() - ci).abs() <= 4e-15, "Ci({x})");
            let (fv, gv) = aux_fg(x).unwrap();
            assert!((fv.value - f).abs() <= 1e-14 * f, "f({x}): {} vs {f}", fv.value);
            assert!((gv.value - g).abs() <= 1e-13 * g, "g({x}): {} vs {g}", gv.value);
            assert!((fv.value - f).abs() <= fv.abs_err_estimate, "f({x}) error bound");
            assert!((gv.value - g).abs() <= gv.abs_err_estimate, "g({x}) error bound");
        }
    }

    #[test]
    fn trivial_values() {
        assert_eq!(sine_integral(0.0), 0.0);
        assert_eq!(sine_integral(f64::INFINITY), FRAC_PI_2);
        assert_eq!(sine_integral(f64::NEG_INFINITY), -FRAC_PI_2);
        assert!(cosine_integral(0.0).is_err());
        assert!(cosine_integral(-1.0).is_err());
        assert!(aux_f(0.0).is_err());
        assert!(aux_g(-2.0).is_err());
    }

    #[test]
    fn large_argument_bounds() {
        assert!((sine_integral(50.0) - PI / 2.0).abs() <= 1.0 / 50.0);
        assert!(cosine_integral(50.0).unwrap().abs() <= 1.0 / 50.0);
        let x = 1e3;
        assert!((aux_f(x).unwrap().value * x - 1.0).abs() < 0.01);
    }

    #[test]
    fn small_argument_limits() {
        let f = aux_f(1e-8).unwrap().value;
        assert!((f - FRAC_PI_2).abs() < 1e-6);
        // Ci(x) - gamma - ln x = O(x^2)
        let x = 1e-5;
        assert!((cosine_integral(x).unwrap() - EULER_GAMMA - x.ln()).abs() < x * x);
    }

    #[test]
    fn branches_agree_at_seam() {
        for x in [3.999, 4.0, 4.001] {
            let (si, cin) = small_series(x);
            let ci = EULER_GAMMA + x.ln() + cin;
            let (s, c) = x.sin_cos();
            let f_series = ci * s + (FRAC_PI_2 - si) * c;
            let g_series = -ci * c + (FRAC_PI_2 - si) * s;
            let (f_cf, g_cf, _) = continued_fraction(x);
            assert!((f_series - f_cf).abs() < 1e-12, "f at {x}");
            assert!((g_series - g_cf).abs() < 1e-12, "g at {x}");
        }
    }

    #[test]
    fn window_examples() {
        assert_eq!(window_function(3.7, 0.0), WindowValue { re: 0.0, im: 0.0 });
        assert_eq!(window_function(0.0, 5.0), WindowValue { re: 5.0, im: 0.0 });
        let w = window_function(PI, 1.0);
        assert!(w.re.abs() < 1e-15);
        assert!((w.im - 2.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn window_matches_complex_definition() {
        use num_complex::Complex64;
        for &(omega, t) in &[(0.3, 2.0), (-4.0, 0.7), (1e-3, 1e-2), (25.0, 3.0)] {
            let z = Complex64::new(0.0, omega * t);
            let direct = (z.exp() - 1.0) / Complex64::new(0.0, omega);
            let w = window_function(omega, t).to_complex();
            assert!((w - direct).norm() < 1e-12 * t);
        }
    }

    #[test]
    fn window_series_continuity() {
        let t = 2.0;
        let below = window_function(1e-6 * (1.0 - 1e-9) / t, t);
        let above = window_function(1e-6 * (1.0 + 1e-9) / t, t);
        assert!((below.re - above.re).abs() < 1e-12);
        assert!((below.im - above.im).abs() < 1e-12);
    }
}
