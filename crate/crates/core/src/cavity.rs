//! Discrete-mode check of the bare-state potential.
//!
//! The atom sits at `(0, 0, d)` inside a perfectly conducting cube
//! `-L/2 < x, y < L/2`, `0 < z < L`. Modes have `k = (l, m, n) pi / L` and two
//! transverse polarizations; their mode functions are
//!
//! ```text
//! f_x = sqrt(8) e_x cos[k_x (x + L/2)] sin[k_y (y + L/2)] sin[k_z z]
//! f_y = sqrt(8) e_y sin[k_x (x + L/2)] cos[k_y (y + L/2)] sin[k_z z]
//! f_z = sqrt(8) e_z sin[k_x (x + L/2)] sin[k_y (y + L/2)] cos[k_z z]
//! ```
//!
//! # Contraction table
//!
//! The second-order energy is `1/2 <0,down| H2(t) |0,down>` with
//!
//! ```text
//! H2(t) = -(2 pi i c / V) sum_k k (mu.f)^2 [S+ e^{i w0 t} + h.c.]
//!             { S+ [e^{-i w t} F(w0 + w) - e^{i w t} F*(w - w0)] - h.c. }
//!       + (4 pi i c / V) S_z sum_{k k'} sqrt(k k') (mu.f)(mu.f')
//!             [a e^{-i w t} - h.c.] { a' [e^{i w0 t} F*(w0 + w') - e^{-i w0 t} F*(w' - w0)] + h.c. }
//! ```
//!
//! and `F(w, t) = (e^{i w t} - 1) / (i w)`. On `|down>` only `S- S+` survives
//! in the first sum; in the second `<S_z> = -1/2` and the vacuum keeps only
//! `<a a'^dag> = delta`. With `e^{-i w t} F(w, t) = F*(w, t)` every surviving
//! product is a single window function. Per mode, in units of
//! `(2 pi c / V) k (mu.f)^2`, with `W1 = w + w0` and `W2 = w - w0`:
//!
//! | origin                    | coefficient | factor      |
//! |---------------------------|-------------|-------------|
//! | first sum, `F(w0 + w)`    | `-i`        | `F*(W1, t)` |
//! | first sum, `F*(w - w0)`   | `+i`        | `F(W2, t)`  |
//! | second sum, `F*(w0 + w)`  | `-i`        | `F*(W1, t)` |
//! | second sum, `F*(w' - w0)` | `+i`        | `F*(W2, t)` |
//!
//! All factors vanish at `t = 0`. The real part of the total is
//! `-2 (1 - cos W1 t) / W1`; the `W2` terms cancel. The printed operator also
//! leaves an imaginary remainder `-2 sin(W1 t)/W1 + 2 sin(W2 t)/W2`, which an
//! energy cannot carry, so only the real (Hermitian) part is kept.
//!
//! # Sum
//!
//! The isotropic average replaces `(mu.f)^2` by `mu^2/3 |f|^2`, and the
//! polarization sum `sum_j e_a e_b = delta_ab - k_a k_b / k^2` removes the
//! explicit basis from the inner loop. From `|f|^2` the `d`-independent
//! free-space part (`sin^2, cos^2 -> 1/2`) is subtracted mode by mode, leaving
//! the wall-induced part `-+ 1/2 cos(2 k_z d)`. A mode with `r` zero indices
//! is normalized by `sqrt(8 / 2^r)`, not `sqrt(8)`, so it carries weight
//! `2^-r`. The regulator `exp(-eps k)` makes the sum finite.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, require_nonnegative, require_positive, Error, Result};
use crate::numeric::{extrapolate_to_zero, ordered_map, pairwise_sum};
use crate::scenarios::bare_energy;
use crate::specfun::window_function;
use crate::units::PhysicalParams;

pub type Vec3 = [f64; 3];

/// Default cap on `2 (n_max + 1)^3`.
pub const DEFAULT_MODE_BUDGET: u64 = 4_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityConfig {
    /// Cube side.
    pub l: f64,
    /// Largest mode index per axis.
    pub n_max: u32,
    /// Regulator length in `exp(-eps k)`.
    pub epsilon: f64,
    pub mode_budget: u64,
}

impl CavityConfig {
    pub fn new(l: f64, n_max: u32, epsilon: f64) -> Self {
        Self { l, n_max, epsilon, mode_budget: DEFAULT_MODE_BUDGET }
    }

    /// Smallest `n_max` with `eps k_max >= cutoff_product`.
    pub fn with_cutoff_product(l: f64, epsilon: f64, cutoff_product: f64) -> Self {
        let n = (cutoff_product * l / (std::f64::consts::PI * epsilon)).ceil() as u32;
        Self::new(l, n, epsilon)
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("L", self.l)?;
        require_positive("epsilon", self.epsilon)?;
        if self.n_max < 1 {
            return Err(domain("n_max must be at least 1"));
        }
        Ok(())
    }

    pub fn mode_count(&self) -> u64 {
        2 * (self.n_max as u64 + 1).pow(3)
    }

    pub fn k_max(&self) -> f64 {
        self.n_max as f64 * std::f64::consts::PI / self.l
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub indices: [u32; 3],
    /// 1 or 2.
    pub polarization: u8,
    pub k_vec: Vec3,
    pub omega: f64,
    pub e_hat: Vec3,
}

impl Mode {
    pub fn new(indices: [u32; 3], polarization: u8, l: f64, c: f64) -> Result<Self> {
        let k_vec = indices.map(|i| i as f64 * std::f64::consts::PI / l);
        let (e1, e2) = polarization_basis(k_vec)?;
        let e_hat = match polarization {
            1 => e1,
            2 => e2,
            _ => return Err(domain(format!("polarization index must be 1 or 2, got {polarization}"))),
        };
        Ok(Self { indices, polarization, k_vec, omega: c * norm(k_vec), e_hat })
    }

    /// `2^-r` for `r` zero indices.
    pub fn weight(&self) -> f64 {
        index_weight(self.indices[0]) * index_weight(self.indices[1]) * index_weight(self.indices[2])
    }
}

fn index_weight(i: u32) -> f64 {
    if i == 0 {
        0.5
    } else {
        1.0
    }
}

fn norm(v: Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn unit(v: Vec3) -> Vec3 {
    let n = norm(v);
    v.map(|x| x / n)
}

/// `e1 = k x z / |k x z|` (or `k x x` when `k` is along `z`), `e2 = k x e1`.
pub fn polarization_basis(k_vec: Vec3) -> Result<(Vec3, Vec3)> {
    let n = norm(k_vec);
    if !(n > 0.0) || !n.is_finite() {
        return Err(domain("polarization basis needs a nonzero finite wavevector"));
    }
    let k = k_vec.map(|x| x / n);
    let kz = cross(k, [0.0, 0.0, 1.0]);
    let e1 = if norm(kz) > 1e-12 { unit(kz) } else { unit(cross(k, [1.0, 0.0, 0.0])) };
    let e2 = cross(k, e1);
    Ok((e1, e2))
}

/// Mode function at `r`, with the `sqrt(8)` normalization as written above.
pub fn mode_function(mode: &Mode, r: Vec3, config: &CavityConfig) -> Result<Vec3> {
    let half = 0.5 * config.l;
    if !(r[2] >= 0.0 && r[2] <= config.l && r[0].abs() <= half && r[1].abs() <= half) {
        return Err(domain(format!("position {r:?} is outside the cavity")));
    }
    let [kx, ky, kz] = mode.k_vec;
    let (sx, cx) = (kx * (r[0] + half)).sin_cos();
    let (sy, cy) = (ky * (r[1] + half)).sin_cos();
    let (sz, cz) = (kz * r[2]).sin_cos();
    let s8 = 8f64.sqrt();
    let e = mode.e_hat;
    Ok([s8 * e[0] * cx * sy * sz, s8 * e[1] * sx * cy * sz, s8 * e[2] * sx * sy * cz])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeFactor {
    /// `F*(w + w0, t)`
    SumConj,
    /// `F(w - w0, t)`
    Diff,
    /// `F*(w - w0, t)`
    DiffConj,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionTerm {
    pub coefficient: Complex64,
    pub time_factor: TimeFactor,
}

pub const CONTRACTIONS: [ContractionTerm; 4] = [
    ContractionTerm { coefficient: Complex64::new(0.0, -1.0), time_factor: TimeFactor::SumConj },
    ContractionTerm { coefficient: Complex64::new(0.0, 1.0), time_factor: TimeFactor::Diff },
    ContractionTerm { coefficient: Complex64::new(0.0, -1.0), time_factor: TimeFactor::SumConj },
    ContractionTerm { coefficient: Complex64::new(0.0, 1.0), time_factor: TimeFactor::DiffConj },
];

/// Sum of the contraction table for one mode.
pub fn contraction_sum(omega: f64, omega0: f64, t: f64) -> Complex64 {
    let sum = window_function(omega + omega0, t).to_complex();
    let diff = window_function(omega - omega0, t).to_complex();
    CONTRACTIONS
        .iter()
        .map(|term| {
            term.coefficient
                * match term.time_factor {
                    TimeFactor::SumConj => sum.conj(),
                    TimeFactor::Diff => diff,
                    TimeFactor::DiffConj => diff.conj(),
                }
        })
        .sum()
}

/// Table folded onto `F(W1)` and `F(W2)` using `Re(c F*) = Re(conj(c) F)`;
/// only real parts are needed.
#[derive(Debug, Clone, Copy)]
struct Folded {
    sum: Complex64,
    diff: Complex64,
}

fn fold() -> Folded {
    let mut f = Folded { sum: Complex64::new(0.0, 0.0), diff: Complex64::new(0.0, 0.0) };
    for term in CONTRACTIONS {
        match term.time_factor {
            TimeFactor::SumConj => f.sum += term.coefficient.conj(),
            TimeFactor::Diff => f.diff += term.coefficient,
            TimeFactor::DiffConj => f.diff += term.coefficient.conj(),
        }
    }
    f
}

impl Folded {
    fn real_part(&self, omega: f64, omega0: f64, t: f64) -> f64 {
        let re = |c: Complex64, w: f64| {
            if c == Complex64::new(0.0, 0.0) {
                return 0.0;
            }
            let f = window_function(w, t);
            c.re * f.re - c.im * f.im
        };
        re(self.sum, omega + omega0) + re(self.diff, omega - omega0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CavitySum {
    /// Energy shift (same units as `params.eps0()`).
    pub value: f64,
    /// Bound on the modes outside the index cube.
    pub tail_estimate: f64,
    pub modes: u64,
    pub warning: Option<String>,
}

/// Relative tail level above which [`CavitySum::warning`] is set.
pub const TAIL_WARNING_REL: f64 = 1e-2;

/// Discrete bare-state energy shift at time `t` for an atom at `(0, 0, d)`.
pub fn bare_expectation_sum(config: &CavityConfig, params: &PhysicalParams, t: f64) -> Result<CavitySum> {
    config.validate()?;
    params.validate()?;
    require_nonnegative("t", t)?;
    if !(params.d < config.l) {
        return Err(domain(format!("atom distance {} must be inside the cavity of side {}", params.d, config.l)));
    }
    let modes = config.mode_count();
    if modes > config.mode_budget {
        return Err(Error::ModeBudget { modes, budget: config.mode_budget });
    }

    let n = config.n_max as usize;
    let dk = std::f64::consts::PI / config.l;
    let (c, k0, d, eps) = (params.c, params.k0, params.d, config.epsilon);
    let folded = fold();
    let w: Vec<f64> = (0..=n).map(|i| index_weight(i as u32)).collect();
    let cos2z: Vec<f64> = (0..=n).map(|i| (2.0 * i as f64 * dk * d).cos()).collect();

    // Atom at x = y = 0: cos^2(l pi / 2) is 1 for even l and 0 for odd l.
    let blocks = ordered_map(n + 1, |l| {
        let (cx2, sx2) = if l % 2 == 0 { (1.0, 0.0) } else { (0.0, 1.0) };
        let kx = l as f64 * dk;
        let mut rows = Vec::with_capacity(n + 1);
        for m in 0..=n {
            let (cy2, sy2) = if m % 2 == 0 { (1.0, 0.0) } else { (0.0, 1.0) };
            let (ax, ay, az) = (cx2 * sy2, sx2 * cy2, sx2 * sy2);
            if ax == 0.0 && ay == 0.0 && az == 0.0 {
                continue;
            }
            let ky = m as f64 * dk;
            let kxy2 = kx * kx + ky * ky;
            let mut row = 0.0;
            for nz in 0..=n {
                let kz = nz as f64 * dk;
                let k2 = kxy2 + kz * kz;
                if k2 == 0.0 {
                    continue;
                }
                let k = k2.sqrt();
                // sum_j |f|^2 minus its free part: 8 * 1/2 cos(2 kz d) * (-ax px - ay py + az pz)
                let px = 1.0 - kx * kx / k2;
                let py = 1.0 - ky * ky / k2;
                let pz = 1.0 - kz * kz / k2;
                let wall = 4.0 * cos2z[nz] * (az * pz - ax * px - ay * py);
                if wall == 0.0 {
                    continue;
                }
                let time = folded.real_part(c * k, c * k0, t);
                row += w[l] * w[m] * w[nz] * k * wall * time * (-eps * k).exp();
            }
            rows.push(row);
        }
        pairwise_sum(&rows)
    });
    let sum = pairwise_sum(&blocks);
    let volume = config.l.powi(3);
    // 1/2 (2 pi c / V) (mu^2 / 3) sum k |f|^2 Re(...)
    let value = 0.5 * (2.0 * std::f64::consts::PI * c / volume) * (params.mu * params.mu / 3.0) * sum;

    let kmax = config.k_max();
    let tail_estimate = 16.0 * params.mu * params.mu / (3.0 * std::f64::consts::PI)
        * (-eps * kmax).exp()
        * (kmax * kmax / eps + 2.0 * kmax / (eps * eps) + 2.0 / eps.powi(3));
    let scale = bare_energy(params, t).ok().map(|s| s.energy.abs()).filter(|v| v.is_finite() && *v > 0.0).unwrap_or(params.eps0());
    let warning = (tail_estimate > TAIL_WARNING_REL * scale)
        .then(|| format!("tail estimate {tail_estimate:e} exceeds {TAIL_WARNING_REL} of the signal; raise n_max or epsilon"));
    Ok(CavitySum { value, tail_estimate, modes, warning })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Increasing,
    Decreasing,
    Zero,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub l: f64,
    pub n_max: u32,
    pub epsilon: f64,
    pub value: f64,
    pub tail_estimate: f64,
    /// `(value - continuum) / |continuum|`
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<StudyRow>,
    pub trend: Trend,
    pub extrapolated: f64,
    pub extrapolation_err: f64,
    pub continuum: f64,
    /// `(extrapolated - continuum) / |continuum|`
    pub deviation: f64,
    pub note: String,
}

/// Discrete sums along a ladder of configurations, extrapolated to `eps -> 0`
/// by the polynomial through all rows.
pub fn convergence_study(ladder: &[CavityConfig], params: &PhysicalParams, t: f64) -> Result<ConvergenceReport> {
    if ladder.is_empty() {
        return Err(Error::Empty("cavity ladder"));
    }
    let continuum = bare_energy(params, t)?.energy;
    let mut rows: Vec<StudyRow> = Vec::with_capacity(ladder.len());
    for cfg in ladder {
        let cached = rows.iter().zip(ladder).find(|(_, c)| *c == cfg).map(|(r, _)| r.clone());
        let row = match cached {
            Some(r) => r,
            None => {
                let s = bare_expectation_sum(cfg, params, t)?;
                StudyRow {
                    l: cfg.l,
                    n_max: cfg.n_max,
                    epsilon: cfg.epsilon,
                    value: s.value,
                    tail_estimate: s.tail_estimate,
                    deviation: (s.value - continuum) / continuum.abs(),
                }
            }
        };
        rows.push(row);
    }

    let diffs: Vec<f64> = rows.windows(2).map(|w| w[1].value - w[0].value).collect();
    let trend = if diffs.iter().all(|&d| d == 0.0) {
        Trend::Zero
    } else if diffs.iter().all(|&d| d > 0.0) {
        Trend::Increasing
    } else if diffs.iter().all(|&d| d < 0.0) {
        Trend::Decreasing
    } else {
        Trend::Mixed
    };

    let last = rows.last().map(|r| r.value).unwrap_or(f64::NAN);
    let mut eps: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    let (extrapolated, extrapolation_err, note) = if trend == Trend::Zero {
        (last, 0.0, "zero trend: all ladder values coincide".to_string())
    } else if eps.len() == 1 {
        (last, f64::INFINITY, "epsilon held fixed: the regulator bias of order epsilon is not removed".to_string())
    } else if eps.len() < rows.len() {
        return Err(domain("ladder rows with equal epsilon but different geometry cannot be extrapolated jointly"));
    } else {
        let xs: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.value).collect();
        let (v, e) = extrapolate_to_zero(&xs, &ys);
        (v, e, format!("polynomial extrapolation in epsilon through {} rows", rows.len()))
    };
    Ok(ConvergenceReport {
        rows,
        trend,
        extrapolated,
        extrapolation_err,
        continuum,
        deviation: (extrapolated - continuum) / continuum.abs(),
        note,
    })
}

/// Ladder used for the continuum comparison: `(L, eps) = (8, 0.4), (10, 0.2),
/// (12, 0.1)` in units of `d`, each with `eps k_max >= 22`.
pub fn reference_ladder(d: f64) -> Vec<CavityConfig> {
    [(8.0, 0.4), (10.0, 0.2), (12.0, 0.1)]
        .into_iter()
        .map(|(l, e)| CavityConfig::with_cutoff_product(l * d, e * d, 22.0))
        .collect()
}
