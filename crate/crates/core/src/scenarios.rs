//! Time-dependent atom-wall energies for the three initial states, the force
//! `-dE/dd`, sign-change search and asymptotic checks.
//!
//! All three energies are sums of terms of the form
//! `-mu^2 / (12 pi L^3) D^m [kernels at a = 2 m L]` with `L` one of `d`,
//! `zbar = (d + d')/2` or `|z| = |d - d'|/2`:
//!
//! * bare: `S(2md, k0) - C(2md, k0, k0, ct)`
//! * frequency quench: `S(2md, k0) - C(2md, k0, k0, ct) + C(2md, k0', k0, ct)`
//! * frequency and position quench: the bare bracket at `d`, plus
//!   `C(2m zbar, k0', k0, ct)` and `C(2m|z|, k0', k0, ct)` each with its own
//!   prefactor.
//!
//! The cosine shift of every dynamic kernel is the post-quench `k0`; only the
//! denominator shift changes between `k0` and `k0'`.

use serde::{Deserialize, Serialize};

use crate::dm::{apply_dm_with, dm_static_xform, kernel_family_dynamic, kernel_family_static, DmMode, DmOptions, MFamily};
use crate::error::{domain, require_nonnegative, Error, Result};
use crate::kernels::{in_light_cone, KernelQuery, DEFAULT_EXCLUSION_REL};
use crate::numeric::ordered_map;
use crate::units::{derived_geometry, eps0_at, PhysicalParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Bare ground state.
    #[serde(alias = "bare")]
    Bare,
    /// Dressed ground state followed by a sudden frequency change.
    #[serde(rename = "dressed1")]
    DressedFrequencyQuench,
    /// Dressed ground state followed by a sudden change of frequency and position.
    #[serde(rename = "dressed2")]
    DressedPositionFrequencyQuench,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] =
        [ScenarioKind::Bare, ScenarioKind::DressedFrequencyQuench, ScenarioKind::DressedPositionFrequencyQuench];

    pub fn tag(self) -> &'static str {
        match self {
            ScenarioKind::Bare => "bare",
            ScenarioKind::DressedFrequencyQuench => "dressed1",
            ScenarioKind::DressedPositionFrequencyQuench => "dressed2",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.tag() == tag)
    }

    /// Normalizes parameters the scenario ignores: the bare state has no
    /// pre-quench frequency and neither the bare nor the frequency-quench
    /// state has a pre-quench position.
    pub fn effective_params(self, params: &PhysicalParams) -> PhysicalParams {
        match self {
            ScenarioKind::Bare => PhysicalParams { k0_prime: params.k0, d_prime: params.d, ..*params },
            ScenarioKind::DressedFrequencyQuench => PhysicalParams { d_prime: params.d, ..*params },
            ScenarioKind::DressedPositionFrequencyQuench => *params,
        }
    }
}

/// One additive contribution to an energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyTerm {
    /// Energy (same units as `mu^2 / length^3`); NaN when diverged.
    pub value: f64,
    pub diverged: bool,
    /// Set for the `|z|` term when `0 < |z| < 1e-3 d`.
    pub low_confidence: bool,
}

impl EnergyTerm {
    fn finite(value: f64) -> Self {
        Self { value, diverged: false, low_confidence: false }
    }

    fn diverged() -> Self {
        Self { value: f64::NAN, diverged: true, low_confidence: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySample {
    pub t: f64,
    pub energy: f64,
    pub diverged: bool,
    pub terms: Vec<EnergyTerm>,
}

impl EnergySample {
    fn from_terms(t: f64, terms: Vec<EnergyTerm>) -> Self {
        let diverged = terms.iter().any(|term| term.diverged);
        let energy = if diverged { f64::NAN } else { terms.iter().map(|term| term.value).sum() };
        Self { t, energy, diverged, terms }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForceSign {
    /// Directed towards the wall (`force < 0`).
    Attractive,
    Repulsive,
    Indeterminate,
}

impl ForceSign {
    /// Sign of `force`, indeterminate when `|force| <= tol` or not finite.
    pub fn classify(force: f64, tol: f64) -> Self {
        if !force.is_finite() || force.abs() <= tol {
            ForceSign::Indeterminate
        } else if force < 0.0 {
            ForceSign::Attractive
        } else {
            ForceSign::Repulsive
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            ForceSign::Attractive => ForceSign::Repulsive,
            ForceSign::Repulsive => ForceSign::Attractive,
            ForceSign::Indeterminate => ForceSign::Indeterminate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceSample {
    pub t: f64,
    /// `-dE/dd`; NaN when diverged.
    pub force: f64,
    pub sign: ForceSign,
    pub diverged: bool,
}

/// Evaluation knobs shared by the energy functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOptions {
    pub dm_mode: DmMode,
    pub dm: DmOptions,
    /// Relative light-cone window `|2L - ct| < exclusion_rel 2L`.
    pub exclusion_rel: f64,
    /// Relative FD step for the force.
    pub force_step: f64,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        Self { dm_mode: DmMode::Analytic, dm: DmOptions::default(), exclusion_rel: DEFAULT_EXCLUSION_REL, force_step: 1e-4 }
    }
}

/// `-eps0(length) D^m [sum of families]` at `a0 = 2 length`, or a diverged
/// term if `ct` falls in the light-cone window of `a0`.
fn dm_term(length: f64, mu: f64, ct: f64, pieces: &[(f64, Piece)], opts: &ScenarioOptions) -> Result<EnergyTerm> {
    let a0 = 2.0 * length;
    if ct > 0.0 && in_light_cone(a0, ct, opts.exclusion_rel) {
        return Ok(EnergyTerm::diverged());
    }
    let mut family: Option<MFamily> = None;
    for &(coef, piece) in pieces {
        let fam = match piece {
            Piece::Static { beta } => kernel_family_static(a0, beta)?,
            Piece::Dynamic { beta, q } => kernel_family_dynamic(&KernelQuery::new(a0, beta, q, ct))?,
        };
        family = Some(match family {
            None => fam.scaled(coef),
            Some(acc) => MFamily::linear_combination(1.0, &acc, coef, &fam),
        });
    }
    let family = family.ok_or(Error::Empty("kernel pieces"))?;
    let bracket = apply_dm_with(&family, opts.dm_mode, &opts.dm)?.value;
    Ok(EnergyTerm::finite(-eps0_at(mu, length) * bracket))
}

#[derive(Debug, Clone, Copy)]
enum Piece {
    Static { beta: f64 },
    Dynamic { beta: f64, q: f64 },
}

fn check(params: &PhysicalParams, t: f64) -> Result<f64> {
    params.validate()?;
    require_nonnegative("t", t)?;
    Ok(params.c * t)
}

fn bare_pieces(k0: f64) -> [(f64, Piece); 2] {
    [(1.0, Piece::Static { beta: k0 }), (-1.0, Piece::Dynamic { beta: k0, q: k0 })]
}

pub fn bare_energy(params: &PhysicalParams, t: f64) -> Result<EnergySample> {
    bare_energy_with(params, t, &ScenarioOptions::default())
}

pub fn bare_energy_with(params: &PhysicalParams, t: f64, opts: &ScenarioOptions) -> Result<EnergySample> {
    let ct = check(params, t)?;
    let term = dm_term(params.d, params.mu, ct, &bare_pieces(params.k0), opts)?;
    Ok(EnergySample::from_terms(t, vec![term]))
}

pub fn dressed1_energy(params: &PhysicalParams, t: f64) -> Result<EnergySample> {
    dressed1_energy_with(params, t, &ScenarioOptions::default())
}

pub fn dressed1_energy_with(params: &PhysicalParams, t: f64, opts: &ScenarioOptions) -> Result<EnergySample> {
    let ct = check(params, t)?;
    let [s, c] = bare_pieces(params.k0);
    let pieces = [s, c, (1.0, Piece::Dynamic { beta: params.k0_prime, q: params.k0 })];
    let term = dm_term(params.d, params.mu, ct, &pieces, opts)?;
    Ok(EnergySample::from_terms(t, vec![term]))
}

pub fn dressed2_energy(params: &PhysicalParams, t: f64) -> Result<EnergySample> {
    dressed2_energy_with(params, t, &ScenarioOptions::default())
}

/// Terms: bare bracket at `d`, the `zbar` term and the `|z|` term. The last
/// is exactly zero when `d = d'`.
pub fn dressed2_energy_with(params: &PhysicalParams, t: f64, opts: &ScenarioOptions) -> Result<EnergySample> {
    let ct = check(params, t)?;
    let geom = derived_geometry(params)?;
    let quench = [(1.0, Piece::Dynamic { beta: params.k0_prime, q: params.k0 })];
    let first = dm_term(params.d, params.mu, ct, &bare_pieces(params.k0), opts)?;
    let second = dm_term(geom.zbar, params.mu, ct, &quench, opts)?;
    let z = geom.z.abs();
    let third = if z == 0.0 {
        EnergyTerm::finite(0.0)
    } else {
        let mut term = dm_term(z, params.mu, ct, &quench, opts)?;
        term.low_confidence = z < 1e-3 * params.d;
        term
    };
    Ok(EnergySample::from_terms(t, vec![first, second, third]))
}

pub fn energy(kind: ScenarioKind, params: &PhysicalParams, t: f64) -> Result<EnergySample> {
    energy_with(kind, params, t, &ScenarioOptions::default())
}

pub fn energy_with(kind: ScenarioKind, params: &PhysicalParams, t: f64, opts: &ScenarioOptions) -> Result<EnergySample> {
    match kind {
        ScenarioKind::Bare => bare_energy_with(params, t, opts),
        ScenarioKind::DressedFrequencyQuench => dressed1_energy_with(params, t, opts),
        ScenarioKind::DressedPositionFrequencyQuench => dressed2_energy_with(params, t, opts),
    }
}

/// Stationary potential `-eps0 [2 f - 2 x f' + x^2 f'']` at `x = 2 k0 d`.
pub fn static_energy(params: &PhysicalParams) -> Result<f64> {
    params.validate()?;
    Ok(-params.eps0() * dm_static_xform(2.0 * params.k0 * params.d)?)
}

/// `ct` values at which a term of the scenario hits its light cone.
pub fn echo_times(kind: ScenarioKind, params: &PhysicalParams) -> Vec<f64> {
    let mut lengths = vec![params.d];
    if kind == ScenarioKind::DressedPositionFrequencyQuench {
        let zbar = 0.5 * (params.d + params.d_prime);
        let z = 0.5 * (params.d - params.d_prime).abs();
        lengths.push(zbar);
        if z > 0.0 {
            lengths.push(z);
        }
    }
    let mut times: Vec<f64> = lengths.into_iter().map(|l| 2.0 * l / params.c).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    times
}

pub fn force(kind: ScenarioKind, params: &PhysicalParams, t: f64) -> Result<ForceSample> {
    force_with(kind, params, t, &ScenarioOptions::default())
}

/// `-dE/dd` by central differences with step `force_step d` and one
/// Richardson refinement; `d'` is held fixed.
///
/// A diverged energy at `d` gives a diverged sample; if only the stencil
/// points touch a light-cone window the result is [`Error::StepCollision`].
pub fn force_with(kind: ScenarioKind, params: &PhysicalParams, t: f64, opts: &ScenarioOptions) -> Result<ForceSample> {
    let centre = energy_with(kind, params, t, opts)?;
    if centre.diverged {
        return Ok(ForceSample { t, force: f64::NAN, sign: ForceSign::Indeterminate, diverged: true });
    }
    let h = opts.force_step * params.d;
    let e = |delta: f64| -> Result<f64> {
        let s = energy_with(kind, &params.with_d(params.d + delta), t, opts)?;
        if s.diverged {
            return Err(Error::StepCollision { d: params.d + delta });
        }
        Ok(s.energy)
    };
    let coarse = (e(h)? - e(-h)?) / (2.0 * h);
    let fine = (e(0.5 * h)? - e(-0.5 * h)?) / h;
    let f = -(4.0 * fine - coarse) / 3.0;
    Ok(ForceSample { t, force: f, sign: ForceSign::classify(f, 0.0), diverged: false })
}

/// Force at every grid time, evaluated in parallel and returned in grid order.
/// Step collisions are reported as diverged samples.
pub fn force_series(kind: ScenarioKind, params: &PhysicalParams, times: &[f64], opts: &ScenarioOptions) -> Result<Vec<ForceSample>> {
    ordered_map(times.len(), |i| match force_with(kind, params, times[i], opts) {
        Err(Error::StepCollision { .. }) => {
            Ok(ForceSample { t: times[i], force: f64::NAN, sign: ForceSign::Indeterminate, diverged: true })
        }
        other => other,
    })
    .into_iter()
    .collect()
}

/// Roots of the force bracketed by sign flips between consecutive usable grid
/// points, refined by bisection to relative time tolerance `1e-8`.
///
/// Brackets that contain an echo time or a diverged sample are skipped: the
/// sign flip there comes from the pole, not from a zero.
pub fn sign_changes(kind: ScenarioKind, params: &PhysicalParams, t_grid: &[f64]) -> Result<Vec<f64>> {
    sign_changes_with(kind, params, t_grid, &ScenarioOptions::default())
}

pub fn sign_changes_with(kind: ScenarioKind, params: &PhysicalParams, t_grid: &[f64], opts: &ScenarioOptions) -> Result<Vec<f64>> {
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(domain("time grid must be strictly increasing"));
    }
    if t_grid.len() < 2 {
        return Ok(Vec::new());
    }
    let samples = force_series(kind, params, t_grid, opts)?;
    let echoes = echo_times(kind, params);
    let mut roots = Vec::new();
    let mut prev: Option<ForceSample> = None;
    for s in samples {
        if s.diverged {
            prev = None;
            continue;
        }
        if s.force == 0.0 {
            continue;
        }
        if let Some(p) = prev {
            let crosses_echo = echoes.iter().any(|&e| p.t < e && e < s.t);
            if !crosses_echo && (p.force < 0.0) != (s.force < 0.0) {
                roots.push(bisect(kind, params, opts, p, s)?);
            }
        }
        prev = Some(s);
    }
    Ok(roots)
}

fn bisect(kind: ScenarioKind, params: &PhysicalParams, opts: &ScenarioOptions, lo: ForceSample, hi: ForceSample) -> Result<f64> {
    let (mut a, mut b) = (lo.t, hi.t);
    let lo_negative = lo.force < 0.0;
    while b - a > 1e-8 * b.abs() {
        let mid = 0.5 * (a + b);
        let f = force_with(kind, params, mid, opts)?.force;
        if f == 0.0 {
            return Ok(mid);
        }
        if (f < 0.0) == lo_negative {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoteReport {
    pub kind: ScenarioKind,
    pub horizon: f64,
    /// Stationary value at the post-quench parameters.
    pub static_energy: f64,
    /// `sup |E(t) - static_energy|` over the tail window.
    pub sup_deviation: f64,
    pub tolerance: f64,
    pub converged: bool,
    /// Set when the horizon does not reach past the last echo time.
    pub pre_light_cone: bool,
    pub note: String,
}

/// Tail window `[0.9, 1] * horizon`, 21 samples; tolerance `1%` of the
/// stationary value.
pub fn asymptote_check(kind: ScenarioKind, params: &PhysicalParams, horizon: f64) -> Result<AsymptoteReport> {
    require_nonnegative("horizon", horizon)?;
    let stat = static_energy(params)?;
    let tolerance = 1e-2 * stat.abs();
    let last_echo = echo_times(kind, params).into_iter().fold(0.0, f64::max);
    if horizon <= last_echo {
        return Ok(AsymptoteReport {
            kind,
            horizon,
            static_energy: stat,
            sup_deviation: f64::NAN,
            tolerance,
            converged: false,
            pre_light_cone: true,
            note: format!("pre-light-cone, not asymptotic: horizon {horizon} <= echo time {last_echo}"),
        });
    }
    let lo = (0.9 * horizon).max(last_echo * (1.0 + 1e-2));
    let times: Vec<f64> = (0..21).map(|i| lo + (horizon - lo) * i as f64 / 20.0).collect();
    let samples: Vec<Result<EnergySample>> = ordered_map(times.len(), |i| energy(kind, params, times[i]));
    let mut sup = 0.0f64;
    for s in samples {
        let s = s?;
        if !s.diverged {
            sup = sup.max((s.energy - stat).abs());
        }
    }
    let converged = sup <= tolerance;
    Ok(AsymptoteReport {
        kind,
        horizon,
        static_energy: stat,
        sup_deviation: sup,
        tolerance,
        converged,
        pre_light_cone: false,
        note: if converged { "settled".into() } else { "not settled within tolerance".into() },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(x0: f64, x0p: f64, rho: f64) -> PhysicalParams {
        PhysicalParams::new(1.0, x0, x0p, 1.0, rho)
    }

    #[test]
    fn bare_vanishes_at_t0() {
        let s = bare_energy(&unit(1.3, 1.3, 1.0), 0.0).unwrap();
        assert_eq!(s.energy, 0.0);
    }

    #[test]
    fn bare_reference_value() {
        // Independent closed-form evaluation (arbitrary precision) at x0 = 1, ct/d = 0.8.
        let p = unit(1.0, 1.0, 1.0);
        let e = bare_energy(&p, 0.8).unwrap().energy / p.eps0();
        assert!((e + 1.2143899780483447).abs() < 1e-12, "{e}");
    }

    #[test]
    fn dressed1_starts_at_old_static_value() {
        let p = unit(1.0, 1.4, 1.0);
        let e = dressed1_energy(&p, 0.0).unwrap().energy;
        let s = static_energy(&PhysicalParams { k0: 1.4, ..p }).unwrap();
        assert!((e - s).abs() <= 1e-10 * s.abs());
    }

    #[test]
    fn no_quench_is_stationary() {
        let p = unit(0.7, 0.7, 1.0);
        let s = static_energy(&p).unwrap();
        for t in [0.0, 0.5, 1.7, 3.0] {
            let e = dressed2_energy(&p, t).unwrap().energy;
            assert!((e - s).abs() <= 1e-9 * s.abs(), "t = {t}");
        }
    }

    #[test]
    fn diverged_at_echo() {
        let p = unit(1.0, 1.2, 0.5);
        assert!(bare_energy(&p, 2.0).unwrap().diverged);
        let s = dressed2_energy(&p, 1.5).unwrap();
        assert!(s.diverged && s.terms[1].diverged && !s.terms[0].diverged);
        assert!(dressed2_energy(&p, 0.5).unwrap().terms[2].diverged);
        assert_eq!(echo_times(ScenarioKind::DressedPositionFrequencyQuench, &p), vec![0.5, 1.5, 2.0]);
    }

    #[test]
    fn small_z_is_flagged() {
        let p = unit(1.0, 1.2, 1.0 - 1e-4);
        let s = dressed2_energy(&p, 0.7).unwrap();
        assert!(s.terms[2].low_confidence && !s.terms[1].low_confidence);
    }

    #[test]
    fn static_force_is_attractive() {
        for x0 in [0.1, 1.0, 10.0] {
            let f = force(ScenarioKind::Bare, &unit(x0, x0, 1.0), 400.0).unwrap();
            assert_eq!(f.sign, ForceSign::Attractive, "x0 = {x0}");
        }
    }

    #[test]
    fn force_zero_at_t0() {
        let f = force(ScenarioKind::Bare, &unit(1.0, 1.0, 1.0), 0.0).unwrap();
        assert_eq!(f.force, 0.0);
        assert_eq!(f.sign, ForceSign::Indeterminate);
    }

    #[test]
    fn sign_classification_is_antisymmetric() {
        for v in [-2.0, -1e-300, 0.0, 3.0, f64::NAN] {
            assert_eq!(ForceSign::classify(-v, 0.0), ForceSign::classify(v, 0.0).flipped());
        }
    }

    #[test]
    fn sign_change_edge_cases() {
        let p = unit(1.0, 1.0, 1.0);
        assert!(sign_changes(ScenarioKind::Bare, &p, &[1.0]).unwrap().is_empty());
        let grid: Vec<f64> = (1..60).map(|i| 0.1 * i as f64).collect();
        assert!(sign_changes(ScenarioKind::DressedFrequencyQuench, &p, &grid).unwrap().is_empty());
        assert!(sign_changes(ScenarioKind::Bare, &p, &[2.0, 1.0]).is_err());
    }

    #[test]
    fn pre_light_cone_guard() {
        let r = asymptote_check(ScenarioKind::Bare, &unit(1.0, 1.0, 1.0), 1.5).unwrap();
        assert!(r.pre_light_cone && !r.converged);
    }

    #[test]
    fn tags_round_trip() {
        for k in ScenarioKind::ALL {
            assert_eq!(ScenarioKind::from_tag(k.tag()), Some(k));
        }
    }
}
