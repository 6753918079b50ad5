//! Physical parameters, unit conventions and the reduction to dimensionless
//! variables.
//!
//! Internally everything is expressed with `c = 1`: times enter the kernels
//! only through the length `c t`. Public constructors accept an explicit
//! speed of light so SI-style inputs work unchanged.
//!
//! Energies are reported in units of `eps0 = mu^2 / (12 pi d^3)`, the
//! prefactor of the bare and dressed potentials, and forces in units of
//! `eps0 / d`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{require_nonnegative, require_positive, Result};

/// Atom/mirror configuration.
///
/// `k0`/`d` are the transition wavenumber and atom-wall distance after the
/// quench at `t = 0`; `k0_prime`/`d_prime` are the values before it. The
/// dipole is isotropic: its squared projection on any axis is `mu^2 / 3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub mu: f64,
    pub k0: f64,
    pub k0_prime: f64,
    pub d: f64,
    pub d_prime: f64,
    /// Speed of light; 1 in natural units.
    #[serde(default = "unit_c")]
    pub c: f64,
}

fn unit_c() -> f64 {
    1.0
}

impl PhysicalParams {
    pub fn new(mu: f64, k0: f64, k0_prime: f64, d: f64, d_prime: f64) -> Self {
        Self { mu, k0, k0_prime, d, d_prime, c: 1.0 }
    }

    /// Unquenched atom: old and new frequency/position coincide.
    pub fn stationary(mu: f64, k0: f64, d: f64) -> Self {
        Self::new(mu, k0, k0, d, d)
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("mu", self.mu)?;
        require_positive("k0", self.k0)?;
        require_positive("k0_prime", self.k0_prime)?;
        require_positive("d", self.d)?;
        require_positive("d_prime", self.d_prime)?;
        require_positive("c", self.c)
    }

    /// Energy unit `mu^2 / (12 pi d^3)`.
    pub fn eps0(&self) -> f64 {
        eps0_at(self.mu, self.d)
    }

    /// Same configuration with the post-quench distance replaced.
    pub fn with_d(mut self, d: f64) -> Self {
        self.d = d;
        self
    }
}

pub(crate) fn eps0_at(mu: f64, length: f64) -> f64 {
    mu * mu / (12.0 * PI * length.powi(3))
}

/// Reduced variables `(k0 d, k0' d, c t / d, d' / d)` plus the energy unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessPoint {
    pub x0: f64,
    pub x0p: f64,
    pub s: f64,
    pub rho: f64,
    pub eps0: f64,
}

impl DimensionlessPoint {
    /// Restores physical units given the dipole, distance and speed of light
    /// that were divided out. Returns the parameters and the time `t`.
    pub fn restore(&self, mu: f64, d: f64, c: f64) -> (PhysicalParams, f64) {
        let params = PhysicalParams {
            mu,
            k0: self.x0 / d,
            k0_prime: self.x0p / d,
            d,
            d_prime: self.rho * d,
            c,
        };
        (params, self.s * d / c)
    }
}

pub fn nondimensionalize(params: &PhysicalParams, t: f64) -> Result<DimensionlessPoint> {
    params.validate()?;
    require_nonnegative("t", t)?;
    Ok(DimensionlessPoint {
        x0: params.k0 * params.d,
        x0p: params.k0_prime * params.d,
        s: params.c * t / params.d,
        rho: params.d_prime / params.d,
        eps0: params.eps0(),
    })
}

/// Midpoint and half-separation of the old and new atomic positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedGeometry {
    /// `(d + d') / 2`
    pub zbar: f64,
    /// `(d - d') / 2`, negative when the atom moved towards the wall.
    pub z: f64,
}

pub fn derived_geometry(params: &PhysicalParams) -> Result<DerivedGeometry> {
    require_positive("d", params.d)?;
    require_positive("d_prime", params.d_prime)?;
    Ok(DerivedGeometry {
        zbar: 0.5 * (params.d + params.d_prime),
        z: 0.5 * (params.d - params.d_prime),
    })
}

/// Documented parameter presets in reduced units. They are starting points
/// for exploration and carry no physics of their own.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub x0: f64,
    pub x0p: f64,
    pub rho: f64,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "rydberg-like",
        description: "GHz transition, atom a few wavelengths/2pi from the wall; frequency quench by 20%",
        x0: 1.0,
        x0p: 1.2,
        rho: 1.0,
    },
    Preset {
        name: "rydberg-near",
        description: "near zone (k0 d = 1e-2), electrostatic image-dipole regime",
        x0: 1e-2,
        x0p: 1.2e-2,
        rho: 1.0,
    },
    Preset {
        name: "rydberg-far",
        description: "far zone (k0 d = 50), retarded 1/d^4 regime",
        x0: 50.0,
        x0p: 60.0,
        rho: 1.0,
    },
    Preset {
        name: "rydberg-displaced",
        description: "frequency quench combined with a sudden displacement from 1.6 d to d",
        x0: 1.0,
        x0p: 1.2,
        rho: 1.6,
    },
];

pub fn preset(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}
