//! Coordinate normalization, the unit-sphere embedding, and the training
//! sampler.

mod sampler;
mod sobol;

pub use sampler::{QuasiSampler, Sample};
pub use sobol::{splitmix64, ScrambledSobol};

use std::f64::consts::{FRAC_PI_2, TAU};

use crate::angles::sin_cos_deg;
use crate::error::{Error, Result};

/// Network input coordinates.
///
/// `(x, y, z)` is the unit-sphere embedding of (latitude, longitude).
/// `psi_hat = ψ/90°` and `phi_hat = φ/180° − 1` (φ wrapped to [0°, 360°)) are
/// only consumed when the sphere embedding is switched off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedCoord {
    pub t_hat: f64,
    pub p_hat: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub psi_hat: f64,
    pub phi_hat: f64,
}

/// Normalizes time and pressure by `c_t`, `c_p` and embeds latitude `psi` and
/// longitude `phi` (degrees) on the unit sphere.
///
/// At the poles every longitude maps to the same point `(0, 0, ±1)`.
pub fn normalize(t: f64, p: f64, psi: f64, phi: f64, c_t: f64, c_p: f64) -> Result<NormalizedCoord> {
    if !(c_t > 0.0 && c_p > 0.0) {
        return Err(Error::invalid(format!(
            "scaling constants must be positive (c_t={c_t}, c_p={c_p})"
        )));
    }
    Ok(normalize_unchecked(t, p, psi, phi, c_t, c_p))
}

#[inline]
pub(crate) fn normalize_unchecked(t: f64, p: f64, psi: f64, phi: f64, c_t: f64, c_p: f64) -> NormalizedCoord {
    let phi = phi.rem_euclid(360.0);
    let (sin_psi, cos_psi) = sin_cos_deg(psi);
    let (sin_phi, cos_phi) = sin_cos_deg(phi);
    NormalizedCoord {
        t_hat: t / c_t,
        p_hat: p / c_p,
        x: cos_psi * cos_phi,
        y: cos_psi * sin_phi,
        z: sin_psi,
        psi_hat: psi / 90.0,
        phi_hat: phi / 180.0 - 1.0,
    }
}

/// Equal-area map from the unit square to (latitude, longitude) in radians:
/// `ψ = π/2 − arccos(1 − 2u₂)`, `φ = 2π u₁`.
pub fn sphere_from_unit_square(u1: f64, u2: f64) -> (f64, f64) {
    let psi = FRAC_PI_2 - (1.0 - 2.0 * u2).acos();
    let phi = TAU * u1;
    (psi, phi)
}
