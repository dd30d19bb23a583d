//! Saturated PD altitude loop and the thrust gain `β = 1 + u0/g` it induces
//! in the horizontal normal form.

use crate::error::{ensure, ensure_finite, Result};
use crate::numerics::SmoothSat;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AltitudeParams {
    pub r0: f64,
    pub r1: f64,
    /// Saturation level ℓ, m/s², with `0 < ℓ < g`.
    pub ell: f64,
    pub z_star: f64,
}

impl AltitudeParams {
    pub fn new(r0: f64, r1: f64, ell: f64, z_star: f64, g: f64) -> Result<Self> {
        let p = Self { r0, r1, ell, z_star };
        p.validate(g)?;
        Ok(p)
    }

    /// `r0 = 15`, `r1 = 20`, `ℓ = 0.9 g`, `z* = 0.5`.
    pub fn nominal(g: f64) -> Self {
        Self { r0: 15.0, r1: 20.0, ell: 0.9 * g, z_star: 0.5 }
    }

    pub fn validate(&self, g: f64) -> Result<()> {
        ensure_finite(&[self.r0, self.r1, self.ell, self.z_star, g], "altitude parameters")?;
        ensure(self.r0 > 0.0 && self.r1 > 0.0, || {
            format!("altitude gains must be positive, got r0={} r1={}", self.r0, self.r1)
        })?;
        ensure(self.ell > 0.0 && self.ell < g, || {
            format!("altitude saturation must satisfy 0 < ell < g, got {}", self.ell)
        })
    }

    pub(crate) fn sat(&self) -> SmoothSat {
        SmoothSat::new(self.ell).expect("validated altitude saturation")
    }

    /// Argument of the saturation, `−r0 (z − z*) − r1 ż`.
    pub(crate) fn pd_term(&self, z: f64, vz: f64) -> f64 {
        -self.r0 * (z - self.z_star) - self.r1 * vz
    }
}

/// `(β_min, β_max) = (1 − ℓ/g, 1 + ℓ/g)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaBounds {
    pub min: f64,
    pub max: f64,
}

impl BetaBounds {
    pub fn from_ell(ell: f64, g: f64) -> Self {
        Self { min: 1.0 - ell / g, max: 1.0 + ell / g }
    }

    pub fn contains(&self, beta: f64) -> bool {
        beta >= self.min && beta <= self.max
    }
}

/// `u0 = ℓ tanh((−r0 z̃ − r1 ż) / ℓ)`.
pub fn altitude_control(z: f64, vz: f64, p: &AltitudeParams) -> f64 {
    p.sat().apply(p.pd_term(z, vz))
}

pub fn thrust_beta(u0: f64, g: f64) -> Result<f64> {
    ensure(u0.abs() < g, || format!("|u0| must stay below g, got {u0}"))?;
    Ok(1.0 + u0 / g)
}
