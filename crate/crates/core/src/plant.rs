//! Reduced quadrotor model: translational dynamics driven by collective
//! thrust offset `u0`, with pitch and roll as double integrators.

use std::f64::consts::FRAC_PI_2;

use crate::error::{ensure_finite, Result};

pub const DEFAULT_GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlantState {
    pub x: f64,
    pub vx: f64,
    pub y: f64,
    pub vy: f64,
    pub z: f64,
    pub vz: f64,
    pub theta: f64,
    pub dtheta: f64,
    pub psi: f64,
    pub dpsi: f64,
}

impl PlantState {
    pub const DIM: usize = 10;

    pub fn to_array(&self) -> [f64; 10] {
        [self.x, self.vx, self.y, self.vy, self.z, self.vz, self.theta, self.dtheta, self.psi, self.dpsi]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self {
            x: v[0],
            vx: v[1],
            y: v[2],
            vy: v[3],
            z: v[4],
            vz: v[5],
            theta: v[6],
            dtheta: v[7],
            psi: v[8],
            dpsi: v[9],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// `|θ| < π/2` and `|ψ| < π/2`, where the normal-form coordinates are
    /// invertible.
    pub fn in_transform_envelope(&self) -> bool {
        self.theta.abs() < FRAC_PI_2 && self.psi.abs() < FRAC_PI_2
    }

    /// Vertical-motion condition `|cos θ cos ψ| ≥ g / (g + ℓ)`.
    pub fn satisfies_tilt_condition(&self, g: f64, ell: f64) -> bool {
        (self.theta.cos() * self.psi.cos()).abs() >= g / (g + ell)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlInput {
    /// Collective thrust offset, m/s².
    pub u0: f64,
    /// Pitch angular acceleration, rad/s².
    pub u1: f64,
    /// Roll angular acceleration, rad/s².
    pub u2: f64,
}

/// Time derivative of the plant state. The returned struct holds
/// derivatives field by field (`x` holds ẋ, `vx` holds ẍ, …).
pub fn plant_deriv(s: &PlantState, u: &ControlInput, g: f64) -> Result<PlantState> {
    ensure_finite(&s.to_array(), "plant state")?;
    ensure_finite(&[u.u0, u.u1, u.u2, g], "plant input")?;
    let thrust = g + u.u0;
    let (st, ct) = s.theta.sin_cos();
    let (sp, cp) = s.psi.sin_cos();
    Ok(PlantState {
        x: s.vx,
        vx: thrust * st * cp,
        y: s.vy,
        vy: -thrust * sp,
        z: s.vz,
        vz: thrust * ct * cp - g,
        theta: s.dtheta,
        dtheta: u.u1,
        psi: s.dpsi,
        dpsi: u.u2,
    })
}
