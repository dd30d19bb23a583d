//! Linear exosystem generating the horizontal reference, `ẇᵢ = Sᵢ wᵢ`,
//! `x* = w₁₁`, `y* = w₂₁`.

use crate::error::{ensure, ensure_finite, Result};
use crate::numerics::Matrix;

/// Exosystem state `w = (w₁, w₂)`, each block (position, velocity,
/// acceleration).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ExoState(pub [f64; 6]);

impl ExoState {
    pub fn block(&self, axis: usize) -> [f64; 3] {
        let o = 3 * axis;
        [self.0[o], self.0[o + 1], self.0[o + 2]]
    }

    /// Reference outputs `(x*, y*)`.
    pub fn output(&self) -> (f64, f64) {
        (self.0[0], self.0[3])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExoParams {
    pub rho1: f64,
    pub rho2: f64,
    pub w0: ExoState,
}

impl ExoParams {
    pub fn rho(&self, axis: usize) -> f64 {
        if axis == 0 {
            self.rho1
        } else {
            self.rho2
        }
    }
}

/// Signal shape for one horizontal axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AxisMode {
    /// `c + a sin(ω t + φ)`
    Periodic { c: f64, a: f64, omega: f64, phi: f64 },
    /// `c0 + c1 t + c2 t²`
    Polynomial { c0: f64, c1: f64, c2: f64 },
}

impl AxisMode {
    fn rho(&self) -> f64 {
        match *self {
            AxisMode::Periodic { omega, .. } => omega * omega,
            AxisMode::Polynomial { .. } => 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            AxisMode::Periodic { c, a, omega, phi } => {
                ensure_finite(&[c, a, omega, phi], "periodic reference parameters")?;
                ensure(omega > 0.0, || format!("periodic reference needs ω > 0, got {omega}"))
            }
            AxisMode::Polynomial { c0, c1, c2 } => {
                ensure_finite(&[c0, c1, c2], "polynomial reference parameters")
            }
        }
    }

    /// `(position, velocity, acceleration)` at time `t`.
    pub fn evaluate(&self, t: f64) -> [f64; 3] {
        match *self {
            AxisMode::Periodic { c, a, omega, phi } => {
                let (s, co) = (omega * t + phi).sin_cos();
                [c + a * s, a * omega * co, -a * omega * omega * s]
            }
            AxisMode::Polynomial { c0, c1, c2 } => [c0 + c1 * t + c2 * t * t, c1 + 2.0 * c2 * t, 2.0 * c2],
        }
    }
}

/// Per-axis reference specification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceMode {
    pub x: AxisMode,
    pub y: AxisMode,
}

impl ReferenceMode {
    /// `x* = 0.1 + 0.3 sin(0.5t + 0.7)`, `y* = 0.2 + 0.4 sin(0.6t + 0.8)`.
    pub fn periodic_preset() -> Self {
        Self {
            x: AxisMode::Periodic { c: 0.1, a: 0.3, omega: 0.5, phi: 0.7 },
            y: AxisMode::Periodic { c: 0.2, a: 0.4, omega: 0.6, phi: 0.8 },
        }
    }

    /// `x* = 0.1 + 0.3t + 0.5t²`, `y* = 0.2 + 0.4t + 0.6t²`.
    pub fn polynomial_preset() -> Self {
        Self {
            x: AxisMode::Polynomial { c0: 0.1, c1: 0.3, c2: 0.5 },
            y: AxisMode::Polynomial { c0: 0.2, c1: 0.4, c2: 0.6 },
        }
    }

    /// Preset lookup by name: `periodic` or `polynomial`.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "periodic" => Some(Self::periodic_preset()),
            "polynomial" => Some(Self::polynomial_preset()),
            _ => None,
        }
    }

    pub fn axis(&self, axis: usize) -> &AxisMode {
        if axis == 0 {
            &self.x
        } else {
            &self.y
        }
    }
}

/// Exosystem vector field `ẇᵢ = (wᵢ₂, wᵢ₃, −ρᵢ wᵢ₂)`.
pub fn exo_deriv(w: &ExoState, p: &ExoParams) -> Result<ExoState> {
    ensure_finite(&w.0, "exosystem state")?;
    let mut d = [0.0; 6];
    for axis in 0..2 {
        let o = 3 * axis;
        d[o] = w.0[o + 1];
        d[o + 1] = w.0[o + 2];
        d[o + 2] = -p.rho(axis) * w.0[o + 1];
    }
    Ok(ExoState(d))
}

/// Exosystem parameters and initial state realizing `mode`.
pub fn exo_init(mode: &ReferenceMode) -> Result<ExoParams> {
    mode.x.validate()?;
    mode.y.validate()?;
    let b1 = mode.x.evaluate(0.0);
    let b2 = mode.y.evaluate(0.0);
    Ok(ExoParams {
        rho1: mode.x.rho(),
        rho2: mode.y.rho(),
        w0: ExoState([b1[0], b1[1], b1[2], b2[0], b2[1], b2[2]]),
    })
}

/// Exact exosystem state at time `t`.
pub fn closed_form_state(t: f64, mode: &ReferenceMode) -> ExoState {
    let b1 = mode.x.evaluate(t);
    let b2 = mode.y.evaluate(t);
    ExoState([b1[0], b1[1], b1[2], b2[0], b2[1], b2[2]])
}

/// Exact reference `(x*, y*)` at time `t`.
pub fn closed_form_reference(t: f64, mode: &ReferenceMode) -> (f64, f64) {
    (mode.x.evaluate(t)[0], mode.y.evaluate(t)[0])
}

/// `S = diag(S₁, S₂)` with `Sᵢ` companion, last row `(0, −ρᵢ, 0)`.
pub fn exo_matrix(rho1: f64, rho2: f64) -> Matrix {
    let block = |rho: f64| {
        Matrix::from_rows(&[[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, -rho, 0.0]])
            .expect("finite companion block")
    };
    Matrix::block_diag(&[&block(rho1), &block(rho2)])
}
