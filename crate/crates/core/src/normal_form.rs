//! Coordinate change taking the horizontal dynamics to two fourth-order
//! integrator chains, the drift and input-gain terms of the last equation,
//! and the tracking-error coordinates built on top of them.

use crate::altitude::{altitude_control, AltitudeParams, BetaBounds};
use crate::error::{ensure, Error, Result};
use crate::numerics::Matrix;
use crate::plant::{ControlInput, PlantState};
use crate::reference::ExoState;

/// Chain coordinates `ξ₁ = (x, ẋ, ξ₁₃, ξ₁₄)` and `ξ₂ = (y, ẏ, ξ₂₃, ξ₂₄)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct XiCoords {
    pub xi1: [f64; 4],
    pub xi2: [f64; 4],
}

impl XiCoords {
    pub fn axis(&self, axis: usize) -> &[f64; 4] {
        if axis == 0 {
            &self.xi1
        } else {
            &self.xi2
        }
    }
}

/// Tracking-error coordinates; `e1[0] = x̃`, `e2[0] = ỹ`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorCoords {
    pub e1: [f64; 4],
    pub e2: [f64; 4],
}

impl ErrorCoords {
    pub fn axis(&self, axis: usize) -> &[f64; 4] {
        if axis == 0 {
            &self.e1
        } else {
            &self.e2
        }
    }

    pub fn norm(&self) -> f64 {
        self.e1.iter().chain(&self.e2).map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// The thrust gain and its first two time derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaState {
    pub beta: f64,
    pub dbeta: f64,
    pub ddbeta: f64,
}

/// Input-free drift of the last chain equations and the input gain
/// `B(θ, ψ)` with rows `b₁`, `b₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftGain {
    pub q1: f64,
    pub q2: f64,
    pub b: Matrix,
}

impl DriftGain {
    pub fn q(&self, axis: usize) -> f64 {
        if axis == 0 {
            self.q1
        } else {
            self.q2
        }
    }

    /// `bᵢ · u`
    pub fn b_row_dot(&self, axis: usize, u: [f64; 2]) -> f64 {
        self.b[(axis, 0)] * u[0] + self.b[(axis, 1)] * u[1]
    }
}

pub fn forward_transform(s: &PlantState, g: f64) -> XiCoords {
    let (st, ct) = s.theta.sin_cos();
    let (sp, cp) = s.psi.sin_cos();
    XiCoords {
        xi1: [s.x, s.vx, g * st * cp, g * s.dtheta * ct * cp - g * s.dpsi * st * sp],
        xi2: [s.y, s.vy, -g * sp, -g * s.dpsi * cp],
    }
}

/// Recovers `(θ, ψ)` from `ξ₁₃`, `ξ₂₃` on `|θ|, |ψ| < π/2`.
pub fn inverse_angles(xi13: f64, xi23: f64, g: f64) -> Result<(f64, f64)> {
    let sp = -xi23 / g;
    if !(sp.abs() < 1.0) {
        return Err(Error::OutOfEnvelope(format!("|xi23| = {} is not below g", xi23.abs())));
    }
    let psi = sp.asin();
    let st = xi13 / (g * psi.cos());
    if !(st.abs() < 1.0) {
        return Err(Error::OutOfEnvelope(format!("|xi13| = {} is not below g cos(psi)", xi13.abs())));
    }
    Ok((st.asin(), psi))
}

/// Inverse of [`forward_transform`] given the (unchanged) altitude pair.
pub fn inverse_transform(xi: &XiCoords, z: f64, vz: f64, g: f64) -> Result<PlantState> {
    let (theta, psi) = inverse_angles(xi.xi1[2], xi.xi2[2], g)?;
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = psi.sin_cos();
    let dpsi = -xi.xi2[3] / (g * cp);
    let dtheta = (xi.xi1[3] + g * dpsi * st * sp) / (g * ct * cp);
    Ok(PlantState {
        x: xi.xi1[0],
        vx: xi.xi1[1],
        y: xi.xi2[0],
        vy: xi.xi2[1],
        z,
        vz,
        theta,
        dtheta,
        psi,
        dpsi,
    })
}

pub fn drift_and_gain(theta: f64, dtheta: f64, psi: f64, dpsi: f64, g: f64) -> DriftGain {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = psi.sin_cos();
    let q1 = -2.0 * g * dpsi * dtheta * ct * sp - g * (dtheta * dtheta + dpsi * dpsi) * st * cp;
    let q2 = g * dpsi * dpsi * sp;
    let b = Matrix::from_rows(&[[g * ct * cp, -g * st * sp], [0.0, -g * cp]]).expect("finite input gain");
    DriftGain { q1, q2, b }
}

/// Right-hand side of the chain form, `ξ̇ᵢ = (ξᵢ₂, β ξᵢ₃, ξᵢ₄, qᵢ + bᵢ u)`.
pub fn xi_rhs(s: &PlantState, u: &ControlInput, g: f64) -> XiCoords {
    let xi = forward_transform(s, g);
    let beta = 1.0 + u.u0 / g;
    let dg = drift_and_gain(s.theta, s.dtheta, s.psi, s.dpsi, g);
    let uu = [u.u1, u.u2];
    XiCoords {
        xi1: [xi.xi1[1], beta * xi.xi1[2], xi.xi1[3], dg.q1 + dg.b_row_dot(0, uu)],
        xi2: [xi.xi2[1], beta * xi.xi2[2], xi.xi2[3], dg.q2 + dg.b_row_dot(1, uu)],
    }
}

/// Error coordinates relative to the exosystem state.
pub fn error_coords(
    xi: &XiCoords,
    w: &ExoState,
    beta: f64,
    dbeta: f64,
    rho: [f64; 2],
    bounds: &BetaBounds,
) -> Result<ErrorCoords> {
    ensure(bounds.contains(beta) && beta > 0.0, || {
        format!("beta = {beta} outside [{}, {}]", bounds.min, bounds.max)
    })?;
    let axis = |x: &[f64; 4], wi: [f64; 3], r: f64| {
        [
            x[0] - wi[0],
            x[1] - wi[1],
            x[2] - wi[2] / beta,
            x[3] + dbeta / (beta * beta) * wi[2] + r / beta * wi[1],
        ]
    };
    Ok(ErrorCoords { e1: axis(&xi.xi1, w.block(0), rho[0]), e2: axis(&xi.xi2, w.block(1), rho[1]) })
}

/// Analytic `(β̇, β̈)` along the closed loop, by the chain rule through the
/// altitude law and the vertical dynamics.
pub fn beta_derivatives(s: &PlantState, p: &AltitudeParams, g: f64) -> (f64, f64) {
    let sat = p.sat();
    let u0 = altitude_control(s.z, s.vz, p);
    let (st, ct) = s.theta.sin_cos();
    let (sp, cp) = s.psi.sin_cos();

    let a = p.pd_term(s.z, s.vz);
    let zdd = (g + u0) * ct * cp - g;
    let da = -p.r0 * s.vz - p.r1 * zdd;
    let du0 = sat.derivative(a) * da;
    let zddd = du0 * ct * cp - (g + u0) * (st * cp * s.dtheta + ct * sp * s.dpsi);
    let dda = -p.r0 * zdd - p.r1 * zddd;
    let ddu0 = sat.second_derivative(a) * da * da + sat.derivative(a) * dda;
    (du0 / g, ddu0 / g)
}

pub fn beta_state(s: &PlantState, p: &AltitudeParams, g: f64) -> BetaState {
    let (dbeta, ddbeta) = beta_derivatives(s, p, g);
    BetaState { beta: 1.0 + altitude_control(s.z, s.vz, p) / g, dbeta, ddbeta }
}

/// Plant state whose error coordinates equal `e` for exosystem state `w`,
/// at the given altitude pair. β̇ depends on the attitude through the
/// vertical acceleration, so the map is solved by fixed-point iteration.
pub fn plant_state_for_errors(
    e: &ErrorCoords,
    w: &ExoState,
    rho: [f64; 2],
    z: f64,
    vz: f64,
    p: &AltitudeParams,
    g: f64,
) -> Result<PlantState> {
    let beta = 1.0 + altitude_control(z, vz, p) / g;
    let mut s = PlantState { z, vz, ..Default::default() };
    for _ in 0..50 {
        let (dbeta, _) = beta_derivatives(&s, p, g);
        let axis = |ei: &[f64; 4], wi: [f64; 3], r: f64| {
            [
                ei[0] + wi[0],
                ei[1] + wi[1],
                ei[2] + wi[2] / beta,
                ei[3] - dbeta / (beta * beta) * wi[2] - r / beta * wi[1],
            ]
        };
        let xi = XiCoords { xi1: axis(&e.e1, w.block(0), rho[0]), xi2: axis(&e.e2, w.block(1), rho[1]) };
        let next = inverse_transform(&xi, z, vz, g)?;
        let converged = (next.theta - s.theta).abs() < 1e-16
            && (next.dtheta - s.dtheta).abs() < 1e-16
            && (next.psi - s.psi).abs() < 1e-16
            && (next.dpsi - s.dpsi).abs() < 1e-16;
        s = next;
        if converged {
            break;
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::plant_deriv;
    use proptest::prelude::*;

    const G: f64 = 9.81;

    #[test]
    fn forward_examples() {
        let hover = forward_transform(&PlantState::default(), G);
        assert_eq!(hover.xi1[2..], [0.0, 0.0]);
        assert_eq!(hover.xi2[2..], [0.0, 0.0]);

        let s = PlantState { theta: 0.1, dtheta: 0.2, ..Default::default() };
        let xi = forward_transform(&s, G);
        assert!((xi.xi1[2] - G * 0.1f64.sin()).abs() < 1e-15);
        assert!((xi.xi1[3] - 1.952_198_172_275_486_9).abs() < 1e-12);

        let s = PlantState { psi: 0.1, dpsi: 0.3, ..Default::default() };
        let xi = forward_transform(&s, G);
        assert!((xi.xi2[2] + G * 0.1f64.sin()).abs() < 1e-15);
        assert!((xi.xi2[3] + 2.928_297_258_413_23).abs() < 1e-12);
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(inverse_angles(0.0, 0.0, G).unwrap(), (0.0, 0.0));
        let s = PlantState { theta: 0.3, psi: -0.2, ..Default::default() };
        let xi = forward_transform(&s, G);
        let (th, ps) = inverse_angles(xi.xi1[2], xi.xi2[2], G).unwrap();
        assert!((th - 0.3).abs() < 1e-12 && (ps + 0.2).abs() < 1e-12);
        let (_, ps) = inverse_angles(0.0, -G * 0.4f64.sin(), G).unwrap();
        assert!((ps - 0.4).abs() < 1e-15);
        assert!(matches!(inverse_angles(0.0, G, G), Err(Error::OutOfEnvelope(_))));
        assert!(matches!(inverse_angles(G, 0.0, G), Err(Error::OutOfEnvelope(_))));
    }

    #[test]
    fn drift_examples() {
        let dg = drift_and_gain(0.0, 0.0, 0.0, 0.0, G);
        assert_eq!((dg.q1, dg.q2), (0.0, 0.0));
        assert_eq!(dg.b, Matrix::from_rows(&[[G, 0.0], [0.0, -G]]).unwrap());
        let dg = drift_and_gain(0.1, 1.0, 0.0, 0.0, G);
        assert!((dg.q1 + G * 0.1f64.sin()).abs() < 1e-15);
        assert_eq!(dg.q2, 0.0);
    }

    #[test]
    fn error_coordinate_examples() {
        let bounds = BetaBounds { min: 0.1, max: 1.9 };
        let w = ExoState([0.3, 0.1, -0.2, 1.0, 2.0, 3.0]);
        let xi = XiCoords { xi1: [0.3, 0.1, -0.2, 0.0], xi2: [1.0, 2.0, 3.0, 0.0] };
        let e = error_coords(&xi, &w, 1.0, 0.0, [0.0, 0.0], &bounds).unwrap();
        assert_eq!(e, ErrorCoords::default());

        let w = ExoState([0.0, 1.0, 2.0, 0.0, 0.0, 0.0]);
        let e = error_coords(&XiCoords::default(), &w, 0.5, 0.1, [0.25, 0.0], &bounds).unwrap();
        assert!((e.e1[3] - 1.3).abs() < 1e-15);
        assert!((e.e1[2] + 4.0).abs() < 1e-15);

        assert!(error_coords(&xi, &w, 2.0, 0.0, [0.0, 0.0], &bounds).is_err());
    }

    #[test]
    fn beta_derivatives_vanish_at_equilibrium() {
        let p = AltitudeParams::nominal(G);
        let s = PlantState { z: p.z_star, ..Default::default() };
        assert_eq!(beta_derivatives(&s, &p, G), (0.0, 0.0));
    }

    #[test]
    fn input_gain_determinant() {
        for &(th, ps) in &[(0.0, 0.0), (0.3, -0.2), (-1.2, 1.1), (1.5, 0.7)] {
            let b = drift_and_gain(th, 0.0, ps, 0.0, G).b;
            let det = b[(0, 0)] * b[(1, 1)] - b[(0, 1)] * b[(1, 0)];
            let want = -G * G * f64::cos(th) * f64::cos(ps).powi(2);
            assert!((det - want).abs() <= 1e-10);
        }
    }

    #[test]
    fn fixed_point_initialization_hits_target_errors() {
        let p = AltitudeParams::nominal(G);
        let bounds = BetaBounds::from_ell(p.ell, G);
        let w = ExoState([0.3, 0.1, -0.05, 0.4, 0.2, 0.1]);
        let rho = [0.25, 0.36];
        let target = ErrorCoords { e1: [1e-3, -2e-3, 0.01, -0.02], e2: [0.0, 5e-3, -0.03, 0.01] };
        let s = plant_state_for_errors(&target, &w, rho, 0.2, 0.1, &p, G).unwrap();
        let b = beta_state(&s, &p, G);
        let e = error_coords(&forward_transform(&s, G), &w, b.beta, b.dbeta, rho, &bounds).unwrap();
        for (a, t) in e.e1.iter().chain(&e.e2).zip(target.e1.iter().chain(&target.e2)) {
            assert!((a - t).abs() < 1e-13, "{a} vs {t}");
        }
    }

    #[test]
    fn chain_rhs_matches_plant_flow() {
        // centered difference of ξ along the plant vector field at fixed input
        let s = PlantState {
            x: 0.2,
            vx: -0.1,
            y: 0.4,
            vy: 0.3,
            z: 0.45,
            vz: 0.05,
            theta: 0.2,
            dtheta: -0.4,
            psi: -0.15,
            dpsi: 0.6,
        };
        let u = ControlInput { u0: 1.3, u1: 2.0, u2: -3.0 };
        let h = 1e-6;
        let d = plant_deriv(&s, &u, G).unwrap();
        let shift = |k: f64| {
            let a: Vec<f64> = s.to_array().iter().zip(d.to_array()).map(|(x, dx)| x + k * h * dx).collect();
            forward_transform(&PlantState::from_slice(&a), G)
        };
        let (fp, fm) = (shift(1.0), shift(-1.0));
        let rhs = xi_rhs(&s, &u, G);
        for axis in 0..2 {
            for k in 0..4 {
                let fd = (fp.axis(axis)[k] - fm.axis(axis)[k]) / (2.0 * h);
                assert!((fd - rhs.axis(axis)[k]).abs() < 1e-7 * (1.0 + fd.abs()));
            }
        }
    }

    proptest! {
        #[test]
        fn angle_round_trip(th in -1.56f64..1.56, ps in -1.56f64..1.56) {
            let s = PlantState { theta: th, psi: ps, ..Default::default() };
            let xi = forward_transform(&s, G);
            let (t2, p2) = inverse_angles(xi.xi1[2], xi.xi2[2], G).unwrap();
            // asin loses accuracy as 1/cos near the envelope edge
            let tol = 5e-14 / (th.cos() * ps.cos());
            prop_assert!((t2 - th).abs() <= tol && (p2 - ps).abs() <= tol);
        }
    }
}
