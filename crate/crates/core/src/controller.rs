//! Saturated output-feedback law built on the observer estimates, gain
//! certification, and the full-state linearizing law used as a reference.

use std::fmt;

use crate::altitude::BetaBounds;
use crate::error::{ensure, ensure_finite, Error, Result};
use crate::internal_model::InternalModel;
use crate::normal_form::{drift_and_gain, error_coords, forward_transform, BetaState, DriftGain};
use crate::numerics::{hurwitz_test, inverse, Matrix, SmoothSat};
use crate::observer::ObserverState;
use crate::plant::PlantState;
use crate::reference::ExoState;

pub const NOMINAL_K: [f64; 4] = [100.0, 100.0, 100.0, 10.0];
pub const NOMINAL_NU: f64 = 100.0;

/// Direction of the `K e` feedback term in the last chain equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignConvention {
    /// `ė₄ = −K e`, closed-loop polynomial `s⁴ + k₄s³ + k₃s² + k₂s + k₁`.
    Negative,
    /// `ė₄ = +K e` with the gains exactly as given.
    AsGiven,
}

impl SignConvention {
    pub fn factor(self) -> f64 {
        match self {
            SignConvention::Negative => -1.0,
            SignConvention::AsGiven => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SignConvention::Negative => "negative",
            SignConvention::AsGiven => "as-given",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "negative" => Some(SignConvention::Negative),
            "as-given" => Some(SignConvention::AsGiven),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerParams {
    k: [f64; 4],
    bbar: Matrix,
    bbar_inv: Matrix,
    nu: f64,
    sign: SignConvention,
}

impl ControllerParams {
    pub fn new(k: [f64; 4], bbar: Matrix, nu: f64, sign: SignConvention) -> Result<Self> {
        ensure_finite(&k, "feedback gains")?;
        ensure(bbar.shape() == (2, 2), || format!("Bbar must be 2x2, got {:?}", bbar.shape()))?;
        SmoothSat::new(nu)?;
        let bbar_inv = inverse(&bbar)?;
        Ok(Self { k, bbar, bbar_inv, nu, sign })
    }

    /// `K = (100, 100, 100, 10)`, `B̄ = diag(g, −g)`, `ν = 100`, negative
    /// feedback.
    pub fn nominal(g: f64) -> Self {
        Self::new(NOMINAL_K, Matrix::from_diag(&[g, -g]), NOMINAL_NU, SignConvention::Negative)
            .expect("default controller parameters are valid")
    }

    pub fn k(&self) -> [f64; 4] {
        self.k
    }

    pub fn bbar(&self) -> &Matrix {
        &self.bbar
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn sign(&self) -> SignConvention {
        self.sign
    }

    pub fn bbar_row(&self, axis: usize) -> [f64; 2] {
        [self.bbar[(axis, 0)], self.bbar[(axis, 1)]]
    }

    /// Feedback term `±K·e` under the configured convention.
    pub fn feedback(&self, e: &[f64; 4]) -> f64 {
        self.sign.factor() * self.k.iter().zip(e).map(|(k, x)| k * x).sum::<f64>()
    }

    /// Closed-loop chain polynomial for a frozen `β`:
    /// `s⁴ − c k₄ s³ − c k₃ s² − c β k₂ s − c β k₁` with `c` the sign factor.
    pub fn closed_loop_quartic(&self, beta: f64) -> [f64; 5] {
        let c = self.sign.factor();
        [1.0, -c * self.k[3], -c * self.k[2], -c * beta * self.k[1], -c * beta * self.k[0]]
    }
}

/// Attitude box over which the input-gain mismatch condition is checked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub max_theta: f64,
    pub max_psi: f64,
}

impl Default for Envelope {
    fn default() -> Self {
        Self { max_theta: 0.5, max_psi: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificationReport {
    pub convention: SignConvention,
    pub quartic: [f64; 5],
    pub quartic_hurwitz: bool,
    /// Hurwitz screen at `β_min` and `β_max`; informational only.
    pub beta_screen: Vec<(f64, bool)>,
    pub mismatch_norm_max: f64,
    pub mismatch_argmax: (f64, f64),
    pub mismatch_ok: bool,
    pub envelope: Envelope,
    pub grid: usize,
}

impl CertificationReport {
    pub fn passed(&self) -> bool {
        self.quartic_hurwitz && self.mismatch_ok
    }
}

impl fmt::Display for CertificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = |ok: bool| if ok { "pass" } else { "FAIL" };
        writeln!(f, "sign convention: {}", self.convention.as_str())?;
        writeln!(f, "closed-loop quartic {:?}: {}", self.quartic, verdict(self.quartic_hurwitz))?;
        for (beta, ok) in &self.beta_screen {
            writeln!(f, "  screen at beta = {beta}: {}", if *ok { "hurwitz" } else { "not hurwitz" })?;
        }
        write!(
            f,
            "max ||(B - Bbar) Bbar^-1||_1 over |theta| <= {}, |psi| <= {} ({}x{} grid) = {:.6} at ({:.4}, {:.4}): {}",
            self.envelope.max_theta,
            self.envelope.max_psi,
            self.grid,
            self.grid,
            self.mismatch_norm_max,
            self.mismatch_argmax.0,
            self.mismatch_argmax.1,
            verdict(self.mismatch_ok)
        )
    }
}

/// `‖(B(θ, ψ) − B̄) B̄⁻¹‖₁`
pub fn gain_mismatch(theta: f64, psi: f64, p: &ControllerParams, g: f64) -> f64 {
    let b = drift_and_gain(theta, 0.0, psi, 0.0, g).b;
    b.sub(&p.bbar).and_then(|d| d.matmul(&p.bbar_inv)).expect("2x2 operands").norm1()
}

/// Certifies the feedback gains and the nominal input gain.
pub fn validate_gains(
    p: &ControllerParams,
    envelope: &Envelope,
    bounds: &BetaBounds,
    grid: usize,
    g: f64,
) -> Result<CertificationReport> {
    ensure(
        envelope.max_theta < std::f64::consts::FRAC_PI_2
            && envelope.max_psi < std::f64::consts::FRAC_PI_2
            && envelope.max_theta >= 0.0
            && envelope.max_psi >= 0.0,
        || format!("envelope bounds must lie in [0, pi/2), got {envelope:?}"),
    )?;
    ensure(grid >= 2, || "certification grid needs at least 2 points".into())?;

    let quartic = p.closed_loop_quartic(1.0);
    let quartic_hurwitz = hurwitz_test(&quartic)?;
    let beta_screen = [bounds.min, bounds.max]
        .iter()
        .map(|&b| Ok((b, hurwitz_test(&p.closed_loop_quartic(b))?)))
        .collect::<Result<Vec<_>>>()?;

    let mut worst = (f64::NEG_INFINITY, (0.0, 0.0));
    let axis = |i: usize, max: f64| -max + 2.0 * max * i as f64 / (grid - 1) as f64;
    for i in 0..grid {
        let theta = axis(i, envelope.max_theta);
        for j in 0..grid {
            let psi = axis(j, envelope.max_psi);
            let n = gain_mismatch(theta, psi, p, g);
            if n > worst.0 {
                worst = (n, (theta, psi));
            }
        }
    }
    Ok(CertificationReport {
        convention: p.sign,
        quartic,
        quartic_hurwitz,
        beta_screen,
        mismatch_norm_max: worst.0,
        mismatch_argmax: worst.1,
        mismatch_ok: worst.0 < 1.0,
        envelope: *envelope,
        grid,
    })
}

/// Saturated output-feedback law. Returns `(ū, u)` with `u = Γη + ū`.
pub fn robust_control(
    o1: &ObserverState,
    o2: &ObserverState,
    eta: &[f64; 6],
    im: &InternalModel,
    p: &ControllerParams,
) -> ([f64; 2], [f64; 2]) {
    let v = [-o1.sigma + p.feedback(&o1.ehat), -o2.sigma + p.feedback(&o2.ehat)];
    let raw = p.bbar_inv.mul_vec(&v).expect("2x2 by 2");
    let sat = SmoothSat::new(p.nu).expect("validated limit");
    let ubar = [sat.apply(raw[0]), sat.apply(raw[1])];
    let ff = im.feedforward(eta);
    (ubar, [ff[0] + ubar[0], ff[1] + ubar[1]])
}

/// Residual drift `q̃ᵢ` of the last error equation after removing the
/// steady-state input `Ψw`.
pub fn residual_drift(dg: &DriftGain, w: &ExoState, b: &BetaState, psi: &Matrix, rho: [f64; 2]) -> [f64; 2] {
    let psi_w = psi.mul_vec(&w.0).expect("2x6 by 6");
    let mut out = [0.0; 2];
    for (axis, o) in out.iter_mut().enumerate() {
        let wi = w.block(axis);
        *o = dg.q(axis) + beta_coupling(b, rho[axis], wi) + dg.b_row_dot(axis, [psi_w[0], psi_w[1]]);
    }
    out
}

/// `[β̈/β² − 2β̇²/β³ + ρ/β] wᵢ₃ − (2ρβ̇/β²) wᵢ₂`
fn beta_coupling(b: &BetaState, rho: f64, wi: [f64; 3]) -> f64 {
    let (beta, db, ddb) = (b.beta, b.dbeta, b.ddbeta);
    (ddb / (beta * beta) - 2.0 * db * db / beta.powi(3) + rho / beta) * wi[2]
        - 2.0 * rho * db / (beta * beta) * wi[1]
}

/// What the observer's `σᵢ` estimates: `ėᵢ₄ − b̄ᵢ ū`, evaluated from the
/// full state with total input `u` and saturated part `ū`.
#[allow(clippy::too_many_arguments)]
pub fn lumped_drift(
    s: &PlantState,
    w: &ExoState,
    b: &BetaState,
    u: [f64; 2],
    ubar: [f64; 2],
    p: &ControllerParams,
    rho: [f64; 2],
    g: f64,
) -> [f64; 2] {
    let dg = drift_and_gain(s.theta, s.dtheta, s.psi, s.dpsi, g);
    let mut out = [0.0; 2];
    for (axis, o) in out.iter_mut().enumerate() {
        let row = p.bbar_row(axis);
        *o = dg.q(axis) + beta_coupling(b, rho[axis], w.block(axis)) + dg.b_row_dot(axis, u)
            - (row[0] * ubar[0] + row[1] * ubar[1]);
    }
    out
}

/// Full-state linearizing law
/// `ū = −Γη̃ + B⁻¹(θ, ψ) (−q̃₁ ± K e₁, −q̃₂ ± K e₂)`.
#[allow(clippy::too_many_arguments)]
pub fn ideal_control(
    s: &PlantState,
    w: &ExoState,
    eta_tilde: &[f64; 6],
    b: &BetaState,
    im: &InternalModel,
    p: &ControllerParams,
    psi: &Matrix,
    rho: [f64; 2],
    bounds: &BetaBounds,
    g: f64,
) -> Result<[f64; 2]> {
    let dg = drift_and_gain(s.theta, s.dtheta, s.psi, s.dpsi, g);
    let det = dg.b[(0, 0)] * dg.b[(1, 1)] - dg.b[(0, 1)] * dg.b[(1, 0)];
    if !(det.abs() > 1e-12 * g * g) || !s.in_transform_envelope() {
        return Err(Error::OutOfEnvelope(format!(
            "input gain singular at theta = {}, psi = {}",
            s.theta, s.psi
        )));
    }
    let e = error_coords(&forward_transform(s, g), w, b.beta, b.dbeta, rho, bounds)?;
    let qt = residual_drift(&dg, w, b, psi, rho);
    let v = [-qt[0] + p.feedback(&e.e1), -qt[1] + p.feedback(&e.e2)];
    // B⁻¹ of [[b00, b01], [0, b11]]
    let x1 = v[1] / dg.b[(1, 1)];
    let x0 = (v[0] - dg.b[(0, 1)] * x1) / dg.b[(0, 0)];
    let ge = im.feedforward(eta_tilde);
    Ok([x0 - ge[0], x1 - ge[1]])
}
