//! Enhanced extended observer for one horizontal chain: estimates the four
//! error coordinates and the lumped drift `σ` from the measured tracking
//! error, with a time-varying gain `β` on the second integrator.
//!
//! With the default gains the observer is extremely stiff (fastest mode near
//! `−κ b₄`), so it is propagated by exact discretization rather than by an
//! explicit integrator. The propagation runs in innovation coordinates,
//! `χ₁ = ê₁ − x̃`, which keeps the large injection gains from multiplying two
//! nearly equal numbers.
//!
//! The fastest modes amplify high-frequency content of the measurement by
//! many orders of magnitude, so the measurement inside a step must be as
//! smooth as the true signal. It is supplied as a degree-7 Hermite segment
//! matching value and three derivatives at both ends.

use crate::altitude::BetaBounds;
use crate::error::{ensure, ensure_finite, Error, Result};
use crate::numerics::{expm, hurwitz_test, Lu, Matrix};

pub const NOMINAL_KAPPA: f64 = 180.0;
pub const NOMINAL_L: [f64; 4] = [1.0; 4];

/// High-gain parameters. `a` is ordered `a₀ … a₄`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObserverGains {
    pub kappa: f64,
    pub a: [f64; 5],
    pub l: [f64; 4],
    pub beta_min: f64,
    pub beta_max: f64,
}

/// The auxiliary chain `b₀ … b₄` of the coefficient recursion.
pub fn gain_chain(l: [f64; 4], beta_min: f64, beta_max: f64) -> Result<[f64; 5]> {
    ensure(l.iter().all(|&v| v > 0.0 && v.is_finite()), || {
        format!("observer L coefficients must be positive, got {l:?}")
    })?;
    ensure(beta_min > 0.0 && beta_min <= beta_max && beta_max.is_finite(), || {
        format!("need 0 < beta_min <= beta_max, got [{beta_min}, {beta_max}]")
    })?;
    let b0 = 1.0;
    let b1 = l[0] * b0 + b0;
    let b2 = (l[1] * (2f64.sqrt() + 2.0 * b0 * b1) + b0 * b1) / beta_min;
    let b012 = b0 * b1 * b2;
    let b3 = l[2] * (3f64.sqrt() + 3.0 * beta_max * b012) + beta_max * b012;
    let b0123 = b012 * b3;
    let b4 = l[3] * (2.0 * beta_max + 4.0 * b0123) + b0123;
    Ok([b0, b1, b2, b3, b4])
}

/// Observer polynomial coefficients `a₀ … a₄` from the recursion
/// `a₄ = b₄`, `a₃ = b₄b₃`, …, `a₀ = b₄b₃b₂b₁b₀`.
pub fn gain_coefficients(l: [f64; 4], beta_min: f64, beta_max: f64) -> Result<[f64; 5]> {
    let b = gain_chain(l, beta_min, beta_max)?;
    let a4 = b[4];
    let a3 = a4 * b[3];
    let a2 = a3 * b[2];
    let a1 = a2 * b[1];
    let a0 = a1 * b[0];
    Ok([a0, a1, a2, a3, a4])
}

impl ObserverGains {
    pub fn new(kappa: f64, l: [f64; 4], bounds: &BetaBounds) -> Result<Self> {
        ensure(kappa >= 1.0 && kappa.is_finite(), || format!("observer kappa must be >= 1, got {kappa}"))?;
        let a = gain_coefficients(l, bounds.min, bounds.max)?;
        let gains = Self { kappa, a, l, beta_min: bounds.min, beta_max: bounds.max };
        ensure(hurwitz_test(&gains.polynomial())?, || "observer polynomial is not Hurwitz".to_string())?;
        Ok(gains)
    }

    /// `[1, a₄, a₃, a₂, a₁, a₀]`
    pub fn polynomial(&self) -> [f64; 6] {
        [1.0, self.a[4], self.a[3], self.a[2], self.a[1], self.a[0]]
    }

    /// Output-injection vector `(κa₄, κ²a₃, κ³a₂, κ⁴a₁, κ⁵a₀)`.
    pub fn injection(&self) -> [f64; 5] {
        let k = self.kappa;
        [
            k * self.a[4],
            k.powi(2) * self.a[3],
            k.powi(3) * self.a[2],
            k.powi(4) * self.a[1],
            k.powi(5) * self.a[0],
        ]
    }

    fn check_beta(&self, beta: f64) -> Result<()> {
        ensure(beta >= self.beta_min && beta <= self.beta_max, || {
            format!("beta = {beta} outside [{}, {}]", self.beta_min, self.beta_max)
        })
    }

    /// Estimation-error dynamics matrix for frozen `β`: companion-like
    /// chain with the injection in the first column.
    pub fn error_matrix(&self, beta: f64) -> Matrix {
        let inj = self.injection();
        let mut a = Matrix::zeros(5, 5);
        for (i, k) in inj.iter().enumerate() {
            a[(i, 0)] = -k;
        }
        a[(0, 1)] = 1.0;
        a[(1, 2)] = beta;
        a[(2, 3)] = 1.0;
        a[(3, 4)] = 1.0;
        a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObserverState {
    pub ehat: [f64; 4],
    pub sigma: f64,
}

impl ObserverState {
    fn to_array(self) -> [f64; 5] {
        [self.ehat[0], self.ehat[1], self.ehat[2], self.ehat[3], self.sigma]
    }

    fn from_array(v: &[f64]) -> Self {
        Self { ehat: [v[0], v[1], v[2], v[3]], sigma: v[4] }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Signals driving one observer over an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserverInputs {
    /// Measured tracking error of this axis (`x̃` or `ỹ`).
    pub meas_err: f64,
    pub beta: f64,
    /// Row `b̄ᵢ` of the nominal input gain.
    pub bbar_row: [f64; 2],
    pub ubar: [f64; 2],
}

impl ObserverInputs {
    fn drive(&self) -> f64 {
        self.bbar_row[0] * self.ubar[0] + self.bbar_row[1] * self.ubar[1]
    }
}

pub fn observer_deriv(
    o: &ObserverState,
    inp: &ObserverInputs,
    gains: &ObserverGains,
) -> Result<ObserverState> {
    gains.check_beta(inp.beta)?;
    let inj = gains.injection();
    let eps = inp.meas_err - o.ehat[0];
    Ok(ObserverState {
        ehat: [
            o.ehat[1] + inj[0] * eps,
            inp.beta * o.ehat[2] + inj[1] * eps,
            o.ehat[3] + inj[2] * eps,
            o.sigma + inp.drive() + inj[3] * eps,
        ],
        sigma: inj[4] * eps,
    })
}

/// Value and first three time derivatives of a measured signal.
pub type Jet = [f64; 4];

/// Degree-7 Hermite interpolant matching a [`Jet`] at both ends of
/// `[0, h]`, stored as Taylor coefficients `p⁽ʲ⁾(0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermiteSegment {
    h: f64,
    taylor: [f64; 8],
}

impl HermiteSegment {
    pub fn new(start: &Jet, end: &Jet, h: f64) -> Result<Self> {
        ensure(h > 0.0 && h.is_finite(), || format!("segment length must be positive, got {h}"))?;
        ensure_finite(start, "segment start jet")?;
        ensure_finite(end, "segment end jet")?;
        // Normalized time u = s / h: p(u) = Σ_{j<4} D_j u^j / j! + Σ_{j≥4} C_j u^j
        let mut d = [0.0; 4];
        let mut y = [0.0; 4];
        for i in 0..4 {
            d[i] = start[i] * h.powi(i as i32);
            y[i] = end[i] * h.powi(i as i32);
        }
        let mut m = Matrix::zeros(4, 4);
        let mut r = [0.0; 4];
        for i in 0..4 {
            r[i] = y[i] - (i..4).map(|j| d[j] / factorial(j - i)).sum::<f64>();
            for (col, j) in (4..8).enumerate() {
                m[(i, col)] = factorial(j) / factorial(j - i);
            }
        }
        let c = Lu::factor(&m)?.solve_vec(&r)?;
        let mut taylor = [0.0; 8];
        taylor[..4].copy_from_slice(start);
        for (col, j) in (4..8).enumerate() {
            taylor[j] = factorial(j) * c[col] / h.powi(j as i32);
        }
        Ok(Self { h, taylor })
    }

    /// Segment with given derivatives `p⁽ʲ⁾(0)`, `j = 0 … 7`.
    pub fn from_taylor(taylor: [f64; 8], h: f64) -> Result<Self> {
        ensure(h > 0.0 && h.is_finite(), || format!("segment length must be positive, got {h}"))?;
        ensure_finite(&taylor, "segment derivatives")?;
        Ok(Self { h, taylor })
    }

    /// Linear interpolation between two values.
    pub fn linear(m0: f64, m1: f64, h: f64) -> Result<Self> {
        let slope = (m1 - m0) / h;
        Self::new(&[m0, slope, 0.0, 0.0], &[m1, slope, 0.0, 0.0], h)
    }

    pub fn len(&self) -> f64 {
        self.h
    }

    /// Derivatives `p⁽ʲ⁾(0)`, `j = 0 … 7`.
    pub fn taylor(&self) -> &[f64; 8] {
        &self.taylor
    }

    pub fn jet_at(&self, s: f64) -> Jet {
        let d = self.derivatives_at(s);
        [d[0], d[1], d[2], d[3]]
    }

    /// Derivatives of orders 0 … 4 at `s`.
    pub fn derivatives_at(&self, s: f64) -> [f64; 5] {
        let mut out = [0.0; 5];
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in (i..8).rev() {
                acc = acc * s / ((j - i + 1) as f64) + self.taylor[j];
            }
            *o = acc;
        }
        out
    }

    /// The part of this segment on `[s0, s1]`, re-based to start at zero.
    pub fn sub(&self, s0: f64, s1: f64) -> Result<Self> {
        Self::new(&self.jet_at(s0), &self.jet_at(s1), s1 - s0)
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).product::<usize>() as f64
}

/// Exact discretization of the observer for one frozen `β` and step
/// length, with the measurement given as a [`HermiteSegment`] and `b̄ᵢ ū`
/// held constant.
#[derive(Debug, Clone)]
pub struct ObserverPropagator {
    beta: f64,
    dt: f64,
    transition: Matrix,
    /// Response to `m⁽⁵⁾(0)`, `m⁽⁶⁾(0)`, `m⁽⁷⁾(0)`.
    jet_gain: Matrix,
}

impl ObserverPropagator {
    pub fn new(gains: &ObserverGains, beta: f64, dt: f64) -> Result<Self> {
        gains.check_beta(beta)?;
        ensure(dt > 0.0 && dt.is_finite(), || format!("observer step needs dt > 0, got {dt}"))?;
        // Deviations from the values the measurement implies,
        // χ = (ê₁ − m, ê₂ − ṁ, ê₃ − m̈/β, ê₄ − m⁽³⁾/β, σ + d − m⁽⁴⁾/β),
        // obey χ̇ = A χ − e₅ m⁽⁵⁾/β with no other input. The higher
        // measurement derivatives ride along as a nilpotent chain. Working
        // with deviations avoids subtracting large, nearly equal products.
        let a = gains.error_matrix(beta);
        let mut aug = Matrix::zeros(8, 8);
        aug.set_block(0, 0, &a);
        aug[(4, 5)] = -1.0 / beta;
        aug[(5, 6)] = 1.0;
        aug[(6, 7)] = 1.0;
        let e = expm(&aug.scale(dt))?;
        Ok(Self { beta, dt, transition: e.block(0, 0, 5, 5), jet_gain: e.block(0, 5, 5, 3) })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn nominal(&self, m: &[f64; 5], drive: f64) -> [f64; 5] {
        let b = self.beta;
        [m[0], m[1], m[2] / b, m[3] / b, m[4] / b - drive]
    }

    /// Advances one step along measurement segment `m` (whose length must
    /// equal the step) with `drive = b̄ᵢ ū`.
    pub fn step(&self, o: &ObserverState, m: &HermiteSegment, drive: f64) -> ObserverState {
        debug_assert!((m.len() - self.dt).abs() <= 1e-12 * self.dt);
        let t = m.taylor();
        let start = self.nominal(&[t[0], t[1], t[2], t[3], t[4]], drive);
        let mut chi = o.to_array();
        for (c, n) in chi.iter_mut().zip(&start) {
            *c -= n;
        }
        let end = self.nominal(&m.derivatives_at(self.dt), drive);
        let mut next = [0.0; 5];
        for (i, n) in next.iter_mut().enumerate() {
            let tr = self.transition.row(i);
            let jg = self.jet_gain.row(i);
            *n = tr.iter().zip(&chi).map(|(a, b)| a * b).sum::<f64>()
                + jg.iter().zip(&t[5..]).map(|(a, b)| a * b).sum::<f64>()
                + end[i];
        }
        ObserverState::from_array(&next)
    }
}

/// One exact step with all inputs held constant over `dt`.
pub fn observer_step_exact(
    o: &ObserverState,
    inp: &ObserverInputs,
    gains: &ObserverGains,
    dt: f64,
) -> Result<ObserverState> {
    ensure_finite(&o.to_array(), "observer state")?;
    let prop = ObserverPropagator::new(gains, inp.beta, dt)?;
    let m = HermiteSegment::new(&[inp.meas_err, 0.0, 0.0, 0.0], &[inp.meas_err, 0.0, 0.0, 0.0], dt)?;
    let next = prop.step(o, &m, inp.drive());
    if next.is_finite() {
        Ok(next)
    } else {
        Err(Error::NonFinite("observer step".into()))
    }
}
