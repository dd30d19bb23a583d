//! Internal model `η̇ = Fη + G(Γη + ū)` replicating the exosystem spectrum,
//! the steady-state feedforward `Ψ`, and the regulator pair `(Σ, Ψ)`.

use crate::error::{ensure, Error, Result};
use crate::numerics::{char_poly, least_squares, Matrix};

/// Residual gate for the regulator equations.
pub const REGULATOR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct InternalModel {
    pub f: Matrix,
    pub g: Matrix,
    pub gamma: Matrix,
    pub active: bool,
}

fn f_block() -> Matrix {
    Matrix::from_rows(&[[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [-1.0, -3.0, -3.0]]).expect("finite block")
}

fn g_block() -> Matrix {
    Matrix::column(&[0.0, 0.0, 1.0]).expect("finite block")
}

/// Builds `F = diag(F₁, F₂)`, `G = diag(G₁, G₂)` and
/// `Γᵢ = (1, 3 − ρᵢ, 3)` so that `F + GΓ` is the exosystem matrix. With
/// `active = false` the model is deactivated by `Γ = 0`.
pub fn build_internal_model(rho1: f64, rho2: f64, active: bool) -> Result<InternalModel> {
    for rho in [rho1, rho2] {
        ensure(rho >= 0.0 && rho.is_finite(), || {
            format!("exosystem parameter rho must be non-negative, got {rho}")
        })?;
    }
    let f1 = f_block();
    let g1 = g_block();
    let gamma_block = |rho: f64| {
        let row = if active { [1.0, 3.0 - rho, 3.0] } else { [0.0; 3] };
        Matrix::from_rows(&[row]).expect("finite block")
    };
    Ok(InternalModel {
        f: Matrix::block_diag(&[&f1, &f1]),
        g: Matrix::block_diag(&[&g1, &g1]),
        gamma: Matrix::block_diag(&[&gamma_block(rho1), &gamma_block(rho2)]),
        active,
    })
}

impl InternalModel {
    /// `Φ = F + GΓ`.
    pub fn phi(&self) -> Matrix {
        self.f.add(&self.g.matmul(&self.gamma).expect("6x2 by 2x6")).expect("6x6")
    }

    /// `Γη`
    pub fn feedforward(&self, eta: &[f64; 6]) -> [f64; 2] {
        let v = self.gamma.mul_vec(eta).expect("2x6 by 6");
        [v[0], v[1]]
    }
}

/// Returns `(η̇, u)` with `u = Γη + ū` and `η̇ = Fη + G u`.
pub fn im_deriv(m: &InternalModel, eta: &[f64; 6], ubar: [f64; 2]) -> ([f64; 6], [f64; 2]) {
    let ff = m.feedforward(eta);
    let u = [ff[0] + ubar[0], ff[1] + ubar[1]];
    let feta = m.f.mul_vec(eta).expect("6x6 by 6");
    let mut d = [0.0; 6];
    for (i, di) in d.iter_mut().enumerate() {
        *di = feta[i] + m.g[(i, 0)] * u[0] + m.g[(i, 1)] * u[1];
    }
    (d, u)
}

/// Steady-state input map `v(w) = Ψw = (−ρ₁ w₁₃ / g, ρ₂ w₂₃ / g)`.
pub fn psi_matrix(rho1: f64, rho2: f64, g: f64) -> Matrix {
    let mut psi = Matrix::zeros(2, 6);
    psi[(0, 2)] = -rho1 / g;
    psi[(1, 5)] = rho2 / g;
    psi
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegulatorSolution {
    pub sigma: Matrix,
    pub psi: Matrix,
    /// `‖ΣS − ΦΣ‖∞`
    pub sylvester_residual: f64,
    /// `‖ΓΣ − Ψ‖∞`
    pub output_residual: f64,
}

/// Solves `ΣS = (F + GΓ)Σ`, `ΓΣ = Ψ` jointly.
///
/// The Sylvester condition is vectorized as `(Sᵀ ⊗ I − I ⊗ Φ) vec Σ = 0`,
/// stacked with `(I ⊗ Γ) vec Σ = vec Ψ`, and solved in the least-squares
/// sense. Both residuals must fall below [`REGULATOR_TOL`].
pub fn solve_regulator(
    s: &Matrix,
    f: &Matrix,
    g: &Matrix,
    gamma: &Matrix,
    psi: &Matrix,
) -> Result<RegulatorSolution> {
    let n = s.rows();
    let m = f.rows();
    if !s.is_square() || !f.is_square() || g.rows() != m || gamma.cols() != m {
        return Err(Error::Dimension("regulator equation operands".into()));
    }
    if psi.shape() != (gamma.rows(), n) || g.cols() != gamma.rows() {
        return Err(Error::Dimension("regulator output map".into()));
    }
    let phi = f.add(&g.matmul(gamma)?)?;
    let sylv = s.transpose().kron(&Matrix::identity(m)).sub(&Matrix::identity(n).kron(&phi))?;
    let out = Matrix::identity(n).kron(gamma);
    let lhs = sylv.vstack(&out)?;
    let mut rhs = vec![0.0; m * n];
    rhs.extend(psi.vec_col_major());

    let (x, _rank) = least_squares(&lhs, &rhs, 1e-12)?;
    let sigma = Matrix::from_vec_col_major(m, n, &x)?;
    let sylvester_residual = sigma.matmul(s)?.sub(&phi.matmul(&sigma)?)?.norm_inf();
    let output_residual = gamma.matmul(&sigma)?.sub(psi)?.norm_inf();
    if sylvester_residual > REGULATOR_TOL || output_residual > REGULATOR_TOL {
        return Err(Error::NoRegulatorSolution { sylvester: sylvester_residual, output: output_residual });
    }
    Ok(RegulatorSolution { sigma, psi: psi.clone(), sylvester_residual, output_residual })
}

/// Largest coefficient gap between the characteristic polynomials of `Φ`
/// and `S`.
pub fn spectrum_mismatch(m: &InternalModel, s: &Matrix) -> Result<f64> {
    let a = char_poly(&m.phi())?;
    let b = char_poly(s)?;
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::hurwitz_test;
    use crate::reference::exo_matrix;
    use proptest::prelude::*;

    const G: f64 = 9.81;

    #[test]
    fn gamma_and_phi_for_quarter_rho() {
        let m = build_internal_model(0.25, 0.36, true).unwrap();
        assert_eq!(m.gamma.row(0)[..3], [1.0, 2.75, 3.0]);
        let phi = m.phi();
        let p1 = char_poly(&phi.block(0, 0, 3, 3)).unwrap();
        assert_eq!(p1, vec![1.0, 0.0, 0.25, 0.0]);
    }

    #[test]
    fn deactivated_model() {
        let m = build_internal_model(0.0, 0.0, false).unwrap();
        assert_eq!(m.gamma, Matrix::zeros(2, 6));
        let eta = [0.1, -0.2, 0.3, 0.0, 1.0, 2.0];
        let (d, u) = im_deriv(&m, &eta, [0.5, -0.5]);
        assert_eq!(u, [0.5, -0.5]);
        let fe = m.f.mul_vec(&eta).unwrap();
        assert_eq!(d[2], fe[2] + 0.5);
        assert_eq!(d[5], fe[5] - 0.5);
    }

    #[test]
    fn negative_rho_is_rejected() {
        assert!(build_internal_model(-0.1, 0.0, true).is_err());
    }

    #[test]
    fn im_deriv_examples() {
        let m = build_internal_model(0.25, 0.36, true).unwrap();
        assert_eq!(im_deriv(&m, &[0.0; 6], [0.0, 0.0]).0, [0.0; 6]);
        assert_eq!(im_deriv(&m, &[0.0; 6], [1.0, 0.0]).0, [0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn f_is_hurwitz() {
        let m = build_internal_model(0.25, 0.36, true).unwrap();
        let p = char_poly(&m.f.block(0, 0, 3, 3)).unwrap();
        assert_eq!(p, vec![1.0, 3.0, 3.0, 1.0]);
        assert!(hurwitz_test(&p).unwrap());
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi_matrix(0.0, 0.0, G), Matrix::zeros(2, 6));
        assert!((psi_matrix(0.25, 0.0, G)[(0, 2)] + 0.025_484_199_796_126_4).abs() < 1e-15);
        assert!((psi_matrix(0.0, 0.36, G)[(1, 5)] - 0.036_697_247_706_422_02).abs() < 1e-15);
    }

    #[test]
    fn regulator_for_periodic_exosystem() {
        let (r1, r2) = (0.25, 0.36);
        let m = build_internal_model(r1, r2, true).unwrap();
        let sol = solve_regulator(&exo_matrix(r1, r2), &m.f, &m.g, &m.gamma, &psi_matrix(r1, r2, G)).unwrap();
        assert!(sol.sylvester_residual <= 1e-9 && sol.output_residual <= 1e-9);
    }

    #[test]
    fn regulator_with_zero_feedforward() {
        let m = build_internal_model(0.0, 0.0, true).unwrap();
        let sol =
            solve_regulator(&exo_matrix(0.0, 0.0), &m.f, &m.g, &m.gamma, &psi_matrix(0.0, 0.0, G)).unwrap();
        assert_eq!(sol.sigma, Matrix::zeros(6, 6));
        assert_eq!((sol.sylvester_residual, sol.output_residual), (0.0, 0.0));
    }

    #[test]
    fn perturbed_gamma_has_no_solution() {
        let (r1, r2) = (0.25, 0.36);
        let mut m = build_internal_model(r1, r2, true).unwrap();
        m.gamma[(0, 1)] += 0.5;
        let err =
            solve_regulator(&exo_matrix(r1, r2), &m.f, &m.g, &m.gamma, &psi_matrix(r1, r2, G)).unwrap_err();
        assert!(matches!(err, Error::NoRegulatorSolution { .. }));
    }

    proptest! {
        #[test]
        fn spectrum_matches_exosystem(r1 in 0.0f64..4.0, r2 in 0.0f64..4.0) {
            let m = build_internal_model(r1, r2, true).unwrap();
            prop_assert!(spectrum_mismatch(&m, &exo_matrix(r1, r2)).unwrap() <= 1e-12);
        }

        #[test]
        fn psi_reproduces_steady_input(w in proptest::array::uniform6(-10.0f64..10.0),
                                       r1 in 0.0f64..4.0, r2 in 0.0f64..4.0) {
            let v = psi_matrix(r1, r2, G).mul_vec(&w).unwrap();
            prop_assert_eq!(v[0], -r1 / G * w[2]);
            prop_assert_eq!(v[1], r2 / G * w[5]);
        }
    }
}
