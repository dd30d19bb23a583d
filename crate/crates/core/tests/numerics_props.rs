use nalgebra::DMatrix;
use proptest::prelude::*;
use quadtrack_core::numerics::{char_poly, expm, hurwitz_test, rk4_step, smooth_sat, solve_linear, Matrix};

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

fn square(n: usize, scale: f64) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-scale..scale, n * n).prop_map(move |v| Matrix::new(n, n, v).unwrap())
}

/// Largest real part of the roots of a monic polynomial, via its companion matrix.
fn max_root_re(monic: &[f64]) -> f64 {
    let n = monic.len() - 1;
    let c = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j {
            1.0
        } else if i == n - 1 {
            -monic[n - j]
        } else {
            0.0
        }
    });
    c.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

proptest! {
    #[test]
    fn hurwitz_agrees_with_eigenvalues(tail in prop::collection::vec(-5.0..20.0f64, 1..7)) {
        let mut p = vec![1.0];
        p.extend(&tail);
        let re = max_root_re(&p);
        prop_assume!(re.abs() > 1e-6);
        prop_assert_eq!(hurwitz_test(&p).unwrap(), re < 0.0);
    }

    #[test]
    fn hurwitz_accepts_products_of_stable_factors(roots in prop::collection::vec((0.05..5.0f64, 0.0..5.0f64), 1..4)) {
        let mut p = vec![1.0];
        for (a, b) in roots {
            // (s + a)^2 + b^2
            let f = [1.0, 2.0 * a, a * a + b * b];
            let mut q = vec![0.0; p.len() + 2];
            for (i, pi) in p.iter().enumerate() {
                for (j, fj) in f.iter().enumerate() {
                    q[i + j] += pi * fj;
                }
            }
            p = q;
        }
        prop_assert!(hurwitz_test(&p).unwrap());
    }

    #[test]
    fn expm_inverse_identity(m in square(4, 3.0)) {
        let neg = Matrix::new(4, 4, m.as_slice().iter().map(|v| -v).collect()).unwrap();
        let prod = expm(&m).unwrap().matmul(&expm(&neg).unwrap()).unwrap();
        let err = prod.sub(&Matrix::identity(4)).unwrap().max_abs();
        let scale = expm(&m).unwrap().norm1() * expm(&neg).unwrap().norm1();
        prop_assert!(err <= 1e-13 * scale, "err {err}, scale {scale}");
    }

    #[test]
    fn expm_matches_nalgebra(m in square(5, 2.0)) {
        let ours = to_na(&expm(&m).unwrap());
        let theirs = to_na(&m).exp();
        let err = (&ours - &theirs).abs().max();
        prop_assert!(err <= 1e-12 * theirs.abs().max().max(1.0), "err {err}");
    }

    #[test]
    fn char_poly_matches_trace_and_determinant(m in square(4, 3.0)) {
        let p = char_poly(&m).unwrap();
        let na = to_na(&m);
        prop_assert!((p[0] - 1.0).abs() < 1e-15);
        prop_assert!((p[1] + na.trace()).abs() <= 1e-12 * (1.0 + na.trace().abs()));
        let det = na.determinant();
        prop_assert!((p[4] - det).abs() <= 1e-10 * (1.0 + det.abs()));
    }

    #[test]
    fn rk4_local_error_bound(lambda in -4.0..4.0f64, x0 in -10.0..10.0f64, dt in 1e-3..0.1f64) {
        let x1 = rk4_step(|_, x, d| { d[0] = lambda * x[0]; Ok(()) }, 0.0, &[x0], dt).unwrap()[0];
        let exact = x0 * (lambda * dt).exp();
        let z = (lambda * dt).abs();
        // Taylor remainder of the degree-4 polynomial
        let bound = x0.abs() * z.powi(5) / 120.0 * z.exp() + 1e-15 * x0.abs().max(1.0);
        prop_assert!((x1 - exact).abs() <= bound, "{} > {bound}", (x1 - exact).abs());
    }

    #[test]
    fn linear_solve_residual(m in square(5, 1.0), b in prop::collection::vec(-1.0..1.0f64, 5)) {
        let a = m.add(&Matrix::from_diag(&[6.0; 5])).unwrap();
        let x = solve_linear(&a, &b).unwrap();
        let r = a.mul_vec(&x).unwrap();
        for (ri, bi) in r.iter().zip(&b) {
            prop_assert!((ri - bi).abs() <= 1e-13);
        }
    }

    #[test]
    fn saturation_is_odd_bounded_and_monotone(v in -1e3..1e3f64, dv in 0.0..10.0f64, limit in 0.1..200.0f64) {
        let s = smooth_sat(v, limit).unwrap();
        prop_assert!(s.abs() <= limit);
        prop_assert_eq!(smooth_sat(-v, limit).unwrap(), -s);
        prop_assert!(smooth_sat(v + dv, limit).unwrap() >= s);
    }
}
