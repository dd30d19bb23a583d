use super::linsolve::Lu;
use super::matrix::Matrix;
use crate::error::{Error, Result};

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Largest 1-norm for which the degree-13 Padé approximant needs no scaling.
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by diagonal balancing followed by scaling and
/// squaring around a degree-13 Padé approximant.
pub fn expm(m: &Matrix) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("expm needs a square matrix, got {:?}", m.shape())));
    }
    let n = m.rows();
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }

    let (balanced, scale) = balance(m);
    let use_balance = balanced.norm1() < m.norm1();
    let a = if use_balance { balanced } else { m.clone() };

    let norm = a.norm1();
    let squarings = if norm > THETA13 { (norm / THETA13).log2().ceil().max(0.0) as i32 } else { 0 };
    let a = a.scale(0.5f64.powi(squarings));

    let mut e = pade13(&a)?;
    for _ in 0..squarings {
        e = e.matmul(&e)?;
    }

    if use_balance {
        // expm(D B D⁻¹) = D expm(B) D⁻¹
        for i in 0..n {
            for j in 0..n {
                e[(i, j)] *= scale[i] / scale[j];
            }
        }
    }
    if e.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix exponential".into()));
    }
    Ok(e)
}

fn pade13(a: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    let b = &PADE13;
    let ident = Matrix::identity(n);
    let a2 = a.matmul(a)?;
    let a4 = a2.matmul(&a2)?;
    let a6 = a4.matmul(&a2)?;

    let lin = |c6: f64, c4: f64, c2: f64, c0: f64| -> Result<Matrix> {
        a6.scale(c6).add(&a4.scale(c4))?.add(&a2.scale(c2))?.add(&ident.scale(c0))
    };

    let u_inner = a6.matmul(&lin(b[13], b[11], b[9], 0.0)?)?;
    let u = a.matmul(&u_inner.add(&lin(b[7], b[5], b[3], b[1])?)?)?;
    let v_inner = a6.matmul(&lin(b[12], b[10], b[8], 0.0)?)?;
    let v = v_inner.add(&lin(b[6], b[4], b[2], b[0])?)?;

    let p = v.add(&u)?;
    let q = v.sub(&u)?;
    Lu::factor(&q)?.solve_mat(&p)
}

/// Parlett–Reinsch diagonal balancing with radix 2 (no permutations).
///
/// Returns `B = D⁻¹ M D` and the diagonal of `D`. Powers of two keep the
/// similarity exact in floating point.
pub fn balance(m: &Matrix) -> (Matrix, Vec<f64>) {
    const RADIX: f64 = 2.0;
    let n = m.rows();
    let mut b = m.clone();
    let mut scale = vec![1.0; n];
    let mut converged = false;
    let mut sweeps = 0;
    while !converged && sweeps < 100 {
        converged = true;
        sweeps += 1;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += b[(j, i)].abs();
                    r += b[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                converged = false;
                scale[i] *= f;
                for j in 0..n {
                    b[(i, j)] /= f;
                    b[(j, i)] *= f;
                }
            }
        }
    }
    (b, scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_err(a: &Matrix, b: &Matrix) -> f64 {
        a.sub(b).unwrap().norm1() / b.norm1().max(1e-300)
    }

    #[test]
    fn zero_gives_identity() {
        assert_eq!(expm(&Matrix::zeros(3, 3)).unwrap(), Matrix::identity(3));
    }

    #[test]
    fn diagonal_case() {
        let e = expm(&Matrix::from_diag(&[1.0, 2.0])).unwrap();
        let want = Matrix::from_diag(&[1f64.exp(), 2f64.exp()]);
        assert!(rel_err(&e, &want) < 1e-14);
    }

    #[test]
    fn nilpotent_series_terminates() {
        let n = Matrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]).unwrap();
        let e = expm(&n).unwrap();
        let want = Matrix::from_rows(&[[1.0, 1.0], [0.0, 1.0]]).unwrap();
        assert!(rel_err(&e, &want) < 1e-15);
    }

    #[test]
    fn rotation_with_large_norm() {
        for &w in &[0.3, 7.0, 150.0, 999.0] {
            let m = Matrix::from_rows(&[[0.0, -w], [w, 0.0]]).unwrap();
            let e = expm(&m).unwrap();
            let (s, c) = f64::sin_cos(w);
            let want = Matrix::from_rows(&[[c, -s], [s, c]]).unwrap();
            assert!(rel_err(&e, &want) < 1e-10, "w = {w}");
        }
    }

    #[test]
    fn similarity_with_known_spectrum() {
        // M = P diag(λ) P⁻¹ with λ spanning several decades
        let p = Matrix::from_rows(&[[1.0, 2.0, 0.0], [0.0, 1.0, 3.0], [1.0, 0.0, 1.0]]).unwrap();
        let pinv = super::super::linsolve::inverse(&p).unwrap();
        let lam = [-300.0, -2.0, 0.5];
        let m = p.matmul(&Matrix::from_diag(&lam)).unwrap().matmul(&pinv).unwrap();
        let want = p.matmul(&Matrix::from_diag(&lam.map(f64::exp))).unwrap().matmul(&pinv).unwrap();
        assert!(rel_err(&expm(&m).unwrap(), &want) < 1e-10);
    }

    #[test]
    fn non_square_is_rejected() {
        assert!(matches!(expm(&Matrix::zeros(2, 3)), Err(Error::Dimension(_))));
    }

    #[test]
    fn balancing_is_an_exact_similarity() {
        let m = Matrix::from_rows(&[[1.0, 1e6, 0.0], [1e-6, 2.0, 1e4], [0.0, 1e-4, 3.0]]).unwrap();
        let (b, d) = balance(&m);
        assert!(b.norm1() < m.norm1());
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(b[(i, j)], m[(i, j)] * d[j] / d[i]);
            }
        }
    }
}
