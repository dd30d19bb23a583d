use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Relative pivot threshold below which a matrix is declared singular.
pub const SINGULAR_PIVOT_TOL: f64 = 1e-14;

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &Matrix) -> Result<Self> {
        Self::factor_with_tol(a, SINGULAR_PIVOT_TOL)
    }

    pub fn factor_with_tol(a: &Matrix, rel_tol: f64) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension(format!("LU needs a square matrix, got {:?}", a.shape())));
        }
        let n = a.rows();
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pivot) = (k..n).map(|i| (i, lu[(i, k)].abs())).fold((k, -1.0), |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            });
            if pivot <= rel_tol * scale {
                return Err(Error::Singular { pivot });
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
            }
            let d = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / d;
                lu[(i, k)] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        let v = lu[(k, j)];
                        lu[(i, j)] -= f * v;
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve_vec(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.lu.rows();
        if b.len() != n {
            return Err(Error::Dimension(format!("rhs length {} for {n}x{n} system", b.len())));
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[(i, i)];
        }
        Ok(x)
    }

    /// Solves `A X = B` column by column.
    pub fn solve_mat(&self, b: &Matrix) -> Result<Matrix> {
        let mut out = Matrix::zeros(b.rows(), b.cols());
        let mut col = vec![0.0; b.rows()];
        for j in 0..b.cols() {
            for (i, c) in col.iter_mut().enumerate() {
                *c = b[(i, j)];
            }
            let x = self.solve_vec(&col)?;
            for (i, v) in x.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        Ok(out)
    }
}

/// Solves `A x = b` by pivoted Gaussian elimination.
pub fn solve_linear(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    Lu::factor(a)?.solve_vec(b)
}

pub fn inverse(a: &Matrix) -> Result<Matrix> {
    Lu::factor(a)?.solve_mat(&Matrix::identity(a.rows()))
}

/// Least-squares solution of `A x ≈ b` for tall or rank-deficient `A`.
///
/// Householder QR with column pivoting; columns whose diagonal falls below
/// `rank_tol * |R₀₀|` are dropped and their unknowns set to zero (basic
/// solution). Returns the solution and the detected rank.
pub fn least_squares(a: &Matrix, b: &[f64], rank_tol: f64) -> Result<(Vec<f64>, usize)> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(Error::Dimension(format!("rhs length {} for {m}x{n} system", b.len())));
    }
    let mut r = a.clone();
    let mut rhs = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut col_norms: Vec<f64> = (0..n).map(|j| (0..m).map(|i| r[(i, j)].powi(2)).sum()).collect();
    let steps = m.min(n);
    let mut rank = 0;
    let mut r00 = 0.0;
    for k in 0..steps {
        // pivot on the remaining column with largest norm
        let (p, _) =
            (k..n).fold((k, -1.0), |best, j| if col_norms[j] > best.1 { (j, col_norms[j]) } else { best });
        if p != k {
            for i in 0..m {
                let tmp = r[(i, k)];
                r[(i, k)] = r[(i, p)];
                r[(i, p)] = tmp;
            }
            col_norms.swap(k, p);
            perm.swap(k, p);
        }
        let norm: f64 = (k..m).map(|i| r[(i, k)].powi(2)).sum::<f64>().sqrt();
        if k == 0 {
            r00 = norm;
        }
        if norm <= rank_tol * r00 || norm == 0.0 {
            break;
        }
        rank += 1;
        let alpha = if r[(k, k)] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..m).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for j in k..n {
                let dot: f64 = (k..m).map(|i| v[i - k] * r[(i, j)]).sum();
                let f = 2.0 * dot / vnorm2;
                for i in k..m {
                    r[(i, j)] -= f * v[i - k];
                }
            }
            let dot: f64 = (k..m).map(|i| v[i - k] * rhs[i]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..m {
                rhs[i] -= f * v[i - k];
            }
        }
        for (j, cn) in col_norms.iter_mut().enumerate().skip(k + 1) {
            *cn = (k + 1..m).map(|i| r[(i, j)].powi(2)).sum();
        }
    }
    let mut z = vec![0.0; n];
    for i in (0..rank).rev() {
        let s: f64 = (i + 1..rank).map(|j| r[(i, j)] * z[j]).sum();
        z[i] = (rhs[i] - s) / r[(i, i)];
    }
    let mut x = vec![0.0; n];
    for (k, &p) in perm.iter().enumerate() {
        x[p] = z[k];
    }
    Ok((x, rank))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_diagonal_systems() {
        let b = [3.0, -1.5, 7.25];
        assert_eq!(solve_linear(&Matrix::identity(3), &b).unwrap(), b.to_vec());
        let a = Matrix::from_diag(&[2.0, 4.0]);
        assert_eq!(solve_linear(&a, &[2.0, 8.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn singular_reports_pivot() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        match solve_linear(&a, &[1.0, 1.0]) {
            Err(Error::Singular { pivot }) => assert!(pivot < 1e-12),
            other => panic!("expected singular, got {other:?}"),
        }
        assert!(matches!(solve_linear(&Matrix::zeros(2, 3), &[0.0, 0.0]), Err(Error::Dimension(_))));
    }

    #[test]
    fn least_squares_rank_deficient_consistent() {
        // x + y = 2 written twice, plus 2x + 2y = 4
        let a = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0], [2.0, 2.0]]).unwrap();
        let (x, rank) = least_squares(&a, &[2.0, 2.0, 4.0], 1e-12).unwrap();
        assert_eq!(rank, 1);
        assert!((x[0] + x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn least_squares_overdetermined_matches_normal_equations() {
        let a = Matrix::from_rows(&[[1.0, 0.0], [1.0, 1.0], [1.0, 2.0]]).unwrap();
        let b = [1.0, 2.0, 2.0];
        let (x, rank) = least_squares(&a, &b, 1e-12).unwrap();
        assert_eq!(rank, 2);
        // line fit: intercept 7/6, slope 1/2
        assert!((x[0] - 7.0 / 6.0).abs() < 1e-12);
        assert!((x[1] - 0.5).abs() < 1e-12);
    }
}
