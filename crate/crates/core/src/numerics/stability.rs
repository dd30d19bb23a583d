use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Routh–Hurwitz test for a monic polynomial given by descending
/// coefficients `[1, c_{n-1}, …, c_0]`.
///
/// Returns `true` iff every root has strictly negative real part. A zero or
/// negative entry in the first column of the Routh table (including the
/// singular cases that would need an epsilon row) yields `false`.
pub fn hurwitz_test(coeffs: &[f64]) -> Result<bool> {
    if coeffs.len() < 2 {
        return Err(Error::Contract("Hurwitz test needs a polynomial of degree >= 1".into()));
    }
    if coeffs[0] != 1.0 {
        return Err(Error::Contract(format!(
            "Hurwitz test expects a monic polynomial, leading coefficient is {}",
            coeffs[0]
        )));
    }
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("polynomial coefficients".into()));
    }
    let n = coeffs.len() - 1;
    let width = n / 2 + 1;
    let row_from = |start: usize| -> Vec<f64> {
        (0..width).map(|k| coeffs.get(start + 2 * k).copied().unwrap_or(0.0)).collect()
    };
    let mut prev = row_from(0);
    let mut cur = row_from(1);
    for _ in 1..=n {
        if !(cur[0] > 0.0) {
            return Ok(false);
        }
        let next: Vec<f64> = (0..width)
            .map(|k| {
                let a = prev.get(k + 1).copied().unwrap_or(0.0);
                let b = cur.get(k + 1).copied().unwrap_or(0.0);
                (cur[0] * a - prev[0] * b) / cur[0]
            })
            .collect();
        prev = cur;
        cur = next;
    }
    Ok(true)
}

/// Characteristic polynomial `det(sI − A)` by the Faddeev–LeVerrier
/// recursion, descending coefficients starting with 1.
pub fn char_poly(a: &Matrix) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::Dimension("characteristic polynomial of non-square matrix".into()));
    }
    let n = a.rows();
    let mut coeffs = vec![1.0];
    let mut m = Matrix::zeros(n, n);
    let mut c = 1.0;
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{k-1} I
        let mut next = a.matmul(&m)?;
        for i in 0..n {
            next[(i, i)] += c;
        }
        m = next;
        c = -a.matmul(&m)?.trace() / k as f64;
        coeffs.push(c);
    }
    Ok(coeffs)
}
