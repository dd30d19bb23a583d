use crate::error::{Error, Result};

/// One classical fourth-order Runge–Kutta step of `ẋ = f(t, x)`.
///
/// The vector field writes its derivative into the output slice. A
/// non-finite derivative component aborts the step with the stage time and
/// component index.
pub fn rk4_step<F>(mut f: F, t: f64, x: &[f64], dt: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    if !(dt > 0.0) {
        return Err(Error::Contract(format!("rk4 step needs dt > 0, got {dt}")));
    }
    let n = x.len();
    let mut eval = |tt: f64, xx: &[f64], out: &mut [f64]| -> Result<()> {
        f(tt, xx, out)?;
        match out.iter().position(|v| !v.is_finite()) {
            Some(component) => Err(Error::Integration { t: tt, component }),
            None => Ok(()),
        }
    };

    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];

    eval(t, x, &mut k1)?;
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * dt * k1[i];
    }
    eval(t + 0.5 * dt, &tmp, &mut k2)?;
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * dt * k2[i];
    }
    eval(t + 0.5 * dt, &tmp, &mut k3)?;
    for i in 0..n {
        tmp[i] = x[i] + dt * k3[i];
    }
    eval(t + dt, &tmp, &mut k4)?;

    Ok((0..n).map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect())
}
