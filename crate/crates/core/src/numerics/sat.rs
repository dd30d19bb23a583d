use crate::error::{Error, Result};

/// Smooth saturation `limit · tanh(v / limit)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothSat {
    limit: f64,
}

impl SmoothSat {
    pub fn new(limit: f64) -> Result<Self> {
        if limit > 0.0 && limit.is_finite() {
            Ok(Self { limit })
        } else {
            Err(Error::Contract(format!("saturation limit must be positive and finite, got {limit}")))
        }
    }

    pub fn limit(&self) -> f64 {
        self.limit
    }

    pub fn apply(&self, v: f64) -> f64 {
        self.limit * (v / self.limit).tanh()
    }

    /// First derivative `1 − tanh²(v / limit)`.
    pub fn derivative(&self, v: f64) -> f64 {
        let th = (v / self.limit).tanh();
        1.0 - th * th
    }

    /// Second derivative `−2 tanh(v/limit) (1 − tanh²(v/limit)) / limit`.
    pub fn second_derivative(&self, v: f64) -> f64 {
        let th = (v / self.limit).tanh();
        -2.0 * th * (1.0 - th * th) / self.limit
    }
}

pub fn smooth_sat(v: f64, limit: f64) -> Result<f64> {
    Ok(SmoothSat::new(limit)?.apply(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(smooth_sat(0.0, 3.0).unwrap(), 0.0);
        assert!((smooth_sat(1e6, 2.5).unwrap() - 2.5).abs() < 1e-12);
        assert!((smooth_sat(1.0, 1.0).unwrap() - 0.761_594_155_955_764_9).abs() < 1e-15);
        assert!(smooth_sat(1.0, 0.0).is_err());
        assert!(smooth_sat(1.0, -1.0).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let s = SmoothSat::new(2.0).unwrap();
        let h = 1e-5;
        for &v in &[-3.0, -0.4, 0.0, 0.7, 5.0] {
            let d1 = (s.apply(v + h) - s.apply(v - h)) / (2.0 * h);
            let d2 = (s.derivative(v + h) - s.derivative(v - h)) / (2.0 * h);
            assert!((d1 - s.derivative(v)).abs() < 1e-9);
            assert!((d2 - s.second_derivative(v)).abs() < 1e-8);
        }
        assert_eq!(s.derivative(0.0), 1.0);
    }
}
