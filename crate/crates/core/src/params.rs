use serde::{Deserialize, Serialize};

use crate::error::{Result, SleError};

/// SLE parameters in the `a = 2/kappa` convention.
///
/// `s = 2 - 4a` is the dimension of the curve's trace on the real line and
/// `beta = 4a - 1` the one-interval boundary exponent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SleParams {
    pub kappa: f64,
    pub a: f64,
    pub s: f64,
    pub beta: f64,
}

impl SleParams {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 0.0 && kappa <= 8.0) {
            return Err(SleError::Validation(format!(
                "kappa = {kappa} outside the admissible interval (0, 8]"
            )));
        }
        let a = 2.0 / kappa;
        Ok(Self {
            kappa,
            a,
            s: 2.0 - 4.0 * a,
            beta: 4.0 * a - 1.0,
        })
    }

    /// Parameters for the interval-hitting experiments, which need `4 < kappa < 8`.
    pub fn for_hitting(kappa: f64) -> Result<Self> {
        let params = Self::new(kappa).map_err(|_| hitting_range_error(kappa))?;
        params.require_hitting_regime()?;
        Ok(params)
    }

    pub fn in_hitting_regime(&self) -> bool {
        self.kappa > 4.0 && self.kappa < 8.0
    }

    pub fn require_hitting_regime(&self) -> Result<()> {
        if self.in_hitting_regime() {
            Ok(())
        } else {
            Err(hitting_range_error(self.kappa))
        }
    }
}

fn hitting_range_error(kappa: f64) -> SleError {
    SleError::Validation(format!(
        "kappa = {kappa} outside the admissible interval (4, 8) for hitting experiments"
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_six() {
        let p = SleParams::new(6.0).unwrap();
        assert!((p.a - 1.0 / 3.0).abs() < 1e-15);
        assert!((p.s - 2.0 / 3.0).abs() < 1e-15);
        assert!((p.beta - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn endpoints() {
        let p = SleParams::new(8.0).unwrap();
        assert_eq!((p.a, p.s, p.beta), (0.25, 1.0, 0.0));
        let p = SleParams::new(4.0).unwrap();
        assert_eq!((p.a, p.s, p.beta), (0.5, 0.0, 1.0));
        assert!(!p.in_hitting_regime());
    }

    #[test]
    fn rejects_out_of_range() {
        for k in [0.0, -1.0, 8.5, f64::NAN, f64::INFINITY] {
            let err = SleParams::new(k).unwrap_err().to_string();
            assert!(err.contains("(0, 8]"), "{err}");
        }
        let err = SleParams::for_hitting(9.0).unwrap_err().to_string();
        assert!(err.contains("(4, 8)"), "{err}");
        assert!(SleParams::for_hitting(4.0).is_err());
    }

    #[test]
    fn exponents_in_unit_interval() {
        for i in 1..40 {
            let kappa = 4.0 + 4.0 * i as f64 / 40.0;
            let p = SleParams::for_hitting(kappa).unwrap();
            assert!(p.a > 0.25 && p.a < 0.5);
            assert!(p.s > 0.0 && p.s < 1.0);
            assert!(p.beta > 0.0 && p.beta < 1.0);
            assert!((p.s - (2.0 - 4.0 * p.a)).abs() < 1e-15);
            assert!((p.beta - (4.0 * p.a - 1.0)).abs() < 1e-15);
        }
    }
}
