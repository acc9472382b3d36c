//! Closed-form conductivity law of the macroscopic model.

use serde::{Deserialize, Serialize};

use crate::bct::physics::sinhc;
use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};

/// σ(E,T) = σ_ref·exp(−Ea·q/(k_B·T))·sinh(β|E|)/(β|E|).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KleinParams {
    /// S/m
    pub sigma_ref: f64,
    /// eV
    pub activation_energy: f64,
    /// m/V
    pub field_coeff: f64,
}

impl KleinParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_ref > 0.0 && self.activation_energy > 0.0 && self.field_coeff > 0.0) {
            return Err(Error::invalid(format!(
                "conductivity parameters must be positive: {self:?}"
            )));
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn eval(&self, c: &PhysicalConstants, e: f64, t: f64) -> f64 {
        self.sigma_ref * (-self.activation_energy / c.thermal_voltage(t)).exp() * sinhc(self.field_coeff * e)
    }

    /// dσ/dE at fixed T.
    #[inline]
    pub(crate) fn d_sigma_d_e(&self, c: &PhysicalConstants, e: f64, t: f64) -> f64 {
        let x = self.field_coeff * e;
        let ax = x.abs();
        // d/dx [sinh x / x] = (x cosh x − sinh x)/x²
        let d = if ax < 1e-3 {
            x / 3.0 + x * x * x / 30.0
        } else {
            (x * x.cosh() - x.sinh()) / (x * x)
        };
        self.sigma_ref * (-self.activation_energy / c.thermal_voltage(t)).exp() * d * self.field_coeff
    }
}

pub fn klein_conductivity(c: &PhysicalConstants, e: f64, t: f64, p: &KleinParams) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::invalid(format!("temperature must be positive, got {t} K")));
    }
    Ok(p.eval(c, e, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p() -> KleinParams {
        KleinParams {
            sigma_ref: 0.5,
            activation_energy: 0.7,
            field_coeff: 1.2e-7,
        }
    }

    #[test]
    fn zero_field_limit_and_symmetry() {
        let c = PhysicalConstants::default();
        let t = 330.0;
        let s0 = klein_conductivity(&c, 0.0, t, &p()).unwrap();
        assert_relative_eq!(s0, 0.5 * (-0.7 * c.q / (c.k_b * t)).exp(), max_relative = 1e-14);
        assert_relative_eq!(klein_conductivity(&c, 1e-3, t, &p()).unwrap(), s0, max_relative = 1e-12);
        for e in [1e5, 2e7, 5e7] {
            assert_eq!(
                klein_conductivity(&c, e, t, &p()).unwrap(),
                klein_conductivity(&c, -e, t, &p()).unwrap()
            );
        }
        assert!(klein_conductivity(&c, 1e7, 0.0, &p()).is_err());
    }

    #[test]
    fn temperature_ratio_cancels_field_factor() {
        let c = PhysicalConstants::default();
        let (t1, t2, e) = (300.0, 340.0, 3e7);
        let r = klein_conductivity(&c, e, t2, &p()).unwrap() / klein_conductivity(&c, e, t1, &p()).unwrap();
        let want = (-0.7 * c.q / c.k_b * (1.0 / t2 - 1.0 / t1)).exp();
        assert_relative_eq!(r, want, max_relative = 1e-12);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let c = PhysicalConstants::default();
        for e in [0.0, 1e3, 1e6, 2e7, -3e7] {
            let h = 1e2;
            let fd = (p().eval(&c, e + h, 320.0) - p().eval(&c, e - h, 320.0)) / (2.0 * h);
            let an = p().d_sigma_d_e(&c, e, 320.0);
            assert!(
                (fd - an).abs() <= 1e-6 * an.abs().max(1e-30) + 1e-30,
                "e={e} fd={fd} an={an}"
            );
        }
    }
}
