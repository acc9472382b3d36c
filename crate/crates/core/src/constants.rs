//! Physical constants (CODATA 2018 exact values where defined).

use serde::{Deserialize, Serialize};

pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
pub const PLANCK: f64 = 6.626_070_15e-34;
pub const VACUUM_PERMITTIVITY: f64 = 8.854_187_812_8e-12;
/// Richardson constant used for Schottky emission, A/(m²·K²).
pub const RICHARDSON: f64 = 1.2e6;

/// Set of constants threaded through the microscopic model.
///
/// Only the Richardson constant is meant to be overridden; the others are
/// exposed so callers never hard-code them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhysicalConstants {
    pub k_b: f64,
    pub q: f64,
    pub h: f64,
    pub richardson: f64,
    pub eps0: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            k_b: BOLTZMANN,
            q: ELEMENTARY_CHARGE,
            h: PLANCK,
            richardson: RICHARDSON,
            eps0: VACUUM_PERMITTIVITY,
        }
    }
}

impl PhysicalConstants {
    /// Thermal voltage k_B·T/q in volts.
    #[inline]
    pub fn thermal_voltage(&self, temperature: f64) -> f64 {
        self.k_b * temperature / self.q
    }

    /// Attempt-to-escape frequency k_B·T/h.
    #[inline]
    pub fn attempt_frequency(&self, temperature: f64) -> f64 {
        self.k_b * temperature / self.h
    }

    /// Boltzmann factor exp(−w·q/(k_B·T)) for a barrier `w` in eV.
    #[inline]
    pub fn boltzmann_factor(&self, barrier_ev: f64, temperature: f64) -> f64 {
        (-barrier_ev / self.thermal_voltage(temperature)).exp()
    }
}

/// 0 °C in kelvin.
pub const ZERO_CELSIUS: f64 = 273.15;

/// Converts degrees Celsius to kelvin.
#[inline]
pub fn celsius(t: f64) -> f64 {
    t + ZERO_CELSIUS
}

/// Converts kV/mm to V/m.
#[inline]
pub fn kv_per_mm(e: f64) -> f64 {
    e * 1.0e6
}

pub const HOUR: f64 = 3600.0;
pub const DAY: f64 = 86_400.0;
pub const YEAR: f64 = 365.0 * DAY;
