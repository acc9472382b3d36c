//! Local closures of the bipolar charge transport model: injection, hopping
//! mobility, trapping, detrapping and recombination.

use std::f64::consts::PI;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::params::BctParams;

/// Below this argument sinh(x)/x is evaluated from its series.
const SINHC_SERIES_LIMIT: f64 = 1e-4;

/// sinh(x)/x, continuous through 0.
#[inline]
pub fn sinhc(x: f64) -> f64 {
    let ax = x.abs();
    if ax < SINHC_SERIES_LIMIT {
        1.0 + ax * ax / 6.0
    } else {
        ax.sinh() / ax
    }
}

fn check_temperature(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("temperature must be positive, got {t} K")))
    }
}

/// Schottky emission current density (A/m²) at an injecting electrode.
///
/// The barrier is lowered by the image force,
/// `J = A0·T²·exp(−w/Vt)·[exp(√(qE/4πε)/Vt) − f_s]`, and clamped at zero.
/// `e_boundary` is the field magnitude pulling carriers into the bulk; callers
/// pass 0 when the field points the other way.
pub fn schottky_flux(
    c: &PhysicalConstants,
    e_boundary: f64,
    temperature: f64,
    barrier_ev: f64,
    f_s: f64,
    epsilon: f64,
) -> Result<f64> {
    check_temperature(temperature)?;
    Ok(schottky_unchecked(c, e_boundary, temperature, barrier_ev, f_s, epsilon))
}

#[inline]
pub(crate) fn schottky_unchecked(
    c: &PhysicalConstants,
    e_boundary: f64,
    temperature: f64,
    barrier_ev: f64,
    f_s: f64,
    epsilon: f64,
) -> f64 {
    let e = e_boundary.max(0.0);
    let vt = c.thermal_voltage(temperature);
    let lowering = (c.q * e / (4.0 * PI * epsilon)).sqrt();
    let j = c.richardson * temperature * temperature * (-barrier_ev / vt).exp() * ((lowering / vt).exp() - f_s);
    j.max(0.0)
}

/// Field- and temperature-activated hopping mobility, m²/(V·s).
///
/// `μ = (2·ν·a/|E|)·exp(−w/Vt)·sinh(q·a·|E|/(2·k_B·T))` with ν = k_B·T/h,
/// written as the zero-field mobility times sinh(x)/x so it stays finite at
/// E = 0.
pub fn hopping_mobility(c: &PhysicalConstants, e: f64, temperature: f64, barrier_ev: f64, a_trap: f64) -> Result<f64> {
    check_temperature(temperature)?;
    if !(a_trap > 0.0) {
        return Err(Error::invalid("inter-trap distance must be positive"));
    }
    Ok(mobility_unchecked(c, e, temperature, barrier_ev, a_trap))
}

#[inline]
pub(crate) fn mobility_unchecked(c: &PhysicalConstants, e: f64, temperature: f64, barrier_ev: f64, a_trap: f64) -> f64 {
    let vt = c.thermal_voltage(temperature);
    let nu = c.attempt_frequency(temperature);
    let mu0 = a_trap * a_trap * nu / vt * (-barrier_ev / vt).exp();
    let x = a_trap * e / (2.0 * vt);
    mu0 * sinhc(x)
}

/// Recombination coefficients (S0, S1, S2, S3): base rates plus the Langevin
/// terms μ/ε of the mobile partners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recombination {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

pub fn recombination_rates(mu_e: f64, mu_h: f64, params: &BctParams, epsilon: f64) -> Recombination {
    Recombination {
        s0: params.s0_base,
        s1: params.s1_base + mu_e / epsilon,
        s2: params.s2_base + mu_h / epsilon,
        s3: params.s3_base + (mu_e + mu_h) / epsilon,
    }
}

/// Thermally activated detrapping rate ν·exp(−w_tr/Vt), 1/s.
pub fn detrapping_coeff(c: &PhysicalConstants, temperature: f64, barrier_ev: f64) -> Result<f64> {
    check_temperature(temperature)?;
    Ok(c.attempt_frequency(temperature) * c.boltzmann_factor(barrier_ev, temperature))
}

/// Densities of the four populations at one node.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NodeDensities {
    pub e_mu: f64,
    pub h_mu: f64,
    pub e_t: f64,
    pub h_t: f64,
}

/// Net rates of change at one node, C/(m³·s).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SourceTerms {
    pub s_e_mu: f64,
    pub s_e_t: f64,
    pub s_h_mu: f64,
    pub s_h_t: f64,
}

/// Individual reaction fluxes behind [`SourceTerms`]; kept separate so the
/// charge ledger can account for recombination exactly.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReactionFluxes {
    pub trap_e: f64,
    pub trap_h: f64,
    pub detrap_e: f64,
    pub detrap_h: f64,
    /// trapped hole + trapped electron
    pub r0: f64,
    /// trapped hole + mobile electron
    pub r1: f64,
    /// mobile hole + trapped electron
    pub r2: f64,
    /// mobile hole + mobile electron
    pub r3: f64,
}

impl ReactionFluxes {
    pub fn compute(n: &NodeDensities, s: &Recombination, detrap_e: f64, detrap_h: f64, params: &BctParams) -> Self {
        Self {
            trap_e: params.b_e * n.e_mu * (1.0 - n.e_t / params.rho_e0t),
            trap_h: params.b_h * n.h_mu * (1.0 - n.h_t / params.rho_h0t),
            detrap_e: detrap_e * n.e_t,
            detrap_h: detrap_h * n.h_t,
            r0: s.s0 * n.e_t * n.h_t,
            r1: s.s1 * n.e_mu * n.h_t,
            r2: s.s2 * n.h_mu * n.e_t,
            r3: s.s3 * n.e_mu * n.h_mu,
        }
    }

    pub fn sources(&self) -> SourceTerms {
        SourceTerms {
            s_e_mu: -self.trap_e + self.detrap_e - self.r1 - self.r3,
            s_e_t: self.trap_e - self.detrap_e - self.r0 - self.r2,
            s_h_mu: -self.trap_h + self.detrap_h - self.r2 - self.r3,
            s_h_t: self.trap_h - self.detrap_h - self.r0 - self.r1,
        }
    }

    /// Charge recombined per unit volume and time (equal for both signs).
    pub fn recombined(&self) -> f64 {
        self.r0 + self.r1 + self.r2 + self.r3
    }
}

/// Source terms of the four continuity equations at one node.
pub fn source_terms(
    n: &NodeDensities,
    s: &Recombination,
    detrap_e: f64,
    detrap_h: f64,
    params: &BctParams,
) -> SourceTerms {
    ReactionFluxes::compute(n, s, detrap_e, detrap_h, params).sources()
}
