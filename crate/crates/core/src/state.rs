//! Charge densities of the four carrier populations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::BctParams;

/// Density magnitudes (C/m³) per node. Signs are applied only when forming
/// the net charge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargeState {
    pub rho_e_mu: Vec<f64>,
    pub rho_h_mu: Vec<f64>,
    pub rho_e_t: Vec<f64>,
    pub rho_h_t: Vec<f64>,
    pub t: f64,
}

impl ChargeState {
    pub fn new(
        rho_e_mu: Vec<f64>,
        rho_h_mu: Vec<f64>,
        rho_e_t: Vec<f64>,
        rho_h_t: Vec<f64>,
        t: f64,
        params: &BctParams,
    ) -> Result<Self> {
        let n = rho_e_mu.len();
        if rho_h_mu.len() != n || rho_e_t.len() != n || rho_h_t.len() != n {
            return Err(Error::invalid("charge species have different lengths"));
        }
        let s = Self {
            rho_e_mu,
            rho_h_mu,
            rho_e_t,
            rho_h_t,
            t,
        };
        s.check(params)?;
        Ok(s)
    }

    /// Charge-free insulation.
    pub fn zero(n: usize) -> Self {
        Self {
            rho_e_mu: vec![0.0; n],
            rho_h_mu: vec![0.0; n],
            rho_e_t: vec![0.0; n],
            rho_h_t: vec![0.0; n],
            t: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.rho_e_mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho_e_mu.is_empty()
    }

    /// Validates non-negativity and trap capacities.
    pub fn check(&self, params: &BctParams) -> Result<()> {
        let fields = [
            ("rho_e_mu", &self.rho_e_mu),
            ("rho_h_mu", &self.rho_h_mu),
            ("rho_e_t", &self.rho_e_t),
            ("rho_h_t", &self.rho_h_t),
        ];
        for (name, f) in fields {
            if let Some(i) = f.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(Error::validation(format!(
                    "{name}[{i}] = {} is negative or not finite",
                    f[i]
                )));
            }
        }
        if let Some(i) = self.rho_e_t.iter().position(|v| *v > params.rho_e0t) {
            return Err(Error::validation(format!("rho_e_t[{i}] exceeds trap capacity")));
        }
        if let Some(i) = self.rho_h_t.iter().position(|v| *v > params.rho_h0t) {
            return Err(Error::validation(format!("rho_h_t[{i}] exceeds trap capacity")));
        }
        Ok(())
    }

    /// Net charge −ρe,μ + ρh,μ − ρe,t + ρh,t per node.
    pub fn net_charge(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.net_charge_into(&mut out);
        out
    }

    pub fn net_charge_into(&self, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = -self.rho_e_mu[i] + self.rho_h_mu[i] - self.rho_e_t[i] + self.rho_h_t[i];
        }
    }

    /// Electron and hole totals weighted by the given cell measures.
    pub fn species_totals(&self, volumes: &[f64]) -> (f64, f64) {
        let mut e = 0.0;
        let mut h = 0.0;
        for (i, v) in volumes.iter().enumerate() {
            e += v * (self.rho_e_mu[i] + self.rho_e_t[i]);
            h += v * (self.rho_h_mu[i] + self.rho_h_t[i]);
        }
        (e, h)
    }
}
