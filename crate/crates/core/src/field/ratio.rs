//! Relative weight of diffusion against drift in the microscopic solution.

use crate::bct::physics::mobility_unchecked;
use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::geometry::RadialMesh;
use crate::params::BctParams;
use crate::state::ChargeState;

use super::FieldProfile;

/// Per-node |J_diff| / |J_drift| summed over both mobile species.
///
/// Nodes where the drift current vanishes are reported as NaN.
pub fn diffusion_drift_ratio(
    mesh: &RadialMesh,
    state: &ChargeState,
    field: &FieldProfile,
    params: &BctParams,
    temps: &[f64],
) -> Result<Vec<f64>> {
    let n = mesh.len();
    if state.len() != n || field.e.len() != n || temps.len() != n {
        return Err(Error::invalid(
            "state, field and temperature lengths must match the mesh",
        ));
    }
    let c = PhysicalConstants::default();
    let x = &mesh.nodes;
    let grad = |rho: &[f64], i: usize| {
        if i == 0 {
            (rho[1] - rho[0]) / (x[1] - x[0])
        } else if i == n - 1 {
            (rho[n - 1] - rho[n - 2]) / (x[n - 1] - x[n - 2])
        } else {
            (rho[i + 1] - rho[i - 1]) / (x[i + 1] - x[i - 1])
        }
    };
    Ok((0..n)
        .map(|i| {
            let (t, e) = (temps[i], field.e[i]);
            let vt = c.thermal_voltage(t);
            let mu_e = mobility_unchecked(&c, e, t, params.w_mob_e, params.a_trap);
            let mu_h = mobility_unchecked(&c, e, t, params.w_mob_h, params.a_trap);
            let drift = mu_e * state.rho_e_mu[i] * e.abs() + mu_h * state.rho_h_mu[i] * e.abs();
            let diff = vt * mu_e * grad(&state.rho_e_mu, i).abs() + vt * mu_h * grad(&state.rho_h_mu, i).abs();
            if drift > 0.0 {
                diff / drift
            } else {
                f64::NAN
            }
        })
        .collect())
}
