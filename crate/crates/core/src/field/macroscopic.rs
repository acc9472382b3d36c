//! Conductivity-based transient field: charge relaxation with J = σ(E,T)·E.
//!
//! Combining Gauss's law with continuity gives, per node,
//! ε·∂D/∂t + σ(E,T)·D = i(t), where D = metric·E and i(t) is the (spatially
//! uniform) metric-weighted total current fixed by the voltage constraint.
//! Each step is backward Euler; the nodal system plus the constraint is a
//! bordered diagonal system solved by Newton iteration in O(n).

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::geometry::{Geometry, RadialMesh};
use crate::program::LoadProgram;

use super::poisson::voltage_weights;
use super::{FieldProfile, KleinParams};

#[derive(Debug, Clone, PartialEq)]
pub struct MacroOptions {
    pub snapshot_times: Vec<f64>,
    /// Step as a fraction of the shortest dielectric relaxation time ε/σ.
    pub relaxation_fraction: f64,
    pub min_dt: f64,
    pub max_dt: f64,
    /// Relative tolerance on E for the Newton iteration.
    pub newton_tol: f64,
    pub max_newton: usize,
}

impl Default for MacroOptions {
    fn default() -> Self {
        Self {
            snapshot_times: Vec::new(),
            relaxation_fraction: 0.5,
            min_dt: 1e-3,
            max_dt: 300.0,
            newton_tol: 1e-8,
            max_newton: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacroSolution {
    pub snapshots: Vec<FieldProfile>,
    pub steps: usize,
}

/// Integrates the macroscopic model from a charge-free (Laplacian) start.
pub fn macroscopic_transient(
    mesh: &RadialMesh,
    geometry: &Geometry,
    klein: &KleinParams,
    program: &LoadProgram,
    t_end: f64,
    options: &MacroOptions,
) -> Result<MacroSolution> {
    klein.validate()?;
    if t_end > program.duration() + 1e-9 {
        return Err(Error::invalid(format!(
            "program ends at {} s, before t_end = {t_end} s",
            program.duration()
        )));
    }
    let c = PhysicalConstants::default();
    let n = mesh.len();
    let eps = geometry.permittivity();
    let weights = voltage_weights(mesh);
    let metric: Vec<f64> = mesh.nodes.iter().map(|r| geometry.metric(*r)).collect();
    let weight_sum: f64 = weights.iter().sum();

    let mut snaps: Vec<f64> = options.snapshot_times.iter().copied().filter(|t| *t <= t_end).collect();
    snaps.sort_by(f64::total_cmp);
    snaps.dedup();
    let mut next_snap = 0;
    let mut out = Vec::with_capacity(snaps.len());

    let load0 = program.at(0.0);
    // Laplacian start: D uniform with Σw·D = U
    let mut d = vec![load0.voltage / weight_sum; n];
    let mut t = 0.0;
    let emit = |d: &[f64], t: f64, u: f64| FieldProfile {
        e: d.iter().zip(&metric).map(|(d, m)| d / m).collect(),
        u_applied: u,
        t,
    };
    while next_snap < snaps.len() && snaps[next_snap] <= 0.0 {
        out.push(emit(&d, 0.0, load0.voltage));
        next_snap += 1;
    }

    let mut temps = vec![0.0; n];
    let mut sigma = vec![0.0; n];
    let mut jac = vec![0.0; n];
    let mut resid = vec![0.0; n];
    let mut d_prev = d.clone();
    let mut steps = 0;
    while t < t_end {
        let load = program.at(t);
        let tp = mesh.temperature_profile(load.t_inner, load.t_outer);
        let sigma_max = d
            .iter()
            .zip(&metric)
            .zip(&tp)
            .map(|((d, m), temp)| klein.eval(&c, d / m, *temp))
            .fold(0.0, f64::max);
        let tau = eps / sigma_max;
        let mut dt = (options.relaxation_fraction * tau).clamp(options.min_dt, options.max_dt);
        let mut t_next = t + dt;
        if let Some(k) = program.next_knot_after(t) {
            t_next = t_next.min(k);
        }
        if next_snap < snaps.len() {
            t_next = t_next.min(snaps[next_snap]);
        }
        t_next = t_next.min(t_end);
        dt = t_next - t;

        let load = program.at(t_next);
        temps.copy_from_slice(&mesh.temperature_profile(load.t_inner, load.t_outer));
        d_prev.copy_from_slice(&d);
        let mut current = d
            .iter()
            .zip(&metric)
            .zip(&temps)
            .map(|((d, m), tk)| klein.eval(&c, d / m, *tk) * d)
            .sum::<f64>()
            / n as f64;
        let mut converged = false;
        for _ in 0..options.max_newton {
            for k in 0..n {
                let e = d[k] / metric[k];
                sigma[k] = klein.eval(&c, e, temps[k]);
                resid[k] = eps * (d[k] - d_prev[k]) / dt + sigma[k] * d[k] - current;
                jac[k] = eps / dt + sigma[k] + klein.d_sigma_d_e(&c, e, temps[k]) * e;
            }
            let mut num = load.voltage;
            let mut den = 0.0;
            for k in 0..n {
                num += weights[k] * (resid[k] / jac[k] - d[k]);
                den += weights[k] / jac[k];
            }
            let di = num / den;
            current += di;
            let mut max_step = 0.0f64;
            let mut max_d = 0.0f64;
            for k in 0..n {
                let dd = (di - resid[k]) / jac[k];
                d[k] += dd;
                max_step = max_step.max(dd.abs());
                max_d = max_d.max(d[k].abs());
            }
            if !max_step.is_finite() {
                break;
            }
            if max_step <= options.newton_tol * max_d.max(f64::MIN_POSITIVE) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::solver(
                t_next,
                format!(
                    "Newton iteration did not converge in {} iterations (dt = {dt:.3e} s)",
                    options.max_newton
                ),
            ));
        }
        t = t_next;
        steps += 1;
        while next_snap < snaps.len() && snaps[next_snap] <= t {
            out.push(emit(&d, t, load.voltage));
            next_snap += 1;
        }
    }
    Ok(MacroSolution { snapshots: out, steps })
}
