//! One explicit step of the drift-diffusion-reaction system.
//!
//! Node-centred finite volumes: each node owns the cell between the adjacent
//! interface midpoints (half cells at the electrodes). Drift fluxes are
//! donor-cell upwind with interface-averaged field and mobility; diffusion is
//! a centred difference with D = (k_B·T/q)·μ. Holes drift along E and
//! electrons against it. At an electrode, a carrier species driven into the
//! bulk is injected by Schottky emission, and one driven towards it leaves
//! freely by drift.

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::field::FieldProfile;
use crate::geometry::RadialMesh;
use crate::params::BctParams;
use crate::state::ChargeState;

use super::physics::{mobility_unchecked, recombination_rates, schottky_unchecked, NodeDensities, ReactionFluxes};

/// Fraction of the positivity limit used as the step size.
pub const STEP_SAFETY: f64 = 0.8;
/// Largest fractional change a reaction rate may cause in one step.
pub const SOURCE_FRACTION: f64 = 0.1;

/// Switches that alter the physics of a run (used for sensitivity studies).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportOptions {
    pub diffusion: bool,
    /// Also bound the step by the dielectric relaxation time ε/Σμρ.
    pub relaxation_bound: bool,
}

impl Default for TransportOptions {
    fn default() -> Self {
        Self {
            diffusion: true,
            relaxation_bound: true,
        }
    }
}

/// Cumulative charge bookkeeping, in units of the mesh measure
/// (C/m² for slabs; C per metre of cable per radian for cylinders).
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct ChargeLedger {
    pub injected_e: f64,
    pub injected_h: f64,
    pub extracted_e: f64,
    pub extracted_h: f64,
    /// Charge of each sign removed by recombination.
    pub recombined: f64,
    pub clamp_events: u64,
    /// Net charge added by clamping (positive when negative densities were raised).
    pub clamped_e: f64,
    pub clamped_h: f64,
}

impl ChargeLedger {
    /// Relative imbalance of the electron and hole balances against the
    /// current species totals, normalised by the largest term.
    pub fn imbalance(&self, totals: (f64, f64)) -> (f64, f64) {
        let e_expected = self.injected_e - self.extracted_e - self.recombined + self.clamped_e;
        let h_expected = self.injected_h - self.extracted_h - self.recombined + self.clamped_h;
        let e_scale = [self.injected_e, self.extracted_e, self.recombined, totals.0]
            .into_iter()
            .fold(f64::MIN_POSITIVE, f64::max);
        let h_scale = [self.injected_h, self.extracted_h, self.recombined, totals.1]
            .into_iter()
            .fold(f64::MIN_POSITIVE, f64::max);
        (
            (totals.0 - e_expected).abs() / e_scale,
            (totals.1 - h_expected).abs() / h_scale,
        )
    }
}

/// Per-node coefficients frozen over one step.
#[derive(Debug, Clone, Default)]
pub struct StepCoefficients {
    mu_e: Vec<f64>,
    mu_h: Vec<f64>,
    diff_e: Vec<f64>,
    diff_h: Vec<f64>,
    detrap_e: Vec<f64>,
    detrap_h: Vec<f64>,
    /// boundary injection current densities (A/m²): [inner, outer] per species
    inj_e: [f64; 2],
    inj_h: [f64; 2],
}

/// The discretised microscopic model on a fixed mesh.
#[derive(Debug, Clone)]
pub struct BctModel {
    pub mesh: RadialMesh,
    pub params: BctParams,
    pub consts: PhysicalConstants,
    pub options: TransportOptions,
    epsilon: f64,
    volumes: Vec<f64>,
    face_metric: Vec<f64>,
    face_width: Vec<f64>,
    edge_metric: [f64; 2],
}

impl BctModel {
    pub fn new(mesh: RadialMesh, params: BctParams, consts: PhysicalConstants) -> Result<Self> {
        params.validate()?;
        mesh.geometry.validate()?;
        let g = mesh.geometry;
        let volumes = mesh.control_volumes();
        let face_metric = mesh.nodes.windows(2).map(|w| g.metric(0.5 * (w[0] + w[1]))).collect();
        let face_width = mesh.spacing.clone();
        let n = mesh.len();
        let edge_metric = [g.metric(mesh.nodes[0]), g.metric(mesh.nodes[n - 1])];
        Ok(Self {
            epsilon: g.permittivity(),
            mesh,
            params,
            consts,
            options: TransportOptions::default(),
            volumes,
            face_metric,
            face_width,
            edge_metric,
        })
    }

    pub fn with_options(mut self, options: TransportOptions) -> Self {
        self.options = options;
        self
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    /// Mobilities, diffusivities, detrapping rates and injection currents for
    /// the current field and temperatures.
    pub fn coefficients(&self, field: &FieldProfile, temps: &[f64], out: &mut StepCoefficients) {
        let n = self.mesh.len();
        let p = &self.params;
        let c = &self.consts;
        for v in [
            &mut out.mu_e,
            &mut out.mu_h,
            &mut out.diff_e,
            &mut out.diff_h,
            &mut out.detrap_e,
            &mut out.detrap_h,
        ] {
            v.resize(n, 0.0);
        }
        for (i, (&t, &e)) in temps.iter().zip(&field.e).enumerate().take(n) {
            let vt = c.thermal_voltage(t);
            let mu_e = mobility_unchecked(c, e, t, p.w_mob_e, p.a_trap);
            let mu_h = mobility_unchecked(c, e, t, p.w_mob_h, p.a_trap);
            out.mu_e[i] = mu_e;
            out.mu_h[i] = mu_h;
            if self.options.diffusion {
                out.diff_e[i] = vt * mu_e;
                out.diff_h[i] = vt * mu_h;
            } else {
                out.diff_e[i] = 0.0;
                out.diff_h[i] = 0.0;
            }
            let nu = c.attempt_frequency(t);
            out.detrap_e[i] = nu * (-p.w_tr_e / vt).exp();
            out.detrap_h[i] = nu * (-p.w_tr_h / vt).exp();
        }
        let eps = self.epsilon;
        let (e_in, e_out) = (field.e[0], field.e[n - 1]);
        let (t_in, t_out) = (temps[0], temps[n - 1]);
        // holes enter where E points into the bulk, electrons where it points out
        out.inj_h = [
            schottky_unchecked(c, e_in, t_in, p.w_inj_h, p.f_s, eps),
            schottky_unchecked(c, -e_out, t_out, p.w_inj_h, p.f_s, eps),
        ];
        out.inj_e = [
            schottky_unchecked(c, -e_in, t_in, p.w_inj_e, p.f_s, eps),
            schottky_unchecked(c, e_out, t_out, p.w_inj_e, p.f_s, eps),
        ];
    }

    /// Largest step that keeps the explicit update positive and resolves the
    /// reaction and relaxation time scales, already scaled by [`STEP_SAFETY`].
    pub fn stable_dt(&self, state: &ChargeState, field: &FieldProfile, k: &StepCoefficients) -> f64 {
        let n = self.mesh.len();
        let mut out_rate = vec![0.0f64; 2 * n];
        for f in 0..n - 1 {
            let ef = 0.5 * (field.e[f] + field.e[f + 1]);
            let m = self.face_metric[f];
            let h = self.face_width[f];
            for (s, (mu, dd, sign)) in [(&k.mu_h, &k.diff_h, 1.0), (&k.mu_e, &k.diff_e, -1.0)]
                .into_iter()
                .enumerate()
            {
                let u = sign * 0.5 * (mu[f] + mu[f + 1]) * ef;
                let d = 0.5 * (dd[f] + dd[f + 1]) / h;
                let (left, right) = if u > 0.0 { (u + d, d) } else { (d, -u + d) };
                out_rate[s * n + f] += m * left;
                out_rate[s * n + f + 1] += m * right;
            }
        }
        // extraction at the electrodes
        let (e0, en) = (field.e[0], field.e[n - 1]);
        out_rate[0] += self.edge_metric[0] * k.mu_h[0] * (-e0).max(0.0);
        out_rate[n - 1] += self.edge_metric[1] * k.mu_h[n - 1] * en.max(0.0);
        out_rate[n] += self.edge_metric[0] * k.mu_e[0] * e0.max(0.0);
        out_rate[2 * n - 1] += self.edge_metric[1] * k.mu_e[n - 1] * (-en).max(0.0);

        let mut max_transport = 0.0f64;
        for i in 0..n {
            let v = self.volumes[i];
            max_transport = max_transport.max(out_rate[i] / v).max(out_rate[n + i] / v);
        }

        let p = &self.params;
        let mut max_react = p.b_e.max(p.b_h);
        let mut max_relax = 0.0f64;
        for i in 0..n {
            let s = recombination_rates(k.mu_e[i], k.mu_h[i], p, self.epsilon);
            let (em, hm, et, ht) = (state.rho_e_mu[i], state.rho_h_mu[i], state.rho_e_t[i], state.rho_h_t[i]);
            let loss = [
                s.s1 * ht + s.s3 * hm,
                s.s0 * ht + s.s2 * hm,
                s.s2 * et + s.s3 * em,
                s.s0 * et + s.s1 * em,
            ];
            max_react = loss
                .into_iter()
                .fold(max_react, f64::max)
                .max(k.detrap_e[i])
                .max(k.detrap_h[i]);
            max_relax = max_relax.max((k.mu_e[i] * em + k.mu_h[i] * hm) / self.epsilon);
        }

        let mut dt = f64::INFINITY;
        if max_transport > 0.0 {
            dt = dt.min(1.0 / max_transport);
        }
        if max_react > 0.0 {
            dt = dt.min(SOURCE_FRACTION / max_react);
        }
        if self.options.relaxation_bound && max_relax > 0.0 {
            dt = dt.min(1.0 / max_relax);
        }
        STEP_SAFETY * dt
    }

    /// Advances `state` by `dt` in place with the coefficients `k` and field
    /// `field`, accumulating charge movements into `ledger`.
    pub fn step(
        &self,
        state: &mut ChargeState,
        field: &FieldProfile,
        k: &StepCoefficients,
        dt: f64,
        ledger: &mut ChargeLedger,
        scratch: &mut Vec<f64>,
    ) -> Result<()> {
        let n = self.mesh.len();
        let p = &self.params;
        scratch.clear();
        scratch.resize(2 * n, 0.0);
        let (div_h, div_e) = scratch.split_at_mut(n);

        for f in 0..n - 1 {
            let ef = 0.5 * (field.e[f] + field.e[f + 1]);
            let m = self.face_metric[f];
            let h = self.face_width[f];
            let flux = |mu: &[f64], dd: &[f64], rho: &[f64], sign: f64| {
                let u = sign * 0.5 * (mu[f] + mu[f + 1]) * ef;
                let donor = if u > 0.0 { rho[f] } else { rho[f + 1] };
                let d = 0.5 * (dd[f] + dd[f + 1]);
                m * (u * donor - d * (rho[f + 1] - rho[f]) / h)
            };
            let fh = flux(&k.mu_h, &k.diff_h, &state.rho_h_mu, 1.0);
            let fe = flux(&k.mu_e, &k.diff_e, &state.rho_e_mu, -1.0);
            div_h[f] -= fh;
            div_h[f + 1] += fh;
            div_e[f] -= fe;
            div_e[f + 1] += fe;
        }

        // electrode exchange, as inflow per unit measure
        let (e0, en) = (field.e[0], field.e[n - 1]);
        let (m0, mn) = (self.edge_metric[0], self.edge_metric[1]);
        let inj_h = [m0 * k.inj_h[0], mn * k.inj_h[1]];
        let inj_e = [m0 * k.inj_e[0], mn * k.inj_e[1]];
        let ext_h = [
            m0 * k.mu_h[0] * (-e0).max(0.0) * state.rho_h_mu[0],
            mn * k.mu_h[n - 1] * en.max(0.0) * state.rho_h_mu[n - 1],
        ];
        let ext_e = [
            m0 * k.mu_e[0] * e0.max(0.0) * state.rho_e_mu[0],
            mn * k.mu_e[n - 1] * (-en).max(0.0) * state.rho_e_mu[n - 1],
        ];
        div_h[0] += inj_h[0] - ext_h[0];
        div_h[n - 1] += inj_h[1] - ext_h[1];
        div_e[0] += inj_e[0] - ext_e[0];
        div_e[n - 1] += inj_e[1] - ext_e[1];

        ledger.injected_h += dt * (inj_h[0] + inj_h[1]);
        ledger.injected_e += dt * (inj_e[0] + inj_e[1]);
        ledger.extracted_h += dt * (ext_h[0] + ext_h[1]);
        ledger.extracted_e += dt * (ext_e[0] + ext_e[1]);

        let mut recombined = 0.0;
        for i in 0..n {
            let v = self.volumes[i];
            let node = NodeDensities {
                e_mu: state.rho_e_mu[i],
                h_mu: state.rho_h_mu[i],
                e_t: state.rho_e_t[i],
                h_t: state.rho_h_t[i],
            };
            let s = recombination_rates(k.mu_e[i], k.mu_h[i], p, self.epsilon);
            let rx = ReactionFluxes::compute(&node, &s, k.detrap_e[i], k.detrap_h[i], p);
            let src = rx.sources();
            recombined += v * rx.recombined();

            let mut e_mu = node.e_mu + dt * (div_e[i] / v + src.s_e_mu);
            let mut h_mu = node.h_mu + dt * (div_h[i] / v + src.s_h_mu);
            let mut e_t = node.e_t + dt * src.s_e_t;
            let mut h_t = node.h_t + dt * src.s_h_t;

            if !(e_mu.is_finite() && h_mu.is_finite() && e_t.is_finite() && h_t.is_finite()) {
                return Err(Error::solver(state.t, format!("non-finite density at node {i}")));
            }
            let mut clamp = |x: &mut f64, hi: f64, acc: &mut f64| {
                if *x < 0.0 {
                    *acc -= *x * v;
                    *x = 0.0;
                    ledger.clamp_events += 1;
                } else if *x > hi {
                    *acc -= (*x - hi) * v;
                    *x = hi;
                    ledger.clamp_events += 1;
                }
            };
            let (mut ce, mut ch) = (0.0, 0.0);
            clamp(&mut e_mu, f64::INFINITY, &mut ce);
            clamp(&mut h_mu, f64::INFINITY, &mut ch);
            clamp(&mut e_t, p.rho_e0t, &mut ce);
            clamp(&mut h_t, p.rho_h0t, &mut ch);
            ledger.clamped_e += ce;
            ledger.clamped_h += ch;

            state.rho_e_mu[i] = e_mu;
            state.rho_h_mu[i] = h_mu;
            state.rho_e_t[i] = e_t;
            state.rho_h_t[i] = h_t;
        }
        ledger.recombined += dt * recombined;
        state.t += dt;
        Ok(())
    }
}

/// One explicit step of the continuity equations for all four populations.
///
/// `field` must be the field of `state`; `temps` the node temperatures. Fails
/// with an invalid-argument error when `dt` exceeds the stability bound.
pub fn advance_charge(
    model: &BctModel,
    state: &ChargeState,
    field: &FieldProfile,
    temps: &[f64],
    dt: f64,
) -> Result<(ChargeState, ChargeLedger)> {
    let n = model.mesh.len();
    if state.len() != n || field.e.len() != n || temps.len() != n {
        return Err(Error::invalid(
            "state, field and temperature lengths must match the mesh",
        ));
    }
    if let Some(t) = temps.iter().find(|t| !(**t > 0.0)) {
        return Err(Error::invalid(format!("temperature must be positive, got {t} K")));
    }
    if !(dt > 0.0) {
        return Err(Error::invalid(format!("time step must be positive, got {dt}")));
    }
    let mut k = StepCoefficients::default();
    model.coefficients(field, temps, &mut k);
    let bound = model.stable_dt(state, field, &k) / STEP_SAFETY;
    if dt > bound {
        return Err(Error::invalid(format!(
            "time step {dt:.3e} s exceeds stability bound {bound:.3e} s"
        )));
    }
    let mut next = state.clone();
    let mut ledger = ChargeLedger::default();
    let mut scratch = Vec::new();
    model.step(&mut next, field, &k, dt, &mut ledger, &mut scratch)?;
    Ok((next, ledger))
}
