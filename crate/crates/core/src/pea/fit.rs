//! Bounded least-squares identification of transport parameters.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bct::{simulate_drive, ConstantDrive, SimOptions};
use crate::error::{Error, Result};
use crate::geometry::{build_mesh, Geometry};
use crate::params::BctParams;
use crate::program::LoadPoint;

use super::{resample, surface_superposition, PeaMeasurement, PEA_POINTS};

/// A parameter the fit may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitParam {
    WInjE,
    WInjH,
    WMobE,
    WMobH,
    WTrE,
    WTrH,
    BE,
    BH,
    /// All four base recombination rates together.
    SBase,
    RhoE0t,
    RhoH0t,
    ATrap,
}

impl FitParam {
    /// Parameters varied by default: barriers, trapping coefficients and the base recombination rate.
    pub const DEFAULT_FREE: [FitParam; 9] = [
        FitParam::WInjE,
        FitParam::WInjH,
        FitParam::WMobE,
        FitParam::WMobH,
        FitParam::WTrE,
        FitParam::WTrH,
        FitParam::BE,
        FitParam::BH,
        FitParam::SBase,
    ];

    pub const BARRIERS: [FitParam; 6] = [
        FitParam::WInjE,
        FitParam::WInjH,
        FitParam::WMobE,
        FitParam::WMobH,
        FitParam::WTrE,
        FitParam::WTrH,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FitParam::WInjE => "w_inj_e",
            FitParam::WInjH => "w_inj_h",
            FitParam::WMobE => "w_mob_e",
            FitParam::WMobH => "w_mob_h",
            FitParam::WTrE => "w_tr_e",
            FitParam::WTrH => "w_tr_h",
            FitParam::BE => "b_e",
            FitParam::BH => "b_h",
            FitParam::SBase => "s_base",
            FitParam::RhoE0t => "rho_e0t",
            FitParam::RhoH0t => "rho_h0t",
            FitParam::ATrap => "a_trap",
        }
    }

    /// Barriers are searched on an affine scale, everything else on a log scale.
    pub fn is_barrier(self) -> bool {
        Self::BARRIERS.contains(&self)
    }

    pub fn get(self, p: &BctParams) -> f64 {
        match self {
            FitParam::WInjE => p.w_inj_e,
            FitParam::WInjH => p.w_inj_h,
            FitParam::WMobE => p.w_mob_e,
            FitParam::WMobH => p.w_mob_h,
            FitParam::WTrE => p.w_tr_e,
            FitParam::WTrH => p.w_tr_h,
            FitParam::BE => p.b_e,
            FitParam::BH => p.b_h,
            FitParam::SBase => p.s0_base,
            FitParam::RhoE0t => p.rho_e0t,
            FitParam::RhoH0t => p.rho_h0t,
            FitParam::ATrap => p.a_trap,
        }
    }

    pub fn set(self, p: &mut BctParams, v: f64) {
        match self {
            FitParam::WInjE => p.w_inj_e = v,
            FitParam::WInjH => p.w_inj_h = v,
            FitParam::WMobE => p.w_mob_e = v,
            FitParam::WMobH => p.w_mob_h = v,
            FitParam::WTrE => p.w_tr_e = v,
            FitParam::WTrH => p.w_tr_h = v,
            FitParam::BE => p.b_e = v,
            FitParam::BH => p.b_h = v,
            FitParam::SBase => *p = p.with_s_base(v),
            FitParam::RhoE0t => p.rho_e0t = v,
            FitParam::RhoH0t => p.rho_h0t = v,
            FitParam::ATrap => p.a_trap = v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub param: FitParam,
    pub lo: f64,
    pub hi: f64,
}

impl Bound {
    fn span(self) -> f64 {
        if self.param.is_barrier() {
            self.hi - self.lo
        } else {
            (self.hi / self.lo).ln()
        }
    }

    fn scaled(self, v: f64) -> f64 {
        if self.param.is_barrier() {
            (v - self.lo) / self.span()
        } else {
            (v / self.lo).ln() / self.span()
        }
    }

    fn unscaled(self, z: f64) -> f64 {
        let z = z.clamp(0.0, 1.0);
        let v = if self.param.is_barrier() {
            self.lo + z * self.span()
        } else {
            self.lo * (z * self.span()).exp()
        };
        v.clamp(self.lo, self.hi)
    }
}

/// Search box. Parameters without a bound stay at their start values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitBounds {
    pub bounds: Vec<Bound>,
}

impl FitBounds {
    /// Interval `[v·(1 − rel), v·(1 + rel)]` around the values of `p`.
    pub fn around(p: &BctParams, params: &[FitParam], rel: f64) -> Self {
        Self {
            bounds: params
                .iter()
                .map(|q| {
                    let v = q.get(p);
                    Bound {
                        param: *q,
                        lo: v * (1.0 - rel),
                        hi: v * (1.0 + rel),
                    }
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, b) in self.bounds.iter().enumerate() {
            if !(b.lo <= b.hi) || !b.lo.is_finite() || !b.hi.is_finite() {
                return Err(Error::invalid(format!(
                    "bound of {} is not an interval",
                    b.param.name()
                )));
            }
            if !b.param.is_barrier() && !(b.lo > 0.0) {
                return Err(Error::invalid(format!("bound of {} must be positive", b.param.name())));
            }
            if self.bounds[..i].iter().any(|c| c.param == b.param) {
                return Err(Error::invalid(format!("{} is bounded twice", b.param.name())));
            }
        }
        Ok(())
    }

    pub fn contains(&self, p: &BctParams) -> bool {
        self.bounds.iter().all(|b| {
            let v = b.param.get(p);
            let tol = 1e-12 * b.hi.abs().max(1.0);
            v >= b.lo - tol && v <= b.hi + tol
        })
    }

    fn free(&self) -> Vec<Bound> {
        self.bounds.iter().copied().filter(|b| b.hi > b.lo).collect()
    }
}

/// Discretisation and integration settings of the specimen simulations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub nodes: usize,
    pub epsilon_r: f64,
    pub options: SimOptions,
}

/// Step budget of one specimen simulation; trial points whose carriers are so
/// mobile that they exceed it are rejected instead of integrated.
pub const FIT_STEP_BUDGET: u64 = 1_000_000;

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            nodes: PEA_POINTS,
            epsilon_r: 2.3,
            options: SimOptions {
                max_steps: FIT_STEP_BUDGET,
                ..SimOptions::default()
            },
        }
    }
}

/// Simulated minus measured density, flattened over measurements, times and positions.
pub fn residuals(params: &BctParams, meas: &[PeaMeasurement], cfg: &SimConfig) -> Result<Vec<f64>> {
    let parts: Vec<Result<Vec<f64>>> = meas.par_iter().map(|m| residual_one(params, m, cfg)).collect();
    let mut out = Vec::new();
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

fn residual_one(params: &BctParams, m: &PeaMeasurement, cfg: &SimConfig) -> Result<Vec<f64>> {
    m.validate()?;
    let sim = simulate_specimen(params, m.thickness, m.e_mean, m.temperature, &m.times, cfg)?;
    let mut out = Vec::with_capacity(m.times.len() * m.positions.len());
    for (row, measured) in sim.iter().zip(&m.rho) {
        out.extend(row.iter().zip(measured).map(|(s, d)| s - d));
    }
    Ok(out)
}

/// Superposed density profiles of a flat specimen at `times`, sampled at
/// [`PEA_POINTS`] uniform positions.
pub(crate) fn simulate_specimen(
    params: &BctParams,
    thickness: f64,
    e_mean: f64,
    temperature: f64,
    times: &[f64],
    cfg: &SimConfig,
) -> Result<Vec<Vec<f64>>> {
    let geometry = Geometry::planar(thickness, cfg.epsilon_r)?;
    let mesh = build_mesh(geometry, cfg.nodes)?;
    let drive = ConstantDrive(LoadPoint {
        voltage: e_mean * thickness,
        t_inner: temperature,
        t_outer: temperature,
    });
    let t_end = times.last().copied().unwrap_or(0.0);
    let sol = simulate_drive(&mesh, params, &drive, t_end, times, &cfg.options)
        .map_err(|e| e.with_context(&format!("parameters {params:?}")))?;
    let positions: Vec<f64> = (0..PEA_POINTS)
        .map(|i| thickness * i as f64 / (PEA_POINTS - 1) as f64)
        .collect();
    let eps = geometry.permittivity();
    sol.snapshots
        .iter()
        .map(|s| {
            let rho = surface_superposition(&s.state.net_charge(), &mesh, e_mean, eps)?;
            Ok(if cfg.nodes == PEA_POINTS {
                rho
            } else {
                resample(&mesh.nodes, &rho, &positions)
            })
        })
        .collect()
}

/// Sum of squared differences between simulated and measured densities, (C/m³)².
pub fn fit_cost(params: &BctParams, meas: &[PeaMeasurement], cfg: &SimConfig) -> Result<f64> {
    Ok(residuals(params, meas, cfg)?.iter().map(|r| r * r).sum())
}

/// One accepted iteration of one start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    pub start: usize,
    pub iteration: usize,
    pub cost: f64,
    pub gradient_norm: f64,
    pub damping: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: BctParams,
    /// Sum of squared residuals, (C/m³)².
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    pub start_index: usize,
    /// Cost at the start and after every accepted step.
    pub residual_history: Vec<f64>,
    pub evaluations: usize,
    /// Why the search stopped.
    pub message: String,
    pub progress: Vec<Progress>,
}

pub const MAX_ITERATIONS: usize = 200;
pub const JACOBIAN_REL_STEP: f64 = 1e-5;
pub const COST_REL_TOL: f64 = 1e-6;
pub const GRADIENT_TOL: f64 = 1e-8;
/// Smallest change of the scaled coordinates worth another iteration.
pub const STEP_TOL: f64 = 1e-8;
/// Cost, relative to the squared norm of the measured densities, counted as an exact fit.
pub const COST_ABS_TOL: f64 = 1e-16;
/// Largest change of any scaled coordinate in one step.
pub const MAX_UNIT_STEP: f64 = 0.1;

struct Problem<'a> {
    base: BctParams,
    free: Vec<Bound>,
    meas: &'a [PeaMeasurement],
    cfg: &'a SimConfig,
}

impl Problem<'_> {
    fn params(&self, z: &[f64]) -> BctParams {
        let mut p = self.base;
        for (b, z) in self.free.iter().zip(z) {
            b.param.set(&mut p, b.unscaled(*z));
        }
        p
    }

    fn residuals(&self, z: &[f64]) -> Result<DVector<f64>> {
        Ok(DVector::from_vec(residuals(&self.params(z), self.meas, self.cfg)?))
    }

    /// Forward differences with a relative step on the physical value.
    fn jacobian(&self, z: &[f64], r: &DVector<f64>) -> Result<DMatrix<f64>> {
        let cols: Vec<Result<DVector<f64>>> = (0..self.free.len())
            .into_par_iter()
            .map(|j| {
                let b = &self.free[j];
                let v = b.unscaled(z[j]);
                let mut v_step = v * (1.0 + JACOBIAN_REL_STEP);
                if v_step > b.hi {
                    v_step = v * (1.0 - JACOBIAN_REL_STEP);
                }
                let dz = b.scaled(v_step) - z[j];
                let mut zs = z.to_vec();
                zs[j] += dz;
                let rs = self.residuals(&zs)?;
                Ok((rs - r) / dz)
            })
            .collect();
        let cols = cols.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(DMatrix::from_columns(&cols))
    }
}

fn projected_gradient(g: &DVector<f64>, z: &[f64]) -> DVector<f64> {
    DVector::from_iterator(
        g.len(),
        g.iter().zip(z).map(|(g, z)| {
            if (*z <= 0.0 && *g > 0.0) || (*z >= 1.0 && *g < 0.0) {
                0.0
            } else {
                *g
            }
        }),
    )
}

/// Bounded Levenberg–Marquardt trust-region search from `start`.
pub fn fit_local(start: &BctParams, meas: &[PeaMeasurement], bounds: &FitBounds, cfg: &SimConfig) -> Result<FitResult> {
    fit_local_indexed(start, meas, bounds, cfg, 0)
}

fn fit_local_indexed(
    start: &BctParams,
    meas: &[PeaMeasurement],
    bounds: &FitBounds,
    cfg: &SimConfig,
    start_index: usize,
) -> Result<FitResult> {
    bounds.validate()?;
    start.validate()?;
    if meas.is_empty() {
        return Err(Error::invalid("no measurements to fit"));
    }
    if !bounds.contains(start) {
        return Err(Error::invalid("start lies outside the bounds"));
    }
    let problem = Problem {
        base: *start,
        free: bounds.free(),
        meas,
        cfg,
    };
    let mut z: Vec<f64> = problem
        .free
        .iter()
        .map(|b| b.scaled(b.param.get(start)).clamp(0.0, 1.0))
        .collect();
    let mut r = problem.residuals(&z)?;
    let mut cost = r.norm_squared();
    let mut evaluations = 1;
    let mut history = vec![cost];
    let mut progress = Vec::new();
    let cost_floor = COST_ABS_TOL
        * meas
            .iter()
            .flat_map(|m| m.rho.iter().flatten())
            .map(|v| v * v)
            .sum::<f64>();
    let finish = |z: &[f64], cost, iterations, converged, history, evaluations, message: &str, progress| FitResult {
        params: if problem.free.is_empty() {
            *start
        } else {
            problem.params(z)
        },
        cost,
        iterations,
        converged,
        start_index,
        residual_history: history,
        evaluations,
        message: message.into(),
        progress,
    };
    if problem.free.is_empty() {
        return Ok(finish(
            &z,
            cost,
            0,
            true,
            history,
            evaluations,
            "no free parameters",
            progress,
        ));
    }

    let k = z.len();
    let mut damping = 1e-3;
    let mut nu = 2.0;
    for iteration in 1..=MAX_ITERATIONS {
        if cost <= cost_floor {
            return Ok(finish(
                &z,
                cost,
                iteration - 1,
                true,
                history,
                evaluations,
                "cost at the exact-fit floor",
                progress,
            ));
        }
        let jac = problem.jacobian(&z, &r)?;
        evaluations += k;
        let g = jac.tr_mul(&r);
        let pg = projected_gradient(&g, &z);
        if pg.norm() < GRADIENT_TOL {
            return Ok(finish(
                &z,
                cost,
                iteration - 1,
                true,
                history,
                evaluations,
                "gradient below tolerance",
                progress,
            ));
        }
        let a = jac.tr_mul(&jac);
        let free_dims: Vec<usize> = (0..k)
            .filter(|i| pg[*i] != 0.0 || (z[*i] > 0.0 && z[*i] < 1.0))
            .collect();
        let mut accepted = None;
        for _ in 0..30 {
            let m = free_dims.len();
            let mut sys = DMatrix::zeros(m, m);
            let mut rhs = DVector::zeros(m);
            for (p, &i) in free_dims.iter().enumerate() {
                rhs[p] = -g[i];
                for (q, &j) in free_dims.iter().enumerate() {
                    sys[(p, q)] = a[(i, j)];
                }
                sys[(p, p)] += damping * a[(i, i)].max(1e-12 * a.diagonal().max());
            }
            let Some(chol) = sys.cholesky() else {
                damping *= nu;
                nu *= 2.0;
                continue;
            };
            let delta = chol.solve(&rhs).map(|d| d.clamp(-MAX_UNIT_STEP, MAX_UNIT_STEP));
            let mut z_new = z.clone();
            for (p, &i) in free_dims.iter().enumerate() {
                z_new[i] = (z[i] + delta[p]).clamp(0.0, 1.0);
            }
            let step = DVector::from_iterator(k, z_new.iter().zip(&z).map(|(a, b)| a - b));
            let predicted = -(2.0 * g.dot(&step) + step.dot(&(&a * &step)));
            evaluations += 1;
            let trial = problem.residuals(&z_new);
            let (r_new, cost_new) = match trial {
                Ok(r_new) => {
                    let c = r_new.norm_squared();
                    (Some(r_new), c)
                }
                Err(e) => {
                    log::debug!("start {start_index}: trial step failed: {e}");
                    (None, f64::INFINITY)
                }
            };
            let ratio = (cost - cost_new) / predicted;
            if let Some(r_new) = r_new.filter(|_| predicted > 0.0 && cost_new < cost && ratio > 1e-4) {
                damping *= (1.0 - (2.0 * ratio - 1.0).powi(3)).max(1.0 / 3.0);
                nu = 2.0;
                accepted = Some((z_new, r_new, cost_new, predicted));
                break;
            }
            damping *= nu;
            nu *= 2.0;
        }
        let Some((z_new, r_new, cost_new, predicted)) = accepted else {
            return Ok(finish(
                &z,
                cost,
                iteration - 1,
                false,
                history,
                evaluations,
                "no acceptable step",
                progress,
            ));
        };
        let rel_change = (cost - cost_new) / cost;
        let step_norm = z_new.iter().zip(&z).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let cost_old = cost;
        z = z_new;
        r = r_new;
        cost = cost_new;
        history.push(cost);
        let record = Progress {
            start: start_index,
            iteration,
            cost,
            gradient_norm: pg.norm(),
            damping,
        };
        log::debug!(
            "start {start_index} iteration {iteration}: cost {cost:.6e} damping {damping:.2e} at {:?}",
            problem
                .free
                .iter()
                .zip(&z)
                .map(|(b, z)| (b.param.name(), b.unscaled(*z)))
                .collect::<Vec<_>>()
        );
        progress.push(record);
        if rel_change < COST_REL_TOL && predicted / cost_old < COST_REL_TOL {
            return Ok(finish(
                &z,
                cost,
                iteration,
                true,
                history,
                evaluations,
                "relative cost change below tolerance",
                progress,
            ));
        }
        if step_norm < STEP_TOL {
            return Ok(finish(
                &z,
                cost,
                iteration,
                true,
                history,
                evaluations,
                "step below tolerance",
                progress,
            ));
        }
    }
    Ok(finish(
        &z,
        cost,
        MAX_ITERATIONS,
        false,
        history,
        evaluations,
        "iteration limit reached",
        progress,
    ))
}

/// Outcome of a multi-start search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalFit {
    pub best: FitResult,
    /// Per-start results in start order.
    pub all: Vec<FitResult>,
}

/// Start points drawn uniformly in the scaled search box.
pub fn draw_starts(base: &BctParams, bounds: &FitBounds, n: usize, seed: u64) -> Vec<BctParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut p = *base;
            for b in &bounds.bounds {
                let u: f64 = rng.gen();
                b.param.set(&mut p, b.unscaled(u));
            }
            p
        })
        .collect()
}

/// Independent local searches from `n_starts` random starts; the best is the
/// one with the lowest final cost (earliest start on ties).
pub fn fit_global(
    base: &BctParams,
    bounds: &FitBounds,
    n_starts: usize,
    seed: u64,
    meas: &[PeaMeasurement],
    cfg: &SimConfig,
) -> Result<GlobalFit> {
    bounds.validate()?;
    if n_starts == 0 {
        return Err(Error::invalid("at least one start is required"));
    }
    if meas.is_empty() {
        return Err(Error::invalid("no measurements to fit"));
    }
    let starts = draw_starts(base, bounds, n_starts, seed);
    let all: Vec<FitResult> = starts
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            fit_local_indexed(s, meas, bounds, cfg, i).unwrap_or_else(|e| FitResult {
                params: *s,
                cost: f64::INFINITY,
                iterations: 0,
                converged: false,
                start_index: i,
                residual_history: Vec::new(),
                evaluations: 0,
                message: format!("failed: {e}"),
                progress: Vec::new(),
            })
        })
        .collect();
    let best = all
        .iter()
        .fold(None::<&FitResult>, |best, r| match best {
            Some(b) if b.cost <= r.cost => Some(b),
            _ => Some(r),
        })
        .expect("at least one start")
        .clone();
    Ok(GlobalFit { best, all })
}
