//! Electrothermal life model and Miner's-law accumulation over load cycles.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{celsius, HOUR, YEAR};
use crate::error::{Error, Result};
use crate::field::FieldProfile;
use crate::geometry::RadialMesh;
use crate::program::LoadProgram;

mod estimate;

pub use estimate::{
    design_field, estimate_life, sample_times, Conservation, CycleMode, FieldSource, LifeAssessment, SourceRun,
};

/// Parameters of the inverse-power-law / Arrhenius life model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifeParams {
    /// Design life (s).
    pub l_d: f64,
    /// Design field (V/m).
    pub e_d: f64,
    /// Design temperature (K).
    pub t_d: f64,
    /// Voltage endurance coefficient at the design temperature.
    pub n_d: f64,
    /// Electrothermal synergism (K).
    pub b_et: f64,
    /// Arrhenius parameter ΔW/k_B (K).
    pub b: f64,
    /// Reference field of the synergism term (V/m); inert when `b_et` is 0.
    pub e_0: f64,
}

impl LifeParams {
    /// DC-XLPE case-study life model (40 years at 70 °C, n = 10, B = 12430 K,
    /// no synergism) at the design field `e_d`.
    pub fn dc_xlpe(e_d: f64) -> Self {
        Self {
            l_d: 40.0 * YEAR,
            e_d,
            t_d: celsius(70.0),
            n_d: 10.0,
            b_et: 0.0,
            b: 12430.0,
            e_0: e_d,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("L_D", self.l_d),
            ("E_D", self.e_d),
            ("T_D", self.t_d),
            ("n_D", self.n_d),
            ("B", self.b),
            ("E_0", self.e_0),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("life parameter {name} = {v} must be positive")));
            }
        }
        if !(self.b_et >= 0.0 && self.b_et.is_finite()) {
            return Err(Error::invalid(format!("b_ET = {} must be non-negative", self.b_et)));
        }
        Ok(())
    }
}

/// Life (s) at constant field `e` and temperature `t`.
pub fn life_at(e: f64, t: f64, p: &LifeParams) -> Result<f64> {
    if !(e > 0.0) {
        return Err(Error::invalid(format!("life requires a positive field, got {e} V/m")));
    }
    if !(t > 0.0) {
        return Err(Error::invalid(format!("temperature must be positive, got {t} K")));
    }
    Ok(life_unchecked(e, t, p))
}

#[inline]
fn life_unchecked(e: f64, t: f64, p: &LifeParams) -> f64 {
    let tp = 1.0 / p.t_d - 1.0 / t;
    let mut l = p.l_d * (e / p.e_d).powf(-(p.n_d - p.b_et * tp)) * (-p.b * tp).exp();
    if p.b_et != 0.0 {
        l *= (p.e_d / p.e_0).powf(p.b_et * tp);
    }
    l
}

/// Rate of life consumption 1/L; zero where the field vanishes.
#[inline]
fn aging_rate(e: f64, t: f64, p: &LifeParams) -> f64 {
    let e = e.abs();
    if e == 0.0 {
        0.0
    } else {
        1.0 / life_unchecked(e, t, p)
    }
}

/// Per-node field and temperature on a shared time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHistory {
    pub times: Vec<f64>,
    pub fields: Vec<Vec<f64>>,
    pub temperatures: Vec<Vec<f64>>,
}

impl FieldHistory {
    pub fn new(times: Vec<f64>, fields: Vec<Vec<f64>>, temperatures: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() != fields.len() || times.len() != temperatures.len() {
            return Err(Error::invalid("time, field and temperature histories differ in length"));
        }
        if times.len() < 2 {
            return Err(Error::invalid("a history needs at least two instants"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("history times must be strictly increasing"));
        }
        let n = fields[0].len();
        if fields.iter().chain(&temperatures).any(|v| v.len() != n) {
            return Err(Error::invalid("history rows differ in node count"));
        }
        Ok(Self {
            times,
            fields,
            temperatures,
        })
    }

    /// Builds a history from field profiles, evaluating the electrode
    /// temperatures of `program` at each profile time.
    pub fn from_profiles<'a>(
        mesh: &RadialMesh,
        program: &LoadProgram,
        profiles: impl IntoIterator<Item = &'a FieldProfile>,
    ) -> Result<Self> {
        let mut times = Vec::new();
        let mut fields = Vec::new();
        let mut temperatures = Vec::new();
        for f in profiles {
            let load = program.at(f.t);
            times.push(f.t);
            fields.push(f.e.clone());
            temperatures.push(mesh.temperature_profile(load.t_inner, load.t_outer));
        }
        Self::new(times, fields, temperatures)
    }

    pub fn nodes(&self) -> usize {
        self.fields[0].len()
    }

    pub fn duration(&self) -> f64 {
        self.times[self.times.len() - 1] - self.times[0]
    }

    /// Sub-history restricted to `[t0, t1]`; both ends must be grid points.
    pub fn window(&self, t0: f64, t1: f64) -> Result<Self> {
        let tol = 1e-6 * (1.0 + t1.abs());
        let i0 = self.times.iter().position(|t| (t - t0).abs() <= tol);
        let i1 = self.times.iter().position(|t| (t - t1).abs() <= tol);
        match (i0, i1) {
            (Some(a), Some(b)) if b > a => Self::new(
                self.times[a..=b].to_vec(),
                self.fields[a..=b].to_vec(),
                self.temperatures[a..=b].to_vec(),
            ),
            _ => Err(Error::invalid(format!(
                "window [{t0}, {t1}] s does not align with the history grid"
            ))),
        }
    }
}

/// Per-node loss of life ∫dt/L over the history (trapezoidal rule).
pub fn loss_of_life(history: &FieldHistory, p: &LifeParams) -> Result<Vec<f64>> {
    p.validate()?;
    if history.temperatures.iter().flatten().any(|t| !(*t > 0.0)) {
        return Err(Error::invalid("history contains non-positive temperatures"));
    }
    let n = history.nodes();
    let h = history;
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let mut lf = 0.0;
            let mut prev = aging_rate(h.fields[0][i], h.temperatures[0][i], p);
            for k in 1..h.times.len() {
                let cur = aging_rate(h.fields[k][i], h.temperatures[k][i], p);
                lf += 0.5 * (h.times[k] - h.times[k - 1]) * (prev + cur);
                prev = cur;
            }
            lf
        })
        .collect())
}

pub const TT_CYCLES_24H: u32 = 24;
pub const TT_CYCLES_48H: u32 = 3;

/// Concatenates `n24` copies of the 24-h cycle followed by `n48` copies of the
/// 48-h cycle, labelling each cycle boundary.
pub fn compose_cycles(cycle24: &LoadProgram, n24: u32, cycle48: &LoadProgram, n48: u32) -> Result<LoadProgram> {
    let tol = 1e-6;
    if (cycle24.duration() - 24.0 * HOUR).abs() > tol {
        return Err(Error::invalid(format!(
            "24-h cycle lasts {:.4} h",
            cycle24.duration() / HOUR
        )));
    }
    if (cycle48.duration() - 48.0 * HOUR).abs() > tol {
        return Err(Error::invalid(format!(
            "48-h cycle lasts {:.4} h",
            cycle48.duration() / HOUR
        )));
    }
    if n24 + n48 == 0 {
        return Err(Error::invalid("program has no cycles"));
    }
    let mut parts =
        std::iter::repeat_n((cycle24, "24h"), n24 as usize).chain(std::iter::repeat_n((cycle48, "48h"), n48 as usize));
    let (first, label) = parts.next().expect("at least one cycle");
    let relabel = |c: &LoadProgram, label: &str, index: usize| {
        c.clone().with_cycles(vec![crate::program::CycleBoundary {
            t_start: 0.0,
            t_end: c.duration(),
            label: format!("{label}#{index}"),
        }])
    };
    let mut program = relabel(first, label, 1);
    for (k, (c, label)) in parts.enumerate() {
        program.append(&relabel(c, label, k + 2));
    }
    Ok(program)
}

/// Type Test program: 24 consecutive 24-h cycles, then three 48-h cycles.
pub fn compose_tt_program(cycle24: &LoadProgram, cycle48: &LoadProgram) -> Result<LoadProgram> {
    compose_cycles(cycle24, TT_CYCLES_24H, cycle48, TT_CYCLES_48H)
}

/// Loss of life of one cycle type and how often it occurs in the program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleLoss {
    pub label: String,
    pub duration: f64,
    pub count: u32,
    /// Per-node loss of life of a single cycle.
    pub lf: Vec<f64>,
}

impl CycleLoss {
    pub fn from_history(label: &str, count: u32, history: &FieldHistory, p: &LifeParams) -> Result<Self> {
        Ok(Self {
            label: label.into(),
            duration: history.duration(),
            count,
            lf: loss_of_life(history, p)?,
        })
    }

    /// Cycles to failure per node, 1/LF.
    pub fn cycles_to_failure(&self) -> Vec<f64> {
        self.lf.iter().map(|lf| 1.0 / lf).collect()
    }

    /// Life under continuous repetition of this cycle, t_d·K (s).
    pub fn cycle_life(&self) -> Vec<f64> {
        self.lf.iter().map(|lf| self.duration / lf).collect()
    }
}

/// Miner's-law life assessment of a whole program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifeResult {
    pub positions: Vec<f64>,
    pub thickness_fraction: Vec<f64>,
    pub by_type: Vec<CycleLoss>,
    /// Σ count·LF per node.
    pub lf_total: Vec<f64>,
    pub program_duration: f64,
    /// Life under repetition of the whole program, per node (s).
    pub life: Vec<f64>,
    pub min_life: f64,
    pub argmin_node: usize,
    pub argmin_position: f64,
    pub max_lf: f64,
}

impl LifeResult {
    pub fn from_cycles(mesh: &RadialMesh, by_type: Vec<CycleLoss>) -> Result<Self> {
        let n = mesh.len();
        if by_type.is_empty() || by_type.iter().any(|c| c.lf.len() != n) {
            return Err(Error::invalid("cycle losses must be non-empty and match the mesh"));
        }
        let mut lf_total = vec![0.0; n];
        let mut program_duration = 0.0;
        for c in &by_type {
            program_duration += c.count as f64 * c.duration;
            for (acc, lf) in lf_total.iter_mut().zip(&c.lf) {
                *acc += c.count as f64 * lf;
            }
        }
        let life: Vec<f64> = lf_total.iter().map(|lf| program_duration / lf).collect();
        let (argmin_node, min_life) = life
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |(k, m), (i, l)| if l < m { (i, l) } else { (k, m) });
        let thickness_fraction: Vec<f64> = mesh
            .nodes
            .iter()
            .map(|r| mesh.geometry.thickness_fraction(*r))
            .collect();
        Ok(Self {
            positions: mesh.nodes.clone(),
            argmin_position: thickness_fraction[argmin_node],
            thickness_fraction,
            max_lf: lf_total.iter().copied().fold(0.0, f64::max),
            by_type,
            lf_total,
            program_duration,
            life,
            min_life,
            argmin_node,
        })
    }

    /// Miner's criterion: accumulated loss of life below one everywhere.
    pub fn withstands(&self) -> bool {
        self.max_lf < 1.0
    }

    /// Accumulated loss of all cycles with the given label, per node.
    pub fn lf_of(&self, label: &str) -> Vec<f64> {
        let mut out = vec![0.0; self.positions.len()];
        for c in self.by_type.iter().filter(|c| c.label == label) {
            for (o, lf) in out.iter_mut().zip(&c.lf) {
                *o += c.count as f64 * lf;
            }
        }
        out
    }
}

/// Loss of life cycle by cycle over a full-program history, grouping cycles
/// by the label prefix before `#`.
pub fn estimate_life_full(
    mesh: &RadialMesh,
    program: &LoadProgram,
    history: &FieldHistory,
    p: &LifeParams,
) -> Result<LifeResult> {
    let mut by_type: Vec<CycleLoss> = Vec::new();
    for c in program.cycles() {
        let label = c.label.split('#').next().unwrap_or(&c.label);
        let lf = loss_of_life(&history.window(c.t_start, c.t_end)?, p)?;
        match by_type.iter_mut().find(|x| x.label == label) {
            Some(x) => {
                // accumulate as a mean per-cycle loss with a count
                let k = x.count as f64;
                for (a, b) in x.lf.iter_mut().zip(&lf) {
                    *a = (*a * k + b) / (k + 1.0);
                }
                x.count += 1;
            }
            None => by_type.push(CycleLoss {
                label: label.into(),
                duration: c.t_end - c.t_start,
                count: 1,
                lf,
            }),
        }
    }
    LifeResult::from_cycles(mesh, by_type)
}
