//! Life assessment driven by simulated field histories.

use serde::{Deserialize, Serialize};

use crate::bct::{simulate_bct, SimOptions};
use crate::error::{Error, Result};
use crate::field::{macroscopic_transient, FieldProfile, KleinParams, MacroOptions};
use crate::geometry::RadialMesh;
use crate::params::BctParams;
use crate::program::LoadProgram;

use super::{estimate_life_full, CycleLoss, FieldHistory, LifeParams, LifeResult};

/// Model that supplies the field history.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldSource {
    Microscopic { params: BctParams, options: SimOptions },
    Macroscopic { klein: KleinParams, options: MacroOptions },
}

/// Conservation diagnostics of a microscopic run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conservation {
    /// Worst species-wise ledger imbalance relative to its largest term.
    pub worst_imbalance: f64,
    pub clamp_events: u64,
    pub steps: u64,
}

/// Field profiles of one simulated program.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceRun {
    pub profiles: Vec<FieldProfile>,
    /// `None` for the macroscopic model.
    pub conservation: Option<Conservation>,
}

/// `0, interval, 2·interval, …` up to and including `duration`, plus `extra`.
pub fn sample_times(duration: f64, interval: f64, extra: &[f64]) -> Result<Vec<f64>> {
    if !(interval > 0.0 && duration > 0.0) {
        return Err(Error::invalid("sampling interval and duration must be positive"));
    }
    let n = (duration / interval).floor() as usize;
    let mut times: Vec<f64> = (0..=n).map(|k| k as f64 * interval).collect();
    times.push(duration);
    times.extend(extra.iter().copied().filter(|t| (0.0..=duration).contains(t)));
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * (1.0 + b.abs()));
    Ok(times)
}

impl FieldSource {
    /// Simulates `program` from a charge-free start and records the field at `times`.
    pub fn run(&self, mesh: &RadialMesh, program: &LoadProgram, times: &[f64]) -> Result<SourceRun> {
        let t_end = program.duration();
        match self {
            FieldSource::Microscopic { params, options } => {
                let sol = simulate_bct(mesh, params, program, t_end, times, options)?;
                let conservation = Conservation {
                    worst_imbalance: sol.worst_imbalance(&mesh.control_volumes()),
                    clamp_events: sol.ledger.clamp_events,
                    steps: sol.steps,
                };
                Ok(SourceRun {
                    profiles: sol.snapshots.into_iter().map(|s| s.field).collect(),
                    conservation: Some(conservation),
                })
            }
            FieldSource::Macroscopic { klein, options } => {
                let options = MacroOptions {
                    snapshot_times: times.to_vec(),
                    ..options.clone()
                };
                let sol = macroscopic_transient(mesh, &mesh.geometry, klein, program, t_end, &options)?;
                Ok(SourceRun {
                    profiles: sol.snapshots,
                    conservation: None,
                })
            }
        }
    }
}

/// Peak field after holding `voltage` and the given electrode temperatures for
/// `duration` seconds, as a stand-in for the steady state at design conditions.
pub fn design_field(
    source: &FieldSource,
    mesh: &RadialMesh,
    voltage: f64,
    t_inner: f64,
    t_outer: f64,
    duration: f64,
) -> Result<f64> {
    let program = LoadProgram::constant(duration, voltage, t_inner, t_outer)?;
    let run = source.run(mesh, &program, &[duration])?;
    let e = run.profiles.last().map(|f| f.max_abs().0).unwrap_or(0.0);
    if !(e > 0.0) {
        return Err(Error::invalid("design conditions give no field"));
    }
    Ok(e)
}

/// How cycle field histories are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CycleMode {
    /// Simulate the first cycle of each type from a charge-free start and reuse it.
    Reuse,
    /// Simulate the whole program in sequence.
    Strict,
}

/// Life result together with the simulated runs behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct LifeAssessment {
    pub result: LifeResult,
    /// One run per cycle type in reuse mode, a single run labelled `program` in strict mode.
    pub runs: Vec<(String, SourceRun)>,
}

fn cycle_type(label: &str) -> &str {
    label.split('#').next().unwrap_or(label)
}

/// Miner's-law life of `program`, sampling the field every `interval` seconds.
///
/// Cycles are grouped by the label prefix before `#`.
pub fn estimate_life(
    source: &FieldSource,
    program: &LoadProgram,
    p: &LifeParams,
    mesh: &RadialMesh,
    interval: f64,
    mode: CycleMode,
) -> Result<LifeAssessment> {
    p.validate()?;
    if program.cycles().is_empty() {
        return Err(Error::invalid("load program defines no cycles"));
    }
    match mode {
        CycleMode::Reuse => {
            let mut by_type: Vec<CycleLoss> = Vec::new();
            let mut runs = Vec::new();
            for c in program.cycles() {
                let label = cycle_type(&c.label);
                if let Some(x) = by_type.iter_mut().find(|x| x.label == label) {
                    if (x.duration - (c.t_end - c.t_start)).abs() > 1e-6 {
                        return Err(Error::invalid(format!("cycles of type {label} differ in duration")));
                    }
                    x.count += 1;
                    continue;
                }
                let cycle = program.window(c.t_start, c.t_end, label)?;
                let times = sample_times(cycle.duration(), interval, &[])?;
                let run = source.run(mesh, &cycle, &times)?;
                let history = FieldHistory::from_profiles(mesh, &cycle, &run.profiles)?;
                by_type.push(CycleLoss::from_history(label, 1, &history, p)?);
                runs.push((label.to_string(), run));
            }
            Ok(LifeAssessment {
                result: LifeResult::from_cycles(mesh, by_type)?,
                runs,
            })
        }
        CycleMode::Strict => {
            let bounds: Vec<f64> = program.cycles().iter().flat_map(|c| [c.t_start, c.t_end]).collect();
            let times = sample_times(program.duration(), interval, &bounds)?;
            let run = source.run(mesh, program, &times)?;
            let history = FieldHistory::from_profiles(mesh, program, &run.profiles)?;
            Ok(LifeAssessment {
                result: estimate_life_full(mesh, program, &history, p)?,
                runs: vec![("program".to_string(), run)],
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::HOUR;
    use crate::geometry::{build_mesh, Geometry};
    use crate::life::{compose_cycles, life_at};

    #[test]
    fn sample_grid_includes_end_and_extras() {
        let t = sample_times(1000.0, 300.0, &[450.0, 2000.0]).unwrap();
        assert_eq!(t, vec![0.0, 300.0, 450.0, 600.0, 900.0, 1000.0]);
        assert!(sample_times(1.0, 0.0, &[]).is_err());
    }

    #[test]
    fn reuse_and_strict_agree_for_memoryless_field() {
        // isothermal and field-independent: the Laplacian field at every instant
        let g = Geometry::cylindrical(0.01, 0.02, 2.3).unwrap();
        let mesh = build_mesh(g, 12).unwrap();
        let klein = KleinParams {
            sigma_ref: 1e-2,
            activation_energy: 0.6,
            field_coeff: 1e-14,
        };
        let source = FieldSource::Macroscopic {
            klein,
            options: MacroOptions::default(),
        };
        let c24 = LoadProgram::constant(24.0 * HOUR, 100e3, 340.0, 340.0).unwrap();
        let c48 = LoadProgram::constant(48.0 * HOUR, 100e3, 340.0, 340.0).unwrap();
        let prog = compose_cycles(&c24, 2, &c48, 1).unwrap();
        let p = LifeParams::dc_xlpe(10e6);
        let a = estimate_life(&source, &prog, &p, &mesh, 3600.0, CycleMode::Reuse).unwrap();
        let b = estimate_life(&source, &prog, &p, &mesh, 3600.0, CycleMode::Strict).unwrap();
        assert_eq!(a.runs.len(), 2);
        for (x, y) in a.result.lf_total.iter().zip(&b.result.lf_total) {
            assert!((x - y).abs() < 1e-9 * y, "{x} vs {y}");
        }
        // highest field at the conductor
        assert_eq!(a.result.argmin_node, 0);
        let e0 = crate::field::laplacian_field(&g, 100e3, &mesh).e[0];
        let temp0 = mesh.temperature_profile(340.0, 340.0)[0];
        let want = prog.duration() / life_at(e0, temp0, &p).unwrap();
        assert!((a.result.lf_total[0] - want).abs() < 1e-6 * want);
    }
}
