//! End-to-end studies built from the solvers: the validation comparison, load
//! cycle summaries and the micro/macro behaviour checklist.

use serde::{Deserialize, Serialize};

use crate::analysis::{peak_track, relative_field_change, stabilization_time, PeakPoint};
use crate::bct::{simulate_bct, SimOptions};
use crate::constants::HOUR;
use crate::error::{Error, Result};
use crate::field::FieldProfile;
use crate::geometry::{build_mesh, RadialMesh};
use crate::life::{sample_times, Conservation, FieldSource, SourceRun};
use crate::program::LoadProgram;
use crate::scenarios::{ValidationCase, VALIDATION_EMAX_KV_MM, VALIDATION_TIMES};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub t: f64,
    /// kV/mm
    pub reference: f64,
    /// kV/mm
    pub computed: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub nodes: usize,
    pub rows: Vec<ValidationRow>,
    pub conservation: Conservation,
}

impl ValidationReport {
    pub fn max_rel_error(&self) -> f64 {
        self.rows.iter().map(|r| r.rel_error.abs()).fold(0.0, f64::max)
    }

    pub fn final_peak(&self) -> f64 {
        self.rows.last().map(|r| r.computed).unwrap_or(f64::NAN)
    }
}

/// Runs the 90-kV validation cable and compares its peak fields with the references.
pub fn run_validation(nodes: usize, options: &SimOptions) -> Result<ValidationReport> {
    let case = ValidationCase::new(nodes)?;
    let mesh = build_mesh(case.geometry, nodes)?;
    let sol = simulate_bct(
        &mesh,
        &case.params,
        &case.program,
        case.t_end(),
        &VALIDATION_TIMES,
        options,
    )?;
    let rows = sol
        .snapshots
        .iter()
        .zip(VALIDATION_TIMES.iter().zip(VALIDATION_EMAX_KV_MM))
        .map(|(s, (t, reference))| {
            let computed = s.field.max_abs().0 / 1e6;
            ValidationRow {
                t: *t,
                reference,
                computed,
                rel_error: (computed - reference) / reference,
            }
        })
        .collect();
    Ok(ValidationReport {
        nodes,
        rows,
        conservation: Conservation {
            worst_imbalance: sol.worst_imbalance(&mesh.control_volumes()),
            clamp_events: sol.ledger.clamp_events,
            steps: sol.steps,
        },
    })
}

/// Last sample time at which the conductor temperature is at its maximum,
/// i.e. the end of the heating period of a load cycle.
pub fn switch_off_time(program: &LoadProgram) -> f64 {
    let samples = program.samples();
    let t_max = samples.iter().map(|s| s.t_inner).fold(f64::NEG_INFINITY, f64::max);
    samples
        .iter()
        .rev()
        .find(|s| s.t_inner >= t_max - 1e-9)
        .map(|s| s.t)
        .unwrap_or(0.0)
}

/// Where the field peaks across the insulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PeakClass {
    Inner,
    Interior,
    Outer,
}

impl PeakClass {
    pub fn of(node: usize, nodes: usize) -> Self {
        if node == 0 {
            PeakClass::Inner
        } else if node + 1 == nodes {
            PeakClass::Outer
        } else {
            PeakClass::Interior
        }
    }
}

impl std::fmt::Display for PeakClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PeakClass::Inner => "inner surface",
            PeakClass::Interior => "interior",
            PeakClass::Outer => "outer surface",
        })
    }
}

/// Behaviour of the field over one heating/cooling cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleSummary {
    pub switch_off: f64,
    /// Time after which the peak stays within one node for an hour.
    pub stabilization_time: Option<f64>,
    /// Peak at the end of heating.
    pub hot_peak: PeakPoint,
    /// Peak at the end of the cycle.
    pub cold_peak: PeakPoint,
    pub hot_class: PeakClass,
    pub cold_class: PeakClass,
    /// Relative change of the peak field between switch-off and the end of the cycle.
    pub cooling_peak_change: f64,
    /// Largest nodal field change over the same interval, relative to the hot peak.
    pub cooling_profile_change: f64,
}

/// Hold time of the stabilization criterion.
pub const STABILIZATION_HOLD: f64 = HOUR;

pub fn summarize_cycle(mesh: &RadialMesh, profiles: &[FieldProfile], switch_off: f64) -> Result<CycleSummary> {
    let track = peak_track(mesh, profiles);
    let hot = profiles
        .iter()
        .position(|p| (p.t - switch_off).abs() <= 1e-6 * (1.0 + switch_off))
        .ok_or_else(|| Error::invalid(format!("no field profile at switch-off time {switch_off} s")))?;
    let last = profiles.len() - 1;
    let n = mesh.len();
    let heating: Vec<PeakPoint> = track[..=hot].to_vec();
    Ok(CycleSummary {
        switch_off,
        stabilization_time: stabilization_time(&heating, STABILIZATION_HOLD),
        hot_peak: track[hot],
        cold_peak: track[last],
        hot_class: PeakClass::of(track[hot].node, n),
        cold_class: PeakClass::of(track[last].node, n),
        cooling_peak_change: (track[last].e_max - track[hot].e_max).abs() / track[hot].e_max,
        cooling_profile_change: relative_field_change(&profiles[hot], &profiles[last]),
    })
}

/// Simulated cycle with its summary.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleStudy {
    pub run: SourceRun,
    pub summary: CycleSummary,
}

/// Simulates one load cycle from a charge-free start, sampling every `interval` seconds.
pub fn run_cycle(source: &FieldSource, mesh: &RadialMesh, program: &LoadProgram, interval: f64) -> Result<CycleStudy> {
    let switch_off = switch_off_time(program);
    let times = sample_times(program.duration(), interval, &[switch_off])?;
    let run = source.run(mesh, program, &times)?;
    let summary = summarize_cycle(mesh, &run.profiles, switch_off)?;
    Ok(CycleStudy { run, summary })
}

/// Qualitative comparison of the two field models on the same cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checklist {
    pub micro: CycleSummary,
    pub macro_: CycleSummary,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChecklistItem {
    pub item: String,
    pub micro: String,
    pub macro_: String,
}

/// Peak changes below this fraction count as "no variation" during cooling.
pub const COOLING_STEADY_TOL: f64 = 0.02;

impl Checklist {
    pub fn items(&self) -> Vec<ChecklistItem> {
        let inversion = |s: &CycleSummary| if s.hot_class == PeakClass::Inner { "no" } else { "yes" }.to_string();
        let cooling = |s: &CycleSummary| {
            let verdict = if s.cooling_peak_change < COOLING_STEADY_TOL {
                "field held"
            } else {
                "field relaxes"
            };
            format!("{verdict} ({:.1}% peak change)", 100.0 * s.cooling_peak_change)
        };
        let hot = |s: &CycleSummary| format!("{} ({:.2} of thickness)", s.hot_class, s.hot_peak.thickness_fraction);
        vec![
            ChecklistItem {
                item: "field inversion when hot".into(),
                micro: inversion(&self.micro),
                macro_: inversion(&self.macro_),
            },
            ChecklistItem {
                item: "response to cooling".into(),
                micro: cooling(&self.micro),
                macro_: cooling(&self.macro_),
            },
            ChecklistItem {
                item: "hot peak position".into(),
                micro: hot(&self.micro),
                macro_: hot(&self.macro_),
            },
            ChecklistItem {
                item: "cold peak position".into(),
                micro: self.micro.cold_class.to_string(),
                macro_: self.macro_.cold_class.to_string(),
            },
        ]
    }
}
