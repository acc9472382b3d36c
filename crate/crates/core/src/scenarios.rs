//! Built-in reference scenarios: the 90-kV validation cable, the 500-kV
//! case-study cable and the Type Test load cycles applied to it.

use crate::constants::{celsius, HOUR};
use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::params::BctParams;
use crate::program::{CycleBoundary, LoadProgram, LoadSample};

/// Times (s) at which the validation case is compared.
pub const VALIDATION_TIMES: [f64; 5] = [100.0, 500.0, 1000.0, 5000.0, 10000.0];

/// Reference peak fields (kV/mm) of the validation case at [`VALIDATION_TIMES`].
pub const VALIDATION_EMAX_KV_MM: [f64; 5] = [27.45, 26.96, 27.15, 29.83, 33.50];

/// Published peaks of the earlier model the reference was itself checked against.
pub const VALIDATION_LITERATURE_KV_MM: [f64; 5] = [27.80, 27.30, 27.30, 29.10, 32.70];

/// Relative tolerance of the validation comparison.
pub const VALIDATION_TOLERANCE: f64 = 0.03;

/// 90-kV cable with 4.5 mm of insulation, 65 °C inner and 45 °C outer.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationCase {
    pub geometry: Geometry,
    pub params: BctParams,
    pub program: LoadProgram,
    pub nodes: usize,
}

/// Conductor radius of the validation cable. Not part of the published case
/// description; chosen together with the unreported transport parameters.
pub const VALIDATION_R_INNER: f64 = 3.85e-3;

impl ValidationCase {
    pub fn new(nodes: usize) -> Result<Self> {
        let geometry = Geometry::cylindrical(VALIDATION_R_INNER, VALIDATION_R_INNER + 4.5e-3, 2.3)?;
        let program = LoadProgram::constant(10_000.0, 90e3, celsius(65.0), celsius(45.0))?;
        Ok(Self {
            geometry,
            params: BctParams::ldpe_literature(),
            program,
            nodes,
        })
    }

    pub fn t_end(&self) -> f64 {
        self.program.duration()
    }
}

/// 500-kV DC-XLPE cable: 2000 mm² copper conductor, 2 mm inner semicon,
/// 28.1 mm insulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseStudyCable {
    pub geometry: Geometry,
    pub rated_voltage: f64,
    /// Conductor design temperature (K).
    pub design_temperature: f64,
    /// Ambient temperature (K).
    pub ambient: f64,
}

pub const CONDUCTOR_AREA_MM2: f64 = 2000.0;
pub const INNER_SEMICON: f64 = 2.0e-3;
pub const INSULATION_THICKNESS: f64 = 28.1e-3;

impl CaseStudyCable {
    pub fn new() -> Self {
        let r_conductor = (CONDUCTOR_AREA_MM2 / std::f64::consts::PI).sqrt() * 1e-3;
        let r_inner = r_conductor + INNER_SEMICON;
        Self {
            geometry: Geometry::cylindrical(r_inner, r_inner + INSULATION_THICKNESS, 2.3).expect("valid geometry"),
            rated_voltage: 500e3,
            design_temperature: celsius(70.0),
            ambient: celsius(20.0),
        }
    }
}

impl Default for CaseStudyCable {
    fn default() -> Self {
        Self::new()
    }
}

/// Shape of a synthesized heating/cooling load cycle.
///
/// The conductor (inner insulation) temperature rises from ambient towards
/// `t_max` with time constant `tau_heat`, reaching it after `ramp` and holding
/// it until the current is switched off at `heating`. While loaded the
/// insulation carries the drop `delta_t` scaled with the conductor rise.
/// Cooling is exponential with `tau_cool`, arriving at ambient exactly at the
/// end of the cycle; the radial drop decays with `tau_gradient`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleShape {
    pub duration: f64,
    pub heating: f64,
    pub ramp: f64,
    pub tau_heat: f64,
    pub tau_cool: f64,
    pub tau_gradient: f64,
    pub ambient: f64,
    pub t_max: f64,
    pub delta_t: f64,
    /// Sampling interval of the generated program.
    pub sample: f64,
}

impl CycleShape {
    /// 8 h heating, 16 h cooling.
    pub fn tt_24h(ambient: f64, t_max: f64, delta_t: f64) -> Self {
        Self {
            duration: 24.0 * HOUR,
            heating: 8.0 * HOUR,
            ramp: 6.0 * HOUR,
            tau_heat: 2.0 * HOUR,
            tau_cool: 5.0 * HOUR,
            tau_gradient: HOUR,
            ambient,
            t_max,
            delta_t,
            sample: 0.25 * HOUR,
        }
    }

    /// 24 h heating, 24 h cooling.
    pub fn tt_48h(ambient: f64, t_max: f64, delta_t: f64) -> Self {
        Self {
            duration: 48.0 * HOUR,
            heating: 24.0 * HOUR,
            ..Self::tt_24h(ambient, t_max, delta_t)
        }
    }

    /// Electrode temperatures (inner, outer) at time `t` into the cycle.
    pub fn temperatures(&self, t: f64) -> (f64, f64) {
        let rise = self.t_max - self.ambient;
        if t <= self.heating {
            let frac = ((1.0 - (-t / self.tau_heat).exp()) / (1.0 - (-self.ramp / self.tau_heat).exp())).min(1.0);
            let inner = self.ambient + rise * frac;
            (inner, inner - self.delta_t * frac)
        } else {
            let s = t - self.heating;
            let span = self.duration - self.heating;
            let tail = (-span / self.tau_cool).exp();
            let frac = (((-s / self.tau_cool).exp() - tail) / (1.0 - tail)).max(0.0);
            let inner = self.ambient + rise * frac;
            let outer = (inner - self.delta_t * (-s / self.tau_gradient).exp()).max(self.ambient);
            (inner, outer.min(inner))
        }
    }

    /// Load program at constant voltage `u`.
    pub fn program(&self, u: f64, label: &str) -> Result<LoadProgram> {
        if !(self.heating > 0.0 && self.heating < self.duration && self.sample > 0.0) {
            return Err(Error::invalid("inconsistent load-cycle shape"));
        }
        let steps = (self.duration / self.sample).round() as usize;
        let mut times: Vec<f64> = (0..=steps).map(|k| self.duration * k as f64 / steps as f64).collect();
        // keep the switch-off instant as an exact knot
        if !times.iter().any(|t| (t - self.heating).abs() < 1e-9) {
            times.push(self.heating);
            times.sort_by(f64::total_cmp);
        }
        let samples = times
            .into_iter()
            .map(|t| {
                let (t_inner, t_outer) = self.temperatures(t);
                LoadSample {
                    t,
                    voltage: u,
                    t_inner,
                    t_outer,
                }
            })
            .collect();
        LoadProgram::new(
            samples,
            vec![CycleBoundary {
                t_start: 0.0,
                t_end: self.duration,
                label: label.into(),
            }],
        )
    }
}

/// Temperature drop across the case-study insulation at full load (K).
pub const CASE_STUDY_DELTA_T: f64 = 10.0;

/// Type Test voltage as a multiple of the rated voltage.
pub const TT_VOLTAGE_FACTOR: f64 = 1.85;

/// Synthesized 24-h and 48-h Type Test cycles for the case-study cable at voltage `u`.
pub fn case_study_cycles(cable: &CaseStudyCable, u: f64) -> Result<(LoadProgram, LoadProgram)> {
    let c24 = CycleShape::tt_24h(cable.ambient, cable.design_temperature, CASE_STUDY_DELTA_T);
    let c48 = CycleShape::tt_48h(cable.ambient, cable.design_temperature, CASE_STUDY_DELTA_T);
    Ok((c24.program(u, "24h")?, c48.program(u, "48h")?))
}
