//! Pulsed electro-acoustic space charge measurements and identification of
//! transport parameters against them.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

mod fit;
mod report;
mod superpose;
mod synth;

pub use fit::{
    draw_starts, fit_cost, fit_global, fit_local, residuals, Bound, FitBounds, FitParam, FitResult, GlobalFit,
    Progress, SimConfig, FIT_STEP_BUDGET,
};
pub use report::{write_fit_report, ReportRow};
pub use superpose::{surface_charges, surface_superposition, SurfaceCharges};
pub use synth::{synthesize, PeaCondition, REFERENCE_CONDITIONS};

/// Number of positions measurements are resampled to across the thickness.
pub const PEA_POINTS: usize = 50;

/// Column names of the data rows.
pub const PEA_COLUMNS: [&str; 3] = ["t_s", "x_m", "rho_C_per_m3"];

/// Charge density pattern of a flat specimen under constant field and temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeaMeasurement {
    /// Depth from the electrode at x = 0 (m), uniform over `[0, thickness]`.
    pub positions: Vec<f64>,
    /// Measurement instants (s), strictly increasing.
    pub times: Vec<f64>,
    /// Net charge density per time and position (C/m³).
    pub rho: Vec<Vec<f64>>,
    /// Mean applied field (V/m); the sign gives the polarity of the x = 0 electrode.
    pub e_mean: f64,
    /// Specimen temperature (K).
    pub temperature: f64,
    /// Specimen thickness (m).
    pub thickness: f64,
}

impl PeaMeasurement {
    pub fn validate(&self) -> Result<()> {
        if !(self.thickness > 0.0) || !(self.temperature > 0.0) || !self.e_mean.is_finite() {
            return Err(Error::validation(
                "thickness and temperature must be positive and E_mean finite",
            ));
        }
        if self.positions.len() < 2 || self.times.is_empty() {
            return Err(Error::validation(
                "measurement needs at least two positions and one time",
            ));
        }
        if self.positions.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::validation("positions must be strictly increasing"));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) || !(self.times[0] >= 0.0) {
            return Err(Error::validation("times must be non-negative and strictly increasing"));
        }
        let tol = 1e-9 * self.thickness;
        if self.positions[0].abs() > tol || (self.positions[self.positions.len() - 1] - self.thickness).abs() > tol {
            return Err(Error::validation("positions must span [0, thickness]"));
        }
        if self.rho.len() != self.times.len() || self.rho.iter().any(|r| r.len() != self.positions.len()) {
            return Err(Error::validation("charge grid does not match times × positions"));
        }
        if self.rho.iter().flatten().any(|r| !r.is_finite()) {
            return Err(Error::validation("charge grid contains non-finite values"));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Parses the text format, resampling every profile onto [`PEA_POINTS`]
    /// uniform positions.
    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let mut thickness = None;
        let mut e_mean = None;
        let mut temperature = None;
        let mut profiles: Vec<(f64, Vec<(f64, f64)>)> = Vec::new();
        let mut seen_any = false;
        for (k, line) in BufReader::new(reader).lines().enumerate() {
            let line_no = k as u64 + 1;
            let line = line?;
            let text = line.trim();
            if text.is_empty() {
                continue;
            }
            seen_any = true;
            if let Some(header) = text.strip_prefix('#') {
                let Some((key, value)) = header.split_once('=') else {
                    continue;
                };
                let column = (line.find('=').unwrap_or(0) + 2) as u64;
                let value: f64 = value.trim().parse().map_err(|_| Error::Parse {
                    line: line_no,
                    column,
                    message: format!("cannot read {:?} as a number", value.trim()),
                })?;
                match key.trim() {
                    "thickness_m" => thickness = Some(value),
                    "E_mean_V_per_m" => e_mean = Some(value),
                    "T_K" => temperature = Some(value),
                    _ => {}
                }
                continue;
            }
            let fields: Vec<&str> = text.split(',').map(str::trim).collect();
            if fields == PEA_COLUMNS {
                continue;
            }
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line: line_no,
                    column: 1,
                    message: format!("expected 3 fields ({}), found {}", PEA_COLUMNS.join(","), fields.len()),
                });
            }
            let mut values = [0.0; 3];
            let mut column = 1u64;
            for (j, f) in fields.iter().enumerate() {
                values[j] = f.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    column,
                    message: format!("cannot read {f:?} as a number"),
                })?;
                column += f.len() as u64 + 1;
            }
            let [t, x, rho] = values;
            match profiles.last_mut() {
                Some((last_t, rows)) if *last_t == t => {
                    if !(x > rows[rows.len() - 1].0) {
                        return Err(Error::validation(format!(
                            "line {line_no}: positions at t = {t} s are not strictly increasing"
                        )));
                    }
                    rows.push((x, rho));
                }
                Some((last_t, _)) if t <= *last_t => {
                    return Err(Error::validation(format!(
                        "line {line_no}: time {t} s repeats or goes backwards"
                    )));
                }
                _ => profiles.push((t, vec![(x, rho)])),
            }
        }
        if !seen_any {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: "empty measurement file".into(),
            });
        }
        let missing = |name: &str| Error::Parse {
            line: 1,
            column: 1,
            message: format!("missing header `# {name}=`"),
        };
        let thickness = thickness.ok_or_else(|| missing("thickness_m"))?;
        let e_mean = e_mean.ok_or_else(|| missing("E_mean_V_per_m"))?;
        let temperature = temperature.ok_or_else(|| missing("T_K"))?;
        if profiles.is_empty() {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: "measurement file has no data rows".into(),
            });
        }
        if !(thickness > 0.0) {
            return Err(Error::validation("thickness must be positive"));
        }
        let positions: Vec<f64> = (0..PEA_POINTS)
            .map(|i| thickness * i as f64 / (PEA_POINTS - 1) as f64)
            .collect();
        let mut times = Vec::with_capacity(profiles.len());
        let mut rho = Vec::with_capacity(profiles.len());
        for (t, rows) in profiles {
            let (x_first, x_last) = (rows[0].0, rows[rows.len() - 1].0);
            let tol = 0.01 * thickness;
            if rows.len() < 2 || x_first > tol || x_last < thickness - tol {
                return Err(Error::validation(format!(
                    "profile at t = {t} s does not span the specimen thickness"
                )));
            }
            times.push(t);
            rho.push(positions.iter().map(|x| interpolate(&rows, *x)).collect());
        }
        let m = Self {
            positions,
            times,
            rho,
            e_mean,
            temperature,
            thickness,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(std::fs::File::open(path)?)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# thickness_m={:e}", self.thickness)?;
        writeln!(w, "# E_mean_V_per_m={:e}", self.e_mean)?;
        writeln!(w, "# T_K={}", self.temperature)?;
        writeln!(w, "{}", PEA_COLUMNS.join(","))?;
        for (t, row) in self.times.iter().zip(&self.rho) {
            for (x, r) in self.positions.iter().zip(row) {
                writeln!(w, "{t},{x:e},{r:e}")?;
            }
        }
        Ok(())
    }
}

/// Linear interpolation in sorted `(x, y)` rows, holding the end values outside.
fn interpolate(rows: &[(f64, f64)], x: f64) -> f64 {
    let k = rows.partition_point(|r| r.0 <= x);
    if k == 0 {
        return rows[0].1;
    }
    if k == rows.len() {
        return rows[rows.len() - 1].1;
    }
    let (a, b) = (rows[k - 1], rows[k]);
    a.1 + (x - a.0) / (b.0 - a.0) * (b.1 - a.1)
}

/// Linear resampling of `values` given on `from` onto `to`.
pub(crate) fn resample(from: &[f64], values: &[f64], to: &[f64]) -> Vec<f64> {
    let rows: Vec<(f64, f64)> = from.iter().copied().zip(values.iter().copied()).collect();
    to.iter().map(|x| interpolate(&rows, *x)).collect()
}
