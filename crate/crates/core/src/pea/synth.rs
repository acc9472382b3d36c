//! Synthetic measurements generated by the transport model itself.

use crate::constants::celsius;
use crate::error::{Error, Result};
use crate::params::BctParams;

use super::fit::{simulate_specimen, SimConfig};
use super::{PeaMeasurement, PEA_POINTS};

/// Poling condition of a flat specimen.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PeaCondition {
    /// Mean field (V/m), signed.
    pub e_mean: f64,
    /// Temperature (K).
    pub temperature: f64,
}

/// −30, +30 and +40 kV/mm at 20 °C and +40 kV/mm at 50 °C.
pub const REFERENCE_CONDITIONS: [(f64, f64); 4] = [(-30e6, 20.0), (30e6, 20.0), (40e6, 20.0), (40e6, 50.0)];

impl PeaCondition {
    pub fn reference_set() -> Vec<Self> {
        REFERENCE_CONDITIONS
            .iter()
            .map(|(e, t)| Self {
                e_mean: *e,
                temperature: celsius(*t),
            })
            .collect()
    }
}

/// Noiseless measurements of a `thickness` specimen under each condition.
pub fn synthesize(
    params: &BctParams,
    conditions: &[PeaCondition],
    thickness: f64,
    times: &[f64],
    cfg: &SimConfig,
) -> Result<Vec<PeaMeasurement>> {
    if times.is_empty() || times.windows(2).any(|w| !(w[1] > w[0])) || !(times[0] >= 0.0) {
        return Err(Error::invalid(
            "measurement times must be non-negative and strictly increasing",
        ));
    }
    conditions
        .iter()
        .map(|c| {
            let rho = simulate_specimen(params, thickness, c.e_mean, c.temperature, times, cfg)?;
            let m = PeaMeasurement {
                positions: (0..PEA_POINTS)
                    .map(|i| thickness * i as f64 / (PEA_POINTS - 1) as f64)
                    .collect(),
                times: times.to_vec(),
                rho,
                e_mean: c.e_mean,
                temperature: c.temperature,
                thickness,
            };
            m.validate()?;
            Ok(m)
        })
        .collect()
}
