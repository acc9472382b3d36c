//! Electric field solvers: Poisson under a voltage constraint, the Laplacian
//! reference, and the conductivity-based (macroscopic) transient model.

pub mod klein;
pub mod macroscopic;
pub mod poisson;
pub mod ratio;

use serde::{Deserialize, Serialize};

pub use klein::{klein_conductivity, KleinParams};
pub use macroscopic::{macroscopic_transient, MacroOptions, MacroSolution};
pub use poisson::{laplacian_field, poisson_field, voltage_weights};
pub use ratio::diffusion_drift_ratio;

use crate::geometry::RadialMesh;

/// Signed radial field per node (V/m) at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldProfile {
    pub e: Vec<f64>,
    pub u_applied: f64,
    pub t: f64,
}

impl FieldProfile {
    /// Largest field magnitude and its node index.
    pub fn max_abs(&self) -> (f64, usize) {
        self.e.iter().enumerate().fold(
            (0.0, 0),
            |(m, k), (i, v)| if v.abs() > m { (v.abs(), i) } else { (m, k) },
        )
    }

    /// Node-field trapezoid of ∫E dr. Differs from the exact constraint used
    /// by the solvers by O(h²).
    pub fn trapezoid_voltage(&self, mesh: &RadialMesh) -> f64 {
        mesh.spacing
            .iter()
            .enumerate()
            .map(|(i, h)| 0.5 * h * (self.e[i] + self.e[i + 1]))
            .sum()
    }
}
