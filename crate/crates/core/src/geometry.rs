//! Insulation geometry, the 1D mesh across it, and the quasi-steady radial
//! temperature profile.

use serde::{Deserialize, Serialize};

use crate::constants::VACUUM_PERMITTIVITY;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryKind {
    Cylindrical,
    Planar,
}

/// Insulation layer between two electrodes.
///
/// For a planar specimen `r_inner` is 0 and `r_outer` is the thickness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub kind: GeometryKind,
    pub r_inner: f64,
    pub r_outer: f64,
    pub epsilon_r: f64,
}

impl Geometry {
    pub fn cylindrical(r_inner: f64, r_outer: f64, epsilon_r: f64) -> Result<Self> {
        let g = Self {
            kind: GeometryKind::Cylindrical,
            r_inner,
            r_outer,
            epsilon_r,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn planar(thickness: f64, epsilon_r: f64) -> Result<Self> {
        let g = Self {
            kind: GeometryKind::Planar,
            r_inner: 0.0,
            r_outer: thickness,
            epsilon_r,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon_r > 1.0) || !self.epsilon_r.is_finite() {
            return Err(Error::invalid(format!(
                "relative permittivity must exceed 1, got {}",
                self.epsilon_r
            )));
        }
        let ok = match self.kind {
            GeometryKind::Cylindrical => self.r_inner > 0.0 && self.r_outer > self.r_inner,
            GeometryKind::Planar => self.r_inner >= 0.0 && self.r_outer > self.r_inner,
        };
        if !ok || !self.r_outer.is_finite() {
            return Err(Error::invalid(format!(
                "bad {:?} radii: inner {} outer {}",
                self.kind, self.r_inner, self.r_outer
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn thickness(&self) -> f64 {
        self.r_outer - self.r_inner
    }

    /// Absolute permittivity ε0·εr in F/m.
    #[inline]
    pub fn permittivity(&self) -> f64 {
        VACUUM_PERMITTIVITY * self.epsilon_r
    }

    /// Metric factor of the 1D divergence: r for cylinders, 1 for slabs.
    #[inline]
    pub fn metric(&self, r: f64) -> f64 {
        match self.kind {
            GeometryKind::Cylindrical => r,
            GeometryKind::Planar => 1.0,
        }
    }

    /// ∫ metric dr over [a, b].
    #[inline]
    pub fn metric_integral(&self, a: f64, b: f64) -> f64 {
        match self.kind {
            GeometryKind::Cylindrical => 0.5 * (b * b - a * a),
            GeometryKind::Planar => b - a,
        }
    }

    /// Position expressed as a fraction of the insulation thickness.
    #[inline]
    pub fn thickness_fraction(&self, r: f64) -> f64 {
        (r - self.r_inner) / self.thickness()
    }
}

/// Uniform node set spanning the insulation, electrodes included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialMesh {
    pub geometry: Geometry,
    pub nodes: Vec<f64>,
    pub spacing: Vec<f64>,
}

/// Builds `n` uniformly spaced nodes over `[r_inner, r_outer]`.
pub fn build_mesh(geometry: Geometry, n: usize) -> Result<RadialMesh> {
    geometry.validate()?;
    if n < 3 {
        return Err(Error::invalid(format!("mesh needs at least 3 nodes, got {n}")));
    }
    let h = geometry.thickness() / (n - 1) as f64;
    let mut nodes: Vec<f64> = (0..n).map(|i| geometry.r_inner + i as f64 * h).collect();
    // pin the far electrode exactly
    nodes[n - 1] = geometry.r_outer;
    let spacing = nodes.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(RadialMesh {
        geometry,
        nodes,
        spacing,
    })
}

impl RadialMesh {
    #[inline]
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Finite-volume cell measure (∫ metric dr) around each node; the two
    /// electrode nodes own half cells.
    pub fn control_volumes(&self) -> Vec<f64> {
        let n = self.len();
        let g = &self.geometry;
        (0..n)
            .map(|i| {
                let lo = if i == 0 {
                    self.nodes[0]
                } else {
                    0.5 * (self.nodes[i - 1] + self.nodes[i])
                };
                let hi = if i == n - 1 {
                    self.nodes[n - 1]
                } else {
                    0.5 * (self.nodes[i] + self.nodes[i + 1])
                };
                g.metric_integral(lo, hi)
            })
            .collect()
    }

    /// Plain 1D cell widths (half widths at the electrodes).
    pub fn cell_widths(&self) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let left = if i == 0 { 0.0 } else { 0.5 * self.spacing[i - 1] };
                let right = if i == n - 1 { 0.0 } else { 0.5 * self.spacing[i] };
                left + right
            })
            .collect()
    }

    /// Temperature at every node for the given electrode temperatures.
    pub fn temperature_profile(&self, t_inner: f64, t_outer: f64) -> Vec<f64> {
        self.nodes
            .iter()
            .map(|&r| profile_unchecked(t_inner, t_outer, &self.geometry, r))
            .collect()
    }
}

/// Quasi-steady temperature at radius `r` from the electrode temperatures
/// (thermal Ohm's law: logarithmic in cylinders, linear in slabs).
pub fn temperature_at(t_inner: f64, t_outer: f64, geometry: &Geometry, r: f64) -> Result<f64> {
    let tol = 1e-12 * geometry.r_outer.abs().max(1.0);
    if !(r >= geometry.r_inner - tol && r <= geometry.r_outer + tol) {
        return Err(Error::invalid(format!(
            "radius {r} outside insulation [{}, {}]",
            geometry.r_inner, geometry.r_outer
        )));
    }
    Ok(profile_unchecked(t_inner, t_outer, geometry, r))
}

fn profile_unchecked(t_inner: f64, t_outer: f64, g: &Geometry, r: f64) -> f64 {
    let frac = match g.kind {
        GeometryKind::Cylindrical => (r / g.r_inner).ln() / (g.r_outer / g.r_inner).ln(),
        GeometryKind::Planar => (r - g.r_inner) / g.thickness(),
    };
    t_inner - (t_inner - t_outer) * frac
}
