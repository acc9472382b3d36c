//! Electrode surface charges that a PEA measurement sees but the transport
//! model does not carry.

use crate::error::{Error, Result};
use crate::geometry::{GeometryKind, RadialMesh};

/// Surface charge densities (C/m²) on the electrodes at x = 0 and x = L.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceCharges {
    pub capacitive_first: f64,
    pub capacitive_last: f64,
    pub image_first: f64,
    pub image_last: f64,
}

/// Capacitive charges ±ε·E_mean and the image charges of the bulk charge
/// `rho`, integrated over the control volumes of `mesh`.
pub fn surface_charges(rho: &[f64], mesh: &RadialMesh, e_mean: f64, epsilon: f64) -> Result<SurfaceCharges> {
    if mesh.geometry.kind != GeometryKind::Planar {
        return Err(Error::invalid("surface superposition needs a planar mesh"));
    }
    if rho.len() != mesh.len() {
        return Err(Error::invalid("charge profile does not match the mesh"));
    }
    let x0 = mesh.nodes[0];
    let thickness = mesh.geometry.thickness();
    let volumes = mesh.control_volumes();
    let mut near_first = 0.0;
    let mut near_last = 0.0;
    for ((r, x), dx) in rho.iter().zip(&mesh.nodes).zip(&volumes) {
        let s = x - x0;
        near_first += r * (thickness - s) * dx;
        near_last += r * s * dx;
    }
    Ok(SurfaceCharges {
        capacitive_first: epsilon * e_mean,
        capacitive_last: -epsilon * e_mean,
        image_first: -near_first / thickness,
        image_last: -near_last / thickness,
    })
}

/// Adds the electrode surface charges to the bulk profile as volume densities
/// in the two electrode cells.
pub fn surface_superposition(rho: &[f64], mesh: &RadialMesh, e_mean: f64, epsilon: f64) -> Result<Vec<f64>> {
    let s = surface_charges(rho, mesh, e_mean, epsilon)?;
    let volumes = mesh.control_volumes();
    let n = rho.len();
    let mut out = rho.to_vec();
    out[0] += (s.capacitive_first + s.image_first) / volumes[0];
    out[n - 1] += (s.capacitive_last + s.image_last) / volumes[n - 1];
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::VACUUM_PERMITTIVITY as EPSILON_0;
    use crate::geometry::{build_mesh, Geometry};
    use proptest::prelude::*;

    fn mesh(n: usize) -> RadialMesh {
        build_mesh(Geometry::planar(200e-6, 2.3).unwrap(), n).unwrap()
    }

    #[test]
    fn capacitive_charge_of_uncharged_specimen() {
        let m = mesh(50);
        let eps = 2.3 * EPSILON_0;
        let s = surface_charges(&vec![0.0; 50], &m, 4e7, eps).unwrap();
        assert!((s.capacitive_first - 8.146e-4).abs() < 1e-7);
        assert_eq!(s.capacitive_last, -s.capacitive_first);
        assert_eq!((s.image_first, s.image_last), (0.0, 0.0));
        let zero = surface_superposition(&vec![0.0; 50], &m, 0.0, eps).unwrap();
        assert!(zero.iter().all(|r| *r == 0.0));
    }

    #[test]
    fn midplane_slab_images_split_evenly() {
        let m = mesh(51);
        let mut rho = vec![0.0; 51];
        rho[25] = 3.0;
        let dx = m.control_volumes()[25];
        let s = surface_charges(&rho, &m, 0.0, 1.0).unwrap();
        assert!((s.image_first + 1.5 * dx).abs() < 1e-18);
        assert!((s.image_last + 1.5 * dx).abs() < 1e-18);
    }

    #[test]
    fn rejects_cylindrical_mesh() {
        let m = build_mesh(Geometry::cylindrical(0.01, 0.02, 2.3).unwrap(), 10).unwrap();
        assert!(surface_superposition(&[0.0; 10], &m, 1e7, 1e-11).is_err());
    }

    proptest! {
        #[test]
        fn superposed_system_is_neutral(rho in prop::collection::vec(-50.0f64..50.0, 30), e in -5e7f64..5e7) {
            let m = mesh(30);
            let eps = 2.3 * EPSILON_0;
            let out = surface_superposition(&rho, &m, e, eps).unwrap();
            let vols = m.control_volumes();
            let total: f64 = out.iter().zip(&vols).map(|(r, v)| r * v).sum();
            let scale = rho.iter().zip(&vols).map(|(r, v)| (r * v).abs()).sum::<f64>() + eps * e.abs();
            prop_assert!(total.abs() <= 1e-9 * scale.max(f64::MIN_POSITIVE));
        }
    }
}
