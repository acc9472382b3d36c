//! Electrostatics of the 1D insulation layer under a fixed applied voltage.
//!
//! The net charge is taken piecewise linear between nodes. Gauss's law is
//! integrated exactly node to node, and the integration constant is fixed so
//! that the exact line integral of the field equals the applied voltage. This
//! makes the charge-free solution coincide with the closed-form Laplacian
//! field to rounding, in both geometries.

use crate::geometry::{Geometry, GeometryKind, RadialMesh};

use super::FieldProfile;

/// Charge-free field: U/(r·ln(ro/ri)) in a cylinder, U/d in a slab.
pub fn laplacian_field(geometry: &Geometry, voltage: f64, mesh: &RadialMesh) -> FieldProfile {
    let e = match geometry.kind {
        GeometryKind::Cylindrical => {
            let log_ratio = (geometry.r_outer / geometry.r_inner).ln();
            mesh.nodes.iter().map(|r| voltage / (r * log_ratio)).collect()
        }
        GeometryKind::Planar => vec![voltage / geometry.thickness(); mesh.len()],
    };
    FieldProfile {
        e,
        u_applied: voltage,
        t: 0.0,
    }
}

/// Field from Gauss's law ∇·(εE) = ρ with ∫E dr = `voltage`.
pub fn poisson_field(mesh: &RadialMesh, rho_net: &[f64], voltage: f64, epsilon: f64) -> FieldProfile {
    let mut e = vec![0.0; mesh.len()];
    poisson_into(mesh, rho_net, voltage, epsilon, &mut e);
    FieldProfile {
        e,
        u_applied: voltage,
        t: 0.0,
    }
}

/// Allocation-free variant used inside the time loops. `out` receives the
/// node fields; its length must match the mesh.
pub fn poisson_into(mesh: &RadialMesh, rho: &[f64], voltage: f64, epsilon: f64, out: &mut [f64]) {
    let n = mesh.len();
    debug_assert_eq!(rho.len(), n);
    debug_assert_eq!(out.len(), n);
    let x = &mesh.nodes;
    match mesh.geometry.kind {
        GeometryKind::Cylindrical => {
            // out[i] temporarily holds the enclosed charge G(r_i) = ∫ s·ρ(s) ds
            let mut enclosed = 0.0;
            let mut v_charge = 0.0;
            out[0] = 0.0;
            for i in 0..n - 1 {
                let (a, b) = (x[i], x[i + 1]);
                let h = b - a;
                let (ra, rb) = (rho[i], rho[i + 1]);
                let k = (rb - ra) / h;
                // G(a + t) = G(a) + a·ρa·t + (ρa + a·k)·t²/2 + k·t³/3
                let c0 = enclosed;
                let c1 = a * ra;
                let c2 = 0.5 * (ra + a * k);
                let c3 = k / 3.0;
                // synthetic division of the cubic by (t + a)
                let q2 = c3;
                let q1 = c2 - a * q2;
                let q0 = c1 - a * q1;
                let rem = c0 - a * q0;
                v_charge += rem * (h / a).ln_1p() + h * (q0 + h * (0.5 * q1 + h * q2 / 3.0));
                enclosed += h / 6.0 * (2.0 * a * ra + a * rb + b * ra + 2.0 * b * rb);
                out[i + 1] = enclosed;
            }
            let log_ratio = (x[n - 1] / x[0]).ln();
            let c = (voltage - v_charge / epsilon) / log_ratio;
            for i in 0..n {
                out[i] = (c + out[i] / epsilon) / x[i];
            }
        }
        GeometryKind::Planar => {
            let mut enclosed = 0.0;
            let mut v_charge = 0.0;
            out[0] = 0.0;
            for i in 0..n - 1 {
                let h = x[i + 1] - x[i];
                let (ra, rb) = (rho[i], rho[i + 1]);
                v_charge += enclosed * h + h * h * (2.0 * ra + rb) / 6.0;
                enclosed += 0.5 * h * (ra + rb);
                out[i + 1] = enclosed;
            }
            let c = (voltage - v_charge / epsilon) / (x[n - 1] - x[0]);
            for v in out.iter_mut() {
                *v = c + *v / epsilon;
            }
        }
    }
}

/// Quadrature weights `w` such that Σ wᵢ·Dᵢ is the exact line integral ∫E dr
/// when D = metric·E varies linearly between nodes.
pub fn voltage_weights(mesh: &RadialMesh) -> Vec<f64> {
    let n = mesh.len();
    let x = &mesh.nodes;
    let mut w = vec![0.0; n];
    for i in 0..n - 1 {
        let (a, b) = (x[i], x[i + 1]);
        let h = b - a;
        match mesh.geometry.kind {
            GeometryKind::Cylindrical => {
                let l = (h / a).ln_1p();
                let right = 1.0 - (a / h) * l;
                w[i] += l - right;
                w[i + 1] += right;
            }
            GeometryKind::Planar => {
                w[i] += 0.5 * h;
                w[i + 1] += 0.5 * h;
            }
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, Geometry};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn planar(n: usize) -> RadialMesh {
        build_mesh(Geometry::planar(200e-6, 2.3).unwrap(), n).unwrap()
    }

    fn cable(n: usize) -> RadialMesh {
        build_mesh(Geometry::cylindrical(0.010, 0.0145, 2.3).unwrap(), n).unwrap()
    }

    #[test]
    fn laplacian_examples() {
        let m = planar(50);
        let f = laplacian_field(&m.geometry, 8e3, &m);
        for e in &f.e {
            assert_relative_eq!(*e, 40e6, max_relative = 1e-12);
        }
        let m = cable(100);
        let f = laplacian_field(&m.geometry, 90e3, &m);
        let expected = 90e3 / (0.010 * 1.45f64.ln());
        assert_relative_eq!(f.e[0], expected, max_relative = 1e-14);
        assert!((f.e[0] / 1e6 - 24.2).abs() < 0.05);
        assert!(laplacian_field(&m.geometry, 0.0, &m).e.iter().all(|e| *e == 0.0));
    }

    #[test]
    fn charge_free_poisson_is_laplacian() {
        for m in [planar(50), cable(100), cable(7)] {
            let eps = m.geometry.permittivity();
            let f = poisson_field(&m, &vec![0.0; m.len()], 90e3, eps);
            let l = laplacian_field(&m.geometry, 90e3, &m);
            for (a, b) in f.e.iter().zip(&l.e) {
                assert_relative_eq!(*a, *b, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn uniform_slab_charge_has_linear_zero_mean_field() {
        let m = planar(41);
        let eps = m.geometry.permittivity();
        let rho = 5.0;
        let f = poisson_field(&m, &vec![rho; m.len()], 0.0, eps);
        let l = m.geometry.thickness();
        for (x, e) in m.nodes.iter().zip(&f.e) {
            let want = rho / eps * (x - l / 2.0);
            assert!((e - want).abs() < 1e-9 * rho / eps * l);
        }
    }

    #[test]
    fn spike_gives_gauss_jump() {
        let m = planar(21);
        let eps = m.geometry.permittivity();
        let dx = m.spacing[0];
        let mut rho = vec![0.0; m.len()];
        rho[10] = 3.0;
        let f = poisson_field(&m, &rho, 0.0, eps);
        // constant on either side of the spike, jump = ρ0·Δx/ε
        for i in 1..10 {
            assert_relative_eq!(f.e[i], f.e[0], max_relative = 1e-12);
        }
        for i in 12..21 {
            assert_relative_eq!(f.e[i], f.e[20], max_relative = 1e-12);
        }
        assert_relative_eq!(f.e[20] - f.e[0], 3.0 * dx / eps, max_relative = 1e-12);
    }

    /// Independent oracle for the voltage constraint: rebuild E(r) from the
    /// enclosed charge with dense Simpson quadrature and integrate it.
    fn dense_voltage(m: &RadialMesh, rho: &[f64], e0: f64, eps: f64) -> f64 {
        let x = &m.nodes;
        let rho_at = |r: f64| {
            let k = x.partition_point(|v| *v <= r).clamp(1, x.len() - 1);
            let (a, b) = (x[k - 1], x[k]);
            rho[k - 1] + (rho[k] - rho[k - 1]) * (r - a) / (b - a)
        };
        let metric = |r: f64| m.geometry.metric(r);
        let sub = 64;
        let mut v = 0.0;
        let mut enclosed = 0.0; // ∫ metric·ρ from x0
        let d0 = metric(x[0]) * e0;
        for k in 0..x.len() - 1 {
            let h = (x[k + 1] - x[k]) / sub as f64;
            for j in 0..sub {
                let a = x[k] + j as f64 * h;
                let field = |r: f64, enc: f64| (d0 + enc / eps) / metric(r);
                let mid = a + 0.5 * h;
                let b = a + h;
                let g = |r: f64| metric(r) * rho_at(r);
                let enc_mid = enclosed + h / 24.0 * (5.0 * g(a) + 8.0 * g(mid) - g(b));
                let enc_b = enclosed + h / 6.0 * (g(a) + 4.0 * g(mid) + g(b));
                v += h / 6.0 * (field(a, enclosed) + 4.0 * field(mid, enc_mid) + field(b, enc_b));
                enclosed = enc_b;
            }
        }
        v
    }

    proptest! {
        #[test]
        fn voltage_constraint_holds(rho in proptest::collection::vec(-50.0f64..50.0, 30), u in -1e5f64..1e5) {
            for m in [planar(30), cable(30)] {
                let eps = m.geometry.permittivity();
                let f = poisson_field(&m, &rho, u, eps);
                let v = dense_voltage(&m, &rho, f.e[0], eps);
                let scale = u.abs().max(f.e.iter().fold(0.0f64, |a, b| a.max(b.abs())) * m.geometry.thickness());
                prop_assert!((v - u).abs() <= 1e-9 * scale, "v = {v}, u = {u}");
            }
        }

        #[test]
        fn poisson_is_linear(
            r1 in proptest::collection::vec(-50.0f64..50.0, 25),
            r2 in proptest::collection::vec(-50.0f64..50.0, 25),
            u1 in -1e5f64..1e5, u2 in -1e5f64..1e5, a in -3.0f64..3.0, b in -3.0f64..3.0,
        ) {
            for m in [planar(25), cable(25)] {
                let eps = m.geometry.permittivity();
                let mix: Vec<f64> = r1.iter().zip(&r2).map(|(x, y)| a * x + b * y).collect();
                let lhs = poisson_field(&m, &mix, a * u1 + b * u2, eps);
                let f1 = poisson_field(&m, &r1, u1, eps);
                let f2 = poisson_field(&m, &r2, u2, eps);
                let rhs: Vec<f64> = f1.e.iter().zip(&f2.e).map(|(x, y)| a * x + b * y).collect();
                let scale = f1.e.iter().chain(&f2.e).fold(1e-30f64, |m, v| m.max(v.abs())) * (a.abs() + b.abs()).max(1e-3);
                for (x, y) in lhs.e.iter().zip(&rhs) {
                    prop_assert!((x - y).abs() <= 1e-9 * scale);
                }
            }
        }

        #[test]
        fn discrete_gauss_law(rho in proptest::collection::vec(-50.0f64..50.0, 40), u in -1e5f64..1e5) {
            let m = cable(40);
            let eps = m.geometry.permittivity();
            let f = poisson_field(&m, &rho, u, eps);
            for i in 0..39 {
                let (a, b) = (m.nodes[i], m.nodes[i + 1]);
                // Simpson is exact for the quadratic r·ρ(r)
                let mid = 0.5 * (a + b);
                let q = (b - a) / 6.0 * (a * rho[i] + 2.0 * mid * (rho[i] + rho[i + 1]) + b * rho[i + 1]);
                let flux = eps * (b * f.e[i + 1] - a * f.e[i]);
                let scale = q.abs().max(eps * b * f.e.iter().fold(0.0f64, |m, v| m.max(v.abs())) * 1e-4);
                prop_assert!((flux - q).abs() <= 1e-9 * scale.max(1e-300));
            }
        }
    }

    #[test]
    fn weights_integrate_laplacian_exactly() {
        let m = cable(60);
        let w = voltage_weights(&m);
        let d = 123.0; // r·E constant
        let v: f64 = w.iter().map(|wi| wi * d).sum();
        assert_relative_eq!(v, d * 1.45f64.ln(), max_relative = 1e-13);
    }
}
