//! Delimiter-separated tables of simulation and life results.

use std::io::Write;

use crate::analysis::PeakPoint;
use crate::bct::Snapshot;
use crate::constants::DAY;
use crate::error::{Error, Result};
use crate::field::FieldProfile;
use crate::geometry::RadialMesh;
use crate::life::LifeResult;
use crate::program::csv_error;

pub const FIELD_HEADER: [&str; 4] = ["t_s", "node_index", "r_m", "E_V_per_m"];
pub const SNAPSHOT_HEADER: [&str; 9] = [
    "t_s",
    "node_index",
    "r_m",
    "rho_e_mu",
    "rho_h_mu",
    "rho_e_t",
    "rho_h_t",
    "rho_net",
    "E_V_per_m",
];
pub const LIFE_HEADER: [&str; 7] = [
    "node_index",
    "r_m",
    "thickness_fraction",
    "LF_total",
    "LF_24h",
    "LF_48h",
    "life_days",
];
pub const PEAK_HEADER: [&str; 4] = ["t_s", "E_max_V_per_m", "node_index", "thickness_fraction"];
pub const RATIO_HEADER: [&str; 4] = ["label", "node_index", "r_m", "diffusion_drift_ratio"];

fn writer<W: Write>(w: W, header: &[&str]) -> Result<csv::Writer<W>> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header).map_err(csv_error)?;
    Ok(out)
}

fn finish<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(Error::Io)
}

fn check_len(mesh: &RadialMesh, n: usize) -> Result<()> {
    if n != mesh.len() {
        return Err(Error::invalid(format!(
            "profile has {n} nodes, mesh has {}",
            mesh.len()
        )));
    }
    Ok(())
}

pub fn write_field_table<'a, W: Write>(
    w: W,
    mesh: &RadialMesh,
    profiles: impl IntoIterator<Item = &'a FieldProfile>,
) -> Result<()> {
    let mut out = writer(w, &FIELD_HEADER)?;
    for f in profiles {
        check_len(mesh, f.e.len())?;
        for (i, (r, e)) in mesh.nodes.iter().zip(&f.e).enumerate() {
            out.write_record([f.t.to_string(), i.to_string(), r.to_string(), e.to_string()])
                .map_err(csv_error)?;
        }
    }
    finish(out)
}

pub fn write_snapshot_table<'a, W: Write>(
    w: W,
    mesh: &RadialMesh,
    snapshots: impl IntoIterator<Item = &'a Snapshot>,
) -> Result<()> {
    let mut out = writer(w, &SNAPSHOT_HEADER)?;
    for s in snapshots {
        let st = &s.state;
        check_len(mesh, st.len())?;
        let net = st.net_charge();
        for (i, r) in mesh.nodes.iter().enumerate() {
            out.write_record([
                s.t().to_string(),
                i.to_string(),
                r.to_string(),
                st.rho_e_mu[i].to_string(),
                st.rho_h_mu[i].to_string(),
                st.rho_e_t[i].to_string(),
                st.rho_h_t[i].to_string(),
                net[i].to_string(),
                s.field.e[i].to_string(),
            ])
            .map_err(csv_error)?;
        }
    }
    finish(out)
}

/// Per-node life table; the 24-h and 48-h columns hold the loss accumulated
/// by cycles of those types.
pub fn write_life_table<W: Write>(w: W, result: &LifeResult) -> Result<()> {
    let mut out = writer(w, &LIFE_HEADER)?;
    let lf24 = result.lf_of("24h");
    let lf48 = result.lf_of("48h");
    for i in 0..result.positions.len() {
        out.write_record([
            i.to_string(),
            result.positions[i].to_string(),
            result.thickness_fraction[i].to_string(),
            result.lf_total[i].to_string(),
            lf24[i].to_string(),
            lf48[i].to_string(),
            (result.life[i] / DAY).to_string(),
        ])
        .map_err(csv_error)?;
    }
    finish(out)
}

pub fn write_peak_track<W: Write>(w: W, track: &[PeakPoint]) -> Result<()> {
    let mut out = writer(w, &PEAK_HEADER)?;
    for p in track {
        out.write_record([
            p.t.to_string(),
            p.e_max.to_string(),
            p.node.to_string(),
            p.thickness_fraction.to_string(),
        ])
        .map_err(csv_error)?;
    }
    finish(out)
}

/// Diffusion-to-drift ratio profiles, one block per label.
pub fn write_ratio_table<W: Write>(w: W, mesh: &RadialMesh, profiles: &[(String, Vec<f64>)]) -> Result<()> {
    let mut out = writer(w, &RATIO_HEADER)?;
    for (label, ratio) in profiles {
        check_len(mesh, ratio.len())?;
        for (i, (r, q)) in mesh.nodes.iter().zip(ratio).enumerate() {
            out.write_record([label.clone(), i.to_string(), r.to_string(), q.to_string()])
                .map_err(csv_error)?;
        }
    }
    finish(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, Geometry};

    #[test]
    fn field_table_layout() {
        let m = build_mesh(Geometry::planar(1e-3, 2.3).unwrap(), 3).unwrap();
        let f = FieldProfile {
            e: vec![1.0, 2.0, 3.0],
            u_applied: 0.0,
            t: 5.0,
        };
        let mut buf = Vec::new();
        write_field_table(&mut buf, &m, [&f]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t_s,node_index,r_m,E_V_per_m");
        assert_eq!(lines[2], "5,1,0.0005,2");
        assert_eq!(lines.len(), 4);
        let short = FieldProfile {
            e: vec![1.0],
            u_applied: 0.0,
            t: 0.0,
        };
        assert!(write_field_table(Vec::new(), &m, [&short]).is_err());
    }
}
