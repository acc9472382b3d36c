//! Fit report laid out like a table of optimised transport parameters.

use std::io::Write;

use crate::constants::ZERO_CELSIUS;
use crate::error::Result;
use crate::params::BctParams;

/// One row: a parameter set and the conditions it was fitted to.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub label: String,
    /// Conditions as (E in V/m, T in K); empty for start values.
    pub conditions: Vec<(f64, f64)>,
    pub params: BctParams,
    pub cost: Option<f64>,
}

const COLUMNS: [&str; 13] = [
    "row",
    "E (kV/mm)",
    "T (°C)",
    "w_ei (eV)",
    "w_hi (eV)",
    "w_tre (eV)",
    "w_trh (eV)",
    "w_mue (eV)",
    "w_muh (eV)",
    "B_e (1/s)",
    "B_h (1/s)",
    "S_base (m³/(s·C))",
    "cost ((C/m³)²)",
];

fn cells(row: &ReportRow) -> Vec<String> {
    let join = |f: &dyn Fn(&(f64, f64)) -> String| {
        if row.conditions.is_empty() {
            "--".to_string()
        } else {
            row.conditions.iter().map(f).collect::<Vec<_>>().join(" ")
        }
    };
    let p = &row.params;
    vec![
        row.label.clone(),
        join(&|c| format!("{:+}", c.0 / 1e6)),
        join(&|c| format!("{}", (c.1 - ZERO_CELSIUS).round())),
        format!("{:.3}", p.w_inj_e),
        format!("{:.3}", p.w_inj_h),
        format!("{:.3}", p.w_tr_e),
        format!("{:.3}", p.w_tr_h),
        format!("{:.4}", p.w_mob_e),
        format!("{:.4}", p.w_mob_h),
        format!("{:.3}", p.b_e),
        format!("{:.3}", p.b_h),
        format!("{:.4}", p.s0_base),
        row.cost.map(|c| format!("{c:.4e}")).unwrap_or_else(|| "--".into()),
    ]
}

/// Writes the rows as a Markdown table.
pub fn write_fit_report<W: Write>(mut w: W, rows: &[ReportRow]) -> Result<()> {
    writeln!(w, "| {} |", COLUMNS.join(" | "))?;
    writeln!(w, "|{}", "---|".repeat(COLUMNS.len()))?;
    for r in rows {
        writeln!(w, "| {} |", cells(r).join(" | "))?;
    }
    Ok(())
}
