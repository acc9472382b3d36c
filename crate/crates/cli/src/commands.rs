//! Subcommand implementations.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use log::info;
use serde::Serialize;

use cablelife_core::analysis::peak_track;
use cablelife_core::bct::simulate_bct;
use cablelife_core::constants::{DAY, HOUR};
use cablelife_core::export::{
    write_field_table, write_life_table, write_peak_track, write_ratio_table, write_snapshot_table,
};
use cablelife_core::field::{diffusion_drift_ratio, MacroOptions};
use cablelife_core::life::{design_field, sample_times, Conservation, LifeAssessment};
use cablelife_core::pea::{
    fit_cost, fit_global, synthesize, write_fit_report, PeaMeasurement, ReportRow, SimConfig, FIT_STEP_BUDGET,
};
use cablelife_core::scenarios::{VALIDATION_EMAX_KV_MM, VALIDATION_LITERATURE_KV_MM, VALIDATION_TOLERANCE};
use cablelife_core::studies::{run_cycle, run_validation, summarize_cycle, switch_off_time, Checklist, CycleSummary};
use cablelife_core::{build_mesh, estimate_life, FieldSource, RadialMesh, SimOptions};

use crate::config::{DesignField, RunConfig};
use crate::manifest::{input_entry, value_hash, Manifest, OutDir};
use crate::CommonArgs;

/// Result of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Completed, but a result is outside its acceptance tolerance.
    Deviation,
}

/// Marks errors that stem from a numerical failure rather than bad input.
#[derive(Debug)]
pub struct SolverFailed(pub String);

impl std::fmt::Display for SolverFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for SolverFailed {}

/// Loaded configuration plus the output directory of one invocation.
struct Run {
    cfg: RunConfig,
    config_text: String,
    args: CommonArgs,
    command: &'static str,
    seed: u64,
    nodes: usize,
    out: OutDir,
    parameters: BTreeMap<String, String>,
}

impl Run {
    fn start(args: &CommonArgs, command: &'static str) -> Result<Self> {
        let (mut cfg, config_text) = RunConfig::load(&args.config)?;
        if let Some(n) = args.nodes {
            cfg.run.nodes = n;
        }
        if let Some(s) = args.seed {
            cfg.run.seed = s;
        }
        cfg.validate()?;
        let out = OutDir::create(&args.out)?;
        Ok(Self {
            seed: cfg.run.seed,
            nodes: cfg.run.nodes,
            cfg,
            config_text,
            args: args.clone(),
            command,
            out,
            parameters: BTreeMap::new(),
        })
    }

    fn record<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.parameters.insert(name.to_string(), value_hash(value)?);
        Ok(())
    }

    fn sim_options(&self) -> SimOptions {
        let base = SimOptions::default();
        SimOptions {
            dt_scale: self.cfg.run.dt_scale,
            max_steps: self.cfg.run.max_steps.unwrap_or(base.max_steps),
            ..base
        }
    }

    fn mesh(&self) -> Result<RadialMesh> {
        Ok(build_mesh(self.cfg.geometry.geometry()?, self.nodes)?)
    }

    /// Field sources selected by `[run] model`, labelled `micro` and `macro`.
    fn sources(&mut self) -> Result<Vec<(&'static str, FieldSource)>> {
        let mut out = Vec::new();
        if self.cfg.run.model.micro() {
            let params = self.cfg.bct.params()?;
            self.record("bct", &params)?;
            out.push((
                "micro",
                FieldSource::Microscopic {
                    params,
                    options: self.sim_options(),
                },
            ));
        }
        if self.cfg.run.model.macro_() {
            let klein = self
                .cfg
                .klein
                .context("[klein] is required for the macroscopic model")?;
            self.record("klein", &klein)?;
            out.push((
                "macro",
                FieldSource::Macroscopic {
                    klein,
                    options: MacroOptions::default(),
                },
            ));
        }
        Ok(out)
    }

    fn finish(mut self, outcome: Outcome) -> Result<Outcome> {
        self.record("run", &self.cfg.run.clone())?;
        self.record("geometry", &self.cfg.geometry.clone())?;
        let inputs = self
            .cfg
            .input_files()
            .iter()
            .map(|p| input_entry(p))
            .collect::<Result<Vec<_>>>()?;
        let mut config = input_entry(&self.args.config)?;
        config.sha256 = crate::manifest::sha256_hex(self.config_text.as_bytes());
        self.out.finish(Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            core_version: cablelife_core::VERSION,
            command: self.command.to_string(),
            seed: self.seed,
            nodes: self.nodes,
            config,
            inputs,
            parameters: self.parameters,
            outputs: Vec::new(),
        })?;
        Ok(outcome)
    }
}

#[derive(Serialize)]
struct ValidationOutput<'a> {
    nodes: usize,
    tolerance: f64,
    max_rel_error: f64,
    rows: &'a [cablelife_core::studies::ValidationRow],
    conservation: Conservation,
    /// Relative change of the final peak field against the 100-node run.
    refinement_delta: Option<f64>,
}

pub fn validate(args: &CommonArgs) -> Result<Outcome> {
    let mut run = Run::start(args, "validate")?;
    let options = run.sim_options();
    let report = run_validation(run.nodes, &options)?;
    let refinement_delta = if run.nodes != 100 {
        let fine = run_validation(100, &options)?;
        Some((report.final_peak() - fine.final_peak()).abs() / fine.final_peak())
    } else {
        None
    };
    println!("validation cable, {} nodes", run.nodes);
    println!(
        "{:>8} {:>12} {:>12} {:>12} {:>9}",
        "t (s)", "ref (kV/mm)", "lit (kV/mm)", "sim (kV/mm)", "error"
    );
    for (row, lit) in report.rows.iter().zip(VALIDATION_LITERATURE_KV_MM) {
        println!(
            "{:>8} {:>12.2} {:>12.2} {:>12.2} {:>8.2}%",
            row.t,
            row.reference,
            lit,
            row.computed,
            100.0 * row.rel_error
        );
    }
    let max = report.max_rel_error();
    println!(
        "max deviation {:.2}% (tolerance {:.0}%)",
        100.0 * max,
        100.0 * VALIDATION_TOLERANCE
    );
    if let Some(d) = refinement_delta {
        println!("final peak differs from the 100-node run by {:.2}%", 100.0 * d);
    }
    run.out.write_with("validation.csv", |w| {
        let mut c = csv::Writer::from_writer(w);
        c.write_record([
            "t_s",
            "reference_kV_per_mm",
            "literature_kV_per_mm",
            "computed_kV_per_mm",
            "rel_error",
        ])?;
        for (row, lit) in report.rows.iter().zip(VALIDATION_LITERATURE_KV_MM) {
            c.write_record([
                row.t.to_string(),
                row.reference.to_string(),
                lit.to_string(),
                row.computed.to_string(),
                row.rel_error.to_string(),
            ])?;
        }
        c.flush()?;
        Ok(())
    })?;
    run.out.write_json(
        "validation.json",
        &ValidationOutput {
            nodes: run.nodes,
            tolerance: VALIDATION_TOLERANCE,
            max_rel_error: max,
            rows: &report.rows,
            conservation: report.conservation,
            refinement_delta,
        },
    )?;
    run.record("references", &VALIDATION_EMAX_KV_MM)?;
    let outcome = if max <= VALIDATION_TOLERANCE {
        Outcome::Success
    } else {
        Outcome::Deviation
    };
    run.finish(outcome)
}

#[derive(Serialize)]
struct ModelSummary {
    model: &'static str,
    summary: CycleSummary,
    conservation: Option<Conservation>,
    /// Largest diffusion-to-drift ratio at the hot and cold states.
    max_diffusion_drift_ratio: Option<BTreeMap<String, f64>>,
}

pub fn simulate(args: &CommonArgs) -> Result<Outcome> {
    let mut run = Run::start(args, "simulate")?;
    let mesh = run.mesh()?;
    let program = run.cfg.program.program(&run.cfg.base_dir, None)?;
    run.record(
        "program",
        &program
            .samples()
            .iter()
            .map(|s| [s.t, s.voltage, s.t_inner, s.t_outer])
            .collect::<Vec<_>>(),
    )?;
    let switch_off = switch_off_time(&program);
    let times = sample_times(program.duration(), run.cfg.run.snapshot_interval_s, &[switch_off])?;
    let mut summaries = Vec::new();
    for (label, source) in run.sources()? {
        info!("simulating {label} model over {:.1} h", program.duration() / HOUR);
        match &source {
            FieldSource::Microscopic { params, options } => {
                let sol = simulate_bct(&mesh, params, &program, program.duration(), &times, options)?;
                let profiles: Vec<_> = sol.snapshots.iter().map(|s| s.field.clone()).collect();
                let summary = summarize_cycle(&mesh, &profiles, switch_off)?;
                let hot = profiles.iter().position(|p| p.t == summary.switch_off).unwrap_or(0);
                let mut ratios = Vec::new();
                for (name, k) in [("hot", hot), ("cold", sol.snapshots.len() - 1)] {
                    let s = &sol.snapshots[k];
                    let lp = program.at(s.t());
                    let temps = mesh.temperature_profile(lp.t_inner, lp.t_outer);
                    ratios.push((
                        name.to_string(),
                        diffusion_drift_ratio(&mesh, &s.state, &s.field, params, &temps)?,
                    ));
                }
                run.out
                    .write_with("micro/field.csv", |w| Ok(write_field_table(w, &mesh, &profiles)?))?;
                run.out.write_with("micro/snapshots.csv", |w| {
                    Ok(write_snapshot_table(w, &mesh, &sol.snapshots)?)
                })?;
                run.out.write_with("micro/peaks.csv", |w| {
                    Ok(write_peak_track(w, &peak_track(&mesh, &profiles))?)
                })?;
                run.out
                    .write_with("micro/ratio.csv", |w| Ok(write_ratio_table(w, &mesh, &ratios)?))?;
                let conservation = Conservation {
                    worst_imbalance: sol.worst_imbalance(&mesh.control_volumes()),
                    clamp_events: sol.ledger.clamp_events,
                    steps: sol.steps,
                };
                summaries.push(ModelSummary {
                    model: label,
                    summary,
                    conservation: Some(conservation),
                    max_diffusion_drift_ratio: Some(
                        ratios
                            .into_iter()
                            .map(|(n, r)| (n, r.into_iter().fold(0.0, f64::max)))
                            .collect(),
                    ),
                });
            }
            FieldSource::Macroscopic { .. } => {
                let study = run_cycle(&source, &mesh, &program, run.cfg.run.snapshot_interval_s)?;
                let profiles = &study.run.profiles;
                run.out
                    .write_with("macro/field.csv", |w| Ok(write_field_table(w, &mesh, profiles)?))?;
                run.out.write_with("macro/peaks.csv", |w| {
                    Ok(write_peak_track(w, &peak_track(&mesh, profiles))?)
                })?;
                summaries.push(ModelSummary {
                    model: label,
                    summary: study.summary,
                    conservation: None,
                    max_diffusion_drift_ratio: None,
                });
            }
        }
    }
    for s in &summaries {
        let m = &s.summary;
        println!(
            "{}: hot peak {:.2} kV/mm at {:.2} of thickness ({}), cold peak {:.2} kV/mm ({}), stabilization {}",
            s.model,
            m.hot_peak.e_max / 1e6,
            m.hot_peak.thickness_fraction,
            m.hot_class,
            m.cold_peak.e_max / 1e6,
            m.cold_class,
            m.stabilization_time
                .map(|t| format!("{:.1} h", t / HOUR))
                .unwrap_or_else(|| "not reached".into())
        );
    }
    run.out.write_json("summary.json", &summaries)?;
    run.finish(Outcome::Success)
}

#[derive(Serialize)]
struct StartRow {
    start: usize,
    cost: f64,
    iterations: usize,
    evaluations: usize,
    converged: bool,
    message: String,
}

pub fn fit(args: &CommonArgs, starts: Option<usize>) -> Result<Outcome> {
    let mut run = Run::start(args, "fit")?;
    let fit_cfg = run.cfg.fit.clone().context("the fit command needs a [fit] section")?;
    let base = run.cfg.bct.params()?;
    let bounds = fit_cfg.bounds(&base)?;
    run.record("bct", &base)?;
    run.record("fit_bounds", &bounds)?;
    let sim = SimConfig {
        nodes: fit_cfg.nodes,
        epsilon_r: run.cfg.geometry.epsilon_r,
        options: SimOptions {
            max_steps: run.cfg.run.max_steps.unwrap_or(FIT_STEP_BUDGET),
            ..run.sim_options()
        },
    };
    let meas: Vec<PeaMeasurement> = match &fit_cfg.synthetic {
        Some(syn) => {
            let m = synthesize(&base, &syn.conditions(), syn.thickness_m, &syn.times()?, &sim)?;
            for (i, x) in m.iter().enumerate() {
                run.out
                    .write_with(&format!("measurements/m{i}.pea"), |w| Ok(x.write(w)?))?;
            }
            m
        }
        None => {
            if fit_cfg.measurements.is_empty() {
                bail!("[fit] lists no measurements and no synthetic block");
            }
            fit_cfg
                .measurements
                .iter()
                .map(|p| {
                    let path = run.cfg.base_dir.join(p);
                    PeaMeasurement::load(&path).with_context(|| format!("reading {}", path.display()))
                })
                .collect::<Result<_>>()?
        }
    };
    let n_starts = starts.unwrap_or(fit_cfg.starts);
    info!(
        "fitting {} parameters to {} measurements from {n_starts} starts",
        bounds.bounds.len(),
        meas.len()
    );
    let global = fit_global(&base, &bounds, n_starts, run.seed, &meas, &sim)?;
    if !global.best.cost.is_finite() {
        return Err(SolverFailed(format!("every start failed; first: {}", global.best.message)).into());
    }
    let conditions: Vec<(f64, f64)> = meas.iter().map(|m| (m.e_mean, m.temperature)).collect();
    let base_cost = fit_cost(&base, &meas, &sim).ok();
    let rows = [
        ReportRow {
            label: "reference".into(),
            conditions: Vec::new(),
            params: base,
            cost: base_cost,
        },
        ReportRow {
            label: "fitted".into(),
            conditions,
            params: global.best.params,
            cost: Some(global.best.cost),
        },
    ];
    run.out
        .write_with("fit_report.md", |w| Ok(write_fit_report(w, &rows)?))?;
    run.out.write_with("starts.csv", |w| {
        let mut c = csv::Writer::from_writer(w);
        for r in &global.all {
            c.serialize(StartRow {
                start: r.start_index,
                cost: r.cost,
                iterations: r.iterations,
                evaluations: r.evaluations,
                converged: r.converged,
                message: r.message.clone(),
            })?;
        }
        c.flush()?;
        Ok(())
    })?;
    run.out.write_with("progress.csv", |w| {
        let mut c = csv::Writer::from_writer(w);
        for p in global.all.iter().flat_map(|r| &r.progress) {
            c.serialize(p)?;
        }
        c.flush()?;
        Ok(())
    })?;
    run.out.write_json("best_params.json", &global.best.params)?;
    run.out.write_json("fit.json", &global)?;
    println!(
        "best start {} cost {:.4e} after {} iterations ({})",
        global.best.start_index, global.best.cost, global.best.iterations, global.best.message
    );
    run.finish(Outcome::Success)
}

#[derive(Serialize)]
struct LifeSummary {
    model: &'static str,
    design_field_v_per_m: f64,
    test_voltage_v: f64,
    withstands: bool,
    max_loss_of_life: f64,
    critical_node: usize,
    critical_thickness_fraction: f64,
    min_life_days: f64,
    /// Largest loss of life contributed by each cycle type.
    max_loss_by_type: BTreeMap<String, f64>,
    conservation: Vec<(String, Option<Conservation>)>,
}

pub fn life(args: &CommonArgs) -> Result<Outcome> {
    let mut run = Run::start(args, "life")?;
    let life_cfg = run
        .cfg
        .life
        .clone()
        .context("the life command needs a [life] section")?;
    life_cfg.design_field()?;
    let mesh = run.mesh()?;
    let u_tt = life_cfg.test_voltage()?;
    let program = life_cfg.tt_program(&run.cfg.program, u_tt)?;
    run.record("life", &life_cfg)?;
    let mut summaries = Vec::new();
    for (label, source) in run.sources()? {
        let e_d = match life_cfg.design_field()? {
            DesignField::Value(e) => e,
            DesignField::Derived(_) => {
                let t_d = cablelife_core::constants::celsius(life_cfg.t_d_c);
                info!(
                    "deriving the design field from a {:.0}-h run at {} V",
                    life_cfg.design_settle_h, life_cfg.design_voltage_v
                );
                design_field(
                    &source,
                    &mesh,
                    life_cfg.design_voltage_v,
                    t_d,
                    t_d - run.cfg.program.delta_t_k,
                    life_cfg.settle(),
                )?
            }
        };
        let p = life_cfg.params(e_d)?;
        run.record(&format!("life_params_{label}"), &p)?;
        let LifeAssessment { result, runs } = estimate_life(
            &source,
            &program,
            &p,
            &mesh,
            run.cfg.run.snapshot_interval_s,
            life_cfg.mode,
        )?;
        run.out
            .write_with(&format!("{label}/life.csv"), |w| Ok(write_life_table(w, &result)?))?;
        for (name, r) in &runs {
            run.out.write_with(&format!("{label}/field_{name}.csv"), |w| {
                Ok(write_field_table(w, &mesh, &r.profiles)?)
            })?;
        }
        let node = result.argmin_node;
        println!(
            "{label}: E_D {:.2} kV/mm, max loss of life {:.2}% at {:.2} of thickness, minimum life {:.0} days",
            e_d / 1e6,
            100.0 * result.max_lf,
            result.thickness_fraction[node],
            result.min_life / DAY
        );
        println!(
            "{label}: withstands TT: {}",
            if result.withstands() { "yes" } else { "no" }
        );
        summaries.push(LifeSummary {
            model: label,
            design_field_v_per_m: e_d,
            test_voltage_v: u_tt,
            withstands: result.withstands(),
            max_loss_of_life: result.max_lf,
            critical_node: node,
            critical_thickness_fraction: result.thickness_fraction[node],
            min_life_days: result.min_life / DAY,
            max_loss_by_type: result
                .by_type
                .iter()
                .map(|c| {
                    (
                        c.label.clone(),
                        c.lf.iter().map(|l| l * c.count as f64).fold(0.0, f64::max),
                    )
                })
                .collect(),
            conservation: runs.iter().map(|(n, r)| (n.clone(), r.conservation)).collect(),
        });
    }
    run.out.write_json("life_summary.json", &summaries)?;
    run.finish(Outcome::Success)
}

pub fn compare(args: &CommonArgs) -> Result<Outcome> {
    let mut run = Run::start(args, "compare")?;
    let klein = run.cfg.klein.context("the compare command needs a [klein] section")?;
    let params = run.cfg.bct.params()?;
    run.record("bct", &params)?;
    run.record("klein", &klein)?;
    let mesh = run.mesh()?;
    let program = run.cfg.program.program(&run.cfg.base_dir, None)?;
    let interval = run.cfg.run.snapshot_interval_s;
    let micro = FieldSource::Microscopic {
        params,
        options: run.sim_options(),
    };
    let macro_ = FieldSource::Macroscopic {
        klein,
        options: MacroOptions::default(),
    };
    let micro = run_cycle(&micro, &mesh, &program, interval)?;
    let macro_ = run_cycle(&macro_, &mesh, &program, interval)?;
    let checklist = Checklist {
        micro: micro.summary,
        macro_: macro_.summary,
    };
    let items = checklist.items();
    let mut md = String::from("| behaviour | microscopic | macroscopic |\n|---|---|---|\n");
    for it in &items {
        writeln!(md, "| {} | {} | {} |", it.item, it.micro, it.macro_)?;
        println!("{:<26} micro: {:<36} macro: {}", it.item, it.micro, it.macro_);
    }
    run.out.write_text("checklist.md", &md)?;
    #[derive(Serialize)]
    struct Out<'a> {
        items: &'a [cablelife_core::studies::ChecklistItem],
        summaries: &'a Checklist,
    }
    run.out.write_json(
        "checklist.json",
        &Out {
            items: &items,
            summaries: &checklist,
        },
    )?;
    run.finish(Outcome::Success)
}
