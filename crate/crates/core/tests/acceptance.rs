//! Acceptance run: one PASS/FAIL line per criterion at its stated tolerance.
//!
//! Runs as a plain binary so the lines always reach the output. Exits
//! nonzero when a criterion fails that is not listed in `KNOWN_DEVIATIONS`.

use std::time::Instant;

use cablelife_core::constants::{celsius, HOUR, YEAR};
use cablelife_core::field::{diffusion_drift_ratio, MacroOptions};
use cablelife_core::life::{compose_tt_program, design_field, sample_times, Conservation, FieldHistory};
use cablelife_core::pea::{fit_local, synthesize, FitBounds, FitParam, PeaCondition, SimConfig};
use cablelife_core::scenarios::{
    CaseStudyCable, CycleShape, CASE_STUDY_DELTA_T, TT_VOLTAGE_FACTOR, VALIDATION_EMAX_KV_MM, VALIDATION_TIMES,
};
use cablelife_core::studies::{run_cycle, run_validation, summarize_cycle, switch_off_time, PeakClass};
use cablelife_core::{
    build_mesh, estimate_life, laplacian_field, life_at, loss_of_life, poisson_field, simulate_bct, BctParams,
    CycleMode, FieldSource, Geometry, KleinParams, LifeParams, SimOptions,
};

/// Failures analysed and accepted; they are printed as FAIL but do not fail the run.
const KNOWN_DEVIATIONS: [&str; 1] = ["7"];

const CASE_NODES: usize = 100;
const INTERVAL: f64 = 300.0;

struct Report {
    unexpected: Vec<String>,
    conservation: Vec<(String, Conservation)>,
}

impl Report {
    fn line(&mut self, id: &str, name: &str, pass: bool, detail: String) {
        let known = !pass && KNOWN_DEVIATIONS.contains(&id);
        println!(
            "criterion {id:<3} {:<4} {name}: {detail}{}",
            if pass { "PASS" } else { "FAIL" },
            if known { " (known deviation)" } else { "" }
        );
        if !pass && !known {
            self.unexpected.push(format!("{id} {name}"));
        }
    }

    fn ledger(&mut self, label: &str, c: Option<Conservation>) {
        if let Some(c) = c {
            self.conservation.push((label.to_string(), c));
        }
    }
}

fn case_klein() -> KleinParams {
    KleinParams {
        sigma_ref: 10.0,
        activation_energy: 1.0,
        field_coeff: 3e-8,
    }
}

fn criterion_1_and_8(report: &mut Report) {
    let t0 = Instant::now();
    let base = run_validation(100, &SimOptions::default()).expect("validation run");
    let elapsed = t0.elapsed().as_secs_f64();
    report.ledger("validation 100 nodes", Some(base.conservation));
    let rows: Vec<String> = base
        .rows
        .iter()
        .map(|r| {
            format!(
                "{}s {:.2}/{:.2} ({:+.2}%)",
                r.t,
                r.computed,
                r.reference,
                100.0 * r.rel_error
            )
        })
        .collect();
    let max = base.max_rel_error();
    assert_eq!(base.rows.len(), VALIDATION_TIMES.len());
    assert_eq!(base.rows[4].reference, VALIDATION_EMAX_KV_MM[4]);
    report.line(
        "1",
        "validation peak fields within 3%",
        max <= 0.03 && elapsed <= 300.0,
        format!("max {:.2}% in {elapsed:.0} s; {}", 100.0 * max, rows.join(", ")),
    );

    let fine = run_validation(200, &SimOptions::default()).expect("200-node validation run");
    report.ledger("validation 200 nodes", Some(fine.conservation));
    let halved = run_validation(
        100,
        &SimOptions {
            dt_scale: 0.5,
            ..SimOptions::default()
        },
    )
    .expect("half-step validation run");
    report.ledger("validation half step", Some(halved.conservation));
    let e = base.final_peak();
    let d_grid = (fine.final_peak() - e).abs() / e;
    let d_step = (halved.final_peak() - e).abs() / e;
    report.line(
        "8",
        "grid doubling and step halving below 2%",
        d_grid < 0.02 && d_step < 0.02,
        format!("grid {:.3}%, step {:.3}%", 100.0 * d_grid, 100.0 * d_step),
    );
}

fn criterion_2(report: &mut Report) {
    let mut worst: f64 = 0.0;
    for g in [
        Geometry::cylindrical(0.02, 0.048, 2.3).unwrap(),
        Geometry::planar(200e-6, 2.3).unwrap(),
    ] {
        for n in [3, 10, 100, 1000] {
            let mesh = build_mesh(g, n).unwrap();
            let exact = laplacian_field(&g, 500e3, &mesh);
            let numeric = poisson_field(&mesh, &vec![0.0; n], 500e3, g.permittivity());
            for (a, b) in numeric.e.iter().zip(&exact.e) {
                worst = worst.max((a - b).abs() / b.abs());
            }
        }
    }
    report.line(
        "2",
        "charge-free field equals the Laplacian field to 1e-10",
        worst <= 1e-10,
        format!("worst relative deviation {worst:.2e}"),
    );
}

fn criterion_5(report: &mut Report) {
    let p = LifeParams::dc_xlpe(25e6);
    let l = life_at(p.e_d, p.t_d, &p).unwrap();
    let identity = (l - p.l_d).abs() / p.l_d;

    let n = 4;
    let steps = 40;
    let times: Vec<f64> = (0..=steps).map(|k| p.l_d * k as f64 / steps as f64).collect();
    let flat = FieldHistory::new(
        times.clone(),
        vec![vec![p.e_d; n]; steps + 1],
        vec![vec![p.t_d; n]; steps + 1],
    )
    .unwrap();
    let miner = loss_of_life(&flat, &p)
        .unwrap()
        .iter()
        .map(|lf| (lf - 1.0).abs())
        .fold(0.0, f64::max);

    let hours: Vec<f64> = (0..=96).map(|k| k as f64 * HOUR).collect();
    let fields: Vec<Vec<f64>> = hours
        .iter()
        .map(|t| {
            (0..n)
                .map(|i| 20e6 + 8e6 * (t / (7.0 * HOUR) + i as f64).sin())
                .collect()
        })
        .collect();
    let temps: Vec<Vec<f64>> = hours
        .iter()
        .map(|t| {
            (0..n)
                .map(|i| celsius(45.0 + 20.0 * (t / (11.0 * HOUR)).cos() - i as f64))
                .collect()
        })
        .collect();
    let varying = FieldHistory::new(hours.clone(), fields, temps).unwrap();
    let whole = loss_of_life(&varying, &p).unwrap();
    let mut additivity: f64 = 0.0;
    for cuts in [vec![13], vec![1, 50, 95], vec![7, 8, 9, 60]] {
        let mut edges = vec![0];
        edges.extend(cuts);
        edges.push(96);
        let mut sum = vec![0.0; n];
        for w in edges.windows(2) {
            let part = loss_of_life(&varying.window(hours[w[0]], hours[w[1]]).unwrap(), &p).unwrap();
            for (s, x) in sum.iter_mut().zip(part) {
                *s += x;
            }
        }
        for (s, x) in sum.iter().zip(&whole) {
            additivity = additivity.max((s - x).abs() / x);
        }
    }
    report.line(
        "5",
        "life identities",
        identity <= 1e-12 && miner <= 1e-6 && additivity <= 1e-12,
        format!(
            "L(E_D,T_D)/L_D-1 = {identity:.1e}, design-point LF-1 = {miner:.1e}, split additivity {additivity:.1e} ({:.0} y program)",
            p.l_d / YEAR
        ),
    );
}

fn criterion_4(report: &mut Report) {
    let truth = BctParams::dc_xlpe_optimum();
    let cfg = SimConfig::default();
    let times: Vec<f64> = (0..=40).map(|k| k as f64 * 100.0).collect();
    let t0 = Instant::now();
    let meas = synthesize(&truth, &PeaCondition::reference_set(), 200e-6, &times, &cfg).expect("synthetic data");
    let mut start = truth;
    for q in FitParam::DEFAULT_FREE {
        let factor = match q {
            FitParam::BH | FitParam::SBase => 0.9,
            _ => 1.1,
        };
        q.set(&mut start, q.get(&truth) * factor);
    }
    let bounds = FitBounds::around(&truth, &FitParam::DEFAULT_FREE, 0.25);
    let fit = fit_local(&start, &meas, &bounds, &cfg).expect("fit");
    let minutes = t0.elapsed().as_secs_f64() / 60.0;
    let barrier_err = FitParam::BARRIERS
        .iter()
        .map(|q| (q.get(&fit.params) - q.get(&truth)).abs())
        .fold(0.0, f64::max);
    let rate_err = [FitParam::BE, FitParam::BH, FitParam::SBase]
        .iter()
        .map(|q| ((q.get(&fit.params) - q.get(&truth)) / q.get(&truth)).abs())
        .fold(0.0, f64::max);
    report.line(
        "4",
        "fit round trip",
        barrier_err <= 0.02 && rate_err <= 0.10 && minutes <= 30.0,
        format!(
            "worst barrier error {:.4} eV, worst rate error {:.2}%, {} iterations, {minutes:.1} min ({})",
            barrier_err,
            100.0 * rate_err,
            fit.iterations,
            fit.message
        ),
    );
}

fn criteria_6_and_7(report: &mut Report) {
    let cable = CaseStudyCable::new();
    let mesh = build_mesh(cable.geometry, CASE_NODES).unwrap();
    let params = BctParams::dc_xlpe_optimum();
    let options = SimOptions::default();
    let micro = FieldSource::Microscopic { params, options };
    let u0 = cable.rated_voltage;
    let u_tt = TT_VOLTAGE_FACTOR * u0;
    let shape24 = CycleShape::tt_24h(cable.ambient, cable.design_temperature, CASE_STUDY_DELTA_T);
    let shape48 = CycleShape::tt_48h(cable.ambient, cable.design_temperature, CASE_STUDY_DELTA_T);

    // rated voltage: the full solution is kept for the diffusion ratio
    let c48 = shape48.program(u0, "48h").unwrap();
    let off = switch_off_time(&c48);
    let times = sample_times(c48.duration(), INTERVAL, &[off]).unwrap();
    let sol = simulate_bct(&mesh, &params, &c48, c48.duration(), &times, &options).expect("rated-voltage cycle");
    report.ledger(
        "48-h cycle at U0",
        Some(Conservation {
            worst_imbalance: sol.worst_imbalance(&mesh.control_volumes()),
            clamp_events: sol.ledger.clamp_events,
            steps: sol.steps,
        }),
    );
    let profiles: Vec<_> = sol.snapshots.iter().map(|s| s.field.clone()).collect();
    let at_u0 = summarize_cycle(&mesh, &profiles, off).unwrap();

    // Type Test voltage: the reuse-mode life run supplies the 48-h cycle
    let design = design_field(
        &micro,
        &mesh,
        u0,
        cable.design_temperature,
        cable.design_temperature - CASE_STUDY_DELTA_T,
        48.0 * HOUR,
    )
    .expect("design field");
    let tt = compose_tt_program(
        &shape24.program(u_tt, "24h").unwrap(),
        &shape48.program(u_tt, "48h").unwrap(),
    )
    .unwrap();
    let life = estimate_life(
        &micro,
        &tt,
        &LifeParams::dc_xlpe(design),
        &mesh,
        INTERVAL,
        CycleMode::Reuse,
    )
    .expect("life");
    for (label, run) in &life.runs {
        report.ledger(&format!("{label} cycle at U_TT"), run.conservation);
    }
    let tt48 = &life.runs.iter().find(|(l, _)| l == "48h").expect("48-h run").1;
    let at_tt = summarize_cycle(
        &mesh,
        &tt48.profiles,
        switch_off_time(&shape48.program(u_tt, "48h").unwrap()),
    )
    .unwrap();

    let hours = |s: Option<f64>| s.map(|t| t / HOUR).unwrap_or(f64::NAN);
    let stab_u0 = hours(at_u0.stabilization_time);
    let stab_tt = hours(at_tt.stabilization_time);
    report.line(
        "6a",
        "stabilization in [7, 11] h at U0 and [5, 9] h at U_TT",
        (7.0..=11.0).contains(&stab_u0) && (5.0..=9.0).contains(&stab_tt),
        format!(
            "{stab_u0:.2} h at {:.0} kV, {stab_tt:.2} h at {:.0} kV",
            u0 / 1e3,
            u_tt / 1e3
        ),
    );
    let pos = at_u0.hot_peak.thickness_fraction;
    report.line(
        "6b",
        "steady peak position in [0.60, 0.80] of thickness",
        (0.60..=0.80).contains(&pos),
        format!("{pos:.3} ({:.2} kV/mm)", at_u0.hot_peak.e_max / 1e6),
    );
    report.line(
        "6d",
        "micro field change during cooling below 2%",
        at_u0.cooling_peak_change < 0.02 && at_tt.cooling_peak_change < 0.02,
        format!(
            "peak change {:.2}% at U0, {:.2}% at U_TT (node-wise {:.2}% and {:.2}%)",
            100.0 * at_u0.cooling_peak_change,
            100.0 * at_tt.cooling_peak_change,
            100.0 * at_u0.cooling_profile_change,
            100.0 * at_tt.cooling_profile_change
        ),
    );
    let r = &life.result;
    let lf48 = r.lf_of("48h")[r.argmin_node];
    report.line(
        "6e",
        "Type Test withstood",
        r.withstands(),
        format!(
            "E_D {:.2} kV/mm, minimum life {:.0} days",
            design / 1e6,
            r.min_life / 86400.0
        ),
    );
    report.line(
        "6f",
        "maximum loss of life in [5%, 25%]",
        (0.05..=0.25).contains(&r.max_lf),
        format!(
            "{:.2}% at {:.2} of thickness, 48-h cycles {:.2}%",
            100.0 * r.max_lf,
            r.thickness_fraction[r.argmin_node],
            100.0 * lf48
        ),
    );

    // macroscopic model on the rated-voltage cycle
    let macro_ = FieldSource::Macroscopic {
        klein: case_klein(),
        options: MacroOptions::default(),
    };
    let m = run_cycle(&macro_, &mesh, &c48, INTERVAL).expect("macro cycle").summary;
    report.line(
        "6c",
        "macro peak at the outer node when hot, inner node when cold",
        m.hot_class == PeakClass::Outer && m.cold_class == PeakClass::Inner,
        format!(
            "hot {} ({:.2} kV/mm), cold {} ({:.2} kV/mm)",
            m.hot_class,
            m.hot_peak.e_max / 1e6,
            m.cold_class,
            m.cold_peak.e_max / 1e6
        ),
    );

    let hot = sol.snapshots.iter().position(|s| s.t() == off).unwrap();
    let mut all: f64 = 0.0;
    let mut interior: f64 = 0.0;
    let mut parts = Vec::new();
    for (name, k) in [("hot", hot), ("cold", sol.snapshots.len() - 1)] {
        let s = &sol.snapshots[k];
        let lp = c48.at(s.t());
        let temps = mesh.temperature_profile(lp.t_inner, lp.t_outer);
        let ratio = diffusion_drift_ratio(&mesh, &s.state, &s.field, &params, &temps).unwrap();
        let n = ratio.len();
        let worst = ratio.iter().copied().fold(0.0, f64::max);
        let inner = ratio[1..n - 1].iter().copied().fold(0.0, f64::max);
        parts.push(format!("{name}: all {worst:.1e}, interior {inner:.1e}"));
        all = all.max(worst);
        interior = interior.max(inner);
    }
    report.line(
        "7",
        "diffusion/drift ratio at most 1e-3 at all nodes",
        all <= 1e-3,
        parts.join("; "),
    );
}

fn criterion_3(report: &mut Report) {
    let worst = report
        .conservation
        .iter()
        .map(|(_, c)| c.worst_imbalance)
        .fold(0.0, f64::max);
    let clamps: u64 = report.conservation.iter().map(|(_, c)| c.clamp_events).sum();
    let runs = report.conservation.len();
    report.line(
        "3",
        "charge ledger within 0.1%, no clamps",
        worst <= 1e-3 && clamps == 0,
        format!("{runs} transport runs, worst imbalance {worst:.2e}, {clamps} clamp events"),
    );
}

fn main() {
    let mut report = Report {
        unexpected: Vec::new(),
        conservation: Vec::new(),
    };
    let t0 = Instant::now();
    criterion_2(&mut report);
    criterion_5(&mut report);
    criterion_1_and_8(&mut report);
    criteria_6_and_7(&mut report);
    criterion_3(&mut report);
    criterion_4(&mut report);
    println!("acceptance finished in {:.1} min", t0.elapsed().as_secs_f64() / 60.0);
    if !report.unexpected.is_empty() {
        eprintln!("unexpected failures: {}", report.unexpected.join(", "));
        std::process::exit(1);
    }
}
