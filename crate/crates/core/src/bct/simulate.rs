//! Time integration of the microscopic model coupled to the Poisson solver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::poisson::poisson_into;
use crate::field::FieldProfile;
use crate::geometry::RadialMesh;
use crate::params::BctParams;
use crate::program::{LoadPoint, LoadProgram};
use crate::state::ChargeState;

use super::transport::{BctModel, ChargeLedger, StepCoefficients, TransportOptions};

/// Applied voltage and electrode temperatures as functions of time.
///
/// Unlike [`LoadProgram`], a drive may carry a signed voltage.
pub trait Drive {
    fn at(&self, t: f64) -> LoadPoint;
    /// Next time after `t` at which the drive has a kink.
    fn next_knot_after(&self, t: f64) -> Option<f64>;
}

impl Drive for LoadProgram {
    fn at(&self, t: f64) -> LoadPoint {
        LoadProgram::at(self, t)
    }

    fn next_knot_after(&self, t: f64) -> Option<f64> {
        LoadProgram::next_knot_after(self, t)
    }
}

/// Time-invariant drive, e.g. a PEA poling condition of either polarity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantDrive(pub LoadPoint);

impl Drive for ConstantDrive {
    fn at(&self, _t: f64) -> LoadPoint {
        self.0
    }

    fn next_knot_after(&self, _t: f64) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub transport: TransportOptions,
    /// Multiplies the stability-limited step (≤ 1); used for step-halving checks.
    pub dt_scale: f64,
    /// Abort after this many steps.
    pub max_steps: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            transport: TransportOptions::default(),
            dt_scale: 1.0,
            max_steps: 500_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub state: ChargeState,
    pub field: FieldProfile,
    pub ledger: ChargeLedger,
}

impl Snapshot {
    pub fn t(&self) -> f64 {
        self.state.t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransientSolution {
    pub snapshots: Vec<Snapshot>,
    pub ledger: ChargeLedger,
    pub steps: u64,
}

impl TransientSolution {
    /// Worst species-wise ledger imbalance over all snapshots.
    pub fn worst_imbalance(&self, volumes: &[f64]) -> f64 {
        self.snapshots
            .iter()
            .map(|s| {
                let (e, h) = s.ledger.imbalance(s.state.species_totals(volumes));
                e.max(h)
            })
            .fold(0.0, f64::max)
    }
}

/// Stepping engine owning the evolving state. Integrates from a charge-free
/// start under an arbitrary [`Drive`].
#[derive(Debug, Clone)]
pub struct BctSimulator {
    model: BctModel,
    dt_scale: f64,
    max_steps: u64,
    state: ChargeState,
    field: FieldProfile,
    ledger: ChargeLedger,
    steps: u64,
    coeffs: StepCoefficients,
    scratch: Vec<f64>,
    rho: Vec<f64>,
    temps: Vec<f64>,
    temps_key: (f64, f64),
}

impl BctSimulator {
    pub fn new(mesh: RadialMesh, params: BctParams, options: &SimOptions) -> Result<Self> {
        if !(options.dt_scale > 0.0 && options.dt_scale <= 1.0) {
            return Err(Error::invalid(format!(
                "dt_scale must lie in (0, 1], got {}",
                options.dt_scale
            )));
        }
        let model = BctModel::new(mesh, params, Default::default())?.with_options(options.transport);
        let n = model.mesh.len();
        Ok(Self {
            model,
            dt_scale: options.dt_scale,
            max_steps: options.max_steps,
            state: ChargeState::zero(n),
            field: FieldProfile {
                e: vec![0.0; n],
                u_applied: 0.0,
                t: 0.0,
            },
            ledger: ChargeLedger::default(),
            steps: 0,
            coeffs: StepCoefficients::default(),
            scratch: Vec::new(),
            rho: vec![0.0; n],
            temps: vec![0.0; n],
            temps_key: (f64::NAN, f64::NAN),
        })
    }

    pub fn model(&self) -> &BctModel {
        &self.model
    }

    pub fn state(&self) -> &ChargeState {
        &self.state
    }

    pub fn ledger(&self) -> &ChargeLedger {
        &self.ledger
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn time(&self) -> f64 {
        self.state.t
    }

    fn update_field(&mut self, voltage: f64) {
        self.state.net_charge_into(&mut self.rho);
        poisson_into(
            &self.model.mesh,
            &self.rho,
            voltage,
            self.model.epsilon(),
            &mut self.field.e,
        );
        self.field.u_applied = voltage;
        self.field.t = self.state.t;
    }

    fn update_temps(&mut self, load: &LoadPoint) {
        if self.temps_key != (load.t_inner, load.t_outer) {
            self.temps = self.model.mesh.temperature_profile(load.t_inner, load.t_outer);
            self.temps_key = (load.t_inner, load.t_outer);
        }
    }

    /// Field and state at the current time under `drive`.
    pub fn snapshot(&mut self, drive: &impl Drive) -> Snapshot {
        let load = drive.at(self.state.t);
        self.update_field(load.voltage);
        Snapshot {
            state: self.state.clone(),
            field: self.field.clone(),
            ledger: self.ledger,
        }
    }

    /// Integrates up to exactly `t_target`, never stepping across a drive knot.
    pub fn advance_to(&mut self, t_target: f64, drive: &impl Drive) -> Result<()> {
        while self.state.t < t_target {
            let t = self.state.t;
            let load = drive.at(t);
            if !(load.t_inner > 0.0 && load.t_outer > 0.0) {
                return Err(Error::solver(t, "non-positive electrode temperature"));
            }
            self.update_temps(&load);
            self.update_field(load.voltage);
            self.model.coefficients(&self.field, &self.temps, &mut self.coeffs);
            let mut dt = self.dt_scale * self.model.stable_dt(&self.state, &self.field, &self.coeffs);
            if !(dt > 0.0) {
                return Err(Error::solver(t, format!("step size collapsed to {dt:e} s")));
            }
            let mut t_next = (t + dt).min(t_target);
            if let Some(k) = drive.next_knot_after(t) {
                t_next = t_next.min(k);
            }
            // avoid a sliver step just short of the target
            if t_target - t_next < 1e-6 * dt {
                t_next = t_target;
            }
            dt = t_next - t;
            self.model
                .step(
                    &mut self.state,
                    &self.field,
                    &self.coeffs,
                    dt,
                    &mut self.ledger,
                    &mut self.scratch,
                )
                .map_err(|e| e.with_context(&format!("step {}", self.steps)))?;
            self.state.t = t_next;
            self.steps += 1;
            if self.steps >= self.max_steps {
                return Err(Error::solver(
                    t_next,
                    format!("step limit of {} reached", self.max_steps),
                ));
            }
        }
        Ok(())
    }

    /// Runs to `t_end`, recording a snapshot at each requested time in [0, t_end].
    pub fn run(&mut self, drive: &impl Drive, t_end: f64, snapshot_times: &[f64]) -> Result<Vec<Snapshot>> {
        let mut times: Vec<f64> = snapshot_times
            .iter()
            .copied()
            .filter(|t| *t >= self.state.t && *t <= t_end)
            .collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let mut out = Vec::with_capacity(times.len());
        for t in times {
            self.advance_to(t, drive)?;
            out.push(self.snapshot(drive));
        }
        self.advance_to(t_end, drive)?;
        Ok(out)
    }
}

/// Simulates the microscopic model from a charge-free start over `[0, t_end]`.
pub fn simulate_bct(
    mesh: &RadialMesh,
    params: &BctParams,
    program: &LoadProgram,
    t_end: f64,
    snapshot_times: &[f64],
    options: &SimOptions,
) -> Result<TransientSolution> {
    if !(t_end >= 0.0) || t_end > program.duration() + 1e-9 {
        return Err(Error::invalid(format!(
            "t_end = {t_end} s is outside the program [0, {}] s",
            program.duration()
        )));
    }
    simulate_drive(mesh, params, program, t_end, snapshot_times, options)
}

/// As [`simulate_bct`] for any drive, including negative voltages.
pub fn simulate_drive(
    mesh: &RadialMesh,
    params: &BctParams,
    drive: &impl Drive,
    t_end: f64,
    snapshot_times: &[f64],
    options: &SimOptions,
) -> Result<TransientSolution> {
    let mut sim = BctSimulator::new(mesh.clone(), *params, options)?;
    let snapshots = sim.run(drive, t_end, snapshot_times)?;
    Ok(TransientSolution {
        snapshots,
        ledger: *sim.ledger(),
        steps: sim.steps(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, Geometry};

    #[test]
    fn zero_voltage_stays_charge_free() {
        let m = build_mesh(Geometry::cylindrical(0.01, 0.0145, 2.3).unwrap(), 30).unwrap();
        let prog = LoadProgram::constant(1000.0, 0.0, 338.15, 318.15).unwrap();
        let sol = simulate_bct(
            &m,
            &BctParams::ldpe_literature(),
            &prog,
            1000.0,
            &[500.0, 1000.0],
            &Default::default(),
        )
        .unwrap();
        assert_eq!(sol.snapshots.len(), 2);
        for s in &sol.snapshots {
            assert!(s.field.e.iter().all(|e| *e == 0.0));
            assert!(s.state.rho_e_mu.iter().chain(&s.state.rho_h_t).all(|r| *r == 0.0));
        }
    }

    #[test]
    fn snapshots_hit_requested_times() {
        let m = build_mesh(Geometry::planar(200e-6, 2.3).unwrap(), 20).unwrap();
        let prog = LoadProgram::constant(300.0, 8e3, 303.15, 303.15).unwrap();
        let times = [0.0, 12.5, 100.0, 300.0];
        let sol = simulate_bct(
            &m,
            &BctParams::dc_xlpe_optimum(),
            &prog,
            300.0,
            &times,
            &Default::default(),
        )
        .unwrap();
        let got: Vec<f64> = sol.snapshots.iter().map(|s| s.t()).collect();
        assert_eq!(got, times);
        assert_eq!(sol.ledger.clamp_events, 0);
        assert!(sol.worst_imbalance(&m.control_volumes()) < 1e-9);
    }

    #[test]
    fn polarity_reversal_mirrors_planar_solution() {
        let m = build_mesh(Geometry::planar(200e-6, 2.3).unwrap(), 20).unwrap();
        let p = BctParams::dc_xlpe_optimum();
        let drive = |u| {
            ConstantDrive(LoadPoint {
                voltage: u,
                t_inner: 313.15,
                t_outer: 313.15,
            })
        };
        let a = simulate_drive(&m, &p, &drive(8e3), 200.0, &[200.0], &Default::default()).unwrap();
        let b = simulate_drive(&m, &p, &drive(-8e3), 200.0, &[200.0], &Default::default()).unwrap();
        let (fa, fb) = (&a.snapshots[0].field.e, &b.snapshots[0].field.e);
        let n = fa.len();
        for i in 0..n {
            assert!((fa[i] + fb[n - 1 - i]).abs() < 1e-8 * fa[i].abs(), "node {i}");
        }
    }
}
