//! Charge transport, electric field and life estimation for HVDC cable insulation.
//!
//! The crate provides a microscopic bipolar charge transport solver
//! ([`bct`]), Poisson and conductivity-based field solvers ([`field`]),
//! parameter identification against pulsed electro-acoustic space charge
//! measurements ([`pea`]) and Miner's-law life estimation under load-cycle
//! programs ([`life`]).

pub mod analysis;
pub mod bct;
pub mod constants;
pub mod error;
pub mod export;
pub mod field;
pub mod geometry;
pub mod life;
pub mod params;
pub mod pea;
pub mod program;
pub mod scenarios;
pub mod state;
pub mod studies;

pub use bct::{simulate_bct, ChargeLedger, SimOptions, Snapshot, TransientSolution};
pub use constants::PhysicalConstants;
pub use error::{Error, Result};
pub use field::{laplacian_field, macroscopic_transient, poisson_field, FieldProfile, KleinParams};
pub use geometry::{build_mesh, temperature_at, Geometry, GeometryKind, RadialMesh};
pub use life::{estimate_life, life_at, loss_of_life, CycleMode, FieldSource, LifeParams, LifeResult};
pub use params::BctParams;
pub use program::{CycleBoundary, LoadPoint, LoadProgram, LoadSample};
pub use state::ChargeState;

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
