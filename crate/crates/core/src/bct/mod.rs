//! The microscopic bipolar charge transport model.

pub mod physics;
pub mod simulate;
pub mod transport;

pub use physics::{
    detrapping_coeff, hopping_mobility, recombination_rates, schottky_flux, source_terms, NodeDensities, Recombination,
    SourceTerms,
};
pub use simulate::{
    simulate_bct, simulate_drive, BctSimulator, ConstantDrive, Drive, SimOptions, Snapshot, TransientSolution,
};
pub use transport::{advance_charge, BctModel, ChargeLedger, StepCoefficients, TransportOptions};
