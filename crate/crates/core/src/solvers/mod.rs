//! Relaxation of the discrete energies, vortex-plus-string initial fields, and estimators
//! for the core energies and the renormalized energy.

pub mod construct;
pub mod core_energy;
pub mod relax;
pub mod renormalized;

pub use construct::{construct_field, Core, VortexPrescription};
pub use core_energy::{
    core_domain, core_energy_frac, core_energy_sym, gamma_extrapolate, CoreEnergy, GammaEstimate,
    SigmaEstimate, CORE_RESTARTS,
};
pub use relax::{relax, write_log_csv, IterRecord, RelaxOutcome, RelaxationConfig, StepRule, Termination};
pub use renormalized::{
    renormalized_energy_estimate, triangle_disk_area, BallExclusion, RenormalizedEstimate,
};
