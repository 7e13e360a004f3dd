//! Lattice toolkit for the generalized n-well XY model.
//!
//! The crate is organized bottom-up:
//!
//! * [`lattice`]: the ε-grid, its bonds, cells, discrete boundary and triangulation.
//! * [`potentials`]: the base well profile and the ε-truncated n-well potential.
//! * [`fields`]: phase and spin fields, interpolations, jump pairs and strings.
//! * [`energy`]: the three discrete energies and the phase gradient.
//! * [`topology`]: elastic differences, cell vorticity, Stokes identity, flat norms.
//! * [`solvers`]: field construction, relaxation, core and renormalized energies.
//! * [`experiments`]: config-driven verification campaigns used by the `fracxy` CLI.

pub mod energy;
pub mod experiments;
pub mod error;
pub mod fields;
pub mod lattice;
pub mod potentials;
pub mod solvers;
pub mod sum;
pub mod topology;

pub use energy::{energy_fn_eps, energy_sym, energy_xy, gradient_fn_eps, EnergyBreakdown};
pub use error::{Error, Result};
pub use experiments::{run_to_dir, ExperimentConfig, ExperimentKind, Report};
pub use fields::{
    dirichlet_energy, exp_map, extract_strings, interpolate_affine, interpolate_u_hat, jump_pairs,
    InterpMode, InterpolatedField, ScalarField, SpinField, StringSet, StringSummary,
};
pub use lattice::{build_domain, Bond, Cell, LatticeDomain, Region, RegionMask, Shape, Triangle};
pub use potentials::{BaseProfile, PotentialSpec};
pub use solvers::{
    construct_field, core_energy_frac, core_energy_sym, gamma_extrapolate, relax,
    renormalized_energy_estimate, RelaxationConfig, StepRule, VortexPrescription,
};
pub use topology::{
    cell_vorticity, elastic_diff, flat_distance, flat_norm, flat_norm_lp_oracle, project_p,
    stokes_check, vorticity_measure, Atom, VorticityMeasure,
};

/// Angular polar coordinate in `[0, 2π)`, branch cut along the positive x-axis.
pub fn polar_angle(x: [f64; 2]) -> f64 {
    let a = x[1].atan2(x[0]);
    if a < 0.0 {
        a + std::f64::consts::TAU
    } else {
        a
    }
}
