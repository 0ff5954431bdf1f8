//! Spectra of a confined three-body Coulomb system: two heavy positive
//! charges and one light negative charge, discretized on an `(R, ρ, cos θ)`
//! lattice in dimensionless units.
//!
//! The pipeline is [`grid::build_grid`] → [`operator::assemble`] →
//! [`eigen`] solvers → [`observables`], with [`config`] and [`store`]
//! providing the reproducible run surface used by the CLI.

pub mod config;
pub mod eigen;
pub mod error;
pub mod grid;
pub mod observables;
pub mod operator;
pub mod pipeline;
pub mod potential;
pub mod store;
pub mod units;

pub use eigen::{
    dense_spectrum, lanczos_spectrum, verify, LanczosMode, LanczosOptions, Spectrum,
    SymmetricOperator, VerifyReport, VerifyTolerances,
};
pub use config::{GoalSelector, RunConfig, SolverChoice};
pub use error::{Error, Result};
pub use grid::{build_grid, Grid, GridSpec};
pub use observables::{
    classify_collision_states, collision_probability, momentum_matrix_element, two_step_ranking,
    CollisionReport, Eta, Polarization, TransitionTable, TwoStepRanking,
};
pub use operator::{assemble, assemble_with_coeff, light_block, CsrMatrix, HamiltonianOperator};
pub use potential::{
    averaged_potential, averaged_potential_closed_form, coulomb_potential, diamagnetic_term,
    AngularQuadrature, PotentialParams,
};
pub use units::{compute_scales, Dimension, ParticleParams, ScaleSet};
