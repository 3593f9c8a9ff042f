//! Numerical laboratory for the ground-state energy of a dilute Bose gas
//! whose pair potential may have attractive parts.
//!
//! The pieces:
//! - [`potential`]: piecewise-constant radial pair potentials with declared
//!   positive-core and global floors.
//! - [`scattering`]: zero-energy radial solver, scattering lengths, the
//!   variational energy functional, and the stability-condition checks
//!   used by the lower bound.
//! - [`trial`]: the generalized Dyson trial state built from the truncated
//!   scattering profile, with exact gradients.
//! - [`vmc`]: Metropolis sampling of the trial state and the variational
//!   upper-bound estimator.
//! - [`lower_bound`]: soft-potential replacement, Temple-inequality cell
//!   bounds, piecewise energy floors, and lattice covering constants.
//! - [`config`] / [`runner`]: experiment configuration and the CLI
//!   subcommands (`scatter`, `check`, `upper`, `lower`, `sweep`).
//!
//! Units: lengths and energies in the reduced units where hbar = 2m = 1.

pub mod config;
pub mod lower_bound;
pub mod parallel;
pub mod potential;
pub mod runner;
pub mod scattering;
pub mod trial;
pub mod vmc;

pub use potential::{RadialPotential, Segment};
pub use scattering::{ConditionReport, ScatteringSolution};
pub use trial::{ParticleConfiguration, TrialParams};
pub use vmc::EnergyEstimate;
