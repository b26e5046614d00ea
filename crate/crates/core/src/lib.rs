//! Monte Carlo annealing laboratory for 3D Ising spin glasses.
//!
//! The crate is organised bottom-up:
//!
//! * [`instance`] builds, stores and evaluates spin-glass problems on cubic lattices.
//! * [`oracle`] holds exact reference calculations for small systems.
//! * [`classical`] is single-spin-flip Metropolis annealing.
//! * [`pimc`] is discrete-time simulated quantum annealing with imaginary-time
//!   cluster moves.
//! * [`schedule`] holds annealing schedules, fluctuation profiles and the
//!   adaptive schedule construction.
//! * [`benchmark`] runs campaigns and turns records into residual-energy and
//!   time-to-solution tables.

pub mod benchmark;
pub mod classical;
pub mod error;
pub mod instance;
pub mod oracle;
pub mod pimc;
pub mod rng;
pub mod schedule;
pub mod stats;

pub use error::{Error, Result};
pub use instance::{Boundary, LatticeSpec, SpinConfiguration, SpinGlassInstance};
