//! Pair production from vacuum in time-dependent electric fields, computed
//! with the quantum Vlasov equation.
//!
//! * [`fields`]: modulated carriers, pulse trains, vector potential, effective mass
//! * [`solver`]: single-mode kinetics, ODE route and direct memory-integral route
//! * [`observables`]: momentum spectra, number density, peaks, resonances, power laws
//! * [`scans`]: checkpointed parallel parameter sweeps
//! * [`io`]: configuration files and CSV tables

pub mod error;
pub mod fields;
pub mod io;
pub mod observables;
pub mod quad;
pub mod scans;
pub mod solver;

pub use error::{Error, Result};
pub use fields::{Field, FieldConfig, ModulatedField, PulseTrain};
pub use solver::{solve_mode, solve_mode_direct, ModeKinematics, ModeState, SolverSettings};

/// Crate version, embedded in output metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
