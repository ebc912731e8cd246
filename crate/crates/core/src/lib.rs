//! Pseudorelativistic Hartree-Fock for atoms in the central-field reduction.
//!
//! The crate discretizes `alpha^-1 (sqrt(-Delta + alpha^-2) - alpha^-1) - Z/r`
//! on a uniform radial grid, minimizes the Hartree-Fock functional over
//! density matrices and provides the tools to check the minimizer: aufbau
//! and purity certificates, orbital decay fits, the Kato and Herbst
//! inequalities and the explicit Green's kernel of `T - E`.

pub mod analysis;
pub mod coulomb;
pub mod error;
pub mod functional;
pub mod greens;
pub mod linalg;
pub mod model;
pub mod radial;
pub mod scf;

pub use error::{Error, Result};
pub use model::{
    default_shells, validate_system, Algorithm, AtomSystem, InitialGuess, ShellSpec, SolverOptions,
};
pub use radial::{build_grid, KineticModel, RadialGrid};
pub use scf::{solve_scf, ScfOutcome, ScfReport};
