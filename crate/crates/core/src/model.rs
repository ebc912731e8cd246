//! Physical parameters, shell configurations and solver options.
//!
//! Units are atomic with the coupling written explicitly: the one-particle
//! operator is `T - Z*alpha/r` with `T = sqrt(p^2 + alpha^-2) - alpha^-1`,
//! and energies carry an `alpha^-1` prefactor so that they come out in
//! Hartree.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_2_PI;

use crate::error::{Error, Result};
use crate::radial::KineticModel;

/// Nuclear charge, electron count, coupling and number of spin states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomSystem {
    pub z: f64,
    pub n_electrons: usize,
    pub alpha: f64,
    pub q: usize,
}

impl AtomSystem {
    pub const PHYSICAL_ALPHA: f64 = 1.0 / 137.036;

    pub fn new(z: f64, n_electrons: usize, alpha: f64) -> Self {
        Self {
            z,
            n_electrons,
            alpha,
            q: 2,
        }
    }

    pub fn with_spin_states(mut self, q: usize) -> Self {
        self.q = q;
        self
    }

    pub fn inv_alpha(&self) -> f64 {
        1.0 / self.alpha
    }

    pub fn coupling(&self) -> f64 {
        self.z * self.alpha
    }
}

/// Checks every invariant of [`AtomSystem`]; the critical coupling is rejected.
pub fn validate_system(sys: AtomSystem) -> Result<AtomSystem> {
    if sys.n_electrons < 1 {
        return Err(Error::BadCount(format!("N = {} (need N >= 1)", sys.n_electrons)));
    }
    if sys.q < 1 {
        return Err(Error::BadCount(format!("q = {} (need q >= 1)", sys.q)));
    }
    if !(sys.z.is_finite() && sys.z >= 0.0) {
        return Err(Error::BadParameter(format!("Z = {}", sys.z)));
    }
    if !(sys.alpha.is_finite() && sys.alpha > 0.0) {
        return Err(Error::BadParameter(format!("alpha = {}", sys.alpha)));
    }
    let z_alpha = sys.coupling();
    if z_alpha >= FRAC_2_PI {
        return Err(Error::SubcriticalityViolated {
            z_alpha,
            limit: FRAC_2_PI,
        });
    }
    Ok(sys)
}

/// One shell of a given angular momentum and spin. `occupation` counts
/// electrons of this spin in the shell, at most `2*ell + 1`.
///
/// Shells sharing `(ell, spin)` are ordered: the first one listed is the
/// lowest radial state of that channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellSpec {
    pub ell: usize,
    pub spin: usize,
    pub occupation: f64,
}

impl ShellSpec {
    pub fn capacity(&self) -> f64 {
        (2 * self.ell + 1) as f64
    }
}

/// Aufbau seed: 1s, 2s, 3s, ... (or 1s, 2s, 2p, 3s, 3p, ... with `include_p`),
/// each spin channel filled in turn.
pub fn default_shells(sys: &AtomSystem, include_p: bool) -> Vec<ShellSpec> {
    let mut order = Vec::new();
    let mut principal = 1;
    while order.len() < 4 * sys.n_electrons + 4 {
        order.push(0);
        if include_p && principal >= 2 {
            order.push(1);
        }
        principal += 1;
    }

    let mut remaining = sys.n_electrons as f64;
    let mut shells = Vec::new();
    'outer: for ell in order {
        for spin in 0..sys.q {
            if remaining <= 0.0 {
                break 'outer;
            }
            let occupation = remaining.min((2 * ell + 1) as f64);
            shells.push(ShellSpec {
                ell,
                spin,
                occupation,
            });
            remaining -= occupation;
        }
    }
    shells
}

pub fn shell_electron_count(shells: &[ShellSpec]) -> f64 {
    shells.iter().map(|s| s.occupation).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    OptimalDamping,
    RoothaanLevelShift,
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "oda" | "optimal-damping" => Ok(Self::OptimalDamping),
            "roothaan" | "roothaan-levelshift" => Ok(Self::RoothaanLevelShift),
            other => Err(format!("unknown algorithm `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialGuess {
    /// Aufbau projection of the bare nuclear operator `h0`.
    Core,
    /// Occupy the lowest `h0` states channel by channel as listed in the shell seed.
    Shells,
}

impl std::str::FromStr for InitialGuess {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "core" => Ok(Self::Core),
            "shells" => Ok(Self::Shells),
            other => Err(format!("unknown initial guess `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub grid_size: usize,
    pub r_max: f64,
    pub max_iterations: usize,
    /// Energy change threshold, Hartree.
    pub tol_energy: f64,
    /// Threshold on `||[h_gamma, gamma]||_F` in the units of the Fock operator.
    pub tol_commutator: f64,
    pub algorithm: Algorithm,
    /// Virtual-space level shift, Hartree (applied as `alpha * shift` to `h_gamma`).
    pub level_shift: f64,
    pub initial_guess: InitialGuess,
    /// Highest angular momentum channel; `None` means the highest one in the shell seed.
    pub l_max: Option<usize>,
    /// Explicit shell seed; `None` uses [`default_shells`].
    pub shells: Option<Vec<ShellSpec>>,
    pub include_p: bool,
    pub kinetic_model: KineticModel,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            grid_size: 1200,
            r_max: 20.0,
            max_iterations: 200,
            tol_energy: 1e-10,
            tol_commutator: 1e-6,
            algorithm: Algorithm::OptimalDamping,
            level_shift: 0.5,
            initial_guess: InitialGuess::Core,
            l_max: None,
            shells: None,
            include_p: false,
            kinetic_model: KineticModel::Pseudorelativistic,
        }
    }
}

impl SolverOptions {
    pub fn with_grid(mut self, grid_size: usize, r_max: f64) -> Self {
        self.grid_size = grid_size;
        self.r_max = r_max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_size < 16 {
            return Err(Error::BadOptions(format!("grid size {} < 16", self.grid_size)));
        }
        if !(self.r_max > 0.0 && self.r_max.is_finite()) {
            return Err(Error::BadOptions(format!("r_max = {}", self.r_max)));
        }
        if !(self.tol_energy > 0.0 && self.tol_commutator > 0.0) {
            return Err(Error::BadOptions("tolerances must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::BadOptions("max_iterations must be positive".into()));
        }
        if !(self.level_shift >= 0.0 && self.level_shift.is_finite()) {
            return Err(Error::BadOptions(format!("level shift {}", self.level_shift)));
        }
        Ok(())
    }

    pub fn shell_seed(&self, sys: &AtomSystem) -> Vec<ShellSpec> {
        self.shells
            .clone()
            .unwrap_or_else(|| default_shells(sys, self.include_p))
    }

    pub fn resolved_l_max(&self, sys: &AtomSystem) -> usize {
        self.l_max.unwrap_or_else(|| {
            self.shell_seed(sys)
                .iter()
                .map(|s| s.ell)
                .max()
                .unwrap_or(0)
        })
    }
}
