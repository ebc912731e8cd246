//! Fock operator, aufbau projection and the self-consistent field drivers
//! (optimal damping and level-shifted Roothaan iteration).

use std::collections::BTreeMap;

use log::{debug, info, warn};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coulomb::{exchange_matrix, hartree_potential, reduced_density, DensityMatrix, OrbitalBlock};
use crate::error::{Error, Result};
use crate::functional::{line_coefficients, total_energy, EnergyBreakdown};
use crate::linalg::{lowest_eigenpairs, symmetric_spectrum, SymmetricSpectrum};
use crate::model::{validate_system, Algorithm, AtomSystem, InitialGuess, SolverOptions};
use crate::radial::{build_grid, ChannelOperator, KineticModel, KineticSet, RadialGrid};

/// Channel key `(ell, spin)`.
pub type Channel = (usize, usize);

/// Everything that does not depend on the density: grid, kinetic operators
/// and the bare operators `h0_ell = T_ell - Z alpha / r` with their full
/// spectra.
#[derive(Debug, Clone)]
pub struct OneBody {
    grid: RadialGrid,
    sys: AtomSystem,
    kinetic: KineticSet,
    h0: Vec<ChannelOperator>,
}

impl OneBody {
    pub fn new(sys: &AtomSystem, grid: RadialGrid, l_max: usize, model: KineticModel) -> Result<Self> {
        let kinetic = KineticSet::build_with(&grid, sys.alpha, l_max, model)?;
        let za = sys.z * sys.alpha;
        let h0 = (0..=l_max)
            .into_par_iter()
            .map(|ell| {
                let mut m = kinetic.get(ell)?.matrix().clone();
                for i in 0..grid.n() {
                    m[(i, i)] -= za / grid.r(i);
                }
                let op = ChannelOperator::new(ell, m);
                op.spectrum()?;
                Ok(op)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid,
            sys: *sys,
            kinetic,
            h0,
        })
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn sys(&self) -> &AtomSystem {
        &self.sys
    }

    pub fn kinetic(&self) -> &KineticSet {
        &self.kinetic
    }

    pub fn l_max(&self) -> usize {
        self.h0.len() - 1
    }

    pub fn h0(&self, ell: usize) -> Result<&ChannelOperator> {
        self.h0
            .get(ell)
            .ok_or_else(|| Error::BadOptions(format!("channel l = {ell} exceeds l_max = {}", self.l_max())))
    }

    pub fn channels(&self) -> Vec<Channel> {
        let mut out = Vec::new();
        for ell in 0..=self.l_max() {
            for spin in 0..self.sys.q {
                out.push((ell, spin));
            }
        }
        out
    }
}

/// The Fock operator `h_gamma = T - Z alpha/r + alpha (R_gamma - K_gamma)`
/// per channel, as dense matrices acting on node values.
#[derive(Debug, Clone)]
pub struct FockOperator {
    channels: BTreeMap<Channel, DMatrix<f64>>,
    source: DensityMatrix,
}

impl FockOperator {
    pub fn matrix(&self, ell: usize, spin: usize) -> Option<&DMatrix<f64>> {
        self.channels.get(&(ell, spin))
    }

    pub fn channels(&self) -> impl Iterator<Item = (Channel, &DMatrix<f64>)> {
        self.channels.iter().map(|(k, v)| (*k, v))
    }

    /// The density matrix this operator was built from.
    pub fn source(&self) -> &DensityMatrix {
        &self.source
    }

    /// `h_gamma u` on one channel.
    pub fn apply(&self, ell: usize, spin: usize, u: &[f64]) -> Result<Vec<f64>> {
        let m = self
            .matrix(ell, spin)
            .ok_or_else(|| Error::BadOptions(format!("no Fock channel (l={ell}, spin={spin})")))?;
        if u.len() != m.nrows() {
            return Err(Error::LengthMismatch {
                expected: m.nrows(),
                actual: u.len(),
            });
        }
        Ok((m * DVector::from_column_slice(u)).as_slice().to_vec())
    }
}

pub fn fock_build(gamma: &DensityMatrix, one: &OneBody) -> Result<FockOperator> {
    let grid = one.grid();
    let alpha = one.sys().alpha;
    if let Some(ell) = gamma.max_ell() {
        if ell > one.l_max() {
            return Err(Error::BadOptions(format!(
                "density occupies l = {ell} beyond l_max = {}",
                one.l_max()
            )));
        }
    }
    let w = reduced_density(gamma, grid).w;
    let potential = hartree_potential(&w, grid);
    let built = one
        .channels()
        .into_par_iter()
        .map(|(ell, spin)| {
            let mut m = one.h0(ell)?.matrix().clone();
            if !gamma.is_empty() {
                let k = exchange_matrix(gamma, ell, spin, grid);
                m -= k * alpha;
                for i in 0..grid.n() {
                    m[(i, i)] += alpha * potential[i];
                }
                crate::linalg::symmetrize(&mut m);
            }
            Ok(((ell, spin), m))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FockOperator {
        channels: built.into_iter().collect(),
        source: gamma.clone(),
    })
}

/// Lowest eigenpairs of every Fock channel. Eigenvectors are unit vectors in
/// the Euclidean sense; divide by `sqrt(h)` for grid-normalized orbitals.
pub type ChannelSpectra = BTreeMap<Channel, SymmetricSpectrum>;

fn states_needed(n_electrons: f64, ell: usize) -> usize {
    (n_electrons / (2 * ell + 1) as f64).ceil() as usize + 3
}

pub fn fock_spectra(
    fock: &FockOperator,
    one: &OneBody,
    shift: Option<&BTreeMap<Channel, f64>>,
    warm: Option<&ChannelSpectra>,
) -> Result<ChannelSpectra> {
    let n_el = one.sys().n_electrons as f64;
    let h = one.grid().h();
    let results = fock
        .channels()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|((ell, spin), m)| {
            let mut m = m.clone();
            if let Some(level) = shift.and_then(|s| s.get(&(ell, spin))) {
                // Raise everything outside the occupied space of the source density.
                for i in 0..m.nrows() {
                    m[(i, i)] += level;
                }
                if let Some(b) = fock.source().block(ell, spin) {
                    let x = &b.orbitals * h.sqrt();
                    let xx = &x * x.transpose();
                    m -= xx * *level;
                }
            }
            let k = states_needed(n_el, ell).min(m.nrows());
            let reference = one.h0(ell)?.spectrum()?;
            let guesses = warm.and_then(|w| w.get(&(ell, spin))).map(|s| &s.vectors);
            let scale = m.diagonal().amax().max(one.sys().alpha);
            let spectrum = lowest_eigenpairs(&m, k, reference, guesses, 1e-12 * scale)?;
            Ok(((ell, spin), spectrum))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(results.into_iter().collect())
}

/// Aufbau filling of the given channel spectra with `n_electrons`.
///
/// Levels are taken in ascending order; levels within `tie_tol` of each
/// other are filled lower `ell` first, then lower spin. Each level holds
/// `2 ell + 1` electrons; only the last one filled can be fractional.
pub fn aufbau_from_spectra(
    spectra: &ChannelSpectra,
    n_electrons: f64,
    tie_tol: f64,
    grid: &RadialGrid,
) -> Result<DensityMatrix> {
    let mut levels: Vec<(f64, usize, usize, usize)> = spectra
        .iter()
        .flat_map(|(&(ell, spin), s)| s.values.iter().enumerate().map(move |(i, &e)| (e, ell, spin, i)))
        .collect();
    levels.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2, a.3).cmp(&(b.1, b.2, b.3))));
    let mut ordered = Vec::with_capacity(levels.len());
    let mut start = 0;
    while start < levels.len() {
        let mut end = start + 1;
        while end < levels.len() && levels[end].0 - levels[start].0 <= tie_tol {
            end += 1;
        }
        let mut cluster = levels[start..end].to_vec();
        cluster.sort_by_key(|l| (l.1, l.2, l.3));
        ordered.extend(cluster);
        start = end;
    }

    let mut remaining = n_electrons;
    let mut chosen: BTreeMap<Channel, Vec<(usize, f64)>> = BTreeMap::new();
    for (_, ell, spin, idx) in ordered {
        if remaining <= 1e-12 {
            break;
        }
        let capacity = (2 * ell + 1) as f64;
        let electrons = remaining.min(capacity);
        chosen.entry((ell, spin)).or_default().push((idx, electrons / capacity));
        remaining -= electrons;
    }
    if remaining > 1e-12 {
        return Err(Error::BadCount(format!(
            "not enough states to place {n_electrons} electrons"
        )));
    }

    let scale = 1.0 / grid.h().sqrt();
    let mut gamma = DensityMatrix::empty();
    for ((ell, spin), picks) in chosen {
        let s = &spectra[&(ell, spin)];
        let columns: Vec<DVector<f64>> = picks.iter().map(|&(i, _)| s.vectors.column(i) * scale).collect();
        let lambdas = picks.iter().map(|&(_, l)| l).collect();
        gamma.insert(ell, spin, OrbitalBlock::new(DMatrix::from_columns(&columns), lambdas)?);
    }
    Ok(gamma)
}

fn tie_tolerance(sys: &AtomSystem) -> f64 {
    1e-9 * sys.alpha
}

/// Aufbau projection of `fock` filled with the system's electron count.
pub fn aufbau_projection(fock: &FockOperator, one: &OneBody) -> Result<DensityMatrix> {
    aufbau_with_count(fock, one, one.sys().n_electrons as f64)
}

pub fn aufbau_with_count(fock: &FockOperator, one: &OneBody, n_electrons: f64) -> Result<DensityMatrix> {
    let spectra = fock_spectra(fock, one, None, None)?;
    aufbau_from_spectra(&spectra, n_electrons, tie_tolerance(one.sys()), one.grid())
}

/// `||[h_gamma, gamma]||_F` summed over channels, each channel counted
/// `2 ell + 1` times. With `gamma = X L X^T`, `B = F X = X Q + B_perp` and
/// `Q = X^T F X`, the squared norm splits into `||Q L - L Q||^2 + 2 ||B_perp L||^2`.
pub fn commutator_norm(fock: &FockOperator, gamma: &DensityMatrix, grid: &RadialGrid) -> Result<f64> {
    let h = grid.h();
    let mut total = 0.0;
    for ((ell, spin), block) in gamma.blocks() {
        let f = fock
            .matrix(ell, spin)
            .ok_or_else(|| Error::BadOptions(format!("no Fock channel (l={ell}, spin={spin})")))?;
        let x = &block.orbitals * h.sqrt();
        let b = f * &x;
        let q = x.tr_mul(&b);
        let b_perp = &b - &x * &q;
        let lam = DMatrix::from_diagonal(&DVector::from_vec(block.occupations.clone()));
        let inner = &q * &lam - &lam * &q;
        let cross = b_perp * &lam;
        total += (2 * ell + 1) as f64 * (inner.norm_squared() + 2.0 * cross.norm_squared());
    }
    Ok(total.sqrt())
}

/// `max_a min(lambda_a, 1 - lambda_a)`.
pub fn impurity(gamma: &DensityMatrix) -> f64 {
    gamma
        .orbitals()
        .map(|o| o.lambda.min(1.0 - o.lambda).max(0.0))
        .fold(0.0, f64::max)
}

/// Rotates orbitals within groups of equal occupation so that each group
/// diagonalizes the Fock operator; orbitals inside a group are ordered by
/// their diagonal Fock value.
pub fn canonicalize(gamma: &DensityMatrix, fock: &FockOperator, grid: &RadialGrid) -> Result<DensityMatrix> {
    let h = grid.h();
    let mut out = DensityMatrix::empty();
    for ((ell, spin), block) in gamma.blocks() {
        let f = fock
            .matrix(ell, spin)
            .ok_or_else(|| Error::BadOptions(format!("no Fock channel (l={ell}, spin={spin})")))?;
        let mut order: Vec<usize> = (0..block.len()).collect();
        order.sort_by(|&a, &b| block.occupations[b].total_cmp(&block.occupations[a]));
        let mut columns = Vec::new();
        let mut lambdas = Vec::new();
        let mut start = 0;
        while start < order.len() {
            let l0 = block.occupations[order[start]];
            let mut end = start + 1;
            while end < order.len() && (block.occupations[order[end]] - l0).abs() <= 1e-10 {
                end += 1;
            }
            let group: Vec<DVector<f64>> = order[start..end]
                .iter()
                .map(|&a| block.orbitals.column(a).into_owned())
                .collect();
            let p = DMatrix::from_columns(&group);
            let mut small = p.tr_mul(&(f * &p)) * h;
            crate::linalg::symmetrize(&mut small);
            let s = symmetric_spectrum(&small)?;
            let rotated = p * &s.vectors;
            for j in 0..rotated.ncols() {
                columns.push(rotated.column(j).into_owned());
                let group_mean: f64 =
                    order[start..end].iter().map(|&a| block.occupations[a]).sum::<f64>() / (end - start) as f64;
                lambdas.push(group_mean);
            }
            start = end;
        }
        let mut orbitals = DMatrix::from_columns(&columns);
        crate::linalg::fix_signs(&mut orbitals);
        out.insert(ell, spin, OrbitalBlock::new(orbitals, lambdas)?);
    }
    Ok(out)
}

/// One Fock eigenvalue with the amount of density it carries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub ell: usize,
    pub spin: usize,
    pub index: usize,
    /// Eigenvalue of `h_gamma`.
    pub epsilon: f64,
    /// `alpha^-1 * epsilon`, in Hartree.
    pub epsilon_hartree: f64,
    /// `<x, gamma x>` for the eigenvector `x`, in `[0, 1]`.
    pub occupation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub iteration: usize,
    pub energy: f64,
    pub delta_energy: f64,
    pub commutator: f64,
    /// Step length along the segment towards the aufbau projection (1 for Roothaan steps).
    pub step: f64,
    pub slope: f64,
    pub curvature: f64,
    /// Lowest eigenvalue of the `ell = 0` Fock channel at the start of the step.
    pub lowest_s_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScfReport {
    pub algorithm: Algorithm,
    pub converged: bool,
    pub iterations: usize,
    /// Energies of the initial guess and of every iterate.
    pub energy_trace: Vec<EnergyBreakdown>,
    pub steps: Vec<StepRecord>,
    pub energy: EnergyBreakdown,
    pub levels: Vec<Level>,
    pub commutator: f64,
    pub impurity: f64,
    pub trace: f64,
    /// `N >= Z + 1`: existence of a minimizer is not guaranteed in this regime.
    pub beyond_binding_regime: bool,
}

#[derive(Debug, Clone)]
pub struct ScfOutcome {
    pub report: ScfReport,
    pub density: DensityMatrix,
    pub fock: FockOperator,
    pub spectra: ChannelSpectra,
}

/// Result of one optimal-damping update.
#[derive(Debug, Clone)]
pub struct OdaStep {
    pub density: DensityMatrix,
    pub energy: EnergyBreakdown,
    pub step: f64,
    pub slope: f64,
    pub curvature: f64,
}

/// Line search from `gamma` towards the aufbau projection of its Fock operator.
pub fn oda_update(
    gamma: &DensityMatrix,
    energy: &EnergyBreakdown,
    spectra: &ChannelSpectra,
    one: &OneBody,
) -> Result<OdaStep> {
    let grid = one.grid();
    let sys = one.sys();
    let target = aufbau_from_spectra(spectra, gamma.trace(), tie_tolerance(sys), grid)?;
    let line = line_coefficients(gamma, &target, grid, sys, one.kinetic())?;
    let t = line.optimal_step();
    let density = if t == 0.0 {
        gamma.clone()
    } else if t == 1.0 {
        target
    } else {
        gamma.mix(&target, t, grid)?
    };
    let new_energy = total_energy(&density, grid, sys, one.kinetic())?;
    let before = energy.total;
    if new_energy.total > before + 1e-12 * (1.0 + before.abs()) {
        return Err(Error::LineSearchFailure {
            before,
            after: new_energy.total,
        });
    }
    Ok(OdaStep {
        density,
        energy: new_energy,
        step: t,
        slope: line.a,
        curvature: line.b,
    })
}

/// Builds `h_gamma`, solves for its low-lying spectrum and performs one
/// optimal-damping update.
pub fn oda_step(gamma: &DensityMatrix, one: &OneBody) -> Result<OdaStep> {
    let fock = fock_build(gamma, one)?;
    let spectra = fock_spectra(&fock, one, None, None)?;
    let energy = total_energy(gamma, one.grid(), one.sys(), one.kinetic())?;
    oda_update(gamma, &energy, &spectra, one)
}

/// Initial density matrix.
pub fn initial_guess(one: &OneBody, options: &SolverOptions) -> Result<DensityMatrix> {
    let sys = one.sys();
    let mut spectra = ChannelSpectra::new();
    for (ell, spin) in one.channels() {
        let k = states_needed(sys.n_electrons as f64, ell).min(one.grid().n());
        spectra.insert((ell, spin), one.h0(ell)?.spectrum()?.truncated(k));
    }
    match options.initial_guess {
        InitialGuess::Core => {
            aufbau_from_spectra(&spectra, sys.n_electrons as f64, tie_tolerance(sys), one.grid())
        }
        InitialGuess::Shells => {
            let scale = 1.0 / one.grid().h().sqrt();
            let mut per_channel: BTreeMap<Channel, Vec<f64>> = BTreeMap::new();
            for shell in options.shell_seed(sys) {
                per_channel
                    .entry((shell.ell, shell.spin))
                    .or_default()
                    .push(shell.occupation / shell.capacity());
            }
            let mut gamma = DensityMatrix::empty();
            for ((ell, spin), lambdas) in per_channel {
                let s = spectra.get(&(ell, spin)).ok_or_else(|| {
                    Error::BadOptions(format!("shell (l={ell}, spin={spin}) outside the channel set"))
                })?;
                if lambdas.len() > s.len() {
                    return Err(Error::BadOptions(format!(
                        "too many shells in channel (l={ell}, spin={spin})"
                    )));
                }
                let columns: Vec<DVector<f64>> =
                    (0..lambdas.len()).map(|i| s.vectors.column(i) * scale).collect();
                gamma.insert(ell, spin, OrbitalBlock::new(DMatrix::from_columns(&columns), lambdas)?);
            }
            Ok(gamma)
        }
    }
}

/// Levels of every channel with the occupation `gamma` assigns to each.
pub fn levels(spectra: &ChannelSpectra, gamma: &DensityMatrix, grid: &RadialGrid, alpha: f64) -> Vec<Level> {
    let h = grid.h();
    let mut out = Vec::new();
    for (&(ell, spin), s) in spectra {
        let block = gamma.block(ell, spin);
        for i in 0..s.len() {
            let x = s.vectors.column(i);
            let occupation = block
                .map(|b| {
                    let c = b.orbitals.tr_mul(&x) * h.sqrt();
                    c.iter().zip(&b.occupations).map(|(c, l)| l * c * c).sum()
                })
                .unwrap_or(0.0);
            out.push(Level {
                ell,
                spin,
                index: i,
                epsilon: s.values[i],
                epsilon_hartree: s.values[i] / alpha,
                occupation,
            });
        }
    }
    out.sort_by(|a, b| {
        a.epsilon
            .total_cmp(&b.epsilon)
            .then((a.ell, a.spin, a.index).cmp(&(b.ell, b.spin, b.index)))
    });
    out
}

/// Minimizes the Hartree-Fock functional for `sys`.
pub fn solve_scf(sys: &AtomSystem, options: &SolverOptions) -> Result<ScfOutcome> {
    let sys = validate_system(*sys)?;
    options.validate()?;
    let grid = build_grid(options.grid_size, options.r_max)?;
    let one = OneBody::new(&sys, grid, options.resolved_l_max(&sys), options.kinetic_model)?;
    solve_with(&one, options)
}

/// [`solve_scf`] on prepared one-body operators.
pub fn solve_with(one: &OneBody, options: &SolverOptions) -> Result<ScfOutcome> {
    let sys = *one.sys();
    let grid = one.grid();
    let beyond = sys.n_electrons as f64 >= sys.z + 1.0;
    if beyond {
        warn!(
            "N = {} >= Z + 1 = {}: a minimizer need not exist",
            sys.n_electrons,
            sys.z + 1.0
        );
    }

    let mut gamma = initial_guess(one, options)?;
    let mut energy = total_energy(&gamma, grid, &sys, one.kinetic())?;
    let mut energy_trace = vec![energy];
    let mut steps = Vec::new();
    let mut spectra: Option<ChannelSpectra> = None;
    let mut delta = f64::INFINITY;
    let mut shift = options.level_shift * sys.alpha;
    let mut last_delta_sign = 0.0;
    info!(
        "SCF start: Z = {}, N = {}, alpha = {:.6e}, n = {}, r_max = {}, E0 = {:.12}",
        sys.z,
        sys.n_electrons,
        sys.alpha,
        grid.n(),
        grid.r_max(),
        energy.total
    );

    let mut iterations = 0;
    let mut converged = false;
    let (fock, final_spectra, commutator) = loop {
        let fock = fock_build(&gamma, one)?;
        let current = fock_spectra(&fock, one, None, spectra.as_ref())?;
        let commutator = commutator_norm(&fock, &gamma, grid)?;
        let purity = impurity(&gamma);
        debug!(
            "iteration {iterations}: E = {:.14}, dE = {delta:.3e}, comm = {commutator:.3e}, impurity = {purity:.3e}",
            energy.total
        );
        if delta.abs() < options.tol_energy && commutator < options.tol_commutator && purity <= 1e-6 {
            converged = true;
            break (fock, current, commutator);
        }
        if iterations >= options.max_iterations {
            break (fock, current, commutator);
        }
        iterations += 1;
        let lowest_s = current
            .iter()
            .filter(|((ell, _), _)| *ell == 0)
            .map(|(_, s)| s.values[0])
            .fold(f64::INFINITY, f64::min);

        let (next, next_energy, step, slope, curvature) = match options.algorithm {
            Algorithm::OptimalDamping => {
                let s = oda_update(&gamma, &energy, &current, one)?;
                (s.density, s.energy, s.step, s.slope, s.curvature)
            }
            Algorithm::RoothaanLevelShift => {
                let mut shifts = BTreeMap::new();
                for ch in one.channels() {
                    shifts.insert(ch, shift);
                }
                let shifted = fock_spectra(&fock, one, Some(&shifts), Some(&current))?;
                let next = aufbau_from_spectra(&shifted, gamma.trace(), tie_tolerance(&sys), grid)?;
                let e = total_energy(&next, grid, &sys, one.kinetic())?;
                (next, e, 1.0, f64::NAN, f64::NAN)
            }
        };
        delta = next_energy.total - energy.total;
        if options.algorithm == Algorithm::RoothaanLevelShift {
            let sign = delta.signum();
            if last_delta_sign * sign < 0.0 && delta.abs() > options.tol_energy {
                shift *= 0.5;
                debug!("energy oscillation detected; level shift lowered to {shift:.3e}");
            }
            last_delta_sign = sign;
        }
        steps.push(StepRecord {
            iteration: iterations,
            energy: next_energy.total,
            delta_energy: delta,
            commutator,
            step,
            slope,
            curvature,
            lowest_s_eigenvalue: lowest_s,
        });
        gamma = next;
        energy = next_energy;
        energy_trace.push(energy);
        spectra = Some(current);
    };

    let density = canonicalize(&gamma, &fock, grid)?;
    let report = ScfReport {
        algorithm: options.algorithm,
        converged,
        iterations,
        energy_trace,
        steps,
        energy,
        levels: levels(&final_spectra, &density, grid, sys.alpha),
        commutator,
        impurity: impurity(&density),
        trace: density.trace(),
        beyond_binding_regime: beyond,
    };
    info!(
        "SCF {} after {} iterations: E = {:.12}, commutator = {:.3e}",
        if converged { "converged" } else { "stopped" },
        iterations,
        energy.total,
        commutator
    );
    let outcome = ScfOutcome {
        report,
        density,
        fock,
        spectra: final_spectra,
    };
    if converged {
        Ok(outcome)
    } else {
        Err(Error::NotConverged(Box::new(outcome)))
    }
}
