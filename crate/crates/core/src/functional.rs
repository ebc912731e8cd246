//! The Hartree-Fock energy functional on density matrices, the rank-two
//! perturbation identity and the exact quadratic line restriction.

use serde::{Deserialize, Serialize};

use crate::coulomb::{
    energy_terms, exchange_apply, exchange_integral, hartree_potential, multipoles,
    occupation_spectrum, reduced_density, slater_yk, threej, DensityMatrix,
};
use crate::error::{Error, Result};
use crate::model::AtomSystem;
use crate::radial::{inner, KineticSet, RadialGrid};

/// Energy components in Hartree. `nuclear` is the positive attraction
/// magnitude, so `total = kinetic - nuclear + direct - exchange`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub nuclear: f64,
    pub direct: f64,
    pub exchange: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub const ZERO: EnergyBreakdown = EnergyBreakdown {
        kinetic: 0.0,
        nuclear: 0.0,
        direct: 0.0,
        exchange: 0.0,
        total: 0.0,
    };
}

/// `E(gamma) >= -alpha^-2 Tr gamma`, with a relative slack of `1e-12`.
pub fn check_lower_bound(total: f64, trace: f64, alpha: f64) -> Result<()> {
    let bound = -trace / (alpha * alpha);
    if total < bound - 1e-12 * bound.abs() {
        return Err(Error::LowerBoundViolated {
            energy: total,
            bound,
        });
    }
    Ok(())
}

/// `alpha^-1 Tr[h0 gamma] + D(gamma) - Ex(gamma)`. Fails if the result lies
/// below `-alpha^-2 Tr gamma`.
pub fn total_energy(
    gamma: &DensityMatrix,
    grid: &RadialGrid,
    sys: &AtomSystem,
    kinetic: &KineticSet,
) -> Result<EnergyBreakdown> {
    let terms = energy_terms(gamma, grid, sys, kinetic)?;
    let inv_alpha = sys.inv_alpha();
    let kinetic_energy = inv_alpha * terms.kinetic_trace;
    let nuclear = inv_alpha * terms.nuclear_trace;
    let total = kinetic_energy - nuclear + terms.direct - terms.exchange;
    if !total.is_finite() {
        return Err(Error::NonFiniteEnergy("total"));
    }
    check_lower_bound(total, gamma.trace(), sys.alpha)?;
    Ok(EnergyBreakdown {
        kinetic: kinetic_energy,
        nuclear,
        direct: terms.direct,
        exchange: terms.exchange,
        total,
    })
}

/// `<u, h_gamma u>` on channel `(ell, spin)`, in the units of the Fock
/// operator `T - Z alpha/r + alpha (R - K)`.
pub fn fock_expectation(
    gamma: &DensityMatrix,
    ell: usize,
    spin: usize,
    u: &[f64],
    grid: &RadialGrid,
    sys: &AtomSystem,
    kinetic: &KineticSet,
) -> Result<f64> {
    let t = kinetic.get(ell)?.form(grid, u, u)?;
    let w = reduced_density(gamma, grid).w;
    let r_pot = hartree_potential(&w, grid);
    let za = sys.z * sys.alpha;
    let h = grid.h();
    let mut local = 0.0;
    for i in 0..grid.n() {
        local += u[i] * u[i] * (sys.alpha * r_pot[i] - za / grid.r(i));
    }
    let ku = exchange_apply(gamma, ell, spin, u, grid);
    let k = inner(grid, u, &ku)?;
    Ok(t + h * local - sys.alpha * k)
}

/// A normalized radial function on a given channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector {
    pub ell: usize,
    pub spin: usize,
    pub values: Vec<f64>,
}

/// Energy change when `eps_i` times the `(2 ell_i + 1)`-fold degenerate
/// projector onto `u_i` is added to `gamma`, from the exact expansion of the
/// quadratic functional:
/// `alpha^-1 sum_i f_i <u_i, h_gamma u_i> + (D - Ex)` of the perturbation
/// alone, with `f_i = eps_i (2 ell_i + 1)`.
pub fn rank2_delta(
    gamma: &DensityMatrix,
    u1: &ChannelVector,
    u2: &ChannelVector,
    eps1: f64,
    eps2: f64,
    grid: &RadialGrid,
    sys: &AtomSystem,
    kinetic: &KineticSet,
) -> Result<f64> {
    check_admissible(gamma, &[(u1, eps1), (u2, eps2)], grid)?;
    let parts = [(u1, eps1), (u2, eps2)];
    let mut delta = 0.0;
    for (u, eps) in parts {
        if eps != 0.0 {
            let f = eps * (2 * u.ell + 1) as f64;
            delta += sys.inv_alpha() * f * fock_expectation(gamma, u.ell, u.spin, &u.values, grid, sys, kinetic)?;
        }
    }
    for (i, (ui, ei)) in parts.iter().enumerate() {
        for (j, (uj, ej)) in parts.iter().enumerate().skip(i) {
            let fi = ei * (2 * ui.ell + 1) as f64;
            let fj = ej * (2 * uj.ell + 1) as f64;
            if fi == 0.0 || fj == 0.0 {
                continue;
            }
            let rho_j: Vec<f64> = uj.values.iter().map(|x| x * x).collect();
            let y = slater_yk(&ui.values, &ui.values, 0, grid);
            let direct: f64 = grid.h()
                * (0..grid.n())
                    .map(|m| y[m] / grid.r(m) * rho_j[m])
                    .sum::<f64>();
            let mut exchange = 0.0;
            if ui.spin == uj.spin {
                for k in multipoles(ui.ell, uj.ell) {
                    let t = threej(ui.ell, k, uj.ell);
                    if t != 0.0 {
                        exchange += t * t * exchange_integral(&ui.values, &uj.values, k, grid);
                    }
                }
            }
            let factor = if i == j { 0.5 } else { 1.0 };
            delta += factor * fi * fj * (direct - exchange);
        }
    }
    Ok(delta)
}

/// Checks that adding `eps * |u><u|` terms to `gamma` keeps every channel's
/// occupations in `[0, 1]`.
pub fn check_admissible(
    gamma: &DensityMatrix,
    perturbations: &[(&ChannelVector, f64)],
    grid: &RadialGrid,
) -> Result<()> {
    let mut channels: Vec<(usize, usize)> = perturbations
        .iter()
        .filter(|(_, e)| *e != 0.0)
        .map(|(u, _)| (u.ell, u.spin))
        .collect();
    channels.sort_unstable();
    channels.dedup();
    for (ell, spin) in channels {
        let mut columns = Vec::new();
        let mut weights = Vec::new();
        if let Some(b) = gamma.block(ell, spin) {
            for a in 0..b.len() {
                columns.push(nalgebra::DVector::from_column_slice(b.orbital(a)));
                weights.push(b.occupations[a]);
            }
        }
        for (u, eps) in perturbations {
            if u.ell == ell && u.spin == spin && *eps != 0.0 {
                if u.values.len() != grid.n() {
                    return Err(Error::LengthMismatch {
                        expected: grid.n(),
                        actual: u.values.len(),
                    });
                }
                columns.push(nalgebra::DVector::from_column_slice(&u.values));
                weights.push(*eps);
            }
        }
        let p = nalgebra::DMatrix::from_columns(&columns);
        let (_, occ) = occupation_spectrum(&p, &weights, grid)?;
        if let (Some(lo), Some(hi)) = (occ.values.iter().copied().reduce(f64::min), occ.values.iter().copied().reduce(f64::max)) {
            if lo < -1e-10 || hi > 1.0 + 1e-10 {
                return Err(Error::NotAdmissible(format!(
                    "channel (l={ell}, spin={spin}) would have occupations in [{lo:.3e}, {hi:.6}]"
                )));
            }
        }
    }
    Ok(())
}

/// `gamma + sum eps_i |u_i><u_i|` as a density matrix in natural orbitals.
pub fn perturbed(
    gamma: &DensityMatrix,
    perturbations: &[(&ChannelVector, f64)],
    grid: &RadialGrid,
) -> Result<DensityMatrix> {
    check_admissible(gamma, perturbations, grid)?;
    let mut extra = DensityMatrix::empty();
    for (u, eps) in perturbations {
        if *eps == 0.0 {
            continue;
        }
        let mut cols = Vec::new();
        let mut occ = Vec::new();
        if let Some(b) = extra.block(u.ell, u.spin) {
            cols.extend(b.orbitals.column_iter().map(|c| c.into_owned()));
            occ.extend(b.occupations.iter().copied());
        }
        cols.push(nalgebra::DVector::from_column_slice(&u.values));
        occ.push(*eps);
        extra.insert(
            u.ell,
            u.spin,
            crate::coulomb::OrbitalBlock::new(nalgebra::DMatrix::from_columns(&cols), occ)?,
        );
    }
    combine(gamma, &extra, grid)
}

fn combine(a: &DensityMatrix, b: &DensityMatrix, grid: &RadialGrid) -> Result<DensityMatrix> {
    let mut keys: Vec<(usize, usize)> = a.blocks().map(|(k, _)| k).collect();
    keys.extend(b.blocks().map(|(k, _)| k));
    keys.sort_unstable();
    keys.dedup();
    let mut out = DensityMatrix::empty();
    for (ell, spin) in keys {
        let mut columns = Vec::new();
        let mut weights = Vec::new();
        for source in [a, b] {
            if let Some(block) = source.block(ell, spin) {
                for j in 0..block.len() {
                    columns.push(block.orbitals.column(j).into_owned());
                    weights.push(block.occupations[j]);
                }
            }
        }
        let block = crate::coulomb::natural_orbitals(
            &nalgebra::DMatrix::from_columns(&columns),
            &weights,
            grid,
        )?;
        out.insert(ell, spin, block);
    }
    Ok(out)
}

/// Coefficients of `E((1-t) gamma + t target) = e0 + a t + b t^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineCoefficients {
    pub a: f64,
    pub b: f64,
    pub e0: EnergyBreakdown,
    pub e1: EnergyBreakdown,
}

impl LineCoefficients {
    /// Minimizer of `a t + b t^2` over `[0, 1]`.
    pub fn optimal_step(&self) -> f64 {
        let (a, b) = (self.a, self.b);
        if b > 0.0 {
            (-a / (2.0 * b)).clamp(0.0, 1.0)
        } else if a + b < 0.0 {
            1.0
        } else {
            0.0
        }
    }

    pub fn predicted(&self, t: f64) -> f64 {
        self.e0.total + self.a * t + self.b * t * t
    }
}

/// `a = alpha^-1 Tr[h_gamma (target - gamma)]` and `b = E(target) - E(gamma) - a`.
pub fn line_coefficients(
    gamma: &DensityMatrix,
    target: &DensityMatrix,
    grid: &RadialGrid,
    sys: &AtomSystem,
    kinetic: &KineticSet,
) -> Result<LineCoefficients> {
    let (t0, t1) = (gamma.trace(), target.trace());
    if (t0 - t1).abs() > 1e-9 * t0.abs().max(1.0) {
        return Err(Error::TraceMismatch(t0, t1));
    }
    let e0 = total_energy(gamma, grid, sys, kinetic)?;
    let e1 = total_energy(target, grid, sys, kinetic)?;
    let mut a = 0.0;
    for (source, sign) in [(target, 1.0), (gamma, -1.0)] {
        for o in source.orbitals() {
            let f = o.shell_occupation();
            if f != 0.0 {
                a += sign * f * fock_expectation(gamma, o.ell, o.spin, o.p, grid, sys, kinetic)?;
            }
        }
    }
    a *= sys.inv_alpha();
    Ok(LineCoefficients {
        a,
        b: e1.total - e0.total - a,
        e0,
        e1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coulomb::OrbitalBlock;
    use crate::radial::build_grid;
    use nalgebra::DMatrix;

    fn setup() -> (RadialGrid, AtomSystem, KineticSet) {
        let grid = build_grid(150, 15.0).unwrap();
        let sys = AtomSystem::new(2.0, 2, 0.05);
        let kinetic = KineticSet::build(&grid, sys.alpha, 1).unwrap();
        (grid, sys, kinetic)
    }

    fn normalized(grid: &RadialGrid, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let v = grid.sample(f);
        let norm = inner(grid, &v, &v).unwrap().sqrt();
        v.iter().map(|x| x / norm).collect()
    }

    fn single(grid: &RadialGrid, ell: usize, spin: usize, p: &[f64], lambda: f64) -> DensityMatrix {
        DensityMatrix::empty().with_block(
            ell,
            spin,
            OrbitalBlock::new(DMatrix::from_column_slice(grid.n(), 1, p), vec![lambda]).unwrap(),
        )
    }

    #[test]
    fn empty_gamma_has_zero_energy() {
        let (grid, sys, kinetic) = setup();
        let e = total_energy(&DensityMatrix::empty(), &grid, &sys, &kinetic).unwrap();
        assert_eq!(e, EnergyBreakdown::ZERO);
    }

    #[test]
    fn one_electron_interaction_cancels() {
        let (grid, sys, kinetic) = setup();
        let p = normalized(&grid, |r| r * (-2.0 * r).exp());
        let gamma = single(&grid, 0, 0, &p, 1.0);
        let e = total_energy(&gamma, &grid, &sys, &kinetic).unwrap();
        assert!((e.direct - e.exchange).abs() <= 1e-12 * e.direct);
        let one_body = sys.inv_alpha()
            * fock_expectation(&DensityMatrix::empty(), 0, 0, &p, &grid, &sys, &kinetic).unwrap();
        assert!((e.total - one_body).abs() <= 1e-12 * one_body.abs());
    }

    #[test]
    fn optimal_step_cases() {
        let mk = |a, b| LineCoefficients {
            a,
            b,
            e0: EnergyBreakdown::ZERO,
            e1: EnergyBreakdown::ZERO,
        };
        assert_eq!(mk(-1.0, 1.0).optimal_step(), 0.5);
        assert_eq!(mk(-3.0, 1.0).optimal_step(), 1.0);
        assert_eq!(mk(1.0, 1.0).optimal_step(), 0.0);
        assert_eq!(mk(-1.0, -1.0).optimal_step(), 1.0);
        assert_eq!(mk(1.0, -0.5).optimal_step(), 0.0);
    }

    #[test]
    fn rank2_zero_perturbation() {
        let (grid, sys, kinetic) = setup();
        let p = normalized(&grid, |r| r * (-2.0 * r).exp());
        let gamma = single(&grid, 0, 0, &p, 1.0);
        let u = ChannelVector {
            ell: 0,
            spin: 1,
            values: p.clone(),
        };
        assert_eq!(rank2_delta(&gamma, &u, &u, 0.0, 0.0, &grid, &sys, &kinetic).unwrap(), 0.0);
    }

    #[test]
    fn rank2_rejects_overfilling() {
        let (grid, sys, kinetic) = setup();
        let p = normalized(&grid, |r| r * (-2.0 * r).exp());
        let gamma = single(&grid, 0, 0, &p, 1.0);
        let u = ChannelVector {
            ell: 0,
            spin: 0,
            values: p,
        };
        let v = ChannelVector {
            ell: 0,
            spin: 1,
            values: vec![0.0; grid.n()],
        };
        assert!(matches!(
            rank2_delta(&gamma, &u, &v, 0.5, 0.0, &grid, &sys, &kinetic),
            Err(Error::NotAdmissible(_))
        ));
    }

    #[test]
    fn line_coefficients_identical_arguments() {
        let (grid, sys, kinetic) = setup();
        let p = normalized(&grid, |r| r * (-2.0 * r).exp());
        let gamma = single(&grid, 0, 0, &p, 1.0);
        let c = line_coefficients(&gamma, &gamma, &grid, &sys, &kinetic).unwrap();
        assert!(c.a.abs() < 1e-12 * c.e0.total.abs());
        assert!(c.b.abs() < 1e-12 * c.e0.total.abs());
    }

    #[test]
    fn line_coefficients_trace_mismatch() {
        let (grid, sys, kinetic) = setup();
        let p = normalized(&grid, |r| r * (-2.0 * r).exp());
        let g1 = single(&grid, 0, 0, &p, 1.0);
        let g2 = single(&grid, 0, 0, &p, 0.5);
        assert!(matches!(
            line_coefficients(&g1, &g2, &grid, &sys, &kinetic),
            Err(Error::TraceMismatch(_, _))
        ));
    }
}
