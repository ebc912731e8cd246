use std::sync::OnceLock;

use nalgebra::DMatrix;
use relhf::analysis::{
    binding_monotonicity, decay_fit, decay_ordering_consistent, fit_occupied, herbst_bound,
    herbst_bound_check, kato_battery, minimizer_certificate, KatoProbe,
};
use relhf::coulomb::{DensityMatrix, OrbitalBlock};
use relhf::greens::nu_of_energy;
use relhf::{build_grid, solve_scf, AtomSystem, Error, RadialGrid, ScfOutcome, SolverOptions};

const ALPHA: f64 = 1.0 / 137.036;

struct Helium {
    sys: AtomSystem,
    grid: RadialGrid,
    outcome: ScfOutcome,
}

fn helium() -> &'static Helium {
    static CELL: OnceLock<Helium> = OnceLock::new();
    CELL.get_or_init(|| {
        let sys = AtomSystem::new(2.0, 2, ALPHA);
        let options = SolverOptions::default().with_grid(1200, 20.0);
        let outcome = solve_scf(&sys, &options).unwrap();
        Helium {
            sys,
            grid: build_grid(1200, 20.0).unwrap(),
            outcome,
        }
    })
}

/// Energy with decay rate `nu` for `alpha = 1`.
fn energy_for_rate(nu: f64) -> f64 {
    // nu^2 = -E (2 + E)
    -1.0 + (1.0 - nu * nu).sqrt()
}

#[test]
fn pure_exponential_rate_recovered() {
    let grid = build_grid(1200, 40.0).unwrap();
    let p = grid.sample(|r| r * (-0.5 * r).exp());
    let fit = decay_fit(&p, energy_for_rate(0.5), 1.0, &grid, None).unwrap();
    assert!((fit.beta_hat - 0.5).abs() < 1e-3, "{}", fit.beta_hat);
    assert!((fit.nu - 0.5).abs() < 1e-12);
    assert!(fit.residual < 1e-10);
}

#[test]
fn modulated_exponential_rate_recovered() {
    let grid = build_grid(1200, 40.0).unwrap();
    let p = grid.sample(|r| r * (-0.5 * r).exp() * (1.0 + 0.1 * r.sin()));
    let fit = decay_fit(&p, energy_for_rate(0.5), 1.0, &grid, None).unwrap();
    assert!((fit.beta_hat - 0.5).abs() < 2e-2, "{}", fit.beta_hat);
    assert!(fit.residual > 1e-3);
}

#[test]
fn noisy_windows_rejected() {
    let grid = build_grid(800, 20.0).unwrap();
    let p = grid.sample(|r| r * (-5.0 * r).exp());
    let e = energy_for_rate(0.5);
    assert!(matches!(
        decay_fit(&p, e, 1.0, &grid, Some((8.0, 14.0))),
        Err(Error::WindowTooNoisy(_))
    ));
    let q = grid.sample(|r| r * (-0.5 * r).exp());
    assert!(matches!(
        decay_fit(&q, e, 1.0, &grid, Some((10.0, 18.0))),
        Err(Error::WindowTooNoisy(_))
    ));
    assert!(matches!(decay_fit(&q, 0.1, 1.0, &grid, None), Err(Error::DomainError(_))));
}

#[test]
fn helium_certificate_holds() {
    let he = helium();
    let cert = minimizer_certificate(&he.outcome.density, &he.outcome.fock, &he.sys, &he.grid).unwrap();
    assert!(cert.passed);
    assert_eq!(cert.clauses.len(), 5);
    assert_eq!(cert.orbitals.len(), 2);
    for o in &cert.orbitals {
        assert!(o.epsilon_hartree < 0.0 && o.epsilon_hartree > -0.95);
    }
}

fn replace_block(gamma: &DensityMatrix, ell: usize, spin: usize, block: OrbitalBlock) -> DensityMatrix {
    let mut out = gamma.clone();
    out.insert(ell, spin, block);
    out
}

#[test]
fn half_occupation_fails_idempotency() {
    let he = helium();
    let gamma = &he.outcome.density;
    let b = gamma.block(0, 0).unwrap();
    let p = DMatrix::from_column_slice(he.grid.n(), 1, b.orbital(0));
    let bad = replace_block(gamma, 0, 0, OrbitalBlock::new(p, vec![0.5]).unwrap());
    match minimizer_certificate(&bad, &he.outcome.fock, &he.sys, &he.grid) {
        Err(Error::CertificateFailure { failed, certificate }) => {
            assert!(failed.contains(&"a_idempotency".to_string()));
            assert!(failed.contains(&"b_trace".to_string()));
            assert!(!certificate.passed);
        }
        other => panic!("expected a certificate failure, got {other:?}"),
    }
}

#[test]
fn excited_occupation_fails_aufbau() {
    let he = helium();
    let spectrum = &he.outcome.spectra[&(0, 0)];
    let scale = 1.0 / he.grid.h().sqrt();
    let excited = spectrum.vectors.column(1) * scale;
    let p = DMatrix::from_column_slice(he.grid.n(), 1, excited.as_slice());
    let bad = replace_block(&he.outcome.density, 0, 0, OrbitalBlock::new(p, vec![1.0]).unwrap());
    match minimizer_certificate(&bad, &he.outcome.fock, &he.sys, &he.grid) {
        Err(Error::CertificateFailure { failed, certificate }) => {
            assert!(failed.contains(&"c_aufbau".to_string()));
            // The first virtual level of neutral helium lies in the continuum.
            assert!(failed.contains(&"d_bound_states".to_string()));
            assert!(certificate.clause("a_idempotency").unwrap().passed);
            assert!(certificate.clause("e_hf_equations").unwrap().passed);
        }
        other => panic!("expected a certificate failure, got {other:?}"),
    }
}

#[test]
fn helium_decay_rates() {
    let he = helium();
    let fits = fit_occupied(&he.outcome.density, &he.outcome.fock, &he.grid, ALPHA).unwrap();
    assert_eq!(fits.len(), 2);
    let homo_eps = fits.iter().map(|f| f.epsilon).fold(f64::NEG_INFINITY, f64::max);
    let nu_n = nu_of_energy(homo_eps, ALPHA).unwrap();
    for f in &fits {
        assert!((f.beta_hat - f.nu).abs() <= 0.05 * f.nu, "{f:?}");
        assert!(f.beta_hat >= 0.95 * nu_n);
        // The fitted tail spans at least eight e-folds of the slowest rate.
        assert!(f.window.1 * nu_n >= 8.0);
    }
    assert!(decay_ordering_consistent(&fits));
}

#[test]
fn ordering_check_detects_inversion() {
    let grid = build_grid(1200, 40.0).unwrap();
    let slow = decay_fit(&grid.sample(|r| r * (-0.5 * r).exp()), energy_for_rate(0.5), 1.0, &grid, None).unwrap();
    let mut fast = decay_fit(&grid.sample(|r| r * (-0.8 * r).exp()), energy_for_rate(0.8), 1.0, &grid, None).unwrap();
    assert!(decay_ordering_consistent(&[slow.clone(), fast.clone()]));
    fast.beta_hat = 0.4;
    assert!(!decay_ordering_consistent(&[slow, fast]));
}

#[test]
fn herbst_bound_on_bare_operator() {
    let grid = build_grid(400, 20.0).unwrap();
    for z in [0.0, 1.0, 20.0, 87.0] {
        let sys = AtomSystem::new(z, 1, ALPHA);
        let report = herbst_bound_check(&sys, &grid, 1).unwrap();
        assert!(report.passed, "Z = {z}: {report:?}");
        assert_eq!(report.bound, herbst_bound(z, ALPHA));
        assert_eq!(report.lowest.len(), 2);
    }
    let free = herbst_bound_check(&AtomSystem::new(0.0, 1, ALPHA), &grid, 0).unwrap();
    assert!(free.lowest[0] > 0.0);
}

#[test]
fn kato_holds_on_random_functions() {
    let grid = build_grid(1200, 20.0).unwrap();
    let report = kato_battery(&grid, 100, 7).unwrap();
    assert!(report.passed, "{report:?}");
    assert!(report.max_ratio > 0.5);
}

#[test]
fn kato_ratio_for_hydrogenic_state() {
    // For u = r e^{-r}: <1/r> = 1, <|p|> = 8 / (3 pi), ratio 3/4.
    let grid = build_grid(1200, 20.0).unwrap();
    let probe = KatoProbe::new(&grid).unwrap();
    let u = grid.sample(|r| 2.0 * r * (-r).exp());
    let (lhs, rhs) = probe.probe(&u).unwrap();
    assert!((lhs - 1.0).abs() < 1e-3, "{lhs}");
    assert!((lhs / rhs - 0.75).abs() < 2e-3, "{}", lhs / rhs);
    let far = grid.sample(|r| (-(r - 10.0) * (r - 10.0)).exp());
    assert!(probe.holds(&far).unwrap());
    let (l, r) = probe.probe(&far).unwrap();
    assert!(l < 0.2 * r);
}

#[test]
fn binding_sweep_for_helium() {
    let options = SolverOptions::default().with_grid(400, 20.0);
    let table = binding_monotonicity(2.0, ALPHA, 2, &options).unwrap();
    assert!(table.passed, "{table:?}");
    assert_eq!(table.rows.len(), 2);
    assert!(table.rows[1].energy < table.rows[0].energy);
    assert!(matches!(binding_monotonicity(2.0, ALPHA, 3, &options), Err(Error::BadCount(_))));
}
