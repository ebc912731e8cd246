//! The four pipelines behind the subcommands.

use log::{info, warn};
use relhf::analysis::{
    binding_monotonicity, decay_fit, decay_ordering_consistent, fit_occupied, herbst_bound_check,
    kato_battery, minimizer_certificate, orbital_label, Certificate, DecayFit,
};
use relhf::greens::{greens_kernel, resolvent_check, GreensKernel, KernelMesh, ResolventReport};
use relhf::scf::ScfOutcome;
use relhf::{build_grid, solve_scf, Error, RadialGrid, ScfReport};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::output;
use crate::CliError;

/// Relative tolerance of the decay-rate checks.
pub const DECAY_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub status: Status,
    pub detail: Value,
}

impl SuiteResult {
    fn new(name: &str, status: Status, detail: Value) -> Self {
        Self {
            name: name.to_string(),
            status,
            detail,
        }
    }
}

#[derive(Serialize)]
struct SolveFile<'a> {
    timestamp: u64,
    config: &'a RunConfig,
    report: &'a ScfReport,
    certificate: Option<&'a Certificate>,
    certificate_error: Option<String>,
}

/// Solves, writes `report.json`, `orbitals.csv` and `energy_trace.csv`, and
/// checks the minimizer certificate of a converged run.
pub fn run_solve(config: &RunConfig) -> Result<(), CliError> {
    output::ensure_dir(&config.output_dir)?;
    let grid = build_grid(config.options.grid_size, config.options.r_max)?;
    let (outcome, converged) = solve(config)?;
    let certificate = if converged {
        Some(minimizer_certificate(&outcome.density, &outcome.fock, &config.system, &grid))
    } else {
        None
    };
    let (cert, cert_err) = match &certificate {
        Some(Ok(c)) => (Some(c), None),
        Some(Err(Error::CertificateFailure { certificate, failed })) => {
            (Some(certificate.as_ref()), Some(format!("failed clauses: {}", failed.join(", "))))
        }
        Some(Err(e)) => (None, Some(e.to_string())),
        None => (None, Some("not computed: the SCF did not converge".into())),
    };
    let dir = &config.output_dir;
    output::write_orbitals(&dir.join("orbitals.csv"), &outcome.density, &grid)?;
    output::write_energy_trace(&dir.join("energy_trace.csv"), &outcome.report)?;
    output::write_json(
        &dir.join("report.json"),
        &SolveFile {
            timestamp: output::timestamp(),
            config,
            report: &outcome.report,
            certificate: cert,
            certificate_error: cert_err,
        },
    )?;
    info!("wrote {}", dir.display());
    if !converged {
        return Err(Error::NotConverged(Box::new(outcome)).into());
    }
    match certificate {
        Some(Err(e)) => Err(e.into()),
        _ => Ok(()),
    }
}

fn solve(config: &RunConfig) -> Result<(ScfOutcome, bool), CliError> {
    match solve_scf(&config.system, &config.options) {
        Ok(out) => Ok((out, true)),
        Err(Error::NotConverged(out)) => {
            warn!("SCF not converged after {} iterations", out.report.iterations);
            Ok((*out, false))
        }
        Err(e) => Err(e.into()),
    }
}

fn certificate_suite(outcome: &ScfOutcome, config: &RunConfig, grid: &RadialGrid) -> Result<SuiteResult, CliError> {
    Ok(match minimizer_certificate(&outcome.density, &outcome.fock, &config.system, grid) {
        Ok(c) => SuiteResult::new("certificate", Status::Pass, serde_json::to_value(c)?),
        Err(Error::CertificateFailure { certificate, .. }) => {
            SuiteResult::new("certificate", Status::Fail, serde_json::to_value(certificate)?)
        }
        Err(e) => return Err(e.into()),
    })
}

/// Decay fits of the occupied orbitals. Every fitted rate must reach
/// `(1 - DECAY_TOL) nu` of the highest occupied level and the order of the
/// rates must follow the order of the levels. A highest occupied orbital
/// decaying faster than `(1 + DECAY_TOL) nu` is reported, not failed.
fn decay_suite(outcome: &ScfOutcome, config: &RunConfig, grid: &RadialGrid) -> Result<SuiteResult, CliError> {
    let alpha = config.system.alpha;
    let fits: Result<Vec<DecayFit>, Error> = match config.decay_window {
        None => fit_occupied(&outcome.density, &outcome.fock, grid, alpha),
        Some(window) => outcome
            .density
            .orbitals()
            .filter(|o| o.lambda >= 0.5)
            .map(|o| {
                let fp = outcome.fock.apply(o.ell, o.spin, o.p)?;
                let eps = relhf::radial::inner(grid, o.p, &fp)?;
                let mut fit = decay_fit(o.p, eps, alpha, grid, Some(window))?;
                fit.orbital = orbital_label(o.ell, o.spin, o.index);
                Ok(fit)
            })
            .collect(),
    };
    let fits = match fits {
        Ok(f) => f,
        Err(Error::WindowTooNoisy(msg)) => {
            warn!("decay fit inconclusive: {msg}");
            return Ok(SuiteResult::new("decay", Status::Inconclusive, json!({ "error": msg })));
        }
        Err(e) => return Err(e.into()),
    };
    let Some(homo) = fits.iter().max_by(|a, b| a.epsilon.total_cmp(&b.epsilon)) else {
        return Ok(SuiteResult::new("decay", Status::Inconclusive, json!({ "error": "no occupied orbitals" })));
    };
    let nu_n = homo.nu;
    let floor_ok = fits.iter().all(|f| f.beta_hat >= (1.0 - DECAY_TOL) * nu_n);
    let ordered = decay_ordering_consistent(&fits);
    let homo_rel = (homo.beta_hat - nu_n) / nu_n;
    let passed = floor_ok && ordered;
    Ok(SuiteResult::new(
        "decay",
        if passed { Status::Pass } else { Status::Fail },
        json!({
            "nu_homo": nu_n,
            "homo_relative_deviation": homo_rel,
            "homo_within_tolerance": homo_rel.abs() <= DECAY_TOL,
            "tolerance": DECAY_TOL,
            "all_above_floor": floor_ok,
            "ordering_consistent": ordered,
            "fits": fits,
        }),
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelSummary {
    pub energy: f64,
    pub alpha: f64,
    pub nu: f64,
    pub mesh_points: usize,
    pub bound_constant: f64,
    pub empirical_constant: f64,
    pub bound_violations: usize,
    pub tail_slope: f64,
}

fn kernel_summary(k: &GreensKernel) -> KernelSummary {
    KernelSummary {
        energy: k.energy,
        alpha: k.alpha,
        nu: k.nu,
        mesh_points: k.u.len(),
        bound_constant: k.bound_constant,
        empirical_constant: k.empirical_constant(),
        bound_violations: k.bound_violations().len(),
        tail_slope: k.tail_slope(),
    }
}

fn greens_parts(config: &RunConfig) -> Result<(GreensKernel, ResolventReport), CliError> {
    let alpha = config.system.alpha;
    let e = alpha * config.greens_energy;
    let grid = build_grid(config.greens_grid_size, config.greens_r_max)?;
    let mesh = KernelMesh::for_kernel(e, alpha, 2.0 * config.greens_r_max)?;
    let kernel = greens_kernel(e, alpha, &mesh)?;
    let resolvent = resolvent_check(e, alpha, &grid, config.greens_tolerance)?;
    Ok((kernel, resolvent))
}

fn greens_suite(kernel: &GreensKernel, resolvent: &ResolventReport) -> SuiteResult {
    let summary = kernel_summary(kernel);
    let passed = summary.bound_violations == 0 && resolvent.passed;
    SuiteResult::new(
        "greens",
        if passed { Status::Pass } else { Status::Fail },
        json!({ "kernel": summary, "resolvent": resolvent }),
    )
}

#[derive(Serialize)]
struct VerifyFile<'a> {
    timestamp: u64,
    config: &'a RunConfig,
    passed: bool,
    suites: &'a [SuiteResult],
}

/// Runs the enabled suites and writes `verify.json`. Suites that need an
/// SCF solution solve first.
pub fn run_verify(config: &RunConfig) -> Result<(), CliError> {
    output::ensure_dir(&config.output_dir)?;
    let grid = build_grid(config.options.grid_size, config.options.r_max)?;
    let s = &config.suites;
    let mut suites = Vec::new();
    let mut not_converged = None;

    if s.needs_scf() {
        let (outcome, converged) = solve(config)?;
        if converged {
            if s.certificate {
                suites.push(certificate_suite(&outcome, config, &grid)?);
            }
            if s.decay {
                suites.push(decay_suite(&outcome, config, &grid)?);
            }
        } else {
            for (on, name) in [(s.certificate, "certificate"), (s.decay, "decay")] {
                if on {
                    let detail = json!({ "error": "SCF did not converge" });
                    suites.push(SuiteResult::new(name, Status::Inconclusive, detail));
                }
            }
            not_converged = Some(outcome);
        }
    }
    if s.kato {
        let report = kato_battery(&grid, config.kato_count, config.kato_seed)?;
        let status = if report.passed { Status::Pass } else { Status::Fail };
        suites.push(SuiteResult::new("kato", status, serde_json::to_value(report)?));
    }
    if s.herbst {
        let r = match herbst_bound_check(&config.system, &grid, config.herbst_l_max) {
            Ok(report) => SuiteResult::new("herbst", Status::Pass, serde_json::to_value(report)?),
            Err(Error::BoundViolated { lowest, bound }) => {
                SuiteResult::new("herbst", Status::Fail, json!({ "lowest": lowest, "bound": bound }))
            }
            Err(e) => return Err(e.into()),
        };
        suites.push(r);
    }
    if s.greens {
        let (kernel, resolvent) = greens_parts(config)?;
        suites.push(greens_suite(&kernel, &resolvent));
    }
    if s.binding {
        let table = binding_monotonicity(
            config.system.z,
            config.system.alpha,
            config.binding_max_electrons,
            &config.options,
        )?;
        let status = if table.passed { Status::Pass } else { Status::Fail };
        suites.push(SuiteResult::new("binding", status, serde_json::to_value(table)?));
    }

    let failed: Vec<String> = suites
        .iter()
        .filter(|r| matches!(r.status, Status::Fail | Status::Inconclusive))
        .map(|r| r.name.clone())
        .collect();
    for r in &suites {
        info!("suite {}: {:?}", r.name, r.status);
    }
    output::write_json(
        &config.output_dir.join("verify.json"),
        &VerifyFile {
            timestamp: output::timestamp(),
            config,
            passed: failed.is_empty(),
            suites: &suites,
        },
    )?;
    if let Some(outcome) = not_converged {
        return Err(Error::NotConverged(Box::new(outcome)).into());
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::SuitesFailed(failed))
    }
}

/// Tabulates the Green's kernel to `kernel.csv` and writes `greens.json`
/// with the bound check and the resolvent round trip.
pub fn run_greens(config: &RunConfig) -> Result<(), CliError> {
    output::ensure_dir(&config.output_dir)?;
    let (kernel, resolvent) = greens_parts(config)?;
    let dir = &config.output_dir;
    output::write_with(&dir.join("kernel.csv"), |w| kernel.write_csv(w))?;
    let suite = greens_suite(&kernel, &resolvent);
    output::write_json(
        &dir.join("greens.json"),
        &json!({
            "timestamp": output::timestamp(),
            "passed": suite.status == Status::Pass,
            "detail": suite.detail,
        }),
    )?;
    if suite.status == Status::Pass {
        Ok(())
    } else {
        Err(CliError::SuitesFailed(vec!["greens".into()]))
    }
}

/// `E(N)` for `N = 1..=binding_max_electrons`, written to `sweep.csv` and
/// `sweep.json`.
pub fn run_sweep(config: &RunConfig) -> Result<(), CliError> {
    output::ensure_dir(&config.output_dir)?;
    let table = binding_monotonicity(
        config.system.z,
        config.system.alpha,
        config.binding_max_electrons,
        &config.options,
    )?;
    let dir = &config.output_dir;
    output::write_sweep(&dir.join("sweep.csv"), &table)?;
    output::write_json(
        &dir.join("sweep.json"),
        &json!({ "timestamp": output::timestamp(), "table": table }),
    )?;
    if table.passed {
        Ok(())
    } else {
        Err(CliError::SuitesFailed(vec!["binding".into()]))
    }
}
