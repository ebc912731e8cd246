use thiserror::Error;

use crate::analysis::Certificate;
use crate::scf::ScfOutcome;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("subcritical coupling required: Z*alpha = {z_alpha} must be below 2/pi = {limit}")]
    SubcriticalityViolated { z_alpha: f64, limit: f64 },

    #[error("invalid particle count: {0}")]
    BadCount(String),

    #[error("invalid nuclear charge or coupling: {0}")]
    BadParameter(String),

    #[error("invalid grid: {0}")]
    BadGrid(String),

    #[error("invalid solver options: {0}")]
    BadOptions(String),

    #[error("eigendecomposition failed: {0}")]
    EigFailure(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("energy term `{0}` is not finite")]
    NonFiniteEnergy(&'static str),

    #[error("energy {energy} is below the lower bound {bound}")]
    LowerBoundViolated { energy: f64, bound: f64 },

    #[error("perturbed density matrix is not admissible: {0}")]
    NotAdmissible(String),

    #[error("trace mismatch: {0} vs {1}")]
    TraceMismatch(f64, f64),

    #[error("line search produced an energy increase: {before} -> {after}")]
    LineSearchFailure { before: f64, after: f64 },

    #[error("SCF did not converge within {} iterations", .0.report.iterations)]
    NotConverged(Box<ScfOutcome>),

    #[error("argument outside the domain: {0}")]
    DomainError(String),

    #[error("decay fit window unusable: {0}")]
    WindowTooNoisy(String),

    #[error("certificate failed: {}", .failed.join("; "))]
    CertificateFailure {
        failed: Vec<String>,
        certificate: Box<Certificate>,
    },

    #[error("lower bound violated: lowest eigenvalue {lowest} < bound {bound}")]
    BoundViolated { lowest: f64, bound: f64 },
}
