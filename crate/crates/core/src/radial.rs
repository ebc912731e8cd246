//! Uniform radial grid, per-channel Laplacian and spectral matrix functions.
//!
//! Radial functions are stored as reduced amplitudes `P(r) = r * phi(r)` on
//! the interior nodes `r_i = i*h`, `i = 1..=n`, with `h = r_max/(n+1)` and
//! Dirichlet values at both ends. All quadratures use the uniform weight `h`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{symmetric_spectrum, symmetrize, SymmetricSpectrum};

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    n: usize,
    h: f64,
    r_max: f64,
    nodes: Vec<f64>,
}

impl RadialGrid {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn r(&self, i: usize) -> f64 {
        self.nodes[i]
    }

    /// Node values of a function of `r`.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&r| f(r)).collect()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                actual: len,
            });
        }
        Ok(())
    }
}

pub fn build_grid(n: usize, r_max: f64) -> Result<RadialGrid> {
    if n == 0 {
        return Err(Error::BadGrid("n must be positive".into()));
    }
    if !(r_max > 0.0 && r_max.is_finite()) {
        return Err(Error::BadGrid(format!("r_max = {r_max}")));
    }
    let h = r_max / (n + 1) as f64;
    let nodes = (1..=n).map(|i| i as f64 * h).collect();
    Ok(RadialGrid { n, h, r_max, nodes })
}

/// `h * sum(values)`.
pub fn integrate(grid: &RadialGrid, values: &[f64]) -> Result<f64> {
    grid.check_len(values.len())?;
    Ok(grid.h * values.iter().sum::<f64>())
}

/// `h * sum(a_i * b_i)`.
pub fn inner(grid: &RadialGrid, a: &[f64], b: &[f64]) -> Result<f64> {
    grid.check_len(a.len())?;
    grid.check_len(b.len())?;
    Ok(grid.h * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
}

/// A dense symmetric matrix acting on one angular momentum channel, with a
/// lazily computed eigendecomposition.
#[derive(Debug)]
pub struct ChannelOperator {
    ell: usize,
    matrix: DMatrix<f64>,
    spectrum: OnceLock<SymmetricSpectrum>,
}

impl Clone for ChannelOperator {
    fn clone(&self) -> Self {
        let spectrum = OnceLock::new();
        if let Some(s) = self.spectrum.get() {
            let _ = spectrum.set(s.clone());
        }
        Self {
            ell: self.ell,
            matrix: self.matrix.clone(),
            spectrum,
        }
    }
}

impl ChannelOperator {
    /// Wraps `matrix`, which is symmetrized exactly.
    pub fn new(ell: usize, mut matrix: DMatrix<f64>) -> Self {
        symmetrize(&mut matrix);
        Self {
            ell,
            matrix,
            spectrum: OnceLock::new(),
        }
    }

    fn with_spectrum(ell: usize, matrix: DMatrix<f64>, spectrum: SymmetricSpectrum) -> Self {
        let op = Self::new(ell, matrix);
        let _ = op.spectrum.set(spectrum);
        op
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    /// The cached eigendecomposition, computed on first use.
    pub fn spectrum(&self) -> Result<&SymmetricSpectrum> {
        if let Some(s) = self.spectrum.get() {
            return Ok(s);
        }
        let computed = symmetric_spectrum(&self.matrix)?;
        Ok(self.spectrum.get_or_init(|| computed))
    }

    /// `<u, M v>` with the grid weight, i.e. `h * u^T M v`.
    pub fn form(&self, grid: &RadialGrid, u: &[f64], v: &[f64]) -> Result<f64> {
        grid.check_len(u.len())?;
        grid.check_len(v.len())?;
        let n = grid.n();
        let mut total = 0.0;
        for j in 0..n {
            if v[j] == 0.0 {
                continue;
            }
            let col = self.matrix.column(j);
            let mut s = 0.0;
            for i in 0..n {
                s += u[i] * col[i];
            }
            total += s * v[j];
        }
        Ok(grid.h() * total)
    }
}

/// `-d^2/dr^2 + ell(ell+1)/r^2` by second-order central differences.
pub fn channel_laplacian(grid: &RadialGrid, ell: usize) -> ChannelOperator {
    let n = grid.n();
    let h2 = grid.h() * grid.h();
    let centrifugal = (ell * (ell + 1)) as f64;
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        let r = grid.r(i);
        m[(i, i)] = 2.0 / h2 + centrifugal / (r * r);
        if i + 1 < n {
            m[(i, i + 1)] = -1.0 / h2;
            m[(i + 1, i)] = -1.0 / h2;
        }
    }
    if ell == 0 {
        // Tridiagonal Toeplitz: the discrete sine basis diagonalizes it exactly.
        let np1 = (n + 1) as f64;
        let norm = (2.0 / np1).sqrt();
        let values = nalgebra::DVector::from_fn(n, |k, _| {
            4.0 / h2 * (PI * (k + 1) as f64 / (2.0 * np1)).sin().powi(2)
        });
        let vectors = DMatrix::from_fn(n, n, |i, k| {
            norm * (PI * ((i + 1) * (k + 1)) as f64 / np1).sin()
        });
        return ChannelOperator::with_spectrum(0, m, SymmetricSpectrum { values, vectors });
    }
    ChannelOperator::new(ell, m)
}

/// `U f(D) U^T` from the eigendecomposition of `op`. The result carries its
/// own decomposition (same eigenvectors, mapped eigenvalues re-sorted).
pub fn spectral_function(op: &ChannelOperator, f: impl Fn(f64) -> f64) -> Result<ChannelOperator> {
    let spectrum = op.spectrum()?;
    let mapped: Vec<f64> = spectrum.values.iter().map(|&x| f(x)).collect();
    if mapped.iter().any(|x| !x.is_finite()) {
        return Err(Error::EigFailure(
            "spectral function is not finite on the spectrum".into(),
        ));
    }
    let mut order: Vec<usize> = (0..mapped.len()).collect();
    order.sort_by(|&a, &b| mapped[a].total_cmp(&mapped[b]));
    let values = nalgebra::DVector::from_iterator(order.len(), order.iter().map(|&i| mapped[i]));
    let vectors = DMatrix::from_columns(
        &order
            .iter()
            .map(|&i| spectrum.vectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    let result = SymmetricSpectrum { values, vectors };
    let matrix = result.reconstruct_with(|x| x);
    Ok(ChannelOperator::with_spectrum(op.ell(), matrix, result))
}

/// `sqrt(lambda + alpha^-2) - alpha^-1` written without cancellation.
pub fn kinetic_symbol(lambda: f64, alpha: f64) -> f64 {
    let a = 1.0 / alpha;
    let lambda = lambda.max(0.0);
    lambda / ((lambda + a * a).sqrt() + a)
}

/// The pseudorelativistic kinetic energy `T = sqrt(-Delta + alpha^-2) - alpha^-1`
/// on channel `ell`.
pub fn kinetic_operator(grid: &RadialGrid, ell: usize, alpha: f64) -> Result<ChannelOperator> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::BadParameter(format!("alpha = {alpha}")));
    }
    kinetic_from_laplacian(&channel_laplacian(grid, ell), alpha)
}

pub fn kinetic_from_laplacian(laplacian: &ChannelOperator, alpha: f64) -> Result<ChannelOperator> {
    spectral_function(laplacian, |x| kinetic_symbol(x, alpha))
}

/// Which kinetic energy to use. The non-relativistic `alpha * (-Delta) / 2`
/// is the small-`alpha` limit of the pseudorelativistic operator and serves
/// as a comparison model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KineticModel {
    #[default]
    Pseudorelativistic,
    NonRelativistic,
}

impl std::str::FromStr for KineticModel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "pseudorelativistic" => Ok(Self::Pseudorelativistic),
            "non-relativistic" | "nonrelativistic" => Ok(Self::NonRelativistic),
            other => Err(format!("unknown kinetic model `{other}`")),
        }
    }
}

/// Kinetic operators `T_ell` for `ell = 0..=l_max` on one grid.
#[derive(Debug, Clone)]
pub struct KineticSet {
    alpha: f64,
    model: KineticModel,
    ops: Vec<ChannelOperator>,
}

impl KineticSet {
    pub fn build(grid: &RadialGrid, alpha: f64, l_max: usize) -> Result<Self> {
        Self::build_with(grid, alpha, l_max, KineticModel::Pseudorelativistic)
    }

    pub fn build_with(grid: &RadialGrid, alpha: f64, l_max: usize, model: KineticModel) -> Result<Self> {
        use rayon::prelude::*;
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::BadParameter(format!("alpha = {alpha}")));
        }
        let ops = (0..=l_max)
            .into_par_iter()
            .map(|ell| {
                let laplacian = channel_laplacian(grid, ell);
                match model {
                    KineticModel::Pseudorelativistic => kinetic_from_laplacian(&laplacian, alpha),
                    KineticModel::NonRelativistic => {
                        spectral_function(&laplacian, |x| 0.5 * alpha * x)
                    }
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { alpha, model, ops })
    }

    pub fn model(&self) -> KineticModel {
        self.model
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn l_max(&self) -> usize {
        self.ops.len() - 1
    }

    pub fn get(&self, ell: usize) -> Result<&ChannelOperator> {
        self.ops
            .get(ell)
            .ok_or_else(|| Error::BadOptions(format!("channel l = {ell} exceeds l_max = {}", self.l_max())))
    }
}

/// `|p| = sqrt(-Delta)` on channel `ell`.
pub fn momentum_operator(grid: &RadialGrid, ell: usize) -> Result<ChannelOperator> {
    spectral_function(&channel_laplacian(grid, ell), |x| x.max(0.0).sqrt())
}
