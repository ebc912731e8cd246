//! Dense symmetric eigensolvers.
//!
//! Full decompositions come from nalgebra. The SCF loop only needs a few
//! low-lying eigenpairs of each Fock matrix, which [`lowest_eigenpairs`]
//! obtains with a Davidson iteration preconditioned by the known spectrum of
//! the bare one-body operator.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Eigenvalues in ascending order with matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct SymmetricSpectrum {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymmetricSpectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `U f(D) U^T`, symmetrized.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= f(self.values[j]);
        }
        let mut m = &scaled * self.vectors.transpose();
        symmetrize(&mut m);
        m
    }

    pub fn truncated(&self, k: usize) -> SymmetricSpectrum {
        let k = k.min(self.len());
        SymmetricSpectrum {
            values: self.values.rows(0, k).into_owned(),
            vectors: self.vectors.columns(0, k).into_owned(),
        }
    }
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

fn sorted_spectrum(values: DVector<f64>, vectors: DMatrix<f64>) -> SymmetricSpectrum {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| values[i]));
    let mut vectors = DMatrix::from_columns(
        &order
            .iter()
            .map(|&i| vectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    fix_signs(&mut vectors);
    SymmetricSpectrum { values, vectors }
}

/// Makes the first entry of each column that is not negligible positive, so
/// that eigenvectors are reproducible regardless of the solver path taken.
pub fn fix_signs(vectors: &mut DMatrix<f64>) {
    for mut col in vectors.column_iter_mut() {
        let peak = col.amax();
        if peak == 0.0 {
            continue;
        }
        if let Some(first) = col.iter().find(|x| x.abs() > 1e-3 * peak).copied() {
            if first < 0.0 {
                col.neg_mut();
            }
        }
    }
}

/// Full decomposition of a symmetric matrix.
pub fn symmetric_spectrum(m: &DMatrix<f64>) -> Result<SymmetricSpectrum> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::EigFailure(format!("matrix is {}x{}", n, m.ncols())));
    }
    if n == 0 {
        return Ok(SymmetricSpectrum {
            values: DVector::zeros(0),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::EigFailure("matrix has non-finite entries".into()));
    }
    let eig = m
        .clone()
        .try_symmetric_eigen(f64::EPSILON, 1000 * n)
        .ok_or_else(|| Error::EigFailure(format!("no convergence for n = {n}")))?;
    Ok(sorted_spectrum(eig.eigenvalues, eig.eigenvectors))
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::EigFailure("matrix has non-finite entries".into()));
    }
    let mut values: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

const DENSE_LIMIT: usize = 256;
const MAX_ITERATIONS: usize = 500;

/// Lowest `k` eigenpairs of the symmetric matrix `a`.
///
/// `reference` is the full spectrum of a nearby operator (the Fock matrix
/// without electron interaction). Its lowest eigenvectors seed the search
/// space and the rest acts as the preconditioner. `guesses` are optional
/// extra starting vectors, typically the previous iterate's orbitals. A pair
/// is converged when the Euclidean residual of the unit eigenvector falls
/// below `tol`.
pub fn lowest_eigenpairs(
    a: &DMatrix<f64>,
    k: usize,
    reference: &SymmetricSpectrum,
    guesses: Option<&DMatrix<f64>>,
    tol: f64,
) -> Result<SymmetricSpectrum> {
    let n = a.nrows();
    if reference.vectors.nrows() != n || reference.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: reference.vectors.nrows(),
        });
    }
    let k = k.min(n);
    if k == 0 {
        return Ok(SymmetricSpectrum {
            values: DVector::zeros(0),
            vectors: DMatrix::zeros(n, 0),
        });
    }
    if n <= DENSE_LIMIT || 4 * k >= n {
        // The dense QR iteration can leave residuals well above rounding
        // level; polish with Davidson steps preconditioned by its own output.
        let full = symmetric_spectrum(a)?;
        let candidate = full.truncated(k);
        if max_residual(a, &candidate) <= tol {
            return Ok(candidate);
        }
        return match davidson(a, k, &full, Some(&candidate.vectors), tol) {
            Ok(polished) => Ok(polished),
            Err(e) => {
                log::debug!("dense eigenpairs kept without polishing: {e}");
                Ok(candidate)
            }
        };
    }
    davidson(a, k, reference, guesses, tol)
}

fn max_residual(a: &DMatrix<f64>, s: &SymmetricSpectrum) -> f64 {
    let ax = a * &s.vectors;
    (0..s.len())
        .map(|i| (ax.column(i) - s.vectors.column(i) * s.values[i]).norm())
        .fold(0.0, f64::max)
}

fn davidson(
    a: &DMatrix<f64>,
    k: usize,
    reference: &SymmetricSpectrum,
    guesses: Option<&DMatrix<f64>>,
    tol: f64,
) -> Result<SymmetricSpectrum> {
    let n = a.nrows();
    let m_ref = (4 * k).max(64).min(n / 2).max(k).min(n);
    let max_basis = m_ref + 8 * k + 40;
    let scale = a.diagonal().amax().max(f64::MIN_POSITIVE);

    let mut basis: Vec<DVector<f64>> = (0..m_ref)
        .map(|j| reference.vectors.column(j).into_owned())
        .collect();
    if let Some(g) = guesses {
        for col in g.column_iter() {
            let mut t = col.into_owned();
            if orthogonalize(&mut t, &basis) {
                basis.push(t);
            }
        }
    }
    let mut v = DMatrix::from_columns(&basis);
    let mut w = a * &v;

    for _ in 0..MAX_ITERATIONS {
        let mut small = v.transpose() * &w;
        symmetrize(&mut small);
        let ritz = symmetric_spectrum(&small)?;
        let y = ritz.vectors.columns(0, k);
        let x = &v * y;
        let ax = &w * y;
        let mut residuals = Vec::with_capacity(k);
        let mut worst: f64 = 0.0;
        for i in 0..k {
            let r = ax.column(i) - x.column(i) * ritz.values[i];
            worst = worst.max(r.norm());
            residuals.push(r);
        }
        if worst <= tol {
            let mut vectors = x;
            fix_signs(&mut vectors);
            return Ok(SymmetricSpectrum {
                values: ritz.values.rows(0, k).into_owned(),
                vectors,
            });
        }

        let mut basis: Vec<DVector<f64>> = v.column_iter().map(|c| c.into_owned()).collect();
        let mut added = Vec::new();
        for (i, r) in residuals.iter().enumerate() {
            if r.norm() <= tol {
                continue;
            }
            let theta = ritz.values[i];
            let mut t = precondition(r, theta, reference, m_ref, scale);
            if !orthogonalize(&mut t, &basis) {
                t = r.clone();
                if !orthogonalize(&mut t, &basis) {
                    continue;
                }
            }
            basis.push(t.clone());
            added.push(t);
        }
        if added.is_empty() {
            return Err(Error::EigFailure(format!(
                "Davidson stalled with residual {worst:e} > {tol:e}"
            )));
        }

        if basis.len() > max_basis {
            let keep = (2 * k + 8).min(ritz.len());
            let yk = ritz.vectors.columns(0, keep);
            let v_restart = &v * yk;
            let w_restart = &w * yk;
            let mut restart: Vec<DVector<f64>> =
                v_restart.column_iter().map(|c| c.into_owned()).collect();
            let mut fresh = Vec::new();
            for mut t in added {
                if orthogonalize(&mut t, &restart) {
                    restart.push(t.clone());
                    fresh.push(t);
                }
            }
            v = DMatrix::from_columns(&restart);
            if fresh.is_empty() {
                w = w_restart;
            } else {
                let new_w = a * DMatrix::from_columns(&fresh);
                w = concat_columns(&w_restart, &new_w);
            }
        } else {
            let new_v = DMatrix::from_columns(&added);
            let new_w = a * &new_v;
            v = concat_columns(&v, &new_v);
            w = concat_columns(&w, &new_w);
        }
    }
    Err(Error::EigFailure(format!(
        "Davidson did not converge in {MAX_ITERATIONS} iterations"
    )))
}

fn concat_columns(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

/// Inverse of `(h0 - theta)` restricted to the reference eigenvectors that
/// are not already in the starting basis.
fn precondition(
    r: &DVector<f64>,
    theta: f64,
    reference: &SymmetricSpectrum,
    m_ref: usize,
    scale: f64,
) -> DVector<f64> {
    let mut c = reference.vectors.tr_mul(r);
    for j in 0..c.len() {
        let gap = reference.values[j] - theta;
        if j < m_ref || gap.abs() < 1e-10 * scale {
            c[j] = 0.0;
        } else {
            c[j] /= gap;
        }
    }
    &reference.vectors * c
}

/// Two passes of Gram-Schmidt against `basis`, then normalization. Returns
/// `false` when nothing significant is left.
fn orthogonalize(t: &mut DVector<f64>, basis: &[DVector<f64>]) -> bool {
    let start = t.norm();
    if start == 0.0 || !start.is_finite() {
        return false;
    }
    for _ in 0..2 {
        for b in basis {
            let c = b.dot(t);
            t.axpy(-c, b, 1.0);
        }
    }
    let left = t.norm();
    if left <= 1e-8 * start {
        return false;
    }
    *t /= left;
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tridiagonal(n: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 2.0 + 10.0 / (i + 1) as f64;
            if i + 1 < n {
                m[(i, i + 1)] = -1.0;
                m[(i + 1, i)] = -1.0;
            }
        }
        m
    }

    #[test]
    fn full_spectrum_is_sorted_and_reconstructs() {
        let m = tridiagonal(40);
        let s = symmetric_spectrum(&m).unwrap();
        assert!(s.values.as_slice().windows(2).all(|w| w[0] <= w[1]));
        let back = s.reconstruct_with(|x| x);
        assert!((back - &m).norm() <= 1e-12 * m.norm());
    }

    #[test]
    fn eigenvalues_only_match_full() {
        let m = tridiagonal(30);
        let a = symmetric_eigenvalues(&m).unwrap();
        let b = symmetric_spectrum(&m).unwrap();
        for (x, y) in a.iter().zip(b.values.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn davidson_matches_dense() {
        let n = 400;
        let base = tridiagonal(n);
        let reference = symmetric_spectrum(&base).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut perturbation = DMatrix::zeros(n, n);
        // smooth, low-rank-ish perturbation like a screened potential
        for _ in 0..3 {
            let v = DVector::from_fn(n, |i, _| {
                let x = i as f64 / n as f64;
                (-(x - rng.gen::<f64>()).powi(2) * 30.0).exp()
            });
            perturbation += &v * v.transpose() * 0.3;
        }
        for i in 0..n {
            perturbation[(i, i)] += 0.5 / (i + 1) as f64;
        }
        let a = &base + &perturbation;
        let got = lowest_eigenpairs(&a, 6, &reference, None, 1e-11).unwrap();
        let exact = symmetric_spectrum(&a).unwrap();
        for i in 0..6 {
            assert!((got.values[i] - exact.values[i]).abs() < 1e-10);
            let overlap = got.vectors.column(i).dot(&exact.vectors.column(i)).abs();
            assert!((overlap - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn davidson_with_guesses() {
        let n = 300;
        let base = tridiagonal(n);
        let reference = symmetric_spectrum(&base).unwrap();
        let mut a = base.clone();
        for i in 0..n {
            a[(i, i)] += 0.2 * (i as f64 / n as f64);
        }
        let guess = reference.vectors.columns(0, 3).into_owned();
        let got = lowest_eigenpairs(&a, 3, &reference, Some(&guess), 1e-11).unwrap();
        let exact = symmetric_eigenvalues(&a).unwrap();
        for i in 0..3 {
            assert!((got.values[i] - exact[i]).abs() < 1e-10);
        }
    }
}
