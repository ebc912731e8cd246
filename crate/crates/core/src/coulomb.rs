//! Density matrices in the central-field reduction, the Hartree potential,
//! Slater `Y^k` functions, the exchange operator and the interaction energies.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::symmetric_spectrum;
use crate::model::AtomSystem;
use crate::radial::{inner, KineticSet, RadialGrid};

/// Orbitals of one `(ell, spin)` channel. Columns of `orbitals` are radial
/// amplitudes `P_a` normalized with the grid weight; `occupations` holds
/// `lambda_a` in `[0, 1]`, so the column carries `lambda_a * (2 ell + 1)`
/// electrons.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitalBlock {
    pub orbitals: DMatrix<f64>,
    pub occupations: Vec<f64>,
}

impl OrbitalBlock {
    pub fn new(orbitals: DMatrix<f64>, occupations: Vec<f64>) -> Result<Self> {
        if orbitals.ncols() != occupations.len() {
            return Err(Error::LengthMismatch {
                expected: orbitals.ncols(),
                actual: occupations.len(),
            });
        }
        Ok(Self {
            orbitals,
            occupations,
        })
    }

    pub fn len(&self) -> usize {
        self.occupations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupations.is_empty()
    }

    pub fn orbital(&self, a: usize) -> &[f64] {
        let n = self.orbitals.nrows();
        &self.orbitals.as_slice()[a * n..(a + 1) * n]
    }
}

/// One occupied orbital seen through [`DensityMatrix::orbitals`].
#[derive(Debug, Clone, Copy)]
pub struct OrbitalRef<'a> {
    pub ell: usize,
    pub spin: usize,
    pub index: usize,
    pub lambda: f64,
    pub p: &'a [f64],
}

impl OrbitalRef<'_> {
    /// Electrons carried by this column, `lambda * (2 ell + 1)`.
    pub fn shell_occupation(&self) -> f64 {
        self.lambda * (2 * self.ell + 1) as f64
    }
}

/// A spherically averaged one-particle density matrix: orthonormal orbitals
/// with occupations per `(ell, spin)` channel.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DensityMatrix {
    blocks: BTreeMap<(usize, usize), OrbitalBlock>,
}

impl DensityMatrix {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, ell: usize, spin: usize, block: OrbitalBlock) {
        if block.is_empty() {
            self.blocks.remove(&(ell, spin));
        } else {
            self.blocks.insert((ell, spin), block);
        }
    }

    pub fn with_block(mut self, ell: usize, spin: usize, block: OrbitalBlock) -> Self {
        self.insert(ell, spin, block);
        self
    }

    pub fn block(&self, ell: usize, spin: usize) -> Option<&OrbitalBlock> {
        self.blocks.get(&(ell, spin))
    }

    pub fn blocks(&self) -> impl Iterator<Item = ((usize, usize), &OrbitalBlock)> {
        self.blocks.iter().map(|(k, v)| (*k, v))
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn orbitals(&self) -> impl Iterator<Item = OrbitalRef<'_>> {
        self.blocks.iter().flat_map(|(&(ell, spin), b)| {
            (0..b.len()).map(move |a| OrbitalRef {
                ell,
                spin,
                index: a,
                lambda: b.occupations[a],
                p: b.orbital(a),
            })
        })
    }

    pub fn trace(&self) -> f64 {
        self.orbitals().map(|o| o.shell_occupation()).sum()
    }

    pub fn max_ell(&self) -> Option<usize> {
        self.blocks.keys().map(|k| k.0).max()
    }

    /// Same orbitals with every occupation multiplied by `t`.
    pub fn scaled(&self, t: f64) -> Self {
        let mut out = self.clone();
        for b in out.blocks.values_mut() {
            for l in &mut b.occupations {
                *l *= t;
            }
        }
        out
    }

    /// Checks `0 <= lambda <= 1` and blockwise orthonormality.
    pub fn check(&self, grid: &RadialGrid) -> Result<()> {
        for (&(ell, spin), b) in &self.blocks {
            if b.orbitals.nrows() != grid.n() {
                return Err(Error::LengthMismatch {
                    expected: grid.n(),
                    actual: b.orbitals.nrows(),
                });
            }
            for &l in &b.occupations {
                if !(-1e-12..=1.0 + 1e-12).contains(&l) {
                    return Err(Error::NotAdmissible(format!(
                        "occupation {l} in channel (l={ell}, spin={spin})"
                    )));
                }
            }
            let s = b.orbitals.tr_mul(&b.orbitals) * grid.h();
            let dev = (s - DMatrix::identity(b.len(), b.len())).amax();
            if dev > 1e-10 {
                return Err(Error::NotAdmissible(format!(
                    "orbitals of channel (l={ell}, spin={spin}) deviate from orthonormality by {dev:e}"
                )));
            }
        }
        Ok(())
    }

    /// `(1 - t) * self + t * other`, rewritten in natural orbitals per block.
    pub fn mix(&self, other: &DensityMatrix, t: f64, grid: &RadialGrid) -> Result<DensityMatrix> {
        let mut keys: Vec<(usize, usize)> = self.blocks.keys().copied().collect();
        keys.extend(other.blocks.keys().copied());
        keys.sort_unstable();
        keys.dedup();
        let mut out = DensityMatrix::empty();
        for key in keys {
            let mut columns = Vec::new();
            let mut weights = Vec::new();
            for (source, w) in [(self, 1.0 - t), (other, t)] {
                if let Some(b) = source.block(key.0, key.1) {
                    for a in 0..b.len() {
                        let lw = w * b.occupations[a];
                        if lw != 0.0 {
                            columns.push(b.orbitals.column(a).into_owned());
                            weights.push(lw);
                        }
                    }
                }
            }
            if columns.is_empty() {
                continue;
            }
            let block = natural_orbitals(&DMatrix::from_columns(&columns), &weights, grid)?;
            out.insert(key.0, key.1, block);
        }
        Ok(out)
    }
}

/// Natural orbitals of `sum_a w_a |P_a><P_a|` for possibly non-orthogonal `P_a`.
/// Occupations below `1e-14` are dropped and the rest clamped to at most 1.
pub fn natural_orbitals(p: &DMatrix<f64>, weights: &[f64], grid: &RadialGrid) -> Result<OrbitalBlock> {
    let (basis, occ) = occupation_spectrum(p, weights, grid)?;
    let mut columns = Vec::new();
    let mut lambdas = Vec::new();
    for j in (0..occ.len()).rev() {
        let mu = occ.values[j];
        if mu < 1e-14 {
            continue;
        }
        columns.push(&basis * occ.vectors.column(j));
        lambdas.push(mu.min(1.0));
    }
    let mut orbitals = if columns.is_empty() {
        DMatrix::zeros(p.nrows(), 0)
    } else {
        DMatrix::from_columns(&columns)
    };
    crate::linalg::fix_signs(&mut orbitals);
    OrbitalBlock::new(orbitals, lambdas)
}

/// Orthonormal basis `B` of the span of the columns of `p` together with the
/// eigendecomposition of `sum_a w_a |P_a><P_a|` expressed in that basis.
pub fn occupation_spectrum(
    p: &DMatrix<f64>,
    weights: &[f64],
    grid: &RadialGrid,
) -> Result<(DMatrix<f64>, crate::linalg::SymmetricSpectrum)> {
    if p.ncols() != weights.len() {
        return Err(Error::LengthMismatch {
            expected: p.ncols(),
            actual: weights.len(),
        });
    }
    let h = grid.h();
    // Gram-Schmidt with a second pass; directions that are numerically
    // dependent on earlier columns are dropped.
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for col in p.column_iter() {
        let mut t = col.into_owned();
        let start = (h * t.norm_squared()).sqrt();
        if start == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for b in &basis {
                let c = h * b.dot(&t);
                t.axpy(-c, b, 1.0);
            }
        }
        let left = (h * t.norm_squared()).sqrt();
        if left > 1e-7 * start {
            basis.push(t / left);
        }
    }
    let b = if basis.is_empty() {
        DMatrix::zeros(p.nrows(), 0)
    } else {
        DMatrix::from_columns(&basis)
    };
    let coeffs = b.tr_mul(p) * h;
    let mut m = DMatrix::zeros(b.ncols(), b.ncols());
    for (a, &w) in weights.iter().enumerate() {
        let c = coeffs.column(a);
        m.ger(w, &c, &c, 1.0);
    }
    crate::linalg::symmetrize(&mut m);
    Ok((b, symmetric_spectrum(&m)?))
}

/// Radial charge density `w(r_i) = sum_a f_a P_a(r_i)^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedDensity {
    pub w: Vec<f64>,
}

pub fn reduced_density(gamma: &DensityMatrix, grid: &RadialGrid) -> ReducedDensity {
    let mut w = vec![0.0; grid.n()];
    for o in gamma.orbitals() {
        let f = o.shell_occupation();
        for (wi, pi) in w.iter_mut().zip(o.p) {
            *wi += f * pi * pi;
        }
    }
    ReducedDensity { w }
}

/// Potential of a spherical charge, `R(r) = (1/r) int_0^r w + int_r^inf w(s)/s ds`.
pub fn hartree_potential(w: &[f64], grid: &RadialGrid) -> Vec<f64> {
    slater_yk_density(w, 0, grid)
        .into_iter()
        .zip(grid.nodes())
        .map(|(y, r)| y / r)
        .collect()
}

/// `Y^k(r) = r * int (min^k / max^(k+1)) P_a P_b ds`.
pub fn slater_yk(pa: &[f64], pb: &[f64], k: usize, grid: &RadialGrid) -> Vec<f64> {
    let rho: Vec<f64> = pa.iter().zip(pb).map(|(a, b)| a * b).collect();
    slater_yk_density(&rho, k, grid)
}

/// `Y^k` of an arbitrary node density, by one forward and one backward sweep.
pub fn slater_yk_density(rho: &[f64], k: usize, grid: &RadialGrid) -> Vec<f64> {
    let n = grid.n();
    let r = grid.nodes();
    let h = grid.h();
    let kk = k as i32;
    // a_i = sum_{j<=i} rho_j r_j^k / r_i^(k+1)
    let mut a = vec![0.0; n];
    let mut acc = 0.0;
    for i in 0..n {
        if i > 0 {
            acc *= (r[i - 1] / r[i]).powi(kk + 1);
        }
        acc += rho[i] / r[i];
        a[i] = acc;
    }
    // b_i = sum_{j>i} rho_j r_i^k / r_j^(k+1)
    let mut y = vec![0.0; n];
    let mut b = 0.0;
    for i in (0..n).rev() {
        if i + 1 < n {
            b = (b + rho[i + 1] / r[i + 1]) * (r[i] / r[i + 1]).powi(kk);
        }
        y[i] = r[i] * h * (a[i] + b);
    }
    y
}

/// `R^k(ab;ba) = int P_a P_b Y^k(P_a P_b)/r dr`.
pub fn exchange_integral(pa: &[f64], pb: &[f64], k: usize, grid: &RadialGrid) -> f64 {
    let rho: Vec<f64> = pa.iter().zip(pb).map(|(a, b)| a * b).collect();
    let y = slater_yk_density(&rho, k, grid);
    grid.h()
        * rho
            .iter()
            .zip(&y)
            .zip(grid.nodes())
            .map(|((p, y), r)| p * y / r)
            .sum::<f64>()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Wigner `3j` symbol with all magnetic numbers zero.
pub fn threej(l1: usize, l2: usize, l3: usize) -> f64 {
    let j = l1 + l2 + l3;
    if j % 2 == 1 || l1 > l2 + l3 || l2 > l1 + l3 || l3 > l1 + l2 {
        return 0.0;
    }
    let g = j / 2;
    let sign = if g % 2 == 0 { 1.0 } else { -1.0 };
    let root = (factorial(j - 2 * l1) * factorial(j - 2 * l2) * factorial(j - 2 * l3)
        / factorial(j + 1))
    .sqrt();
    sign * root * factorial(g) / (factorial(g - l1) * factorial(g - l2) * factorial(g - l3))
}

/// `c^k(ell_a, ell_b) = (2 ell_b + 1) * threej(ell_a, k, ell_b)^2`.
pub fn angular_coefficient(ell_a: usize, ell_b: usize, k: usize) -> f64 {
    let t = threej(ell_a, k, ell_b);
    (2 * ell_b + 1) as f64 * t * t
}

/// Multipole orders with a non-zero coupling between channels `la` and `lb`.
pub fn multipoles(la: usize, lb: usize) -> impl Iterator<Item = usize> {
    let lo = la.abs_diff(lb);
    (lo..=la + lb).step_by(2)
}

/// Exchange operator of `gamma` on channel `(ell, spin)` as a dense matrix
/// acting on node values (the quadrature weight `h` is included).
pub fn exchange_matrix(gamma: &DensityMatrix, ell: usize, spin: usize, grid: &RadialGrid) -> DMatrix<f64> {
    let n = grid.n();
    let r = grid.nodes();
    // Accumulate sum_a weight_{a,k} P_a P_a^T per multipole order.
    let mut per_k: BTreeMap<usize, DMatrix<f64>> = BTreeMap::new();
    for o in gamma.orbitals().filter(|o| o.spin == spin) {
        let f = o.shell_occupation();
        if f == 0.0 {
            continue;
        }
        let p = DVector::from_column_slice(o.p);
        for k in multipoles(ell, o.ell) {
            let t = threej(ell, k, o.ell);
            let weight = f * t * t;
            if weight == 0.0 {
                continue;
            }
            let acc = per_k.entry(k).or_insert_with(|| DMatrix::zeros(n, n));
            acc.ger(weight, &p, &p, 1.0);
        }
    }
    let mut out = DMatrix::zeros(n, n);
    let h = grid.h();
    for (k, g) in per_k {
        let kk = k as i32;
        for j in 0..n {
            for i in 0..n {
                let (lo, hi) = if r[i] < r[j] { (r[i], r[j]) } else { (r[j], r[i]) };
                let kern = lo.powi(kk) / hi.powi(kk + 1);
                out[(i, j)] += h * kern * g[(i, j)];
            }
        }
    }
    out
}

/// `K u` on channel `(ell, spin)` without forming the matrix.
pub fn exchange_apply(
    gamma: &DensityMatrix,
    ell: usize,
    spin: usize,
    u: &[f64],
    grid: &RadialGrid,
) -> Vec<f64> {
    let mut out = vec![0.0; grid.n()];
    for o in gamma.orbitals().filter(|o| o.spin == spin) {
        let f = o.shell_occupation();
        if f == 0.0 {
            continue;
        }
        for k in multipoles(ell, o.ell) {
            let t = threej(ell, k, o.ell);
            let weight = f * t * t;
            if weight == 0.0 {
                continue;
            }
            let y = slater_yk(o.p, u, k, grid);
            for i in 0..grid.n() {
                out[i] += weight * y[i] / grid.r(i) * o.p[i];
            }
        }
    }
    out
}

/// The four ingredients of the energy functional: `Tr[T gamma]`,
/// `Tr[V gamma]` (with `V = Z alpha / r`), the direct energy and the
/// exchange energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyTerms {
    pub kinetic_trace: f64,
    pub nuclear_trace: f64,
    pub direct: f64,
    pub exchange: f64,
}

pub fn energy_terms(
    gamma: &DensityMatrix,
    grid: &RadialGrid,
    sys: &AtomSystem,
    kinetic: &KineticSet,
) -> Result<EnergyTerms> {
    let mut kinetic_trace = 0.0;
    for o in gamma.orbitals() {
        let f = o.shell_occupation();
        if f != 0.0 {
            kinetic_trace += f * kinetic.get(o.ell)?.form(grid, o.p, o.p)?;
        }
    }
    let w = reduced_density(gamma, grid).w;
    let h = grid.h();
    let nuclear_trace = sys.z * sys.alpha * h * w.iter().zip(grid.nodes()).map(|(w, r)| w / r).sum::<f64>();
    let potential = hartree_potential(&w, grid);
    let direct = 0.5 * inner(grid, &w, &potential)?;
    let exchange = exchange_energy(gamma, grid);

    let terms = EnergyTerms {
        kinetic_trace,
        nuclear_trace,
        direct,
        exchange,
    };
    for (value, name) in [
        (kinetic_trace, "kinetic"),
        (nuclear_trace, "nuclear"),
        (direct, "direct"),
        (exchange, "exchange"),
    ] {
        if !value.is_finite() {
            return Err(Error::NonFiniteEnergy(name));
        }
    }
    Ok(terms)
}

/// `Ex = 1/2 sum_spin sum_{a,b} f_a f_b sum_k threej^2 R^k(ab;ba)`.
pub fn exchange_energy(gamma: &DensityMatrix, grid: &RadialGrid) -> f64 {
    let orbitals: Vec<OrbitalRef> = gamma.orbitals().filter(|o| o.lambda != 0.0).collect();
    let mut total = 0.0;
    for (i, a) in orbitals.iter().enumerate() {
        for b in &orbitals[i..] {
            if a.spin != b.spin {
                continue;
            }
            let mut sum_k = 0.0;
            for k in multipoles(a.ell, b.ell) {
                let t = threej(a.ell, k, b.ell);
                if t != 0.0 {
                    sum_k += t * t * exchange_integral(a.p, b.p, k, grid);
                }
            }
            let pair = a.shell_occupation() * b.shell_occupation() * sum_k;
            let same = a.ell == b.ell && a.index == b.index;
            total += if same { 0.5 * pair } else { pair };
        }
    }
    total
}
