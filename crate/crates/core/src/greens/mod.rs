//! Explicit resolvent kernel of the pseudorelativistic kinetic energy,
//! `G_E = (T - E)^{-1}` for `-1/alpha < E < 0`, and its application to
//! radial functions.
//!
//! With `a = 1/alpha`, `s = E + a` and `nu = sqrt(-E (2a + E))`,
//!
//! ```text
//! G_E(u) = s e^{-nu u} / (4 pi u)
//!        + (a / 2 pi^2) K_1(a u) / u
//!        + s^2 (a / 2 pi^2) [K_1(a|.|)/|.| * e^{-nu|.|}/(4 pi |.|)](u)
//! ```
//!
//! The convolution term satisfies `term3 <= s e^{-nu u} / (4 pi u)`, since
//! `int_0^inf K_1(a t) sinh(nu t) dt = pi nu / (2 a s)`, so
//! `G_E <= 2 s e^{-nu u}/(4 pi u) + (a/2 pi^2) K_1(a u)/u`.

mod bessel;
mod mesh;

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

pub use bessel::bessel_k;
pub use mesh::{radial_convolution, KernelMesh, MeshSpec, Tabulated};

use crate::error::{Error, Result};
use crate::radial::RadialGrid;
use bessel::k0_k1;
use mesh::{gauss_legendre, Antiderivative};

/// Relative allowance on the closed-form constant `2 (E + 1/alpha)` when
/// checking the pointwise upper bound; it absorbs the quadrature error of
/// the convolution term, which saturates the bound in the far field.
pub const BOUND_SLACK: f64 = 1e-7;

/// `nu = sqrt(-E (2/alpha + E))` for `-1/alpha < E < 0`.
pub fn nu_of_energy(e: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::DomainError(format!("alpha must be positive, got {alpha}")));
    }
    let a = 1.0 / alpha;
    if !(e < 0.0 && e > -a) {
        return Err(Error::DomainError(format!("energy {e} outside (-1/alpha, 0) = ({}, 0)", -a)));
    }
    Ok((-e * (2.0 * a + e)).sqrt())
}

impl KernelMesh {
    /// Mesh suited to `G_E`: starts at `1e-4 alpha`, grows by 3% per node
    /// until the spacing reaches `0.05/nu`, and extends to
    /// `u_needed + 40/nu`.
    pub fn for_kernel(e: f64, alpha: f64, u_needed: f64) -> Result<Self> {
        let nu = nu_of_energy(e, alpha)?;
        KernelMesh::new(MeshSpec {
            u0: 1e-4 * alpha,
            ratio: 1.03,
            du_max: 0.05 / nu,
            u_end: u_needed.max(0.0) + 40.0 / nu,
        })
    }
}

/// `G_E` tabulated on a [`KernelMesh`], split into its three terms.
#[derive(Debug, Clone, Serialize)]
pub struct GreensKernel {
    pub energy: f64,
    pub alpha: f64,
    pub nu: f64,
    pub mesh: MeshSpec,
    pub u: Vec<f64>,
    pub g: Vec<f64>,
    pub term1: Vec<f64>,
    pub term2: Vec<f64>,
    pub term3: Vec<f64>,
    /// `C` in `G_E <= C e^{-nu u}/(4 pi u) + (a/2 pi^2) K_1(a u)/u`.
    pub bound_constant: f64,
    #[serde(skip)]
    convolution: Tabulated,
}

/// `(E + 1/alpha)^2`, the coefficient of the convolution term.
pub fn third_term_coefficient(e: f64, alpha: f64) -> f64 {
    let s = e + 1.0 / alpha;
    s * s
}

pub fn greens_kernel(e: f64, alpha: f64, mesh: &KernelMesh) -> Result<GreensKernel> {
    let nu = nu_of_energy(e, alpha)?;
    let a = 1.0 / alpha;
    let s = e + a;
    let pref = a / (2.0 * PI * PI);

    let bessel_over_u = Tabulated::from_fn_with_derivative(
        mesh,
        |u| k0_k1(a * u).1 / u,
        |u| {
            let (k0, k1) = k0_k1(a * u);
            -a * k0 / u - 2.0 * k1 / (u * u)
        },
    );
    let yukawa = Tabulated::from_fn_with_derivative(
        mesh,
        |u| (-nu * u).exp() / (4.0 * PI * u),
        |u| -(-nu * u).exp() / (4.0 * PI * u) * (nu + 1.0 / u),
    );
    let convolution = radial_convolution(&bessel_over_u, &yukawa)?;

    let u = mesh.nodes().to_vec();
    let term1: Vec<f64> = u.iter().map(|&u| s * (-nu * u).exp() / (4.0 * PI * u)).collect();
    let term2: Vec<f64> = u.iter().map(|&u| pref * k0_k1(a * u).1 / u).collect();
    let coeff = third_term_coefficient(e, alpha);
    let term3: Vec<f64> = convolution.values().iter().map(|c| coeff * pref * c).collect();
    let g = (0..u.len()).map(|i| term1[i] + term2[i] + term3[i]).collect();
    Ok(GreensKernel {
        energy: e,
        alpha,
        nu,
        mesh: mesh.spec(),
        u,
        g,
        term1,
        term2,
        term3,
        bound_constant: 2.0 * s,
        convolution,
    })
}

impl GreensKernel {
    /// Right-hand side of the pointwise upper bound at `u`, using
    /// `bound_constant * (1 + BOUND_SLACK)`.
    pub fn upper_bound(&self, u: f64) -> f64 {
        let a = 1.0 / self.alpha;
        let c = self.bound_constant * (1.0 + BOUND_SLACK);
        c * (-self.nu * u).exp() / (4.0 * PI * u) + a / (2.0 * PI * PI) * k0_k1(a * u).1 / u
    }

    /// Smallest `C` for which the bound holds on every mesh point.
    pub fn empirical_constant(&self) -> f64 {
        let a = 1.0 / self.alpha;
        self.u
            .iter()
            .zip(&self.g)
            .map(|(&u, &g)| {
                let rest = g - a / (2.0 * PI * PI) * k0_k1(a * u).1 / u;
                rest * 4.0 * PI * u * (self.nu * u).exp()
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Mesh points where `G_E <= 0` or the upper bound fails.
    pub fn bound_violations(&self) -> Vec<usize> {
        (0..self.u.len())
            .filter(|&i| !(self.g[i] > 0.0) || self.g[i] > self.upper_bound(self.u[i]))
            .collect()
    }

    /// `int e^{beta u} G_E(u) 4 pi u^2 du` over the mesh.
    pub fn weighted_mass(&self, beta: f64) -> f64 {
        let mesh = self.convolution.mesh();
        let values = self
            .u
            .iter()
            .zip(&self.g)
            .map(|(&u, &g)| (beta * u).exp() * g * 4.0 * PI * u * u)
            .collect();
        let f = Tabulated::from_values(mesh, values).expect("lengths agree");
        Antiderivative::new(&f).upper(0.0)
    }

    /// Least-squares slope of `ln(u G_E(u))` over the last quarter of the
    /// mesh; tends to `-nu`.
    pub fn tail_slope(&self) -> f64 {
        let m = self.u.len();
        let start = m - m / 4;
        let pts: Vec<(f64, f64)> = (start..m)
            .filter(|&i| self.g[i] > 0.0)
            .map(|i| (self.u[i], (self.u[i] * self.g[i]).ln()))
            .collect();
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    }

    /// CSV with columns `u,G,term1,term2,term3`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "u,G,term1,term2,term3")?;
        for i in 0..self.u.len() {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.u[i], self.g[i], self.term1[i], self.term2[i], self.term3[i]
            )?;
        }
        Ok(())
    }
}

/// `G_E *` restricted to radial functions sampled on a [`RadialGrid`].
///
/// Between nodes `r f(r)` is taken piecewise linear (zero at `0` and at
/// `r_max`), and the kernel enters through
/// `Phi(u) = -int_u^inf v G_E(v) dv`, integrated cell by cell in closed
/// form for the Yukawa and Bessel terms and from the tabulated convolution
/// for the third term.
#[derive(Debug, Clone)]
pub struct Resolvent {
    grid: RadialGrid,
    kernel: GreensKernel,
    /// `int_0^1 Phi((k + tau) h) dtau - int_0^1 tau Phi((k + tau) h) dtau`
    left: Vec<f64>,
    /// `int_0^1 tau Phi((k + tau) h) dtau`
    right: Vec<f64>,
}

impl Resolvent {
    pub fn new(e: f64, alpha: f64, grid: &RadialGrid) -> Result<Self> {
        let mesh = KernelMesh::for_kernel(e, alpha, 2.0 * grid.r_max())?;
        let kernel = greens_kernel(e, alpha, &mesh)?;
        let a = 1.0 / alpha;
        let s = e + a;
        let nu = kernel.nu;
        let third = Antiderivative::new(&kernel.convolution.times_radius());
        let c3 = third_term_coefficient(e, alpha) * a / (2.0 * PI * PI);
        let phi = |u: f64| {
            -s * (-nu * u).exp() / (4.0 * PI * nu) - k0_k1(a * u).0 / (2.0 * PI * PI) - c3 * third.upper(u)
        };

        let h = grid.h();
        let cells = 2 * grid.n() + 1;
        let (gx, gw) = gauss_legendre(16);
        let mut left = vec![0.0; cells];
        let mut right = vec![0.0; cells];
        for k in 0..cells {
            let (mut m0, mut m1) = (0.0, 0.0);
            for (&x, &w) in gx.iter().zip(&gw) {
                // tau = x^4 on the first cell tames the logarithm of K_0
                let (tau, jac) = if k == 0 { (x.powi(4), 4.0 * x.powi(3)) } else { (x, 1.0) };
                let p = phi((k as f64 + tau) * h);
                m0 += w * jac * p;
                m1 += w * jac * tau * p;
            }
            left[k] = m0 - m1;
            right[k] = m1;
        }
        Ok(Self {
            grid: grid.clone(),
            kernel,
            left,
            right,
        })
    }

    pub fn kernel(&self) -> &GreensKernel {
        &self.kernel
    }

    /// `psi(r_i) = int G_E(|x - y|) f(|y|) dy` at every node.
    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        let n = self.grid.n();
        if f.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: f.len(),
            });
        }
        let h = self.grid.h();
        // F_j = r_j f(r_j) for j = 0..=n+1 with zero ends
        let mut big_f = vec![0.0; n + 2];
        for j in 1..=n {
            big_f[j] = self.grid.r(j - 1) * f[j - 1];
        }
        let (p, q) = (&self.left, &self.right);
        let out = (1..=n)
            .map(|i| {
                let mut acc = 0.0;
                for j in 0..=n {
                    let (fl, fr) = (big_f[j], big_f[j + 1]);
                    if fl == 0.0 && fr == 0.0 {
                        continue;
                    }
                    let m = i + j;
                    let plus = fl * p[m] + fr * q[m];
                    let minus = if j >= i {
                        let m = j - i;
                        fl * p[m] + fr * q[m]
                    } else {
                        let m = i - j - 1;
                        fl * q[m] + fr * p[m]
                    };
                    acc += plus - minus;
                }
                2.0 * PI * h / (i as f64 * h) * acc
            })
            .collect();
        Ok(out)
    }
}

/// One-shot `G_E * f` for a radial function sampled on `grid`.
pub fn resolvent_apply(f: &[f64], e: f64, alpha: f64, grid: &RadialGrid) -> Result<Vec<f64>> {
    Resolvent::new(e, alpha, grid)?.apply(f)
}

/// Smooth even test functions for resolvent checks: three Gaussians, a
/// damped `sech^2` and a compactly supported bump of radius 5.
pub fn smooth_test_functions() -> Vec<(&'static str, fn(f64) -> f64)> {
    fn bump(r: f64) -> f64 {
        let x = r / 5.0;
        if x < 1.0 {
            (-1.0 / (1.0 - x * x)).exp()
        } else {
            0.0
        }
    }
    vec![
        ("gaussian_half", |r| (-r * r / 2.0).exp()),
        ("gaussian", |r| (-r * r).exp()),
        ("r2_gaussian", |r| r * r * (-r * r).exp()),
        ("sech2", |r| 1.0 / r.cosh().powi(2) * (-0.1 * r * r).exp()),
        ("bump", bump),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolventCase {
    pub name: String,
    /// `||(T - E) G f - f|| / ||f||` on `r f`.
    pub round_trip: f64,
    /// Relative distance to the dense solve of `(T - E) x = r f`.
    pub dense: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolventReport {
    pub energy: f64,
    pub alpha: f64,
    pub grid_size: usize,
    pub r_max: f64,
    pub tolerance: f64,
    pub cases: Vec<ResolventCase>,
    pub passed: bool,
}

/// Applies the kernel to [`smooth_test_functions`] and compares with the
/// discretized `T - E` on the `s` channel of `grid`.
pub fn resolvent_check(e: f64, alpha: f64, grid: &RadialGrid, tolerance: f64) -> Result<ResolventReport> {
    let n = grid.n();
    let res = Resolvent::new(e, alpha, grid)?;
    let t = crate::radial::kinetic_operator(grid, 0, alpha)?;
    let shifted = t.matrix() - DMatrix::identity(n, n) * e;
    let lu = shifted.clone().lu();
    let mut cases = Vec::new();
    for (name, f) in smooth_test_functions() {
        let fv = grid.sample(f);
        let psi = res.apply(&fv)?;
        let p = DVector::from_iterator(n, psi.iter().zip(grid.nodes()).map(|(a, r)| a * r));
        let rf = DVector::from_iterator(n, fv.iter().zip(grid.nodes()).map(|(a, r)| a * r));
        let round_trip = (&shifted * &p - &rf).norm() / rf.norm();
        let exact = lu
            .solve(&rf)
            .ok_or_else(|| Error::EigFailure("singular T - E".into()))?;
        let dense = (&p - &exact).norm() / exact.norm();
        cases.push(ResolventCase {
            name: name.to_string(),
            round_trip,
            dense,
        });
    }
    let passed = cases.iter().all(|c| c.round_trip <= tolerance && c.dense <= tolerance);
    Ok(ResolventReport {
        energy: e,
        alpha,
        grid_size: n,
        r_max: grid.r_max(),
        tolerance,
        cases,
        passed,
    })
}
