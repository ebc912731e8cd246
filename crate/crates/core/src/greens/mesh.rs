//! Radial meshes for kernels, cubic Hermite tabulation, and the 3D
//! convolution of radial functions.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Parameters of a [`KernelMesh`]: geometric spacing with ratio `ratio`
/// starting at `u0`, capped at `du_max`, up to at least `u_end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeshSpec {
    pub u0: f64,
    pub ratio: f64,
    pub du_max: f64,
    pub u_end: f64,
}

/// Strictly increasing positive nodes, logarithmic near zero and uniform in
/// the far field.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMesh {
    spec: MeshSpec,
    nodes: Arc<[f64]>,
}

impl KernelMesh {
    pub fn new(spec: MeshSpec) -> Result<Self> {
        let MeshSpec {
            u0,
            ratio,
            du_max,
            u_end,
        } = spec;
        let ok = u0 > 0.0 && ratio > 1.0 && du_max > 0.0 && u_end > u0 && [u0, ratio, du_max, u_end].iter().all(|x| x.is_finite());
        if !ok {
            return Err(Error::BadGrid(format!("invalid kernel mesh {spec:?}")));
        }
        let mut nodes = vec![u0];
        let mut x = u0;
        while x < u_end {
            let step = (x * (ratio - 1.0)).min(du_max);
            x = if step == du_max {
                // keep the uniform part exactly uniform
                nodes[nodes.len() - 1] + du_max
            } else {
                x + step
            };
            nodes.push(x);
            if nodes.len() > 50_000_000 {
                return Err(Error::BadGrid("kernel mesh too large".into()));
            }
        }
        Ok(Self {
            spec,
            nodes: nodes.into(),
        })
    }

    pub fn spec(&self) -> MeshSpec {
        self.spec
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn last(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Segment `k` and local coordinate `t` in `[0, 1]` with
    /// `x = u_k + t (u_{k+1} - u_k)`, for `u_0 <= x <= u_last`.
    fn locate(&self, x: f64) -> Option<(usize, f64)> {
        let n = self.nodes.len();
        if !(x >= self.nodes[0]) || x > self.nodes[n - 1] {
            return None;
        }
        let k = self.nodes.partition_point(|&u| u <= x).saturating_sub(1).min(n - 2);
        let (a, b) = (self.nodes[k], self.nodes[k + 1]);
        Some((k, ((x - a) / (b - a)).clamp(0.0, 1.0)))
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// A function tabulated on a [`KernelMesh`] with nodal values and
/// derivatives, evaluated between nodes by cubic Hermite interpolation.
/// Outside the mesh the function is taken as its first value below `u0`
/// and zero beyond the last node.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    mesh: KernelMesh,
    values: Vec<f64>,
    derivatives: Vec<f64>,
}

impl Tabulated {
    /// Tabulates `f`; derivatives come from five-point finite differences.
    pub fn from_fn(mesh: &KernelMesh, f: impl Fn(f64) -> f64) -> Self {
        let values = mesh.nodes().iter().map(|&u| f(u)).collect();
        Self::from_values(mesh, values).expect("lengths agree")
    }

    pub fn from_fn_with_derivative(mesh: &KernelMesh, f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64) -> Self {
        Self {
            mesh: mesh.clone(),
            values: mesh.nodes().iter().map(|&u| f(u)).collect(),
            derivatives: mesh.nodes().iter().map(|&u| df(u)).collect(),
        }
    }

    pub fn from_values(mesh: &KernelMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.len() {
            return Err(Error::LengthMismatch {
                expected: mesh.len(),
                actual: values.len(),
            });
        }
        let derivatives = finite_difference_derivatives(mesh.nodes(), &values);
        Ok(Self {
            mesh: mesh.clone(),
            values,
            derivatives,
        })
    }

    pub fn mesh(&self) -> &KernelMesh {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn derivatives(&self) -> &[f64] {
        &self.derivatives
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < self.mesh.nodes[0] {
            return self.values[0];
        }
        match self.mesh.locate(x) {
            Some((k, t)) => self.segment_value(k, t),
            None => 0.0,
        }
    }

    fn segment_value(&self, k: usize, t: f64) -> f64 {
        let len = self.mesh.nodes[k + 1] - self.mesh.nodes[k];
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.values[k] + h10 * len * self.derivatives[k] + h01 * self.values[k + 1] + h11 * len * self.derivatives[k + 1]
    }

    /// Integral of the interpolant over the part `[t0, t1]` of segment `k`.
    fn segment_integral(&self, k: usize, t0: f64, t1: f64) -> f64 {
        let len = self.mesh.nodes[k + 1] - self.mesh.nodes[k];
        let anti = |t: f64| {
            let t2 = t * t;
            let t3 = t2 * t;
            let t4 = t3 * t;
            let a00 = t - t3 + 0.5 * t4;
            let a10 = 0.5 * t2 - 2.0 * t3 / 3.0 + 0.25 * t4;
            let a01 = t3 - 0.5 * t4;
            let a11 = -t3 / 3.0 + 0.25 * t4;
            a00 * self.values[k] + a10 * len * self.derivatives[k] + a01 * self.values[k + 1] + a11 * len * self.derivatives[k + 1]
        };
        len * (anti(t1) - anti(t0))
    }

    /// `x * f(x)` with the matching derivative `f + x f'`.
    pub fn times_radius(&self) -> Tabulated {
        let nodes = self.mesh.nodes();
        Tabulated {
            mesh: self.mesh.clone(),
            values: nodes.iter().zip(&self.values).map(|(x, v)| x * v).collect(),
            derivatives: nodes
                .iter()
                .zip(self.values.iter().zip(&self.derivatives))
                .map(|(x, (v, d))| v + x * d)
                .collect(),
        }
    }
}

/// Derivative at each node of the Lagrange polynomial through the five
/// nearest nodes.
fn finite_difference_derivatives(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return vec![0.0; n];
    }
    let width = n.min(5);
    (0..n)
        .map(|i| {
            let start = i.saturating_sub(width / 2).min(n - width);
            let idx = start..start + width;
            let mut d = 0.0;
            for j in idx.clone() {
                let weight = if j == i {
                    idx.clone().filter(|&m| m != i).map(|m| 1.0 / (x[i] - x[m])).sum::<f64>()
                } else {
                    let mut w = 1.0 / (x[j] - x[i]);
                    for m in idx.clone() {
                        if m != i && m != j {
                            w *= (x[i] - x[m]) / (x[j] - x[m]);
                        }
                    }
                    w
                };
                d += weight * y[j];
            }
            d
        })
        .collect()
}

/// Running integrals of a tabulated function, queried for `int_a^b`
/// without catastrophic cancellation.
#[derive(Debug, Clone)]
pub(crate) struct Antiderivative {
    f: Tabulated,
    /// `int_{u_0}^{u_k}`
    forward: Vec<f64>,
    /// `int_{u_k}^{u_last}`
    backward: Vec<f64>,
    /// `int_0^{u_0}` of the linear continuation below the first node.
    head: f64,
    pivot: f64,
}

impl Antiderivative {
    pub(crate) fn new(f: &Tabulated) -> Self {
        let m = f.mesh.len();
        let mut forward = vec![0.0; m];
        let mut abs_forward = vec![0.0; m];
        for k in 0..m - 1 {
            let piece = f.segment_integral(k, 0.0, 1.0);
            forward[k + 1] = forward[k] + piece;
            abs_forward[k + 1] = abs_forward[k] + piece.abs();
        }
        let mut backward = vec![0.0; m];
        for k in (0..m - 1).rev() {
            backward[k] = backward[k + 1] + f.segment_integral(k, 0.0, 1.0);
        }
        let half = 0.5 * abs_forward[m - 1];
        let pivot_index = abs_forward.partition_point(|&s| s < half).min(m - 1);
        let u0 = f.mesh.nodes[0];
        Self {
            head: f.values[0] * u0 - 0.5 * f.derivatives[0] * u0 * u0,
            pivot: f.mesh.nodes[pivot_index],
            f: f.clone(),
            forward,
            backward,
        }
    }

    /// `int_0^x` for `0 <= x <= u_0`, continuing the function linearly
    /// below the first node.
    fn below_first(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        let (u0, y0, d0) = (self.f.mesh.nodes[0], self.f.values[0], self.f.derivatives[0]);
        y0 * x + d0 * (0.5 * x * x - u0 * x)
    }

    /// `int_0^x`.
    fn lower(&self, x: f64) -> f64 {
        if x <= self.f.mesh.nodes[0] {
            return self.below_first(x);
        }
        match self.f.mesh.locate(x) {
            Some((k, t)) => self.head + self.forward[k] + self.f.segment_integral(k, 0.0, t),
            None => self.head + self.forward[self.forward.len() - 1],
        }
    }

    /// `int_x^inf`.
    pub(crate) fn upper(&self, x: f64) -> f64 {
        if x <= self.f.mesh.nodes[0] {
            return self.backward[0] + self.head - self.below_first(x);
        }
        match self.f.mesh.locate(x) {
            Some((k, t)) => self.backward[k + 1] + self.f.segment_integral(k, t, 1.0),
            None => 0.0,
        }
    }

    /// `int_a^b` for `a <= b`.
    pub(crate) fn between(&self, a: f64, b: f64) -> f64 {
        if let (Some((ka, ta)), Some((kb, tb))) = (self.f.mesh.locate(a), self.f.mesh.locate(b)) {
            if ka == kb {
                return self.f.segment_integral(ka, ta, tb);
            }
        }
        if a >= self.pivot {
            self.upper(a) - self.upper(b)
        } else {
            self.lower(b) - self.lower(a)
        }
    }
}

/// Three-dimensional convolution of two radial functions tabulated on the
/// same mesh:
/// `(f*g)(r) = (2 pi / r) int_0^inf s f(s) [int_{|r-s|}^{r+s} u g(u) du] ds`.
/// Both functions are taken as zero beyond the last node.
pub fn radial_convolution(f: &Tabulated, g: &Tabulated) -> Result<Tabulated> {
    if f.mesh.nodes() != g.mesh.nodes() {
        return Err(Error::LengthMismatch {
            expected: f.mesh.len(),
            actual: g.mesh.len(),
        });
    }
    let mesh = &f.mesh;
    let outer = f.times_radius();
    let inner = Antiderivative::new(&g.times_radius());
    let (gx, gw) = gauss_legendre(4);
    let nodes = mesh.nodes();
    let m = nodes.len();
    // Below the first node s f(s) is continued as a power law through the
    // first two nodes (exponent clamped to [-1, 1]).
    let u0 = nodes[0];
    let (f0, f1) = (outer.values[0], outer.values[1]);
    let power = if f0 != 0.0 && f1 / f0 > 0.0 {
        ((f1 / f0).ln() / (nodes[1] / u0).ln()).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    let head_value = |s: f64| f0 * (s / u0).powf(power);

    let values: Vec<f64> = nodes
        .par_iter()
        .map(|&r| {
            let mut sum = 0.0;
            for (&t, &w) in gx.iter().zip(&gw) {
                let s = t * u0;
                sum += w * u0 * head_value(s) * inner.between((r - s).abs(), r + s);
            }
            for k in 0..m - 1 {
                let len = nodes[k + 1] - nodes[k];
                let mut seg = 0.0;
                for (&t, &w) in gx.iter().zip(&gw) {
                    let s = nodes[k] + t * len;
                    let fs = outer.segment_value(k, t);
                    if fs != 0.0 {
                        seg += w * fs * inner.between((r - s).abs(), r + s);
                    }
                }
                sum += len * seg;
            }
            2.0 * PI / r * sum
        })
        .collect();
    Tabulated::from_values(mesh, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mesh() -> KernelMesh {
        KernelMesh::new(MeshSpec {
            u0: 1e-6,
            ratio: 1.03,
            du_max: 0.01,
            u_end: 12.0,
        })
        .unwrap()
    }

    #[test]
    fn mesh_shape() {
        let m = mesh();
        let x = m.nodes();
        assert_eq!(x[0], 1e-6);
        assert!(m.last() >= 12.0);
        assert!(x.windows(2).all(|w| w[1] > w[0]));
        let last = x.len() - 1;
        assert!(((x[last] - x[last - 1]) - 0.01).abs() < 1e-12);
        assert!(KernelMesh::new(MeshSpec { u0: 0.0, ratio: 1.1, du_max: 0.1, u_end: 1.0 }).is_err());
    }

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let (x, w) = gauss_legendre(4);
        for p in 0..8 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
            assert!((q - 1.0 / (p as f64 + 1.0)).abs() < 1e-14, "degree {p}");
        }
        let (x, w) = gauss_legendre(16);
        let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(31)).sum();
        assert!((q - 1.0 / 32.0).abs() < 1e-14);
    }

    #[test]
    fn hermite_interpolation_and_integrals() {
        let m = mesh();
        let f = Tabulated::from_fn(&m, |u| (-u).exp() * u.sin());
        for &x in &[1e-3f64, 0.37, 2.5, 7.1234] {
            let exact = (-x).exp() * x.sin();
            assert!((f.eval(x) - exact).abs() < 1e-9, "x = {x}");
        }
        let a = Antiderivative::new(&f);
        // int_0^x e^-u sin u; the tabulated function is zero past the last node
        let exact = |x: f64| 0.5 - 0.5 * (-x).exp() * (x.sin() + x.cos());
        let end = *m.nodes().last().unwrap();
        let total = a.upper(0.0);
        assert!((total - exact(end)).abs() < 1e-8, "{total}");
        assert!((a.between(1.0, 3.0) - (exact(3.0) - exact(1.0))).abs() < 1e-10);
    }
}
