#![allow(dead_code)]

use nalgebra::DMatrix;
use relhf::coulomb::{DensityMatrix, OrbitalBlock};
use relhf::radial::{inner, RadialGrid};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn kronrod(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

fn adapt(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (k, err) = kronrod(f, a, b);
    if err <= tol.max(1e-14 * k.abs()) || depth == 0 {
        return k;
    }
    let c = 0.5 * (a + b);
    adapt(f, a, c, 0.5 * tol, depth - 1) + adapt(f, c, b, 0.5 * tol, depth - 1)
}

/// Adaptive Gauss-Kronrod (7/15) quadrature on a finite interval to
/// relative accuracy `rel`, measured against a 64-panel first pass.
pub fn quad(f: impl Fn(f64) -> f64, a: f64, b: f64, rel: f64) -> f64 {
    let panels = 64;
    let w = (b - a) / panels as f64;
    let edge = |i: usize| a + i as f64 * w;
    let rough: f64 = (0..panels).map(|i| kronrod(&f, edge(i), edge(i + 1)).0.abs()).sum();
    let tol = rel * rough / panels as f64;
    (0..panels).map(|i| adapt(&f, edge(i), edge(i + 1), tol, 24)).sum()
}

pub fn normalized(grid: &RadialGrid, f: impl Fn(f64) -> f64) -> Vec<f64> {
    let v = grid.sample(f);
    let norm = inner(grid, &v, &v).unwrap().sqrt();
    v.iter().map(|x| x / norm).collect()
}

/// Orthonormalizes the given columns (grid weight `h`) with two Gram-Schmidt passes.
pub fn orthonormal(grid: &RadialGrid, columns: Vec<Vec<f64>>) -> DMatrix<f64> {
    let h = grid.h();
    let mut out: Vec<Vec<f64>> = Vec::new();
    for mut c in columns {
        for _ in 0..2 {
            for b in &out {
                let d: f64 = h * b.iter().zip(&c).map(|(x, y)| x * y).sum::<f64>();
                for (ci, bi) in c.iter_mut().zip(b) {
                    *ci -= d * bi;
                }
            }
        }
        let n = (h * c.iter().map(|x| x * x).sum::<f64>()).sqrt();
        out.push(c.iter().map(|x| x / n).collect());
    }
    let n = grid.n();
    DMatrix::from_fn(n, out.len(), |i, j| out[j][i])
}

/// Hydrogen-like trial orbitals spread over channels and spins.
pub fn trial_density(grid: &RadialGrid) -> DensityMatrix {
    let s = orthonormal(
        grid,
        vec![
            grid.sample(|r| r * (-1.7 * r).exp()),
            grid.sample(|r| r * (1.0 - 0.6 * r) * (-0.6 * r).exp()),
        ],
    );
    let p = orthonormal(grid, vec![grid.sample(|r| r * r * (-0.7 * r).exp())]);
    DensityMatrix::empty()
        .with_block(0, 0, OrbitalBlock::new(s.clone(), vec![1.0, 0.7]).unwrap())
        .with_block(0, 1, OrbitalBlock::new(s.columns(0, 1).into_owned(), vec![1.0]).unwrap())
        .with_block(1, 0, OrbitalBlock::new(p, vec![0.4]).unwrap())
}
