mod common;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relhf::greens::{
    bessel_k, greens_kernel, nu_of_energy, radial_convolution, KernelMesh, MeshSpec, Resolvent, Tabulated, BOUND_SLACK,
};
use relhf::radial::{build_grid, kinetic_operator};

const ALPHA: f64 = 1.0 / 137.036;

/// `K_nu(t) = int_0^inf exp(-t cosh u) cosh(nu u) du`.
fn bessel_by_quadrature(order: u32, t: f64) -> f64 {
    let upper = (800.0 / t).acosh();
    common::quad(|u: f64| (-t * u.cosh()).exp() * (order as f64 * u).cosh(), 0.0, upper, 1e-14)
}

#[test]
fn bessel_matches_integral_representation() {
    for &t in &[0.5, 2.0, 10.0, 0.05, 3.7, 40.0] {
        for order in 0..=2 {
            let direct = bessel_k(order, t).unwrap();
            let oracle = bessel_by_quadrature(order, t);
            assert!(
                ((direct - oracle) / oracle).abs() < 1e-9,
                "K_{order}({t}): {direct} vs quadrature {oracle}"
            );
        }
    }
}

#[test]
fn k1_below_inverse_argument() {
    for i in 0..=60 {
        let t = 10f64.powf(-5.0 + i as f64 / 10.0);
        let k1 = bessel_k(1, t).unwrap();
        assert!(k1 <= 1.0 / t, "K1({t}) = {k1} > 1/t");
    }
    for &t in &[0.01, 0.1, 1.0, 10.0] {
        assert!(bessel_k(1, t).unwrap() <= 1.0 / t);
    }
}

#[test]
fn k1_asymptotic_envelope() {
    let mut t = 1.0;
    while t < 700.0 {
        let scaled = bessel_k(1, t).unwrap() * t.sqrt() * t.exp();
        assert!(scaled > 0.0 && scaled < 2.0, "t = {t}: {scaled}");
        t *= 1.1;
    }
}

#[test]
fn k2_recurrence_and_derivative_identity() {
    let mut t = 1e-6;
    while t < 700.0 {
        let k0 = bessel_k(0, t).unwrap();
        let k1 = bessel_k(1, t).unwrap();
        let k2 = bessel_k(2, t).unwrap();
        assert!(((k2 - k0 - 2.0 / t * k1) / k2).abs() <= 1e-10, "t = {t}");
        t *= 1.37;
    }
    // K2(t) = -t d/dt [K1(t)/t]
    for &t in &[0.3, 1.0, 2.0, 5.0] {
        let d = 1e-5 * t;
        let g = |x: f64| bessel_k(1, x).unwrap() / x;
        let deriv = (g(t + d) - g(t - d)) / (2.0 * d);
        let k2 = bessel_k(2, t).unwrap();
        assert!((-t * deriv / k2 - 1.0).abs() < 1e-7, "t = {t}");
    }
}

fn kernel_cases() -> Vec<(f64, f64)> {
    vec![(-0.5 * ALPHA, ALPHA), (-2.0 * ALPHA, ALPHA), (-0.3, 1.0)]
}

#[test]
fn kernel_positive_and_below_bound() {
    for (e, alpha) in kernel_cases() {
        let mesh = KernelMesh::for_kernel(e, alpha, 10.0).unwrap();
        let k = greens_kernel(e, alpha, &mesh).unwrap();
        assert!(k.nu > 0.0 && k.nu < 1.0 / alpha);
        assert!(k.g.iter().all(|&g| g > 0.0));
        assert!(k.bound_violations().is_empty(), "E = {e}, alpha = {alpha}");
        assert!(k.empirical_constant() <= k.bound_constant * (1.0 + BOUND_SLACK));
        assert_eq!(k.bound_constant, 2.0 * (e + 1.0 / alpha));
    }
}

/// term3 from a one-dimensional integral: with the inner integral done in
/// closed form,
/// `conv(r) = 1/(2 nu r) int_0^inf K1(a s) (e^{-nu|r-s|} - e^{-nu(r+s)}) ds`.
#[test]
fn third_term_matches_direct_quadrature() {
    for (e, alpha) in kernel_cases() {
        let a = 1.0 / alpha;
        let s = e + a;
        let mesh = KernelMesh::for_kernel(e, alpha, 5.0).unwrap();
        let k = greens_kernel(e, alpha, &mesh).unwrap();
        let nu = k.nu;
        // nodes past u_needed = 5 only pad the mesh
        let m = k.u.iter().position(|&u| u > 5.0).unwrap();
        for i in (0..m).step_by(m / 23) {
            let r = k.u[i];
            // e^{-nu|r-t|} - e^{-nu(r+t)} = 2 e^{-nu max} sinh(nu min)
            let integrand = |t: f64| 2.0 * bessel_k(1, a * t).unwrap() * (-nu * r.max(t)).exp() * (nu * r.min(t)).sinh();
            // split at the kink s = r and where K1(a s) has decayed
            let knee = r + 40.0 / a;
            let total = common::quad(integrand, 0.0, r, 1e-13)
                + common::quad(integrand, r, knee, 1e-13)
                + common::quad(integrand, knee, knee + 60.0 / nu, 1e-13);
            let conv = total / (2.0 * nu * r);
            let term3 = s * s * a / (2.0 * PI * PI) * conv;
            assert!(
                ((k.term3[i] - term3) / term3).abs() < 1e-6,
                "E = {e}, alpha = {alpha}, u = {r}: {} vs {term3}",
                k.term3[i]
            );
        }
    }
}

#[test]
fn exponential_moment_converges_below_nu() {
    let (e, alpha) = (-0.5 * ALPHA, ALPHA);
    let nu = nu_of_energy(e, alpha).unwrap();
    let mesh = KernelMesh::for_kernel(e, alpha, 260.0 / nu).unwrap();
    let k = greens_kernel(e, alpha, &mesh).unwrap();
    let beta = 0.9 * nu;
    // trapezoid of e^{beta u} G 4 pi u^2 with increasing cutoffs
    let partial = |cut: f64| {
        let mut acc = 0.0;
        for i in 1..k.u.len() {
            if k.u[i] > cut {
                break;
            }
            let f = |j: usize| (beta * k.u[j]).exp() * k.g[j] * 4.0 * PI * k.u[j] * k.u[j];
            acc += 0.5 * (k.u[i] - k.u[i - 1]) * (f(i) + f(i - 1));
        }
        acc
    };
    let (m1, m2) = (partial(200.0 / nu), partial(280.0 / nu));
    assert!(m2.is_finite() && m1 > 0.0);
    assert!((m2 - m1) / m2 < 1e-6, "{m1} vs {m2}");
    let full = k.weighted_mass(beta);
    assert!(((full - m2) / m2).abs() < 1e-4);
}

#[test]
fn tail_decays_at_rate_nu() {
    for (e, alpha) in kernel_cases() {
        let mesh = KernelMesh::for_kernel(e, alpha, 10.0).unwrap();
        let k = greens_kernel(e, alpha, &mesh).unwrap();
        let slope = k.tail_slope();
        assert!(slope >= -k.nu - 1e-3 && slope <= -k.nu + 1e-3, "slope {slope}, nu {}", k.nu);
    }
}

#[test]
fn kernel_csv_layout() {
    let mesh = KernelMesh::for_kernel(-0.3, 1.0, 1.0).unwrap();
    let k = greens_kernel(-0.3, 1.0, &mesh).unwrap();
    let mut buf = Vec::new();
    k.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("u,G,term1,term2,term3"));
    assert_eq!(lines.count(), k.u.len());
    assert!(text.ends_with('\n'));
}

fn gaussian(var: f64) -> impl Fn(f64) -> f64 {
    move |r| (2.0 * PI * var).powf(-1.5) * (-r * r / (2.0 * var)).exp()
}

fn fine_mesh(u_end: f64) -> KernelMesh {
    KernelMesh::new(MeshSpec {
        u0: 1e-6,
        ratio: 1.03,
        du_max: 0.01,
        u_end,
    })
    .unwrap()
}

/// `int f 4 pi u^2 du` of the interpolant.
fn mass(t: &Tabulated) -> f64 {
    let end = t.mesh().last();
    common::quad(|u| t.eval(u) * 4.0 * PI * u * u, 0.0, end, 1e-13)
}

#[test]
fn gaussian_convolution_is_gaussian() {
    let mesh = fine_mesh(14.0);
    let (v1, v2) = (0.5, 0.8);
    let f = Tabulated::from_fn(&mesh, gaussian(v1));
    let g = Tabulated::from_fn(&mesh, gaussian(v2));
    let fg = radial_convolution(&f, &g).unwrap();
    let exact = gaussian(v1 + v2);
    let err = mesh
        .nodes()
        .iter()
        .zip(fg.values())
        .map(|(&r, &c)| (c - exact(r)).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-6, "max error {err}");

    let gf = radial_convolution(&g, &f).unwrap();
    for (a, b) in fg.values().iter().zip(gf.values()) {
        assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-12 * exact(0.0)), "{a} vs {b}");
    }
    let product = mass(&f) * mass(&g);
    assert!((mass(&fg) / product - 1.0).abs() < 1e-6);
}

#[test]
fn convolution_with_narrow_bump_reproduces_function() {
    let mesh = fine_mesh(10.0);
    let smooth = |r: f64| (-r * r / 2.0).exp();
    let f = Tabulated::from_fn(&mesh, smooth);
    let bump = Tabulated::from_fn(&mesh, gaussian(1e-4));
    let c = radial_convolution(&f, &bump).unwrap();
    for (&r, &v) in mesh.nodes().iter().zip(c.values()) {
        assert!((v - smooth(r)).abs() < 1e-3, "r = {r}");
    }
}

#[test]
fn convolution_symmetric_on_random_pairs() {
    let mesh = KernelMesh::new(MeshSpec {
        u0: 1e-6,
        ratio: 1.03,
        du_max: 0.01,
        u_end: 16.0,
    })
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..4 {
        let (c1, w1, c2, w2): (f64, f64, f64, f64) = (rng.gen(), rng.gen_range(0.5..2.0), rng.gen(), rng.gen_range(0.5..2.0));
        let f = Tabulated::from_fn(&mesh, move |r| (-w1 * r * r).exp() + c1 * (-2.0 * w1 * r * r).exp() * r * r);
        let g = Tabulated::from_fn(&mesh, move |r| (-w2 * r * r).exp() * (1.0 + c2 * r * r));
        let fg = radial_convolution(&f, &g).unwrap();
        let gf = radial_convolution(&g, &f).unwrap();
        let peak = fg.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in fg.values().iter().zip(gf.values()) {
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-6 * peak), "{a} vs {b}");
        }
        assert!((mass(&fg) / (mass(&f) * mass(&g)) - 1.0).abs() < 1e-6);
    }
}

/// Smooth radial test functions, even in `r`.
fn battery() -> Vec<Box<dyn Fn(f64) -> f64>> {
    vec![
        Box::new(|r: f64| (-r * r / 2.0).exp()),
        Box::new(|r: f64| (-r * r).exp()),
        Box::new(|r: f64| r * r * (-r * r).exp()),
        Box::new(|r: f64| 1.0 / r.cosh().powi(2) * (-0.1 * r * r).exp()),
        Box::new(|r: f64| {
            let x = r / 5.0;
            if x < 1.0 {
                (-1.0 / (1.0 - x * x)).exp()
            } else {
                0.0
            }
        }),
    ]
}

#[test]
fn resolvent_inverts_kinetic_operator() {
    // nu = 2: the wall at r_max = 10 sits twenty e-folds out
    let e = -2.0 * ALPHA;
    let n = 400;
    let grid = build_grid(n, 10.0).unwrap();
    let res = Resolvent::new(e, ALPHA, &grid).unwrap();
    let t = kinetic_operator(&grid, 0, ALPHA).unwrap();
    let shifted = t.matrix() - DMatrix::identity(n, n) * e;
    let lu = shifted.clone().lu();
    for (idx, f) in battery().iter().enumerate() {
        let fv = grid.sample(f);
        let psi = res.apply(&fv).unwrap();
        let p = DVector::from_iterator(n, psi.iter().zip(grid.nodes()).map(|(a, r)| a * r));
        let rf = DVector::from_iterator(n, fv.iter().zip(grid.nodes()).map(|(a, r)| a * r));
        let round_trip = (&shifted * &p - &rf).norm() / rf.norm();
        assert!(round_trip <= 1e-3, "function {idx}: round trip {round_trip}");
        let dense = lu.solve(&rf).unwrap();
        let agreement = (&p - &dense).norm() / dense.norm();
        assert!(agreement <= 1e-3, "function {idx}: dense agreement {agreement}");
    }
}

#[test]
fn resolvent_of_zero_is_zero() {
    let grid = build_grid(100, 10.0).unwrap();
    let psi = relhf::greens::resolvent_apply(&vec![0.0; 100], -0.5 * ALPHA, ALPHA, &grid).unwrap();
    assert!(psi.iter().all(|&x| x == 0.0));
}
