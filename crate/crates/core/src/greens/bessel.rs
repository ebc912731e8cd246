//! Modified Bessel functions of the second kind, orders 0, 1 and 2.
//!
//! Small arguments use the ascending series; larger arguments use Steed's
//! continued fraction. Beyond roughly `t = 705` the value underflows and
//! exact zero is returned.

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_LIMIT: f64 = 2.0;
const UNDERFLOW: f64 = 705.0;

/// `K_order(t)` for `order` in `{0, 1, 2}` and `t > 0`.
pub fn bessel_k(order: u32, t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::DomainError(format!("bessel_k requires t > 0, got {t}")));
    }
    let (k0, k1) = k0_k1(t);
    match order {
        0 => Ok(k0),
        1 => Ok(k1),
        2 => Ok(k0 + 2.0 / t * k1),
        _ => Err(Error::DomainError(format!("bessel_k order {order} not supported"))),
    }
}

/// `(K_0(t), K_1(t))` for `t > 0`. No domain check.
pub(crate) fn k0_k1(t: f64) -> (f64, f64) {
    if t <= SERIES_LIMIT {
        series(t)
    } else if t > UNDERFLOW {
        (0.0, 0.0)
    } else {
        let (k0s, k1s) = steed_scaled(t);
        let e = (-t).exp();
        (k0s * e, k1s * e)
    }
}

fn series(t: f64) -> (f64, f64) {
    let x = 0.25 * t * t;
    let log_half = (0.5 * t).ln();

    // K0 = -(ln(t/2) + gamma) I0 + sum_{k>=1} H_k x^k / (k!)^2
    // K1 = 1/t + ln(t/2) I1 - (t/4) sum_k (psi(k+1) + psi(k+2)) x^k / (k! (k+1)!)
    let mut term0 = 1.0; // x^k / (k!)^2
    let mut term1 = 1.0; // x^k / (k! (k+1)!)
    let mut harmonic = 0.0; // H_k
    let mut i0 = 0.0;
    let mut i1 = 0.0;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    for k in 0..60 {
        let kf = k as f64;
        if k > 0 {
            term0 *= x / (kf * kf);
            term1 *= x / (kf * (kf + 1.0));
            harmonic += 1.0 / kf;
        }
        let psi1 = -EULER_GAMMA + harmonic;
        let psi2 = psi1 + 1.0 / (kf + 1.0);
        i0 += term0;
        i1 += term1;
        s0 += harmonic * term0;
        s1 += (psi1 + psi2) * term1;
        if term0 < 1e-18 * i0 && k > 2 {
            break;
        }
    }
    i1 *= 0.5 * t;
    let k0 = -(log_half + EULER_GAMMA) * i0 + s0;
    let k1 = 1.0 / t + log_half * i1 - 0.25 * t * s1;
    (k0, k1)
}

/// `e^t K_0(t)` and `e^t K_1(t)` by Steed's method (order zero).
fn steed_scaled(t: f64) -> (f64, f64) {
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + t);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..10_000 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    let h = a1 * h;
    let k0 = (std::f64::consts::PI / (2.0 * t)).sqrt() / s;
    let k1 = k0 * (t + 0.5 - h) / t;
    (k0, k1)
}
