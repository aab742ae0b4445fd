//! Brute-force reference integrals, independent of the library's embedding
//! and quadrature code.
//!
//! Double-exponential (tanh-sinh) quadrature with level doubling; the kernel
//! is the unit-width gaussian `exp(-z^2)/sqrt(pi)` written out by hand.

#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};

/// Kernel support used by the oracle; `exp(-144)` is far below double epsilon.
pub const Z_MAX: f64 = 12.0;

pub fn gaussian(z: f64) -> f64 {
    (-z * z).exp() / PI.sqrt()
}

/// `int_lo^hi f` by tanh-sinh, refined until successive levels agree to `tol`
/// (relative, with an absolute floor of `tol * 1e-300`).
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let half = 0.5 * (hi - lo);
    let t_max = 3.5;
    // one node: x = c + half * tanh(pi/2 sinh t), w = half * pi/2 cosh t / cosh^2(pi/2 sinh t)
    let node = |t: f64| -> f64 {
        let u = FRAC_PI_2 * t.sinh();
        let ch = u.cosh();
        let w = half * FRAC_PI_2 * t.cosh() / (ch * ch);
        // distance from the nearer endpoint, computed without cancellation
        let d = half / (u.abs().exp() * ch);
        let x = if u >= 0.0 { hi - d } else { lo + d };
        if x <= lo || x >= hi || w == 0.0 {
            0.0
        } else {
            w * f(x)
        }
    };
    let mut h = 0.5;
    let mut sum = node(0.0);
    let mut j = 1;
    while (j as f64) * h <= t_max {
        let t = j as f64 * h;
        sum += node(t) + node(-t);
        j += 1;
    }
    let mut prev = sum * h;
    for _ in 0..12 {
        h *= 0.5;
        // new nodes are the odd multiples of the halved step
        let mut k = 1;
        while (k as f64) * h <= t_max {
            let t = k as f64 * h;
            sum += node(t) + node(-t);
            k += 2;
        }
        let cur = sum * h;
        if (cur - prev).abs() <= tol * cur.abs().max(1e-300) {
            return cur;
        }
        prev = cur;
    }
    prev
}

/// Smoothed `r^-n H(r - a)`: `int rho(y) (r + eps y)^-n` over `y > (a - r)/eps`.
pub fn smoothed_power(n: i32, r: f64, a: f64, eps: f64) -> f64 {
    let lo = ((a - r) / eps).max(-Z_MAX);
    if lo >= Z_MAX {
        return 0.0;
    }
    tanh_sinh(|y| gaussian(y) * (r + eps * y).powi(-n), lo, Z_MAX, 1e-13)
}

/// Smoothed `delta(r - a)`.
pub fn smoothed_delta(r: f64, a: f64, eps: f64) -> f64 {
    gaussian((a - r) / eps) / eps
}

/// Smoothed radial Coulomb field for unit charge.
pub fn field(r: f64, a: f64, eps: f64) -> f64 {
    smoothed_power(2, r, a, eps) - smoothed_delta(r, a, eps) / a
}

/// Radial factor of `E x H` for unit charge and dipole.
pub fn cross(r: f64, a: f64, eps: f64) -> f64 {
    let f2 = smoothed_power(2, r, a, eps);
    let f3 = smoothed_power(3, r, a, eps);
    let g = smoothed_delta(r, a, eps);
    (f2 - g / a) * (2.0 * f3 - f2 / r - g / (a * a))
}

/// Integrates `w` over `[max(a - Z_MAX eps, 0), inf)`: the kernel window
/// split at `a`, then the far zone mapped by `r = R/t`. Below the window every
/// smoothed term is zero. In the far zone the smoothed powers still differ
/// from `r^-n` at relative order `(eps/r)^2`, so the tail is integrated too.
fn window_plus_tail<F: Fn(f64) -> f64>(w: F, a: f64, eps: f64) -> f64 {
    let lo = (a - Z_MAX * eps).max(0.0);
    let hi = a + Z_MAX * eps;
    let inner = tanh_sinh(&w, lo, a, 1e-12) + tanh_sinh(&w, a, hi, 1e-12);
    let tail = tanh_sinh(|t| w(hi / t) * hi / (t * t), 0.0, 1.0, 1e-12);
    inner + tail
}

/// `int_0^inf r^n E^2 dr` for `n < 3`.
pub fn moment_m(n: i32, a: f64, eps: f64) -> f64 {
    window_plus_tail(
        |r| {
            let e = field(r, a, eps);
            r.powi(n) * e * e
        },
        a,
        eps,
    )
}

/// `int_0^inf r^n P dr` for `n < 4`.
pub fn moment_r(n: i32, a: f64, eps: f64) -> f64 {
    window_plus_tail(|r| r.powi(n) * cross(r, a, eps), a, eps)
}
