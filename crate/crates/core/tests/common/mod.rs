//! Reference computations shared by the integration tests. None of them call
//! into the library's numerical kernels.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex;

pub const K: f64 = 2.0 * PI;

pub fn green(r: [f64; 3]) -> Complex<f64> {
    let dist = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
    Complex::from_polar(1.0 / (4.0 * PI * dist), -K * dist)
}

fn shifted(r: [f64; 3], steps: &[(usize, f64)]) -> [f64; 3] {
    let mut out = r;
    for &(axis, delta) in steps {
        out[axis] += delta;
    }
    out
}

/// Central second difference of `g` along axes `p`, `q` with step `h`.
fn hessian_entry(r: [f64; 3], p: usize, q: usize, h: f64) -> Complex<f64> {
    if p == q {
        (green(shifted(r, &[(p, h)])) - green(r) * 2.0 + green(shifted(r, &[(p, -h)]))) / (h * h)
    } else {
        (green(shifted(r, &[(p, h), (q, h)]))
            - green(shifted(r, &[(p, h), (q, -h)]))
            - green(shifted(r, &[(p, -h), (q, h)]))
            + green(shifted(r, &[(p, -h), (q, -h)])))
            / (4.0 * h * h)
    }
}

/// `(I + ∇∇/k²) g` at displacement `r` from finite differences. The
/// second-order stencil is evaluated at `h` and `h/2` and Richardson
/// extrapolated, cancelling the leading `O(h²)` truncation term.
pub fn dyad_finite_difference(r: [f64; 3], h: f64) -> [[Complex<f64>; 3]; 3] {
    let mut out = [[Complex::new(0.0, 0.0); 3]; 3];
    for p in 0..3 {
        for q in 0..3 {
            let coarse = hessian_entry(r, p, q, h);
            let fine = hessian_entry(r, p, q, h / 2.0);
            let hess = (fine * 4.0 - coarse) / 3.0;
            out[p][q] = hess / (K * K)
                + if p == q {
                    green(r)
                } else {
                    Complex::new(0.0, 0.0)
                };
        }
    }
    out
}

/// Normalized overlap of two identical patterns with power pattern
/// `power(θ)` separated by `delta`, on a dense grid: composite Simpson in `θ`
/// (`theta_intervals`, even) times the periodic trapezoid in `φ`.
pub fn dense_overlap(
    power: impl Fn(f64) -> f64,
    delta: [f64; 3],
    theta_intervals: usize,
    phi_points: usize,
) -> Complex<f64> {
    assert!(theta_intervals % 2 == 0);
    let ht = PI / theta_intervals as f64;
    let hp = 2.0 * PI / phi_points as f64;
    let mut num = Complex::new(0.0, 0.0);
    let mut den = 0.0;
    for i in 0..=theta_intervals {
        let theta = i as f64 * ht;
        let simpson = if i == 0 || i == theta_intervals {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let w = simpson * theta.sin() * power(theta);
        if w == 0.0 {
            continue;
        }
        let mut ring = Complex::new(0.0, 0.0);
        for j in 0..phi_points {
            let phi = j as f64 * hp;
            let u = [
                theta.sin() * phi.cos(),
                theta.sin() * phi.sin(),
                theta.cos(),
            ];
            let phase = K * (u[0] * delta[0] + u[1] * delta[1] + u[2] * delta[2]);
            ring += Complex::from_polar(1.0, phase);
        }
        num += ring * w;
        den += w * phi_points as f64;
    }
    num / den
}

/// `E[log₂(1 + γX)]`, `X ~ Gamma(shape, 1)`, by composite Simpson on
/// `[0, 120]`.
pub fn gamma_log_expectation(gamma: f64, shape: u32) -> f64 {
    let (upper, n) = (120.0, 200_000);
    let h = upper / n as f64;
    let norm: f64 = (1..shape).map(|k| k as f64).product();
    let f = |x: f64| (1.0 + gamma * x).log2() * x.powi(shape as i32 - 1) * (-x).exp() / norm;
    let mut acc = f(0.0) + f(upper);
    for i in 1..n {
        acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}
