//! Bessel functions of the first kind, orders zero and one.
//!
//! Power series up to |x| = 12, Hankel asymptotic expansion beyond. The two
//! branches agree to better than 1e-10 at the seam.

use std::f64::consts::PI;

/// Switchover between the series and the asymptotic branch.
pub const SERIES_LIMIT: f64 = 12.0;

pub fn j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= SERIES_LIMIT {
        series(0, ax)
    } else {
        asymptotic(0, ax)
    }
}

pub fn j1(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax <= SERIES_LIMIT { series(1, ax) } else { asymptotic(1, ax) };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

/// `J1(x) / x`, continuous at zero where it equals 1/2.
pub fn j1_over_x(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 1e-4 {
        let q = 0.25 * ax * ax;
        0.5 * (1.0 - 0.5 * q + q * q / 12.0)
    } else {
        j1(ax) / ax
    }
}

/// Power series of J_order for order 0 or 1, summed until terms vanish.
pub fn series(order: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = -half * half;
    let mut term = if order == 0 { 1.0 } else { half };
    let mut sum = term;
    let nu = order as f64;
    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * (kf + nu));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) && kf > half {
            break;
        }
    }
    sum
}

/// Hankel asymptotic expansion, truncated at the smallest term.
pub fn asymptotic(order: u32, x: f64) -> f64 {
    let mu = 4.0 * (order as f64).powi(2);
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    for k in 1..120 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        let next = term * (mu - odd * odd) / (kf * 8.0 * x);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        // terms alternate P: +t0 -t2 +t4 ..., Q: +t1 -t3 +t5 ...
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - (0.5 * order as f64 + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Positive zeros of J1 in increasing order up to `limit`.
pub fn j1_zeros(limit: f64) -> Vec<f64> {
    let mut zeros = Vec::new();
    let mut k = 1usize;
    loop {
        // McMahon's initial guess, refined by Newton with J1' = J0 - J1/x.
        let beta = (k as f64 + 0.25) * PI;
        let mut z = beta - 3.0 / (8.0 * beta) + 3.0 / (128.0 * beta.powi(3));
        if k == 1 {
            z = 3.831_705_970_207_512;
        }
        for _ in 0..20 {
            let f = j1(z);
            let d = j0(z) - f / z;
            let dz = f / d;
            z -= dz;
            if dz.abs() < 1e-15 * z {
                break;
            }
        }
        if z > limit {
            break;
        }
        zeros.push(z);
        k += 1;
    }
    zeros
}
