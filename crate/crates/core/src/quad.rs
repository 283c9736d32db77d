//! Gauss–Legendre rules and adaptive Gauss–Kronrod integration.
//!
//! The adaptive driver works for real and complex integrands alike and accepts
//! an initial panel count so oscillatory integrands can be pre-split before
//! the error-driven bisection starts.

use std::collections::BinaryHeap;
use std::cmp::Ordering;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Values the adaptive integrator can accumulate.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// 7-point Gauss weights for nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One Gauss–Kronrod 7/15 panel: returns (kronrod estimate, |kronrod - gauss|).
pub fn gk15<T: QuadValue, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> (T, f64) {
    let (k, g) = gk15_pair(f, a, b);
    (k, (k - g).magnitude())
}

/// Kronrod and embedded Gauss estimates of one panel.
pub fn gk15_pair<T: QuadValue, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> (T, T) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let sum = f(center - dx) + f(center + dx);
        kronrod = kronrod + sum * WGK[j];
        if j % 2 == 1 {
            gauss = gauss + sum * WG[j / 2];
        }
    }
    (kronrod * half, gauss * half)
}

/// Composite Gauss–Kronrod on equal panels, doubling the panel count until the
/// Kronrod and Gauss sums agree to `tol` or `max_panels` is reached.
///
/// Suited to integrands with many oscillations of tiny amplitude, where the
/// per-panel error estimates of [`integrate`] add up pessimistically.
pub fn integrate_uniform<T: QuadValue, F: FnMut(f64) -> T>(
    mut f: F,
    a: f64,
    b: f64,
    panels: usize,
    tol: f64,
    max_panels: usize,
) -> Result<Integral<T>> {
    let mut n = panels.max(1);
    loop {
        let h = (b - a) / n as f64;
        let mut k_sum = T::zero();
        let mut g_sum = T::zero();
        for i in 0..n {
            let lo = a + h * i as f64;
            let hi = if i + 1 == n { b } else { lo + h };
            let (k, g) = gk15_pair(&mut f, lo, hi);
            k_sum = k_sum + k;
            g_sum = g_sum + g;
        }
        let error = (k_sum - g_sum).magnitude();
        if error <= tol {
            return Ok(Integral { value: k_sum, error, panels: n });
        }
        if 2 * n > max_panels {
            return Err(Error::Accuracy { target: tol, achieved: error });
        }
        n *= 2;
    }
}

/// Tolerances and limits of [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Adaptive {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub initial_panels: usize,
    pub max_panels: usize,
}

impl Default for Adaptive {
    fn default() -> Self {
        Self { abs_tol: 1e-12, rel_tol: 1e-10, initial_panels: 1, max_panels: 20_000 }
    }
}

impl Adaptive {
    pub fn tol(abs_tol: f64, rel_tol: f64) -> Self {
        Self { abs_tol, rel_tol, ..Self::default() }
    }

    pub fn panels(mut self, initial: usize) -> Self {
        self.initial_panels = initial.max(1);
        self.max_panels = self.max_panels.max(4 * self.initial_panels);
        self
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral<T> {
    pub value: T,
    pub error: f64,
    pub panels: usize,
}

struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T> Eq for Panel<T> {}
impl<T> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Kronrod integration of `f` over `[a, b]`.
///
/// Returns [`Error::Accuracy`] when `max_panels` is exhausted before the
/// requested tolerance is met.
pub fn integrate<T: QuadValue, F: FnMut(f64) -> T>(
    mut f: F,
    a: f64,
    b: f64,
    opts: Adaptive,
) -> Result<Integral<T>> {
    let out = integrate_best_effort(&mut f, a, b, opts);
    let target = opts.abs_tol.max(opts.rel_tol * out.value.magnitude());
    if out.error <= target {
        Ok(out)
    } else {
        Err(Error::Accuracy { target, achieved: out.error })
    }
}

/// Like [`integrate`] but always returns the final estimate.
pub fn integrate_best_effort<T: QuadValue, F: FnMut(f64) -> T>(
    f: &mut F,
    a: f64,
    b: f64,
    opts: Adaptive,
) -> Integral<T> {
    if a == b {
        return Integral { value: T::zero(), error: 0.0, panels: 0 };
    }
    let n0 = opts.initial_panels.max(1);
    let width = (b - a) / n0 as f64;
    let mut heap = BinaryHeap::with_capacity(2 * n0);
    let mut total = T::zero();
    let mut total_err = 0.0;
    for i in 0..n0 {
        let lo = a + width * i as f64;
        let hi = if i + 1 == n0 { b } else { lo + width };
        let (value, error) = gk15(f, lo, hi);
        total = total + value;
        total_err += error;
        heap.push(Panel { a: lo, b: hi, value, error });
    }
    while heap.len() < opts.max_panels {
        let target = opts.abs_tol.max(opts.rel_tol * total.magnitude());
        if total_err <= target {
            break;
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(f, worst.a, mid);
        let (v2, e2) = gk15(f, mid, worst.b);
        total = total - worst.value + v1 + v2;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
    }
    // Re-sum to shed the drift of the running updates.
    let mut value = T::zero();
    let mut error = 0.0;
    let panels = heap.len();
    let mut parts: Vec<Panel<T>> = heap.into_vec();
    parts.sort_by(|x, y| x.a.total_cmp(&y.a));
    for p in &parts {
        value = value + p.value;
        error += p.error;
    }
    Integral { value, error, panels }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A reusable Gauss–Legendre rule mapped onto arbitrary panels.
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Iterates the mapped (node, weight) pairs of `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (c + h * x, h * w))
    }

    pub fn integrate<T: QuadValue, F: FnMut(f64) -> T>(&self, a: f64, b: f64, mut f: F) -> T {
        self.on(a, b).fold(T::zero(), |acc, (x, w)| acc + f(x) * w)
    }

    /// Composite rule over `panels` equal panels.
    pub fn composite<T: QuadValue, F: FnMut(f64) -> T>(
        &self,
        a: f64,
        b: f64,
        panels: usize,
        mut f: F,
    ) -> T {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        let mut acc = T::zero();
        for i in 0..panels {
            let lo = a + h * i as f64;
            let hi = if i + 1 == panels { b } else { lo + h };
            acc = acc + self.integrate(lo, hi, &mut f);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = GaussRule::new(6);
        // degree 11 is the highest exact degree
        let v: f64 = rule.integrate(-1.0, 2.0, |x| x.powi(11) - 3.0 * x.powi(4));
        let exact = (2f64.powi(12) - 1.0) / 12.0 - 3.0 * (32.0 + 1.0) / 5.0;
        assert!((v - exact).abs() < 1e-10 * exact.abs());
        let (_, w) = gauss_legendre(31);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let r = integrate(|x: f64| x.sqrt().recip(), 0.0, 1.0, Adaptive::tol(1e-10, 1e-10)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-8);
    }

    #[test]
    fn adaptive_complex_oscillatory() {
        let w = 200.0;
        let opts = Adaptive::tol(1e-13, 1e-12).panels(64);
        let r = integrate(|x: f64| Complex64::new(0.0, -w * x).exp(), 0.0, 1.0, opts).unwrap();
        let exact = (Complex64::new(1.0, 0.0) - Complex64::new(0.0, -w).exp()) / Complex64::new(0.0, w);
        assert!((r.value - exact).norm() < 1e-12);
    }

    #[test]
    fn adaptive_reports_accuracy_failure() {
        let opts = Adaptive { abs_tol: 1e-15, rel_tol: 0.0, initial_panels: 1, max_panels: 4 };
        let err = integrate(|x: f64| (1.0 / (x + 1e-9)).sin(), 0.0, 1.0, opts).unwrap_err();
        assert!(matches!(err, Error::Accuracy { .. }));
    }
}
