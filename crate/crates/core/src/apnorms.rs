//! `A_p` norms of `e^{iλφ}`: on the circle through discrete Fourier
//! coefficients, and on the line through the continuous transform of the
//! zero-extended function `e^{iλφ} − 1` on `[0, 2π]`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_loglog, LineFit};
use crate::integrability::Verdict;
use crate::moduli::{theta_p, ChiMap, Modulus};
use crate::profile::Profile;
use crate::quad::GaussRule;

/// Largest ℓ² tail outside `|k| ≤ K` accepted by [`circle_ap_norm`].
pub const TAIL_LIMIT: f64 = 1e-8;
/// Samples per unit frequency for the line transform.
pub const LINE_PADDING: usize = 8;
/// Smallest `κ`-style band around the critical exponent.
const MIN_BAND: f64 = 0.025;

/// Smallest cutoff accepted for `λ`: `4(|λ|·max|φ′| + 1)`.
pub fn default_cutoff(phi: &Profile, lambda: f64) -> usize {
    (4.0 * (lambda.abs() * phi.max_abs_derivative() + 1.0)).ceil() as usize
}

fn check_args(phi: &Profile, lambda: f64, p: f64, k: usize) -> Result<()> {
    if !phi.is_periodic() {
        return Err(Error::Unsupported("circle norms need a 2π-periodic profile".into()));
    }
    if !lambda.is_finite() {
        return Err(Error::arg("λ must be finite"));
    }
    if !(1.0..=2.0).contains(&p) {
        return Err(Error::OutOfRange { value: p, low: 1.0, high: 2.0 });
    }
    let need = default_cutoff(phi, lambda);
    if k < need {
        return Err(Error::arg(format!("cutoff K={k} below 4(|λ|·max|φ′| + 1) = {need}")));
    }
    Ok(())
}

/// Samples of `e^{iλφ}` at `2πj/n`.
fn samples(phi: &Profile, lambda: f64, n: usize) -> Vec<Complex64> {
    (0..n).map(|j| Complex64::from_polar(1.0, lambda * phi.value(2.0 * PI * j as f64 / n as f64))).collect()
}

fn fft_in_place(buf: &mut [Complex64]) {
    FftPlanner::new().plan_fft_forward(buf.len()).process(buf);
}

/// Fourier coefficients `c_k`, `k ∈ [−n/2, n/2)`, of `e^{iλφ}` from an `n`-point grid.
pub fn circle_coefficients(phi: &Profile, lambda: f64, n: usize) -> Vec<(i64, Complex64)> {
    let mut buf = samples(phi, lambda, n);
    fft_in_place(&mut buf);
    let half = (n / 2) as i64;
    (-half..half).map(|k| (k, buf[k.rem_euclid(n as i64) as usize] / n as f64)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleNorm {
    pub norm: f64,
    /// `Σ_{|k|>K} |c_k|²`.
    pub tail: f64,
    pub cutoff: usize,
    pub grid: usize,
}

fn circle_norm_impl(phi: &Profile, lambda: f64, p: f64, k: usize, minus_one: bool) -> Result<CircleNorm> {
    check_args(phi, lambda, p, k)?;
    let n = (8 * k).next_power_of_two();
    let mut sum = 0.0;
    let mut tail = 0.0;
    for (j, mut c) in circle_coefficients(phi, lambda, n) {
        if minus_one && j == 0 {
            c -= 1.0;
        }
        if j.unsigned_abs() as usize <= k {
            sum += c.norm().powf(p);
        } else {
            tail += c.norm_sqr();
        }
    }
    if tail > TAIL_LIMIT {
        return Err(Error::CutoffTooSmall { tail });
    }
    Ok(CircleNorm { norm: sum.powf(1.0 / p), tail, cutoff: k, grid: n })
}

/// `‖e^{iλφ}‖_{A_p(𝕋)} = (Σ_{|k|≤K} |c_k|^p)^{1/p}` with `c_k` normalized so `‖1‖ = 1`.
pub fn circle_ap_norm(phi: &Profile, lambda: f64, p: f64, k: usize) -> Result<CircleNorm> {
    circle_norm_impl(phi, lambda, p, k, false)
}

/// `‖e^{iλφ} − 1‖_{A_p(𝕋)}`.
pub fn circle_ap_norm_minus_one(phi: &Profile, lambda: f64, p: f64, k: usize) -> Result<CircleNorm> {
    circle_norm_impl(phi, lambda, p, k, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineNorm {
    pub norm: f64,
    /// Closed-form estimate of `∫_{|ξ|>K} |ĝ|^p` included in `norm`.
    pub tail: f64,
    pub cutoff: usize,
}

/// `mean_ξ |1 − e^{−2πiξ}|^p = mean_x |2 sin(πx)|^p`.
fn mean_jump_factor(p: f64) -> f64 {
    GaussRule::new(16).composite(0.0, 1.0, 16, |x: f64| (2.0 * (PI * x).sin()).abs().powf(p))
}

/// `‖e^{iλφ} − 1‖_{A_p(ℝ)}` for the restriction to `[0, 2π]`, i.e.
/// `(∫ |ĝ(ξ)|^p dξ)^{1/p}` with `g = (e^{iλφ} − 1)·1_{[0,2π]}`.
///
/// `ĝ` is sampled at `ξ = j/8`, `|ξ| ≤ K`; beyond `K` the endpoint jumps give
/// `|ĝ| ≈ |g(0)|·|1 − e^{−2πiξ}|/|ξ|` (or the `|g′(0)|/ξ²` term when `g(0) = 0`).
pub fn line_restriction_norm(phi: &Profile, lambda: f64, p: f64, k: usize) -> Result<LineNorm> {
    check_args(phi, lambda, p, k)?;
    if p <= 1.0 {
        return Err(Error::OutOfRange { value: p, low: 1.0, high: 2.0 });
    }
    if lambda == 0.0 {
        return Ok(LineNorm { norm: 0.0, tail: 0.0, cutoff: k });
    }
    let n = (32 * k).next_power_of_two();
    let m = LINE_PADDING * n;
    let h = 2.0 * PI / n as f64;
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (j, v) in samples(phi, lambda, n).into_iter().enumerate() {
        buf[j] = v - 1.0;
    }
    let g0 = buf[0];
    fft_in_place(&mut buf);
    let pf = LINE_PADDING as f64;
    let top = (k * LINE_PADDING) as i64;
    let mut sum = 0.0;
    for j in -top..=top {
        let xi = j as f64 / pf;
        // trapezoid on [0, 2π] with g(2π) = g(0)
        let end = 0.5 * g0 * (Complex64::from_polar(1.0, -2.0 * PI * xi) - 1.0);
        let v = h * (buf[j.rem_euclid(m as i64) as usize] + end);
        let w = if j.abs() == top { 0.5 } else { 1.0 };
        sum += w * v.norm().powf(p) / pf;
    }
    let kf = k as f64;
    let jump = g0.norm();
    let tail = if jump > 1e-12 {
        2.0 * jump.powf(p) * mean_jump_factor(p) * kf.powf(1.0 - p) / (p - 1.0)
    } else {
        let slope = (lambda * phi.derivative(0.0)).abs();
        2.0 * slope.powf(p) * mean_jump_factor(p) * kf.powf(1.0 - 2.0 * p) / (2.0 * p - 1.0)
    };
    Ok(LineNorm { norm: (sum + tail).powf(1.0 / p), tail, cutoff: k })
}

/// Largest cutoff tried by [`circle_norm_auto`].
const MAX_CUTOFF: usize = 1 << 20;

/// [`circle_ap_norm`] at the smallest cutoff `4(|λ|·max|φ′| + 1)·2^j` whose tail passes.
pub fn circle_norm_auto(phi: &Profile, lambda: f64, p: f64) -> Result<CircleNorm> {
    let mut k = default_cutoff(phi, lambda);
    loop {
        match circle_ap_norm(phi, lambda, p, k) {
            Err(Error::CutoffTooSmall { .. }) if 2 * k <= MAX_CUTOFF => k *= 2,
            r => return r,
        }
    }
}

/// Cutoff from [`circle_norm_auto`] reused for the line norm.
pub fn line_norm_auto(phi: &Profile, lambda: f64, p: f64) -> Result<LineNorm> {
    let k = circle_norm_auto(phi, lambda, 2.0)?.cutoff;
    line_restriction_norm(phi, lambda, p, k)
}

/// Fitted growth of `λ ↦ ‖e^{iλφ}‖_{A_p(𝕋)}` with the exponents it is compared against.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormCurve {
    pub p: f64,
    pub lambdas: Vec<f64>,
    pub norms: Vec<f64>,
    /// Ladder points used in the fit.
    pub fitted: usize,
    pub fit: LineFit,
    /// `1/p − 1/(1+α)` for `ω(δ) = δ^α`: the lower-bound exponent with `χ^{-1}(y) = y^{1/(1+α)}`.
    pub bound_exponent: Option<f64>,
    /// Log-log slope of `Θ_p` over the fitted range.
    pub theta_exponent: Option<f64>,
}

impl NormCurve {
    pub fn slope(&self) -> f64 {
        self.fit.slope
    }

    /// Rows `lambda,norm,p`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,norm,p\n");
        for (l, n) in self.lambdas.iter().zip(&self.norms) {
            out.push_str(&format!("{l},{n:.15e},{}\n", self.p));
        }
        out
    }
}

/// Drops the smallest decade of a geometric ladder when at least two decades remain.
fn fit_window(lambdas: &[f64]) -> Result<usize> {
    if lambdas.len() < 8 {
        return Err(Error::InsufficientData(format!("{} ladder points, need 8", lambdas.len())));
    }
    if lambdas.iter().any(|l| !(*l > 0.0) || !l.is_finite()) || lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::arg("λ ladder must be positive and increasing"));
    }
    let (lo, hi) = (lambdas[0], lambdas[lambdas.len() - 1]);
    if hi / lo < 100.0 * (1.0 - 1e-9) {
        return Err(Error::InsufficientData(format!("λ ladder spans {:.2} decades, need 2", (hi / lo).log10())));
    }
    let start = lambdas.partition_point(|l| *l < 10.0 * lo * (1.0 - 1e-9));
    if hi / lambdas[start] >= 100.0 * (1.0 - 1e-9) && lambdas.len() - start >= 8 {
        Ok(start)
    } else {
        Ok(0)
    }
}

/// Fits the growth of the circle norm over `lambdas`.
///
/// `modulus` is the modulus of `φ′`; defaults to the one the profile was built from.
pub fn growth_fit(phi: &Profile, p: f64, lambdas: &[f64], modulus: Option<&Modulus>) -> Result<NormCurve> {
    let start = fit_window(lambdas)?;
    let norms: Vec<f64> = lambdas
        .par_iter()
        .map(|&l| circle_norm_auto(phi, l, p).map(|c| c.norm))
        .collect::<Result<_>>()?;
    let fit = fit_loglog(&lambdas[start..], &norms[start..])?;
    let modulus = modulus.or(phi.modulus());
    let bound_exponent = modulus.and_then(|m| m.power_exponent()).map(|a| 1.0 / p - 1.0 / (1.0 + a));
    let theta_exponent = match modulus {
        Some(m) if p > 1.0 => {
            let chi = ChiMap::new(m.clone());
            let window = &lambdas[start..];
            let th: Vec<f64> = window.iter().map(|&l| theta_p(&chi, p, l)).collect::<Result<_>>()?;
            Some(fit_loglog(window, &th)?.slope)
        }
        _ => None,
    };
    Ok(NormCurve { p, lambdas: lambdas.to_vec(), norms, fitted: lambdas.len() - start, fit, bound_exponent, theta_exponent })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lemma1Scan {
    pub p: f64,
    /// `(λ, λ^{−p}·‖e^{iλφ} − 1‖^p)` with the line norm.
    pub rows: Vec<(f64, f64)>,
    /// Trapezoid of the integrand over the ladder, in `log λ`.
    pub truncated: f64,
    /// Fitted power of the integrand in `λ`.
    pub exponent: f64,
    pub exponent_se: f64,
    pub band: f64,
    pub verdict: Verdict,
}

/// Integrand of `∫ |λ|^{−p} ‖e^{iλφ} − 1‖^p dλ` on a ladder, with a verdict from its fitted decay:
/// converges when the power is below `−1 − band`, diverges above `−1 + band`.
pub fn lemma1_integrand_scan(phi: &Profile, p: f64, lambdas: &[f64]) -> Result<Lemma1Scan> {
    let start = fit_window(lambdas)?;
    let vals: Vec<f64> = lambdas
        .par_iter()
        .map(|&l| line_norm_auto(phi, l, p).map(|n| l.powf(-p) * n.norm.powf(p)))
        .collect::<Result<_>>()?;
    let mut truncated = 0.0;
    for i in 1..lambdas.len() {
        let dl = (lambdas[i] / lambdas[i - 1]).ln();
        truncated += 0.5 * dl * (vals[i] * lambdas[i] + vals[i - 1] * lambdas[i - 1]);
    }
    let fit = fit_loglog(&lambdas[start..], &vals[start..])?;
    let band = MIN_BAND.max(2.0 * fit.slope_se);
    let verdict = if fit.slope < -1.0 - band {
        Verdict::Converges
    } else if fit.slope > -1.0 + band {
        Verdict::Diverges
    } else {
        Verdict::Marginal
    };
    Ok(Lemma1Scan {
        p,
        rows: lambdas.iter().copied().zip(vals).collect(),
        truncated,
        exponent: fit.slope,
        exponent_se: fit.slope_se,
        band,
        verdict,
    })
}
