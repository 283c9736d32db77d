//! Real profiles `φ` on an interval or on the circle, with exact derivatives.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_loglog, LineFit};
use crate::moduli::{Modulus, ModulusSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Constant {
        value: f64,
    },
    /// `intercept + slope·t`.
    Linear {
        slope: f64,
        #[serde(default)]
        intercept: f64,
    },
    /// `offset + amplitude·cos(frequency·t)`.
    Cosine {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        frequency: f64,
        #[serde(default)]
        offset: f64,
    },
    /// Ramp times a lacunary wiggle on `[c, b]`: `φ(c) = 0`, `φ′(c) = 1`, `φ′(b) = 0`.
    Surrogate {
        modulus: ModulusSpec,
        #[serde(default = "unit_interval")]
        interval: [f64; 2],
        eta: f64,
        #[serde(default = "default_ramp_depth")]
        depth: u32,
    },
    /// `sin t + η·Σ (a_k/S)·sin(2^k t)/2^k` on the circle, with `a_k = ω(2^{-k})`.
    Lacunary {
        modulus: ModulusSpec,
        eta: f64,
        #[serde(default = "default_periodic_depth")]
        depth: u32,
    },
}

fn one() -> f64 {
    1.0
}

fn unit_interval() -> [f64; 2] {
    [0.0, 1.0]
}

pub const DEFAULT_RAMP_DEPTH: u32 = 24;
pub const DEFAULT_PERIODIC_DEPTH: u32 = 12;

fn default_ramp_depth() -> u32 {
    DEFAULT_RAMP_DEPTH
}

fn default_periodic_depth() -> u32 {
    DEFAULT_PERIODIC_DEPTH
}

impl ProfileSpec {
    pub fn build(&self) -> Result<Profile> {
        let kind = match self {
            ProfileSpec::Constant { value } => {
                finite(&[*value])?;
                Kind::Linear { slope: 0.0, intercept: *value }
            }
            ProfileSpec::Linear { slope, intercept } => {
                finite(&[*slope, *intercept])?;
                Kind::Linear { slope: *slope, intercept: *intercept }
            }
            ProfileSpec::Cosine { amplitude, frequency, offset } => {
                finite(&[*amplitude, *frequency, *offset])?;
                Kind::Cosine { amplitude: *amplitude, frequency: *frequency, offset: *offset }
            }
            ProfileSpec::Surrogate { modulus, interval, eta, depth } => {
                let m = modulus.build()?;
                return surrogate_profile(&m, (interval[0], interval[1]), *eta, *depth);
            }
            ProfileSpec::Lacunary { modulus, eta, depth } => {
                let m = modulus.build()?;
                return lacunary_profile(&m, *eta, *depth);
            }
        };
        Ok(Profile { kind, spec: Some(self.clone()), modulus: None })
    }
}

fn finite(values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::arg("profile parameters must be finite"))
    }
}

#[derive(Debug, Clone)]
struct Wiggle {
    /// `η·a_k/S` per term.
    weights: Vec<f64>,
    /// Angular frequency of each term.
    freqs: Vec<f64>,
}

#[derive(Debug, Clone)]
enum Kind {
    Linear { slope: f64, intercept: f64 },
    Cosine { amplitude: f64, frequency: f64, offset: f64 },
    Ramp { c: f64, len: f64, norm: f64, wiggle: Wiggle },
    Lacunary { wiggle: Wiggle },
}

/// A real profile with exact value and derivative.
#[derive(Debug, Clone)]
pub struct Profile {
    kind: Kind,
    spec: Option<ProfileSpec>,
    modulus: Option<Modulus>,
}

impl Profile {
    pub fn constant(value: f64) -> Self {
        Self { kind: Kind::Linear { slope: 0.0, intercept: value }, spec: Some(ProfileSpec::Constant { value }), modulus: None }
    }

    pub fn linear(slope: f64, intercept: f64) -> Self {
        Self {
            kind: Kind::Linear { slope, intercept },
            spec: Some(ProfileSpec::Linear { slope, intercept }),
            modulus: None,
        }
    }

    pub fn cosine(amplitude: f64, frequency: f64, offset: f64) -> Self {
        Self {
            kind: Kind::Cosine { amplitude, frequency, offset },
            spec: Some(ProfileSpec::Cosine { amplitude, frequency, offset }),
            modulus: None,
        }
    }

    pub fn spec(&self) -> Option<&ProfileSpec> {
        self.spec.as_ref()
    }

    /// Declared modulus of continuity of `φ′`, when the profile was built from one.
    pub fn modulus(&self) -> Option<&Modulus> {
        self.modulus.as_ref()
    }

    pub fn is_periodic(&self) -> bool {
        match self.kind {
            Kind::Lacunary { .. } => true,
            Kind::Cosine { frequency, .. } => frequency.fract() == 0.0 && frequency != 0.0,
            Kind::Linear { slope, .. } => slope == 0.0,
            Kind::Ramp { .. } => false,
        }
    }

    /// `[c, b]` of a ramp profile.
    pub fn ramp_interval(&self) -> Option<(f64, f64)> {
        match self.kind {
            Kind::Ramp { c, len, .. } => Some((c, c + len)),
            _ => None,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::Linear { slope, intercept } => intercept + slope * t,
            Kind::Cosine { amplitude, frequency, offset } => offset + amplitude * (frequency * t).cos(),
            Kind::Ramp { c, len, norm, wiggle } => {
                let x = t - c;
                let l = *len;
                let mut v = l * x - 0.5 * x * x;
                for (w, f) in wiggle.weights.iter().zip(&wiggle.freqs) {
                    let (s, co) = (f * x).sin_cos();
                    v += w * ((l - x) * s / f + (1.0 - co) / (f * f));
                }
                v / (l * norm)
            }
            Kind::Lacunary { wiggle } => {
                let mut v = t.sin();
                for (w, f) in wiggle.weights.iter().zip(&wiggle.freqs) {
                    v += w * (f * t).sin() / f;
                }
                v
            }
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::Linear { slope, .. } => *slope,
            Kind::Cosine { amplitude, frequency, .. } => -amplitude * frequency * (frequency * t).sin(),
            Kind::Ramp { c, len, norm, wiggle } => {
                let x = t - c;
                (len - x) / len * (1.0 + wiggle.sum_cos(x)) / norm
            }
            Kind::Lacunary { wiggle } => t.cos() + wiggle.sum_cos(t),
        }
    }

    /// Upper bound of `|φ′|` on the whole line.
    pub fn max_abs_derivative(&self) -> f64 {
        match &self.kind {
            Kind::Linear { slope, .. } => slope.abs(),
            Kind::Cosine { amplitude, frequency, .. } => (amplitude * frequency).abs(),
            // On [c, b] the ramp factor is at most 1 and 1 + ηW ≤ 1 + η = norm.
            Kind::Ramp { .. } => 1.0,
            Kind::Lacunary { wiggle } => 1.0 + wiggle.weights.iter().sum::<f64>(),
        }
    }

    /// Largest angular frequency present in `φ`.
    pub fn bandwidth(&self) -> f64 {
        match &self.kind {
            Kind::Linear { .. } => 0.0,
            Kind::Cosine { frequency, .. } => frequency.abs(),
            Kind::Ramp { wiggle, .. } | Kind::Lacunary { wiggle } => wiggle.freqs.last().copied().unwrap_or(1.0),
        }
    }

    /// Angular frequency above which every term of `φ` has amplitude below `tol`.
    pub fn effective_bandwidth(&self, tol: f64) -> f64 {
        match &self.kind {
            Kind::Ramp { len, norm, wiggle, .. } => {
                let mut top = 1.0 / len;
                for (w, f) in wiggle.weights.iter().zip(&wiggle.freqs) {
                    // amplitude of a term in φ is at most 2·w·len/f / (len·norm)
                    if 2.0 * w / (f * norm) > tol {
                        top = *f;
                    }
                }
                top
            }
            Kind::Lacunary { wiggle } => {
                let mut top = 1.0;
                for (w, f) in wiggle.weights.iter().zip(&wiggle.freqs) {
                    if w / f > tol {
                        top = *f;
                    }
                }
                top
            }
            _ => self.bandwidth(),
        }
    }
}

impl Wiggle {
    fn new(m: &Modulus, eta: f64, depth: u32, scale: f64) -> Result<Self> {
        if depth == 0 || depth > 40 {
            return Err(Error::arg(format!("wiggle depth must lie in 1..=40, got {depth}")));
        }
        let mut coeffs = Vec::with_capacity(depth as usize);
        for k in 1..=depth {
            coeffs.push(m.eval((0.5f64).powi(k as i32).min(m.cap()))?);
        }
        let total: f64 = coeffs.iter().sum();
        if !(total > 0.0) {
            return Err(Error::arg("modulus vanishes on the dyadic wiggle grid"));
        }
        Ok(Self {
            weights: coeffs.iter().map(|a| eta * a / total).collect(),
            freqs: (1..=depth).map(|k| 2f64.powi(k as i32) / scale).collect(),
        })
    }

    fn sum_cos(&self, x: f64) -> f64 {
        self.weights.iter().zip(&self.freqs).map(|(w, f)| w * (f * x).cos()).sum()
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if (0.0..0.5).contains(&eta) {
        Ok(())
    } else {
        Err(Error::arg(format!("wiggle amplitude η must lie in [0, 1/2) to keep φ′ positive, got {eta}")))
    }
}

fn doubling(m: &Modulus) -> Result<Modulus> {
    if m.has_doubling() {
        Ok(m.clone())
    } else {
        m.clone().with_doubling().map_err(|e| Error::arg(format!("surrogate profile needs a doubling modulus: {e}")))
    }
}

/// Profile on `[c, b]` with `φ′(t) = ((b−t)/(b−c))·(1 + η·W(t)) / (1 + η)`,
/// where `W(t) = Σ_k a_k cos(2^k (t−c)/(b−c)) / Σ_k a_k` and `a_k = ω(2^{-k})`.
pub fn surrogate_profile(m: &Modulus, interval: (f64, f64), eta: f64, depth: u32) -> Result<Profile> {
    check_eta(eta)?;
    let (c, b) = interval;
    if !(b > c) || !c.is_finite() || !b.is_finite() {
        return Err(Error::arg(format!("surrogate interval needs c < b, got ({c}, {b})")));
    }
    let m = doubling(m)?;
    let len = b - c;
    let wiggle = Wiggle::new(&m, eta, depth, len)?;
    let spec = m.spec().map(|ms| ProfileSpec::Surrogate { modulus: ms, interval: [c, b], eta, depth });
    Ok(Profile { kind: Kind::Ramp { c, len, norm: 1.0 + eta, wiggle }, spec, modulus: Some(m) })
}

/// Periodic profile `sin t + η·Σ_k (a_k/S)·sin(2^k t)/2^k` whose derivative has modulus `≍ ω`.
pub fn lacunary_profile(m: &Modulus, eta: f64, depth: u32) -> Result<Profile> {
    check_eta(eta)?;
    let m = doubling(m)?;
    let wiggle = Wiggle::new(&m, eta, depth, 1.0)?;
    let spec = m.spec().map(|ms| ProfileSpec::Lacunary { modulus: ms, eta, depth });
    Ok(Profile { kind: Kind::Lacunary { wiggle }, spec, modulus: Some(m) })
}

/// `sup_{|x−y|≤δ} |f(x) − f(y)|` over samples `f(a + i·h)`, for each window width in `deltas`.
pub fn sampled_modulus(values: &[f64], step: f64, deltas: &[f64]) -> Vec<f64> {
    deltas
        .iter()
        .map(|&d| {
            let w = ((d / step) + 1e-9).floor() as usize + 1;
            window_oscillation(values, w)
        })
        .collect()
}

/// Largest `max − min` over all windows of `w` consecutive samples.
fn window_oscillation(values: &[f64], w: usize) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let w = w.clamp(1, values.len());
    let mut maxq: VecDeque<usize> = VecDeque::new();
    let mut minq: VecDeque<usize> = VecDeque::new();
    let mut best = 0.0f64;
    for (i, &v) in values.iter().enumerate() {
        while maxq.back().is_some_and(|&j| values[j] <= v) {
            maxq.pop_back();
        }
        maxq.push_back(i);
        while minq.back().is_some_and(|&j| values[j] >= v) {
            minq.pop_back();
        }
        minq.push_back(i);
        if maxq[0] + w <= i {
            maxq.pop_front();
        }
        if minq[0] + w <= i {
            minq.pop_front();
        }
        if i + 1 >= w {
            best = best.max(values[maxq[0]] - values[minq[0]]);
        }
    }
    best
}

/// Measured modulus of `φ′` on `[a, b]` against the declared gauge.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DerivativeModulus {
    pub deltas: Vec<f64>,
    pub measured: Vec<f64>,
    /// `max_δ measured(δ)/ω(δ)`, when a modulus is declared.
    pub constant: Option<f64>,
    pub fit: LineFit,
}

/// Samples `φ′` on `[a, b]` with `samples` points and measures its modulus of continuity.
pub fn derivative_modulus(pr: &Profile, a: f64, b: f64, samples: usize, deltas: &[f64]) -> Result<DerivativeModulus> {
    if !(b > a) || samples < 3 || deltas.is_empty() {
        return Err(Error::arg("derivative_modulus needs a < b, at least 3 samples and a δ grid"));
    }
    let h = (b - a) / (samples - 1) as f64;
    if deltas.iter().any(|&d| !(d >= h)) {
        return Err(Error::Resolution { cell: h, limit: deltas.iter().cloned().fold(f64::INFINITY, f64::min) });
    }
    let vals: Vec<f64> = (0..samples).map(|i| pr.derivative(a + h * i as f64)).collect();
    let measured = sampled_modulus(&vals, h, deltas);
    let constant = match pr.modulus() {
        Some(m) => {
            let mut c = 0.0f64;
            for (&d, &w) in deltas.iter().zip(&measured) {
                c = c.max(w / m.eval(d.min(m.cap()))?);
            }
            Some(c)
        }
        None => None,
    };
    let fit = fit_loglog(deltas, &measured)?;
    Ok(DerivativeModulus { deltas: deltas.to_vec(), measured, constant, fit })
}

/// True when every window of `window` consecutive second differences of `φ`
/// (spacing `h`) contains one of magnitude above `1e-12`.
pub fn is_nowhere_linear(pr: &Profile, a: f64, b: f64, h: f64, window: usize) -> bool {
    let n = ((b - a) / h).floor() as usize;
    if n < 3 {
        return false;
    }
    let v: Vec<f64> = (0..=n).map(|i| pr.value(a + h * i as f64)).collect();
    let d2: Vec<bool> = v.windows(3).map(|w| (w[0] - 2.0 * w[1] + w[2]).abs() > 1e-12).collect();
    let window = window.clamp(1, d2.len());
    let mut count = d2[..window].iter().filter(|x| **x).count();
    if count == 0 {
        return false;
    }
    for i in window..d2.len() {
        count += d2[i] as usize;
        count -= d2[i - window] as usize;
        if count == 0 {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, Adaptive};

    fn sqrt_modulus() -> Modulus {
        Modulus::power(0.5).unwrap()
    }

    #[test]
    fn surrogate_endpoint_conditions() {
        for eta in [0.0, 0.25, 0.45] {
            let pr = surrogate_profile(&sqrt_modulus(), (0.5, 2.0), eta, 24).unwrap();
            assert_eq!(pr.value(0.5), 0.0);
            assert!((pr.derivative(0.5) - 1.0).abs() < 1e-12);
            assert!(pr.derivative(2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn surrogate_value_is_antiderivative() {
        let pr = surrogate_profile(&sqrt_modulus(), (0.0, 1.0), 0.3, 10).unwrap();
        for &t in &[0.1, 0.37, 0.8, 1.0] {
            let q = integrate(|x| pr.derivative(x), 0.0, t, Adaptive::tol(1e-14, 1e-13).panels(64)).unwrap();
            assert!((q.value - pr.value(t)).abs() < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn flat_wiggle_is_quadratic() {
        let pr = surrogate_profile(&sqrt_modulus(), (0.0, 2.0), 0.0, 8).unwrap();
        for &t in &[0.0, 0.5, 1.3, 2.0] {
            // φ(t) = (ℓ/2)(1 − ((b−t)/ℓ)^2)
            let exact = 1.0 * (1.0 - ((2.0 - t) / 2.0f64).powi(2));
            assert!((pr.value(t) - exact).abs() < 1e-14);
        }
        assert!(is_nowhere_linear(&pr, 0.0, 2.0, 1e-3, 20));
    }

    #[test]
    fn surrogate_derivative_positive_on_fine_grid() {
        let pr = surrogate_profile(&sqrt_modulus(), (0.0, 1.0), 0.25, 24).unwrap();
        let n = 100_000;
        for i in 0..n {
            let t = i as f64 / n as f64;
            assert!(pr.derivative(t) > 0.0, "t = {t}");
        }
    }

    #[test]
    fn rejects_large_eta_and_missing_doubling() {
        assert!(matches!(surrogate_profile(&sqrt_modulus(), (0.0, 1.0), 0.5, 8), Err(Error::Argument(_))));
        let lip = Modulus::power(1.0).unwrap();
        assert!(matches!(surrogate_profile(&lip, (0.0, 1.0), 0.2, 8), Err(Error::Argument(_))));
    }

    #[test]
    fn surrogate_modulus_tracks_declared_exponent() {
        for alpha in [0.5, 0.75] {
            let m = Modulus::power(alpha).unwrap();
            let pr = surrogate_profile(&m, (0.0, 1.0), 0.45, 24).unwrap();
            let deltas: Vec<f64> = (6..=14).map(|k| 2f64.powi(-k)).collect();
            let dm = derivative_modulus(&pr, 0.0, 1.0, 1 << 20, &deltas).unwrap();
            assert!((dm.fit.slope - alpha).abs() < 0.05, "alpha {alpha}: {}", dm.fit.slope);
            assert!(dm.constant.unwrap().is_finite());
        }
    }

    #[test]
    fn linear_profile_detected() {
        let pr = Profile::linear(1.0, 0.0);
        assert!(!is_nowhere_linear(&pr, 0.0, 1.0, 1e-3, 10));
    }

    #[test]
    fn lacunary_derivative() {
        let m = Modulus::power(0.5).unwrap();
        let pr = lacunary_profile(&m, 0.3, 8).unwrap();
        let h = 1e-6;
        for &t in &[0.0, 1.0, 4.0] {
            let fd = (pr.value(t + h) - pr.value(t - h)) / (2.0 * h);
            assert!((fd - pr.derivative(t)).abs() < 1e-6);
        }
        assert!(pr.is_periodic());
        assert!((pr.value(2.0 * std::f64::consts::PI) - pr.value(0.0)).abs() < 1e-12);
    }

    #[test]
    fn window_oscillation_matches_brute_force() {
        let v: Vec<f64> = (0..200).map(|i| ((i * 37 % 101) as f64).sin()).collect();
        for w in [1, 2, 5, 33, 200] {
            let mut best = 0.0f64;
            for i in 0..=v.len() - w {
                let s = &v[i..i + w];
                let mx = s.iter().cloned().fold(f64::MIN, f64::max);
                let mn = s.iter().cloned().fold(f64::MAX, f64::min);
                best = best.max(mx - mn);
            }
            assert_eq!(window_oscillation(&v, w), best);
        }
    }
}
