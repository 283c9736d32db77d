//! Moduli of continuity and the integral criteria built on them.
//!
//! A [`Modulus`] is a nondecreasing continuous gauge `ω` on `[0, cap]` with
//! `ω(0) = 0`. From it we derive `χ(δ) = δ·ω(δ)` and its inverse
//! ([`ChiMap`]), the growth gauge `Θ_p`, the smoothness integral
//! `J(ε) = ∫_ε^1 δ^{n(p-1)-1} / ω(δ)^{n-p} dδ` and its dual `I(ε)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate, Adaptive, GaussRule};

/// Serializable description of a modulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModulusSpec {
    Power {
        alpha: f64,
        #[serde(default = "default_cap")]
        cap: f64,
        #[serde(default)]
        doubling: bool,
    },
    /// `δ^α · (1 + ln(cap/δ))^(-β)`.
    PowerLog {
        alpha: f64,
        beta: f64,
        #[serde(default = "default_cap")]
        cap: f64,
        #[serde(default)]
        doubling: bool,
    },
    /// Monotone samples joined by straight lines; the last abscissa is the cap.
    Table {
        points: Vec<[f64; 2]>,
        #[serde(default)]
        doubling: bool,
    },
    Regularized {
        base: Box<ModulusSpec>,
    },
}

fn default_cap() -> f64 {
    1.0
}

impl ModulusSpec {
    pub fn power(alpha: f64) -> Self {
        ModulusSpec::Power { alpha, cap: 1.0, doubling: false }
    }

    pub fn build(&self) -> Result<Modulus> {
        match self {
            ModulusSpec::Power { alpha, cap, doubling } => {
                let m = Modulus::power_with_cap(*alpha, *cap)?;
                if *doubling {
                    m.with_doubling()
                } else {
                    Ok(m)
                }
            }
            ModulusSpec::PowerLog { alpha, beta, cap, doubling } => {
                let m = Modulus::power_log(*alpha, *beta, *cap)?;
                if *doubling {
                    m.with_doubling()
                } else {
                    Ok(m)
                }
            }
            ModulusSpec::Table { points, doubling } => {
                let m = Modulus::table(points)?;
                if *doubling {
                    m.with_doubling()
                } else {
                    Ok(m)
                }
            }
            ModulusSpec::Regularized { base } => Ok(regularize_modulus(&base.build()?)),
        }
    }
}

type Callable = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Power { alpha: f64 },
    PowerLog { alpha: f64, beta: f64 },
    Table { xs: Vec<f64>, ys: Vec<f64> },
    Analytic { name: String, f: Callable },
    Regularized { base: Box<Modulus>, grid: Vec<f64>, running_inf: Vec<f64> },
}

/// A modulus of continuity on `[0, cap]`.
#[derive(Clone)]
pub struct Modulus {
    kind: Kind,
    cap: f64,
    doubling: bool,
}

impl fmt::Debug for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            Kind::Power { alpha } => format!("power(alpha={alpha})"),
            Kind::PowerLog { alpha, beta } => format!("power_log(alpha={alpha}, beta={beta})"),
            Kind::Table { xs, .. } => format!("table({} points)", xs.len()),
            Kind::Analytic { name, .. } => format!("analytic({name})"),
            Kind::Regularized { base, .. } => format!("regularized({base:?})"),
        };
        f.debug_struct("Modulus")
            .field("kind", &kind)
            .field("cap", &self.cap)
            .field("doubling", &self.doubling)
            .finish()
    }
}

impl Modulus {
    pub fn power(alpha: f64) -> Result<Self> {
        Self::power_with_cap(alpha, 1.0)
    }

    pub fn power_with_cap(alpha: f64, cap: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::arg(format!("power modulus needs alpha in (0, 1], got {alpha}")));
        }
        check_cap(cap)?;
        Ok(Self { kind: Kind::Power { alpha }, cap, doubling: false })
    }

    pub fn power_log(alpha: f64, beta: f64, cap: f64) -> Result<Self> {
        check_cap(cap)?;
        if !(0.0..=1.0).contains(&alpha) || (alpha == 0.0 && beta <= 0.0) {
            return Err(Error::arg("power-log modulus needs alpha in [0, 1], and beta > 0 when alpha = 0"));
        }
        if alpha + beta < 0.0 {
            return Err(Error::arg("power-log modulus is not monotone when alpha + beta < 0"));
        }
        Ok(Self { kind: Kind::PowerLog { alpha, beta }, cap, doubling: false })
    }

    pub fn table(points: &[[f64; 2]]) -> Result<Self> {
        let mut xs: Vec<f64> = points.iter().map(|p| p[0]).collect();
        let mut ys: Vec<f64> = points.iter().map(|p| p[1]).collect();
        if xs.is_empty() {
            return Err(Error::arg("empty modulus table"));
        }
        if xs[0] > 0.0 {
            xs.insert(0, 0.0);
            ys.insert(0, 0.0);
        }
        if xs[0] != 0.0 || ys[0] != 0.0 {
            return Err(Error::Invariant("table modulus must start at (0, 0)".into()));
        }
        if xs.len() < 2 {
            return Err(Error::arg("modulus table needs a positive abscissa"));
        }
        for w in xs.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Invariant("table abscissae must increase strictly".into()));
            }
        }
        for w in ys.windows(2) {
            if w[1] < w[0] || !w[1].is_finite() {
                return Err(Error::Invariant("table values must be nondecreasing".into()));
            }
        }
        let cap = *xs.last().unwrap();
        Ok(Self { kind: Kind::Table { xs, ys }, cap, doubling: false })
    }

    /// Wraps a user function; monotonicity and `ω(0) = 0` are checked on the sample grid.
    pub fn analytic<F>(name: impl Into<String>, cap: f64, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        check_cap(cap)?;
        let m = Self { kind: Kind::Analytic { name: name.into(), f: Arc::new(f) }, cap, doubling: false };
        if m.raw(0.0) != 0.0 {
            return Err(Error::Invariant("modulus must vanish at zero".into()));
        }
        let grid = m.sample_grid();
        let mut prev = 0.0;
        for &d in &grid {
            let v = m.raw(d);
            if !(v >= prev) || !v.is_finite() {
                return Err(Error::Invariant(format!("modulus decreases near δ = {d:e}")));
            }
            prev = v;
        }
        Ok(m)
    }

    /// Sets the doubling flag after checking `ω(2δ) < 2ω(δ)` on the sample grid.
    pub fn with_doubling(mut self) -> Result<Self> {
        for &d in &self.sample_grid() {
            if 2.0 * d > self.cap {
                continue;
            }
            let (a, b) = (self.raw(2.0 * d), 2.0 * self.raw(d));
            if !(a < b) {
                return Err(Error::Invariant(format!(
                    "doubling condition fails at δ = {d:e}: ω(2δ) = {a:e}, 2ω(δ) = {b:e}"
                )));
            }
        }
        self.doubling = true;
        Ok(self)
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn has_doubling(&self) -> bool {
        self.doubling
    }

    /// Hölder exponent when the modulus is an exact power.
    pub fn power_exponent(&self) -> Option<f64> {
        match self.kind {
            Kind::Power { alpha } => Some(alpha),
            _ => None,
        }
    }

    pub fn spec(&self) -> Option<ModulusSpec> {
        let doubling = self.doubling;
        match &self.kind {
            Kind::Power { alpha } => Some(ModulusSpec::Power { alpha: *alpha, cap: self.cap, doubling }),
            Kind::PowerLog { alpha, beta } => {
                Some(ModulusSpec::PowerLog { alpha: *alpha, beta: *beta, cap: self.cap, doubling })
            }
            Kind::Table { xs, ys } => Some(ModulusSpec::Table {
                points: xs.iter().zip(ys).map(|(x, y)| [*x, *y]).collect(),
                doubling,
            }),
            Kind::Regularized { base, .. } => {
                base.spec().map(|b| ModulusSpec::Regularized { base: Box::new(b) })
            }
            Kind::Analytic { .. } => None,
        }
    }

    /// `ω(δ)`; errors outside `[0, cap]`.
    pub fn eval(&self, delta: f64) -> Result<f64> {
        if !(delta >= 0.0) || delta > self.cap * (1.0 + 1e-12) {
            return Err(Error::OutOfDomain { value: delta, cap: self.cap });
        }
        Ok(self.raw(delta.min(self.cap)))
    }

    fn raw(&self, delta: f64) -> f64 {
        if delta == 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Power { alpha } => delta.powf(*alpha),
            Kind::PowerLog { alpha, beta } => {
                delta.powf(*alpha) * (1.0 + (self.cap / delta).ln().max(0.0)).powf(-beta)
            }
            Kind::Table { xs, ys } => {
                let i = xs.partition_point(|x| *x <= delta);
                if i >= xs.len() {
                    return *ys.last().unwrap();
                }
                let (x0, x1, y0, y1) = (xs[i - 1], xs[i], ys[i - 1], ys[i]);
                y0 + (y1 - y0) * (delta - x0) / (x1 - x0)
            }
            Kind::Analytic { f, .. } => f(delta),
            Kind::Regularized { base, grid, running_inf } => {
                let own = base.raw(delta) / delta;
                let i = grid.partition_point(|x| *x <= delta);
                let inf = if i == 0 { own } else { running_inf[i - 1].min(own) };
                delta / (1.0 + delta) + delta * inf
            }
        }
    }

    /// Geometric grid `cap·2^{-k/8}`, `k = 0..=320`, in increasing order.
    pub fn sample_grid(&self) -> Vec<f64> {
        (0..=320).rev().map(|k| self.cap * 2f64.powf(-(k as f64) / 8.0)).collect()
    }
}

fn check_cap(cap: f64) -> Result<()> {
    if cap > 0.0 && cap.is_finite() {
        Ok(())
    } else {
        Err(Error::arg(format!("modulus cap must be positive and finite, got {cap}")))
    }
}

/// `ω*(δ) = δ/(1+δ) + δ·inf_{0<x≤δ} ω(x)/x`.
///
/// The infimum is tracked as a running minimum on a geometric grid down to
/// `cap·2^{-60}`, combined with the exact value `ω(δ)/δ`, so the result stays
/// nondecreasing and satisfies the strict doubling inequality.
pub fn regularize_modulus(m: &Modulus) -> Modulus {
    let grid: Vec<f64> = (0..=960).rev().map(|k| m.cap * 2f64.powf(-(k as f64) / 16.0)).collect();
    let mut running_inf = Vec::with_capacity(grid.len());
    let mut best = f64::INFINITY;
    for &x in &grid {
        best = best.min(m.raw(x) / x);
        running_inf.push(best);
    }
    Modulus {
        kind: Kind::Regularized { base: Box::new(m.clone()), grid, running_inf },
        cap: m.cap,
        doubling: true,
    }
}

/// `χ(δ) = δ·ω(δ)` together with a bisection inverse.
#[derive(Debug, Clone)]
pub struct ChiMap {
    modulus: Modulus,
    rel_tol: f64,
}

impl ChiMap {
    pub fn new(modulus: Modulus) -> Self {
        Self { modulus, rel_tol: 1e-10 }
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn chi(&self, delta: f64) -> Result<f64> {
        Ok(delta * self.modulus.eval(delta)?)
    }

    /// Upper end of the range of `χ` on `(0, cap]`.
    pub fn range_max(&self) -> f64 {
        self.modulus.cap * self.modulus.raw(self.modulus.cap)
    }

    /// `χ^{-1}(y)` by monotone bisection; `|χ(δ) − y| ≤ 1e-10·y` on return.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        let top = self.range_max();
        if !(y > 0.0) || y > top * (1.0 + 1e-12) {
            return Err(Error::OutOfRange { value: y, low: 0.0, high: top });
        }
        let m = &self.modulus;
        let chi = |d: f64| d * m.raw(d);
        let mut hi = m.cap;
        let mut f_hi = chi(hi);
        if y >= f_hi {
            return Ok(hi);
        }
        let mut lo = hi;
        let mut f_lo = f_hi;
        while f_lo >= y {
            lo *= 0.5;
            let f = chi(lo);
            if f > f_lo {
                return Err(Error::Invariant(format!("χ is not monotone near δ = {lo:e}")));
            }
            f_lo = f;
            if lo < 1e-300 {
                return Err(Error::OutOfRange { value: y, low: 0.0, high: top });
            }
            if f_lo >= y {
                hi = lo;
                f_hi = f_lo;
            }
        }
        for _ in 0..200 {
            if hi - lo <= 1e-15 * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let f = chi(mid);
            if f < f_lo || f > f_hi {
                return Err(Error::Invariant(format!("χ is not monotone near δ = {mid:e}")));
            }
            if f < y {
                lo = mid;
                f_lo = f;
            } else {
                hi = mid;
                f_hi = f;
            }
        }
        let d = if (y - f_lo).abs() <= (f_hi - y).abs() { lo } else { hi };
        let resid = (chi(d) - y).abs();
        if resid > self.rel_tol * y {
            return Err(Error::Invariant(format!(
                "χ^-1 did not converge at y = {y:e} (residual {resid:e}); χ may be flat"
            )));
        }
        Ok(d)
    }
}

fn quad_opts(span: f64) -> Adaptive {
    Adaptive::tol(1e-300, 1e-12).panels(span.abs().ceil().max(1.0) as usize)
}

fn check_np(n: u32, p: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::arg("dimension n must be at least 2"));
    }
    if !(p > 1.0 && p < 2.0) {
        return Err(Error::arg(format!("exponent p must lie in (1, 2), got {p}")));
    }
    Ok(())
}

/// `J(ε) = ∫_ε^1 δ^{n(p−1)−1} / ω(δ)^{n−p} dδ`, integrated in `ln δ`.
pub fn theorem2_integral(m: &Modulus, n: u32, p: f64, eps: f64) -> Result<f64> {
    check_np(n, p)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::arg(format!("cutoff ε must lie in (0, 1), got {eps}")));
    }
    if m.cap < 1.0 {
        return Err(Error::OutOfDomain { value: 1.0, cap: m.cap });
    }
    if m.raw(eps) <= 0.0 {
        return Err(Error::SingularIntegrand(format!("ω vanishes at δ = {eps:e}")));
    }
    let nf = n as f64;
    let (a, b) = (nf * (p - 1.0), nf - p);
    let s0 = eps.ln();
    let r = integrate(|s: f64| {
        let d = s.exp();
        (a * s).exp() / m.raw(d).powf(b)
    }, s0, 0.0, quad_opts(s0))?;
    Ok(r.value)
}

/// `I = ∫_{1/χ(1)}^{Λ} λ^{n−1−p} (χ^{-1}(1/λ))^{(n−1)p} dλ`, integrated in `ln λ`.
pub fn lemma2_dual_integral(c: &ChiMap, n: u32, p: f64, upper: f64) -> Result<f64> {
    check_np(n, p)?;
    if c.modulus.cap < 1.0 {
        return Err(Error::OutOfDomain { value: 1.0, cap: c.modulus.cap });
    }
    let lower = 1.0 / c.chi(1.0)?;
    if !(upper >= lower) || !upper.is_finite() {
        return Err(Error::arg(format!("upper limit {upper} must be finite and at least 1/χ(1) = {lower}")));
    }
    let nf = n as f64;
    let (s0, s1) = (lower.ln(), upper.ln());
    let mut failure = None;
    let r = integrate(|s: f64| {
        match c.inverse((-s).exp()) {
            Ok(d) => ((nf - p) * s).exp() * d.powf((nf - 1.0) * p),
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    }, s0, s1, quad_opts(s1 - s0));
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(r?.value)
}

/// Both sides of the integration-by-parts identity linking `I(ε)` and `J(ε)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DualityCheck {
    pub n: u32,
    pub p: f64,
    pub eps: f64,
    pub dual: f64,
    pub primal: f64,
    /// `I(ε) − (n−1)p/(n−p)·J(ε)`.
    pub lhs: f64,
    /// `(ε^{n(p−1)}/ω(ε)^{n−p} − 1/ω(1)^{n−p}) / (n−p)`.
    pub rhs: f64,
    /// `|lhs − rhs|` relative to the largest term involved.
    pub residual: f64,
}

pub fn duality_identity(c: &ChiMap, n: u32, p: f64, eps: f64) -> Result<DualityCheck> {
    let m = &c.modulus;
    let j = theorem2_integral(m, n, p, eps)?;
    let i = lemma2_dual_integral(c, n, p, 1.0 / c.chi(eps)?)?;
    let nf = n as f64;
    let k = (nf - 1.0) * p / (nf - p);
    let lhs = i - k * j;
    let rhs = (eps.powf(nf * (p - 1.0)) / m.eval(eps)?.powf(nf - p) - 1.0 / m.eval(1.0)?.powf(nf - p)) / (nf - p);
    let scale = i.abs().max((k * j).abs()).max(rhs.abs()).max(f64::MIN_POSITIVE);
    Ok(DualityCheck { n, p, eps, dual: i, primal: j, lhs, rhs, residual: (lhs - rhs).abs() / scale })
}

/// `1 + (n−1)α/(n+α)`: at and below this exponent a `C^{1,α}` boundary rules out `A_p`.
pub fn critical_exponent_power(n: u32, alpha: f64) -> f64 {
    let nf = n as f64;
    1.0 + (nf - 1.0) * alpha / (nf + alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceMethod {
    ClosedForm,
    Growth,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DivergenceTest {
    pub divergent: bool,
    pub method: DivergenceMethod,
    /// `J(10^{-2})`.
    pub j_coarse: f64,
    /// `J(10^{-8})`.
    pub j_fine: f64,
}

/// Truncation cutoffs of the growth test.
pub const GROWTH_EPS: (f64, f64) = (1e-2, 1e-8);
/// `J(10^{-8}) > GROWTH_RATIO · J(10^{-2})` flags divergence.
pub const GROWTH_RATIO: f64 = 1e4;

/// Decides whether `J(0+) = ∞`.
///
/// Power and power-log moduli use the exact exponent test; every other kind
/// falls back to the truncation-growth test.
pub fn theorem2_divergence(m: &Modulus, n: u32, p: f64) -> Result<DivergenceTest> {
    let j_coarse = theorem2_integral(m, n, p, GROWTH_EPS.0)?;
    let j_fine = theorem2_integral(m, n, p, GROWTH_EPS.1)?;
    let nf = n as f64;
    let closed = match m.kind {
        Kind::Power { alpha } => {
            let e = nf * (p - 1.0) - alpha * (nf - p);
            Some(e <= 1e-12)
        }
        Kind::PowerLog { alpha, beta } => {
            let e = nf * (p - 1.0) - alpha * (nf - p);
            Some(e < -1e-12 || (e.abs() <= 1e-12 && beta * (nf - p) >= -1.0))
        }
        _ => None,
    };
    Ok(match closed {
        Some(divergent) => DivergenceTest { divergent, method: DivergenceMethod::ClosedForm, j_coarse, j_fine },
        None => DivergenceTest {
            divergent: j_fine > GROWTH_RATIO * j_coarse,
            method: DivergenceMethod::Growth,
            j_coarse,
            j_fine,
        },
    })
}

/// `Θ_p(y) = (∫_1^y (χ^{-1}(1/τ))^p dτ)^{1/p}`.
pub fn theta_p(c: &ChiMap, p: f64, y: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::arg("Θ_p needs p > 1"));
    }
    if !(y >= 1.0) || !y.is_finite() {
        return Err(Error::arg(format!("Θ_p needs y ≥ 1, got {y}")));
    }
    if y == 1.0 {
        return Ok(0.0);
    }
    let s1 = y.ln();
    let mut failure = None;
    let r = integrate(|s: f64| match c.inverse((-s).exp()) {
        Ok(d) => s.exp() * d.powf(p),
        Err(e) => {
            failure.get_or_insert(e);
            0.0
        }
    }, 0.0, s1, quad_opts(s1));
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(r?.value.powf(1.0 / p))
}

/// Truncations of `∫_1^A λ^{-p} Θ_p(λ)^p dλ` and of its integration-by-parts majorant.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ThetaTail {
    pub upper: f64,
    pub value: f64,
    /// `(1/(p−1)) ∫_1^A λ^{1−p} (χ^{-1}(1/λ))^p dλ`.
    pub majorant: f64,
}

/// Evaluates [`ThetaTail`] at each upper limit in `uppers` (increasing) in one sweep.
pub fn theta_tail(c: &ChiMap, p: f64, uppers: &[f64]) -> Result<Vec<ThetaTail>> {
    if !(p > 1.0) {
        return Err(Error::arg("Θ_p needs p > 1"));
    }
    if uppers.windows(2).any(|w| w[1] <= w[0]) || !uppers.first().is_some_and(|u| *u > 1.0) {
        return Err(Error::arg("upper limits must exceed 1 and increase"));
    }
    let rule = GaussRule::new(10);
    let inner = GaussRule::new(10);
    let width = 0.125;
    let mut out = Vec::with_capacity(uppers.len());
    // Running values in s = ln λ.
    let mut s = 0.0;
    let mut theta_pow = 0.0;
    let mut value = 0.0;
    let mut majorant = 0.0;
    let g = |s: f64| -> Result<f64> { Ok(c.inverse((-s).exp())?.powf(p)) };
    for &upper in uppers {
        let target = upper.ln();
        while s < target {
            let next = (s + width).min(target);
            // Θ^p(λ) at each outer node, built from the cumulative value at `s`.
            let mut acc = 0.0;
            let mut acc_major = 0.0;
            for (x, w) in rule.on(s, next) {
                let mut partial = 0.0;
                for (y, v) in inner.on(s, x) {
                    partial += v * y.exp() * g(y)?;
                }
                let th = theta_pow + partial;
                acc += w * ((1.0 - p) * x).exp() * th;
                acc_major += w * ((2.0 - p) * x).exp() * g(x)?;
            }
            let mut step = 0.0;
            for (y, v) in inner.on(s, next) {
                step += v * y.exp() * g(y)?;
            }
            theta_pow += step;
            value += acc;
            majorant += acc_major / (p - 1.0);
            s = next;
        }
        out.push(ThetaTail { upper, value, majorant });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_examples() {
        let m1 = Modulus::power(1.0).unwrap();
        assert_eq!(m1.eval(0.0).unwrap(), 0.0);
        let m = Modulus::power(0.5).unwrap();
        assert!((m.eval(0.25).unwrap() - 0.5).abs() < 1e-15);
        let t = Modulus::table(&[[0.0, 0.0], [1.0, 1.0]]).unwrap();
        assert!((t.eval(0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(m.eval(1.5), Err(Error::OutOfDomain { .. })));
        assert!(matches!(m.eval(-0.1), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn table_validation() {
        assert!(Modulus::table(&[[0.0, 0.0], [0.5, 0.4], [1.0, 0.3]]).is_err());
        assert!(Modulus::table(&[[0.0, 0.1], [1.0, 1.0]]).is_err());
        let t = Modulus::table(&[[0.5, 0.5], [2.0, 1.0]]).unwrap();
        assert_eq!(t.cap(), 2.0);
        assert!((t.eval(0.25).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn analytic_rejects_non_monotone() {
        assert!(Modulus::analytic("sin", 1.0, |d: f64| (20.0 * d).sin().abs()).is_err());
        assert!(Modulus::analytic("sqrt", 1.0, |d: f64| d.sqrt()).is_ok());
    }

    #[test]
    fn doubling_flag() {
        assert!(Modulus::power(1.0).unwrap().with_doubling().is_err());
        assert!(Modulus::power(0.5).unwrap().with_doubling().unwrap().has_doubling());
    }

    #[test]
    fn chi_inverse_examples() {
        let c = ChiMap::new(Modulus::power(1.0).unwrap());
        assert!((c.inverse(0.25).unwrap() - 0.5).abs() < 1e-12);
        let c = ChiMap::new(Modulus::power(0.5).unwrap());
        assert!((c.inverse(0.125).unwrap() - 0.25).abs() < 1e-12);
        assert!(matches!(c.inverse(2.0), Err(Error::OutOfRange { .. })));
        assert!(matches!(c.inverse(0.0), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn chi_inverse_table_round_trip() {
        let t = Modulus::table(&[[0.0, 0.0], [0.1, 0.3], [0.4, 0.5], [1.0, 0.6]]).unwrap();
        let c = ChiMap::new(t);
        let y = c.chi(0.3).unwrap();
        assert!((c.inverse(y).unwrap() - 0.3).abs() < 1e-10);
    }

    #[test]
    fn theorem2_power_closed_form() {
        let m = Modulus::power(1.0).unwrap();
        // integrand δ^{-1/2}: J(ε) = 2(1 − √ε)
        let j = theorem2_integral(&m, 2, 1.5, 1e-12).unwrap();
        assert!((j - 2.0 * (1.0 - 1e-6)).abs() < 1e-10);
        // at p = 4/3 the integrand is exactly 1/δ
        let third = 4.0 / 3.0;
        for k in [4, 10, 20] {
            let eps = 2f64.powi(-k);
            let j = theorem2_integral(&m, 2, third, eps).unwrap();
            assert!((j - k as f64 * std::f64::consts::LN_2).abs() < 1e-9);
        }
        // exponent -1.4: J = (ε^{-0.4} - 1)/0.4
        let j = theorem2_integral(&m, 2, 1.2, 1e-6).unwrap();
        let exact = (1e-6f64.powf(-0.4) - 1.0) / 0.4;
        assert!((j - exact).abs() < 1e-8 * exact);
        assert!(theorem2_integral(&m, 2, 1.2, 1e-8).unwrap() >= 1e3);
    }

    #[test]
    fn theorem2_singular_integrand() {
        let t = Modulus::table(&[[0.0, 0.0], [0.5, 0.0], [1.0, 1.0]]).unwrap();
        assert!(matches!(theorem2_integral(&t, 2, 1.5, 0.1), Err(Error::SingularIntegrand(_))));
    }

    #[test]
    fn dual_integral_closed_forms() {
        let c = ChiMap::new(Modulus::power(1.0).unwrap());
        // integrand λ^{-1.25}; I(∞) = 4
        let i = lemma2_dual_integral(&c, 2, 1.5, 1e16).unwrap();
        assert!((i - 4.0 * (1.0 - 1e16f64.powf(-0.25))).abs() < 1e-9);
        // p = 1.9: λ^{-0.9} λ^{-0.95} = λ^{-1.85}
        let i = lemma2_dual_integral(&c, 2, 1.9, 1e8).unwrap();
        let exact = (1.0 - 1e8f64.powf(-0.85)) / 0.85;
        assert!((i - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn duality_identity_power_case() {
        let c = ChiMap::new(Modulus::power(1.0).unwrap());
        let d = duality_identity(&c, 2, 1.5, 1e-3).unwrap();
        assert!(d.residual < 1e-9, "{d:?}");
        assert!((d.rhs - 2.0 * (1e-3f64.sqrt() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn critical_exponents() {
        assert!((critical_exponent_power(2, 1.0) - 4.0 / 3.0).abs() < 1e-15);
        assert!((critical_exponent_power(2, 0.5) - 1.2).abs() < 1e-15);
        assert!((critical_exponent_power(3, 1.0) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn power_log_divergence_at_the_critical_exponent() {
        // At p = p* the integrand is δ^{-1}(1 + ln 1/δ)^{β(n-p)}.
        let m = Modulus::power_log(1.0, -0.5, 1.0).unwrap();
        assert!(theorem2_divergence(&m, 2, 4.0 / 3.0).unwrap().divergent);
        assert!(!theorem2_divergence(&m, 2, 4.0 / 3.0 + 1e-3).unwrap().divergent);
        // n = 3, p* = 3/2, β(n-p) = -1.35 < -1
        let m = Modulus::power_log(1.0, -0.9, 1.0).unwrap();
        assert!(!theorem2_divergence(&m, 3, 1.5).unwrap().divergent);
        let m = Modulus::power_log(1.0, -0.5, 1.0).unwrap();
        assert!(theorem2_divergence(&m, 3, 1.5).unwrap().divergent);
    }

    #[test]
    fn theta_examples() {
        let c = ChiMap::new(Modulus::power(1.0).unwrap());
        let p = 4.0 / 3.0;
        assert_eq!(theta_p(&c, p, 1.0).unwrap(), 0.0);
        assert!(theta_p(&c, p, 1.0 + 1e-9).unwrap() < 1e-6);
        // Θ^p = 3(y^{1/3} − 1)
        for y in [2.0f64, 1e2, 1e4] {
            let exact = (3.0 * (y.powf(1.0 / 3.0) - 1.0)).powf(1.0 / p);
            assert!((theta_p(&c, p, y).unwrap() - exact).abs() < 1e-9 * exact);
        }
    }

    #[test]
    fn regularized_examples() {
        let m = Modulus::power(0.5).unwrap();
        let r = regularize_modulus(&m);
        for &d in &[1e-9f64, 1e-4, 0.3, 1.0] {
            let exact = d / (1.0 + d) + d.sqrt();
            assert!((r.eval(d).unwrap() - exact).abs() < 1e-14, "{d}");
            assert!(r.eval(d).unwrap() / m.eval(d).unwrap() <= 2.0);
        }
        let lip = regularize_modulus(&Modulus::power(1.0).unwrap());
        for &d in &[1e-6, 0.5, 1.0] {
            let v = lip.eval(d).unwrap();
            assert!((v - (d / (1.0 + d) + d)).abs() < 1e-15 && v <= 2.0 * d);
        }
        for k in 1..=20 {
            let d = 2f64.powi(-k);
            assert!(r.eval(2.0 * d).unwrap() < 2.0 * r.eval(d).unwrap());
        }
        assert!(r.has_doubling());
    }
}
