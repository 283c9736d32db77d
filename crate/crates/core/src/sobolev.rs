//! Difference-form Sobolev norm of an indicator,
//! `‖f‖ = ‖f‖_{L²} + (∫ |t|^{−n−2s} ∫ |f(x+t) − f(x)|² dx dt)^{1/2}`,
//! where for `f = 1_D` the inner integral is `σ(t) = |(D − t) Δ D|`.
//!
//! `σ` is sampled by Monte Carlo on a fixed set of nodes (Gauss–Legendre in
//! `log |t|` per octave shell, midpoint in angle over `[0, π)` using
//! `σ(−t) = σ(t)`), so one table serves every `s`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_line, LineFit};
use crate::geometry::{Domain, SymDiffSampler};
use crate::quad::GaussRule;

/// Gauss–Legendre nodes per shell in `log |t|`.
const RADIAL_NODES: usize = 4;
/// `κ` below this is read as divergence.
pub const KAPPA_THRESHOLD: f64 = 0.025;
/// Relative spread of the last three increments accepted as logarithmic growth.
pub const LOG_GROWTH_SPREAD: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevOptions {
    /// Monte Carlo samples per `t`.
    pub budget: usize,
    pub seed: u64,
    /// Angles on `[0, π)`.
    pub angles: usize,
    /// Inner cutoffs `ε_k = 2^{−k}` for `k` in this range (inclusive).
    pub ladder: (u32, u32),
}

impl Default for SobolevOptions {
    fn default() -> Self {
        Self { budget: 100_000, seed: 42, angles: 16, ladder: (4, 12) }
    }
}

impl SobolevOptions {
    fn check(&self) -> Result<()> {
        if self.budget < 10_000 {
            return Err(Error::arg(format!("Monte Carlo budget must be at least 10^4, got {}", self.budget)));
        }
        if self.angles < 2 {
            return Err(Error::arg("at least 2 angles are needed"));
        }
        let (k0, k1) = self.ladder;
        if k1 < k0 + 3 || k1 > 30 {
            return Err(Error::arg(format!("ε ladder {k0}..={k1} needs at least 4 rungs and k ≤ 30")));
        }
        Ok(())
    }
}

/// One radial node: `|t|`, its weight in `d log|t|`, and `∫_0^{2π} σ(|t|, θ) dθ` with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialNode {
    pub r: f64,
    pub weight: f64,
    pub circle: f64,
    pub circle_se: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Shell {
    pub r0: f64,
    pub r1: f64,
    pub nodes: Vec<RadialNode>,
}

impl Shell {
    /// `∫_{r0≤|t|≤r1} |t|^{−2−2s} σ(t) dt` and its Monte Carlo standard error.
    pub fn integral(&self, s: f64) -> (f64, f64) {
        let mut v = 0.0;
        let mut var = 0.0;
        for n in &self.nodes {
            let w = n.weight * n.r.powf(-2.0 * s);
            v += w * n.circle;
            var += (w * n.circle_se).powi(2);
        }
        (v, var.sqrt())
    }
}

/// Sampled `σ` on shells covering `[ε_min, T]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SigmaTable {
    pub area: f64,
    pub diameter: f64,
    pub outer: f64,
    pub shells: Vec<Shell>,
}

impl SigmaTable {
    /// Samples `σ` on shells with the given increasing boundaries.
    pub fn sample(d: &Domain, bounds: &[f64], opts: &SobolevOptions) -> Result<Self> {
        opts.check()?;
        if bounds.len() < 2 || bounds.windows(2).any(|w| !(w[0] > 0.0 && w[1] > w[0])) || !bounds[bounds.len() - 1].is_finite() {
            return Err(Error::arg("shell bounds must be positive and strictly increasing"));
        }
        let sampler = SymDiffSampler::new(d)?;
        let rule = GaussRule::new(RADIAL_NODES);
        let m = opts.angles;
        let mut jobs = Vec::new();
        for (i, w) in bounds.windows(2).enumerate() {
            for (u, wt) in rule.on(w[0].ln(), w[1].ln()) {
                jobs.push((i, u.exp(), wt));
            }
        }
        let dtheta = PI / m as f64;
        let sampled: Vec<(usize, RadialNode)> = jobs
            .par_iter()
            .map(|&(i, r, weight)| {
                let mut sum = 0.0;
                let mut var = 0.0;
                for a in 0..m {
                    let th = (a as f64 + 0.5) * dtheta;
                    let v = sampler.measure([r * th.cos(), r * th.sin()], opts.budget, opts.seed)?;
                    sum += v.value;
                    var += v.std_error * v.std_error;
                }
                Ok((i, RadialNode { r, weight, circle: 2.0 * dtheta * sum, circle_se: 2.0 * dtheta * var.sqrt() }))
            })
            .collect::<Result<_>>()?;
        let mut shells: Vec<Shell> =
            bounds.windows(2).map(|w| Shell { r0: w[0], r1: w[1], nodes: Vec::with_capacity(RADIAL_NODES) }).collect();
        for (i, node) in sampled {
            shells[i].nodes.push(node);
        }
        Ok(Self { area: sampler.area(), diameter: sampler.diameter(), outer: bounds[bounds.len() - 1], shells })
    }

    /// Sum of shell integrals over `[lo, hi]`; both must be shell boundaries.
    pub fn between(&self, s: f64, lo: f64, hi: f64) -> Result<(f64, f64)> {
        let on_bound = |x: f64| self.shells.iter().any(|sh| rel_eq(sh.r0, x) || rel_eq(sh.r1, x));
        if !on_bound(lo) || !on_bound(hi) || lo > hi {
            return Err(Error::arg(format!("[{lo}, {hi}] is not a union of sampled shells")));
        }
        let mut v = 0.0;
        let mut var = 0.0;
        for sh in self.shells.iter().filter(|sh| sh.r0 >= lo * (1.0 - 1e-12) && sh.r1 <= hi * (1.0 + 1e-12)) {
            let (a, e) = sh.integral(s);
            v += a;
            var += e * e;
        }
        Ok((v, var.sqrt()))
    }

    /// Closed tail `∫_{|t|>outer} |t|^{−2−2s}·2|D| dt`; exact once `outer ≥ diameter`.
    pub fn tail(&self, s: f64) -> f64 {
        closed_tail(self.area, s, self.outer)
    }
}

fn rel_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// `2|D|·2π·T^{−2s}/(2s)`: the planar integral of `|t|^{−2−2s}·2|D|` over `|t| > T`.
pub fn closed_tail(area: f64, s: f64, t: f64) -> f64 {
    2.0 * area * 2.0 * PI * t.powf(-2.0 * s) / (2.0 * s)
}

fn check_s(s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::OutOfRange { value: s, low: 0.0, high: 1.0 });
    }
    Ok(())
}

/// Octave boundaries `ε, 2ε, 4ε, …` ending exactly at `t`.
fn octaves(eps: f64, t: f64) -> Vec<f64> {
    let mut b = vec![eps];
    let mut r = eps;
    while r * 2.0 < t * (1.0 - 1e-9) {
        r *= 2.0;
        b.push(r);
    }
    b.push(t);
    b
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifferenceIntegral {
    pub value: f64,
    pub std_error: f64,
}

/// `∫_{ε≤|t|≤T} |t|^{−2−2s} σ_D(t) dt` for a planar domain.
pub fn difference_integral(d: &Domain, s: f64, eps: f64, outer: f64, opts: &SobolevOptions) -> Result<DifferenceIntegral> {
    check_s(s)?;
    if !(eps > 0.0 && eps < outer) || !outer.is_finite() {
        return Err(Error::arg(format!("cutoffs need 0 < ε < T, got ε={eps}, T={outer}")));
    }
    let table = SigmaTable::sample(d, &octaves(eps, outer), opts)?;
    let (value, std_error) = table.between(s, eps, outer)?;
    Ok(DifferenceIntegral { value, std_error })
}

/// Convergence reading for one `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevClass {
    pub s: f64,
    /// `N(s, ε_k)` over the ladder, `|t| ≥ ε_k` including the closed tail.
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// `N(s, ε_{k+1}) − N(s, ε_k)`.
    pub increments: Vec<f64>,
    /// Increments decay like `2^{−2κk}`; `κ ≤ 0` is logarithmic or worse growth.
    pub kappa: f64,
    pub kappa_se: f64,
    /// `(max − min)/min` over the last three increments.
    pub last_three_spread: f64,
    /// Last three increments within 15% of each other, or increasing.
    pub log_growth: bool,
    pub divergent: bool,
    /// `‖1_D‖_{L²} + N(s, ε_min)^{1/2}`.
    pub norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SobolevReport {
    pub area: f64,
    pub eps: Vec<f64>,
    pub outer: f64,
    pub options: SobolevOptions,
    pub classes: Vec<SobolevClass>,
    /// Root of the linear fit of `κ(s)`.
    pub threshold: Option<f64>,
    pub kappa_fit: Option<LineFit>,
    pub sigma: SigmaTable,
}

impl SobolevReport {
    pub fn class(&self, s: f64) -> Option<&SobolevClass> {
        self.classes.iter().find(|c| (c.s - s).abs() < 1e-12)
    }

    /// Rows `s,eps,N,se`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,eps,N,se\n");
        for c in &self.classes {
            for (k, e) in self.eps.iter().enumerate() {
                out.push_str(&format!("{},{},{:.12e},{:.6e}\n", c.s, e, c.values[k], c.std_errors[k]));
            }
        }
        out
    }
}

/// Evaluates `N(s, ε_k)` for every `s` from one `σ` table and classifies each `s`.
pub fn sobolev_membership_sweep(d: &Domain, s_grid: &[f64], opts: &SobolevOptions) -> Result<SobolevReport> {
    if s_grid.is_empty() {
        return Err(Error::arg("empty s grid"));
    }
    for &s in s_grid {
        check_s(s)?;
    }
    opts.check()?;
    let (k0, k1) = opts.ladder;
    let eps: Vec<f64> = (k0..=k1).rev().map(|k| 0.5f64.powi(k as i32)).collect::<Vec<_>>();
    let outer = d.diameter() + 1.0;
    let top = eps[eps.len() - 1];
    if top >= outer {
        return Err(Error::arg("largest cutoff exceeds the outer radius"));
    }
    let mut bounds = eps.clone();
    bounds.extend(octaves(top, outer).into_iter().skip(1));
    let table = SigmaTable::sample(d, &bounds, opts)?;
    // report ε from largest to smallest: ε_{k0}, …, ε_{k1}
    let eps: Vec<f64> = eps.into_iter().rev().collect();
    let classes = s_grid.iter().map(|&s| classify(&table, &eps, s)).collect::<Result<Vec<_>>>()?;
    let (threshold, kappa_fit) = if classes.len() >= 2 {
        let xs: Vec<f64> = classes.iter().map(|c| c.s).collect();
        let ys: Vec<f64> = classes.iter().map(|c| c.kappa).collect();
        let f = fit_line(&xs, &ys)?;
        let root = (f.slope != 0.0).then(|| -f.intercept / f.slope).filter(|r| r.is_finite());
        (root, Some(f))
    } else {
        (None, None)
    };
    Ok(SobolevReport { area: table.area, eps, outer, options: *opts, classes, threshold, kappa_fit, sigma: table })
}

fn classify(table: &SigmaTable, eps: &[f64], s: f64) -> Result<SobolevClass> {
    let (top, top_se) = table.between(s, eps[0], table.outer)?;
    let base = top + table.tail(s);
    let mut values = vec![base];
    let mut std_errors = vec![top_se];
    let mut increments = Vec::with_capacity(eps.len() - 1);
    let mut var = top_se * top_se;
    for w in eps.windows(2) {
        let (v, e) = table.between(s, w[1], w[0])?;
        increments.push(v);
        var += e * e;
        values.push(values[values.len() - 1] + v);
        std_errors.push(var.sqrt());
    }
    if increments.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InsufficientData("a shell sampled no symmetric difference".into()));
    }
    let ks: Vec<f64> = (0..increments.len()).map(|k| k as f64).collect();
    let logs: Vec<f64> = increments.iter().map(|v| v.log2()).collect();
    let fit = fit_line(&ks, &logs)?;
    let kappa = -fit.slope / 2.0;
    let last = &increments[increments.len() - 3..];
    let (lo, hi) = last.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
    let spread = (hi - lo) / lo;
    let increasing = last.windows(2).all(|w| w[1] > w[0]);
    let total = values[values.len() - 1];
    Ok(SobolevClass {
        s,
        values,
        std_errors,
        increments,
        kappa,
        kappa_se: fit.slope_se / 2.0,
        last_three_spread: spread,
        log_growth: spread <= LOG_GROWTH_SPREAD || increasing,
        divergent: kappa < KAPPA_THRESHOLD,
        norm: table.area.sqrt() + total.sqrt(),
    })
}

/// `2n/(2n − a)`: the integrability exponent implied by a boundary of upper Minkowski dimension `a`.
pub fn remark1_bound(a: f64, n: usize) -> Result<f64> {
    let nf = n as f64;
    if n < 2 {
        return Err(Error::arg("dimension must be at least 2"));
    }
    if !(a >= nf - 1.0 && a <= nf) {
        return Err(Error::arg(format!("boundary dimension {a} outside [{}, {nf}]", nf - 1.0)));
    }
    Ok(2.0 * nf / (2.0 * nf - a))
}

/// Fitted constant of the bound `σ(t) ≤ min(C|t|, 2|D|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearBound {
    pub c: f64,
    pub area: f64,
}

impl LinearBound {
    /// Largest `σ(t)/|t|` over the training shifts, each measured value raised by three standard errors.
    pub fn fit(sampler: &SymDiffSampler, shifts: &[[f64; 2]], budget: usize, seed: u64) -> Result<Self> {
        let mut c = 0.0f64;
        for &t in shifts {
            let len = t[0].hypot(t[1]);
            if len == 0.0 {
                continue;
            }
            let v = sampler.measure(t, budget, seed)?;
            c = c.max((v.value + 3.0 * v.std_error) / len);
        }
        if c == 0.0 {
            return Err(Error::InsufficientData("no nonzero training shift".into()));
        }
        Ok(Self { c, area: sampler.area() })
    }

    pub fn bound(&self, t: [f64; 2]) -> f64 {
        (self.c * t[0].hypot(t[1])).min(2.0 * self.area)
    }
}
