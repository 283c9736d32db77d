//! Dyadic annulus energies `S_j(p) = ∫_{2^j ≤ |ξ| < 2^{j+1}} |1̂_D(ξ)|^p dξ`, their
//! decay slope in `j`, and the exponent where that slope changes sign.
//!
//! A negative slope means the annuli sum geometrically, which is the numerical
//! stand-in for `1̂_D ∈ L^p`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel::{j1_over_x, j1_zeros};
use crate::error::{Error, Result};
use crate::fit::{fit_line, LineFit};
use crate::geometry::{Domain, DomainKind};
use crate::quad::GaussRule;
use crate::spectra::{Engine, EngineOptions, Evaluator, Raster};

/// Largest level accepted by [`dyadic_energies`].
pub const MAX_LEVEL: i32 = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyEngine {
    /// Disks and their affine images: exact radial profile pulled back along each ray.
    Radial,
    /// Axis-aligned rectangles: the product structure reduces the annulus to 1-D integrals.
    Separable,
    /// Any planar domain: rays at equally spaced angles through a point engine.
    Polar,
    /// Summation over the FFT grid of the rasterized domain.
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyOptions {
    /// Angles of the radial and polar engines.
    pub angular: usize,
    /// `None` picks the most accurate engine available.
    pub engine: Option<EnergyEngine>,
    /// Cells per axis of the grid engine.
    pub grid: usize,
}

impl Default for EnergyOptions {
    fn default() -> Self {
        Self { angular: 512, engine: None, grid: 1024 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelEnergy {
    pub j: i32,
    pub energy: f64,
    pub error: f64,
    /// Largest `|1̂_D|` seen on the annulus.
    pub sup: f64,
    /// Quadrature error below 10% of the energy.
    pub usable: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DyadicEnergyReport {
    pub p: f64,
    pub engine: EnergyEngine,
    pub levels: Vec<LevelEnergy>,
    /// Fit of `log₂ S_j` against `j` over the usable levels.
    pub fit: Option<LineFit>,
    /// True when the domain comes from the surrogate profile; such reports are exploratory.
    pub surrogate: bool,
}

impl DyadicEnergyReport {
    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }

    pub fn usable_levels(&self) -> usize {
        self.levels.iter().filter(|l| l.usable).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,S_j,err,sup,usable\n");
        for l in &self.levels {
            out.push_str(&format!("{},{},{},{},{}\n", l.j, l.energy, l.error, l.sup, l.usable));
        }
        out
    }
}

fn check_p(p: f64) -> Result<()> {
    if p > 1.0 && p <= 2.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange { value: p, low: 1.0, high: 2.0 })
    }
}

/// Geometric refinement levels on each side of a kink.
const GRADING: usize = 6;

/// Nonnegative function with a table of its running integral, split at known kinks.
struct Cumulative<F: Fn(f64) -> f64> {
    f: F,
    knots: Vec<f64>,
    cum: Vec<f64>,
    err: Vec<f64>,
    fine: GaussRule,
}

impl<F: Fn(f64) -> f64> Cumulative<F> {
    /// `kinks` sorted ascending, all in `(0, limit)`.
    fn new(f: F, kinks: &[f64], limit: f64) -> Self {
        let fine = GaussRule::new(16);
        let coarse = GaussRule::new(8);
        let mut ends = vec![0.0];
        ends.extend(kinks.iter().copied().filter(|k| *k > 0.0 && *k < limit));
        ends.push(limit);
        // geometric grading towards each kink, where f behaves like |x − k|^p
        let mut knots = Vec::with_capacity(ends.len() * (2 * GRADING + 1));
        knots.push(0.0);
        for (i, w) in ends.windows(2).enumerate() {
            let (a, b) = (w[0], w[1]);
            let h = b - a;
            let left = i > 0;
            let right = i + 2 < ends.len();
            if left {
                knots.extend((1..=GRADING).rev().map(|k| a + h * 0.5f64.powi(k as i32 + 1)));
            }
            if left || right {
                knots.push(a + 0.5 * h);
            }
            if right {
                knots.extend((1..=GRADING).map(|k| b - h * 0.5f64.powi(k as i32 + 1)));
            }
            knots.push(b);
        }
        let mut cum = vec![0.0; knots.len()];
        let mut err = vec![0.0; knots.len()];
        for i in 1..knots.len() {
            let a = fine.integrate(knots[i - 1], knots[i], &f);
            let b = coarse.integrate(knots[i - 1], knots[i], &f);
            cum[i] = cum[i - 1] + a;
            err[i] = err[i - 1] + (a - b).abs();
        }
        Self { f, knots, cum, err, fine }
    }

    /// `(∫_0^x f, error)` for `0 ≤ x ≤ limit`.
    fn at(&self, x: f64) -> (f64, f64) {
        let k = self.knots.partition_point(|t| *t <= x).saturating_sub(1);
        let base = self.knots[k];
        let part = if x > base { self.fine.integrate(base, x, &self.f) } else { 0.0 };
        // charge the whole partial panel's error
        (self.cum[k] + part, self.err[(k + 1).min(self.err.len() - 1)])
    }
}

/// Radius and composite linear map `Q` with `D = Q·disk + b`.
fn disk_pullback(d: &Domain) -> Option<(f64, [[f64; 2]; 2])> {
    match &d.kind {
        DomainKind::Disk { radius, .. } => Some((*radius, [[1.0, 0.0], [0.0, 1.0]])),
        DomainKind::Affine { base, q, .. } if q.len() == 2 => {
            let (r, inner) = disk_pullback(base)?;
            let mut m = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    m[i][j] = q[i][0] * inner[0][j] + q[i][1] * inner[1][j];
                }
            }
            Some((r, m))
        }
        _ => None,
    }
}

fn axis_rectangle(d: &Domain) -> Option<[f64; 2]> {
    match &d.kind {
        DomainKind::Rectangle { widths, .. } if widths.len() == 2 => Some([widths[0], widths[1]]),
        _ => None,
    }
}

fn default_engine(d: &Domain) -> EnergyEngine {
    if disk_pullback(d).is_some() {
        EnergyEngine::Radial
    } else if axis_rectangle(d).is_some() {
        EnergyEngine::Separable
    } else if matches!(d.kind, DomainKind::Assembled(_) | DomainKind::Special { .. }) {
        EnergyEngine::Grid
    } else {
        EnergyEngine::Polar
    }
}

/// Energy of `|1̂_D|^p` over the annulus `r0 ≤ |ξ| < r1` as (value, error, sup).
type Shell = (f64, f64, f64);

trait EnergyCalc: Sync {
    fn shell(&self, r0: f64, r1: f64) -> Result<Shell>;
}

struct RadialCalc {
    det: f64,
    p: f64,
    /// `|Qᵀe_θ|` at each angle.
    stretch: Vec<f64>,
    table: Cumulative<Box<dyn Fn(f64) -> f64 + Sync + Send>>,
    radius: f64,
}

impl RadialCalc {
    fn new(r: f64, q: [[f64; 2]; 2], p: f64, angular: usize, r_max: f64) -> Self {
        let det = (q[0][0] * q[1][1] - q[0][1] * q[1][0]).abs();
        let stretch: Vec<f64> = (0..angular)
            .map(|a| {
                let th = 2.0 * PI * (a as f64 + 0.5) / angular as f64;
                let (s, c) = th.sin_cos();
                (q[0][0] * c + q[1][0] * s).hypot(q[0][1] * c + q[1][1] * s)
            })
            .collect();
        let top = stretch.iter().cloned().fold(0.0, f64::max) * r_max;
        let zeros: Vec<f64> = j1_zeros(r * top).into_iter().map(|z| z / r).collect();
        let f: Box<dyn Fn(f64) -> f64 + Sync + Send> =
            Box::new(move |s: f64| (2.0 * PI * r * r * j1_over_x(r * s)).abs().powf(p) * s);
        Self { det, p, stretch, table: Cumulative::new(f, &zeros, top * 1.000_001), radius: r }
    }
}

impl EnergyCalc for RadialCalc {
    fn shell(&self, r0: f64, r1: f64) -> Result<Shell> {
        // ∫_θ m(θ)^{-2} [G(r1 m) − G(r0 m)] dθ with G(x) = ∫_0^x |F(s)|^p s ds
        let n = self.stretch.len();
        let mut full = 0.0;
        let mut half = 0.0;
        let mut quad_err = 0.0;
        for (a, m) in self.stretch.iter().enumerate() {
            let (g1, e1) = self.table.at(r1 * m);
            let (g0, e0) = self.table.at(r0 * m);
            let v = (g1 - g0) / (m * m);
            full += v;
            if a % 2 == 0 {
                half += v;
            }
            quad_err += (e1 + e0) / (m * m);
        }
        let w = 2.0 * PI / n as f64;
        let scale = self.det.powf(self.p);
        let value = scale * full * w;
        let coarse = scale * half * 2.0 * w;
        let error = (value - coarse).abs() + scale * quad_err * w;
        let lo = r0 * self.stretch.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = r1 * self.stretch.iter().cloned().fold(0.0, f64::max);
        let r2 = self.radius * self.radius;
        let samples = 4096;
        let sup = (0..=samples)
            .map(|i| (2.0 * PI * r2 * j1_over_x(self.radius * (lo + (hi - lo) * i as f64 / samples as f64))).abs())
            .fold(0.0, f64::max)
            * self.det;
        Ok((value, error, sup))
    }
}

struct SeparableCalc {
    widths: [f64; 2],
    p: f64,
    inner: Cumulative<Box<dyn Fn(f64) -> f64 + Sync + Send>>,
}

/// `|(1 − e^{−ixa})/(ix)|^p = |2 sin(xa/2)/x|^p`.
fn sinc_power(x: f64, a: f64, p: f64) -> f64 {
    let h = 0.5 * x * a;
    let s = if h.abs() < 1e-4 { a * (1.0 - h * h / 6.0) } else { 2.0 * h.sin() / x };
    s.abs().powf(p)
}

fn sin_zeros(a: f64, limit: f64) -> Vec<f64> {
    let step = 2.0 * PI / a;
    (1..).map(|k| k as f64 * step).take_while(|z| *z < limit).collect()
}

impl SeparableCalc {
    fn new(widths: [f64; 2], p: f64, r_max: f64) -> Self {
        let a2 = widths[1];
        let f: Box<dyn Fn(f64) -> f64 + Sync + Send> = Box::new(move |x| sinc_power(x, a2, p));
        let inner = Cumulative::new(f, &sin_zeros(a2, r_max), r_max * 1.000_001);
        Self { widths, p, inner }
    }

    /// `∫_{−h}^{h} g₂` and its error for `h ≥ 0`.
    fn strip(&self, h: f64) -> (f64, f64) {
        let (v, e) = self.inner.at(h.max(0.0));
        (2.0 * v, 2.0 * e)
    }

    /// `∫_{a}^{b} g₁(x)·H(x) dx` where `H` has a square-root endpoint at `b` when `sqrt_end`.
    fn outer(&self, a: f64, b: f64, r0: f64, r1: f64, sqrt_end: bool) -> (f64, f64) {
        let a1 = self.widths[0];
        let p = self.p;
        let h = |x: f64| {
            let (hi, e1) = self.strip((r1 * r1 - x * x).max(0.0).sqrt());
            let (lo, e0) = self.strip((r0 * r0 - x * x).max(0.0).sqrt());
            (sinc_power(x, a1, p) * (hi - lo), sinc_power(x, a1, p) * (e1 + e0))
        };
        let fine = GaussRule::new(16);
        let coarse = GaussRule::new(8);
        let mut knots = vec![a];
        knots.extend(sin_zeros(a1, b).into_iter().filter(|z| *z > a));
        knots.push(b);
        let mut value = 0.0;
        let mut err = 0.0;
        let last = knots.len() - 2;
        for i in 0..=last {
            let (lo, hi) = (knots[i], knots[i + 1]);
            if hi <= lo {
                continue;
            }
            let (vf, vc, ef) = if sqrt_end && i == last {
                // x = hi − v² removes the square-root endpoint
                let top = (hi - lo).sqrt();
                let g = |v: f64| {
                    let (val, e) = h(hi - v * v);
                    (2.0 * v * val, 2.0 * v * e)
                };
                let vf: f64 = fine.on(0.0, top).map(|(v, w)| w * g(v).0).sum();
                let vc: f64 = coarse.on(0.0, top).map(|(v, w)| w * g(v).0).sum();
                let ef: f64 = fine.on(0.0, top).map(|(v, w)| w * g(v).1).sum();
                (vf, vc, ef)
            } else {
                let vf: f64 = fine.on(lo, hi).map(|(x, w)| w * h(x).0).sum();
                let vc: f64 = coarse.on(lo, hi).map(|(x, w)| w * h(x).0).sum();
                let ef: f64 = fine.on(lo, hi).map(|(x, w)| w * h(x).1).sum();
                (vf, vc, ef)
            };
            value += vf;
            err += (vf - vc).abs() + ef;
        }
        (value, err)
    }
}

impl EnergyCalc for SeparableCalc {
    fn shell(&self, r0: f64, r1: f64) -> Result<Shell> {
        // both factors are even: integrate ξ₁ over [0, r1] and double
        let (v0, e0) = if r0 > 0.0 { self.outer(0.0, r0, r0, r1, true) } else { (0.0, 0.0) };
        let (v1, e1) = self.outer(r0, r1, r0, r1, true);
        let sup = if r0 == 0.0 {
            self.widths[0] * self.widths[1]
        } else {
            // |1̂| ≤ min over axes of the one-dimensional envelope times the other factor's maximum
            let env = |x: f64, a: f64| (2.0 / x).min(a);
            let k = r0 / 2f64.sqrt();
            (env(k, self.widths[0]) * self.widths[1]).max(env(k, self.widths[1]) * self.widths[0])
        };
        Ok((2.0 * (v0 + v1), 2.0 * (e0 + e1), sup))
    }
}

struct PolarCalc {
    eval: Evaluator,
    p: f64,
    angular: usize,
    diameter: f64,
}

impl EnergyCalc for PolarCalc {
    fn shell(&self, r0: f64, r1: f64) -> Result<Shell> {
        // |1̂(−ξ)| = |1̂(ξ)|: half the circle, doubled
        let n = self.angular / 2;
        let panel = PI / (2.0 * self.diameter.max(1e-12));
        let panels = (((r1 - r0) / panel).ceil() as usize).max(2);
        let rule = GaussRule::new(8);
        let rays: Vec<(f64, f64)> = (0..n)
            .into_par_iter()
            .map(|a| {
                let th = PI * (a as f64 + 0.5) / n as f64;
                let (s, c) = th.sin_cos();
                let mut acc = 0.0;
                let mut sup = 0.0f64;
                let h = (r1 - r0) / panels as f64;
                for k in 0..panels {
                    for (r, w) in rule.on(r0 + k as f64 * h, r0 + (k + 1) as f64 * h) {
                        let v = self.eval.eval(&[r * c, r * s])?.norm();
                        sup = sup.max(v);
                        acc += w * v.powf(self.p) * r;
                    }
                }
                Ok((acc, sup))
            })
            .collect::<Result<Vec<_>>>()?;
        let w = PI / n as f64;
        let full: f64 = rays.iter().map(|r| r.0).sum::<f64>() * w * 2.0;
        let half: f64 = rays.iter().step_by(2).map(|r| r.0).sum::<f64>() * w * 4.0;
        let sup = rays.iter().map(|r| r.1).fold(0.0, f64::max);
        Ok((full, (full - half).abs(), sup))
    }
}

/// Box side over domain size for grid energies; frequency spacing is `2π/(4·size)`.
const GRID_PADDING: f64 = 4.0;

struct GridCalc {
    /// (|u|, |1̂|) pairs of the FFT grid.
    samples: Vec<(f64, f64)>,
    cell: f64,
    nyquist: f64,
    error_bar: f64,
    p: f64,
}

impl EnergyCalc for GridCalc {
    fn shell(&self, r0: f64, r1: f64) -> Result<Shell> {
        if r1 > self.nyquist {
            return Err(Error::OutOfRange { value: r1, low: 0.0, high: self.nyquist });
        }
        let mut value = 0.0;
        let mut error = 0.0;
        let mut sup = 0.0f64;
        for &(r, v) in &self.samples {
            if r >= r0 && r < r1 {
                value += v.powf(self.p);
                error += self.p * v.powf(self.p - 1.0) * self.error_bar;
                sup = sup.max(v);
            }
        }
        Ok((value * self.cell, error * self.cell, sup))
    }
}

fn calculator(d: &Domain, p: f64, r_max: f64, opts: &EnergyOptions) -> Result<(EnergyEngine, Box<dyn EnergyCalc>)> {
    let engine = opts.engine.unwrap_or_else(|| default_engine(d));
    if opts.angular < 8 {
        return Err(Error::arg("at least 8 angles are needed"));
    }
    let calc: Box<dyn EnergyCalc> = match engine {
        EnergyEngine::Radial => {
            let (r, q) = disk_pullback(d)
                .ok_or_else(|| Error::Unsupported("the radial engine needs a disk or an affine image of one".into()))?;
            Box::new(RadialCalc::new(r, q, p, opts.angular, r_max))
        }
        EnergyEngine::Separable => {
            let w = axis_rectangle(d)
                .ok_or_else(|| Error::Unsupported("the separable engine needs an axis-aligned rectangle".into()))?;
            Box::new(SeparableCalc::new(w, p, r_max))
        }
        EnergyEngine::Polar => {
            let point = if crate::spectra::supported_engines(d).contains(&Engine::Closed) {
                Engine::Closed
            } else {
                Engine::Boundary
            };
            let eval = Evaluator::new(d, point, EngineOptions { grid: opts.grid, tol: 1e-9 })?;
            Box::new(PolarCalc { eval, p, angular: opts.angular, diameter: d.diameter() })
        }
        EnergyEngine::Grid => {
            let raster = Raster::padded(d, opts.grid, GRID_PADDING)?;
            let spec = raster.spectrum();
            let samples: Vec<(f64, f64)> =
                (0..spec.len()).map(|i| (spec.frequency(i), spec.values[i].norm())).map(|(u, v)| (u[0].hypot(u[1]), v)).collect();
            let ny = raster.nyquist();
            let crate::spectra::Layout::Cartesian { step, .. } = spec.layout else { unreachable!() };
            Box::new(GridCalc {
                samples,
                cell: step[0] * step[1],
                nyquist: ny[0].min(ny[1]),
                error_bar: spec.error,
                p,
            })
        }
    };
    Ok((engine, calc))
}

/// `S_j(p)` for `j` in `levels` (inclusive), with a log₂-slope fit over the usable levels.
pub fn dyadic_energies(d: &Domain, p: f64, levels: (i32, i32), opts: &EnergyOptions) -> Result<DyadicEnergyReport> {
    check_p(p)?;
    let (j0, j1) = levels;
    if j0 < 0 || j1 > MAX_LEVEL || j0 > j1 {
        return Err(Error::arg(format!("levels {j0}..={j1} must lie in 0..={MAX_LEVEL}")));
    }
    if d.dim() != 2 {
        return Err(Error::Unsupported("dyadic energies are computed for planar domains".into()));
    }
    let r_max = 2f64.powi(j1 + 1);
    let (engine, calc) = calculator(d, p, r_max, opts)?;
    let levels: Vec<LevelEnergy> = (j0..=j1)
        .into_par_iter()
        .map(|j| {
            let (energy, error, sup) = calc.shell(2f64.powi(j), 2f64.powi(j + 1))?;
            Ok(LevelEnergy { j, energy, error, sup, usable: energy > 0.0 && error < 0.1 * energy })
        })
        .collect::<Result<Vec<_>>>()?;
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        levels.iter().filter(|l| l.usable).map(|l| (l.j as f64, l.energy.log2())).unzip();
    let fit = if xs.len() >= 2 { Some(fit_line(&xs, &ys)?) } else { None };
    Ok(DyadicEnergyReport { p, engine, levels, fit, surrogate: d.is_surrogate() })
}

/// `∫_{|ξ| < radius} |1̂_D|^p` with its error, by the same engine as [`dyadic_energies`].
pub fn ball_energy(d: &Domain, p: f64, radius: f64, opts: &EnergyOptions) -> Result<(f64, f64)> {
    check_p(p)?;
    let (_, calc) = calculator(d, p, radius, opts)?;
    let (v, e, _) = calc.shell(0.0, radius)?;
    Ok((v, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converges,
    Diverges,
    Marginal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MembershipVerdict {
    pub p: f64,
    pub verdict: Verdict,
    pub slope: f64,
    /// Slope ± two standard errors.
    pub ci: (f64, f64),
    pub residual: f64,
    /// Half-width of the marginal band around zero.
    pub threshold: f64,
}

/// Fit residuals above this make a negative slope marginal rather than convergent.
pub const RESIDUAL_GATE: f64 = 0.05;

/// Smallest half-width of the marginal band.
pub const MIN_THRESHOLD: f64 = 0.025;

/// Converges when the slope is below `−τ` with small residuals, diverges above `τ`,
/// marginal otherwise; `τ = max(0.025, 2·se)`.
pub fn membership_verdict(report: &DyadicEnergyReport) -> Result<MembershipVerdict> {
    let usable = report.usable_levels();
    let fit = match report.fit {
        Some(f) if usable >= 5 => f,
        _ => return Err(Error::InsufficientData(format!("{usable} usable levels, need 5"))),
    };
    let threshold = MIN_THRESHOLD.max(2.0 * fit.slope_se);
    let verdict = if fit.slope < -threshold && fit.residual_rms <= RESIDUAL_GATE {
        Verdict::Converges
    } else if fit.slope > threshold {
        Verdict::Diverges
    } else {
        Verdict::Marginal
    };
    Ok(MembershipVerdict { p: report.p, verdict, slope: fit.slope, ci: fit.slope_ci(2.0), residual: fit.residual_rms, threshold })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticalExponent {
    pub p: f64,
    pub uncertainty: f64,
    /// `(p, slope)` at every evaluated exponent, in evaluation order.
    pub trace: Vec<(f64, f64)>,
}

/// Root of the fitted slope `β(p)` on `bracket` by bisection.
pub fn critical_exponent_estimate(
    d: &Domain,
    bracket: (f64, f64),
    levels: (i32, i32),
    opts: &EnergyOptions,
) -> Result<CriticalExponent> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) {
        return Err(Error::arg(format!("bracket ({lo}, {hi}) is empty")));
    }
    let mut trace = Vec::new();
    let mut beta = |p: f64| -> Result<(f64, f64)> {
        let r = dyadic_energies(d, p, levels, opts)?;
        let f = r.fit.ok_or_else(|| Error::InsufficientData("fewer than two usable levels".into()))?;
        trace.push((p, f.slope));
        Ok((f.slope, f.slope_se))
    };
    let (b_lo, _) = beta(lo)?;
    let (b_hi, _) = beta(hi)?;
    if !(b_lo > 0.0 && b_hi < 0.0) {
        return Err(Error::NoBracket { low: bracket.0, high: bracket.1 });
    }
    let gradient = (b_hi - b_lo) / (hi - lo);
    let mut se = 0.0f64;
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        let (b, s) = beta(mid)?;
        se = s;
        if b > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(CriticalExponent { p: 0.5 * (lo + hi), uncertainty: 2.0 * se / gradient.abs() + (hi - lo), trace })
}
