//! Fourier transforms of indicator functions, `1̂_D(u) = ∫_D e^{−i(u,t)} dt`.
//!
//! Four engines share this convention: closed forms (rectangles, disks and
//! their affine images), the boundary line integral, the rasterized grid, and
//! the slice reduction for special domains.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::bessel::j1_over_x;
use crate::error::{Error, Result};
use crate::geometry::{sample_pieces, signed_area, Domain, DomainKind, Piece, Shape, P2};
use crate::profile::Profile;
use crate::quad::{integrate_uniform, Integral};

pub const CONVENTION: &str = "f^(u) = int f(t) exp(-i(u,t)) dt";

/// Plancherel constant: `∫|f̂|² = (2π)^n ∫|f|²` under [`CONVENTION`].
pub fn parseval_constant(n: usize) -> f64 {
    (2.0 * PI).powi(n as i32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Closed,
    Boundary,
    Grid,
    Lemma1,
}

impl Engine {
    pub const ALL: [Engine; 4] = [Engine::Closed, Engine::Boundary, Engine::Grid, Engine::Lemma1];

    pub fn name(self) -> &'static str {
        match self {
            Engine::Closed => "closed",
            Engine::Boundary => "boundary",
            Engine::Grid => "grid",
            Engine::Lemma1 => "lemma1",
        }
    }
}

impl std::str::FromStr for Engine {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Engine::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::arg(format!("unknown engine {s:?}")))
    }
}

/// `sin(x)/x` with the removable singularity filled in.
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `∫_0^1 e^{−iws} ds`.
fn unit_phase_integral(w: f64) -> Complex64 {
    Complex64::from_polar(sinc(0.5 * w), -0.5 * w)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Engines able to evaluate `1̂_D` for this domain.
pub fn supported_engines(d: &Domain) -> Vec<Engine> {
    let mut out = Vec::new();
    if closed_supported(d) {
        out.push(Engine::Closed);
    }
    if d.dim() == 2 {
        out.push(Engine::Boundary);
        out.push(Engine::Grid);
    }
    if matches!(d.kind, DomainKind::Special { .. }) {
        out.push(Engine::Lemma1);
    }
    out
}

fn closed_supported(d: &Domain) -> bool {
    match &d.kind {
        DomainKind::Rectangle { .. } | DomainKind::Disk { .. } => true,
        DomainKind::Affine { base, .. } => closed_supported(base),
        _ => false,
    }
}

/// Radial profile of the transform of a disk of radius `r` centred at 0: `2πr J₁(rρ)/ρ`.
pub fn disk_radial(r: f64, rho: f64) -> f64 {
    2.0 * PI * r * r * j1_over_x(r * rho)
}

/// Closed-form transform of a rectangle, a disk, or an affine image of either.
pub fn closed_form(d: &Domain, xi: &[f64]) -> Result<Complex64> {
    if xi.len() != d.dim() {
        return Err(Error::arg(format!("frequency has {} components, domain dimension is {}", xi.len(), d.dim())));
    }
    match &d.kind {
        DomainKind::Rectangle { origin, widths } => {
            let mut v = Complex64::new(1.0, 0.0);
            for ((x, a), o) in xi.iter().zip(widths).zip(origin) {
                v *= unit_phase_integral(x * a) * *a * Complex64::from_polar(1.0, -x * o);
            }
            Ok(v)
        }
        DomainKind::Disk { center, radius } => {
            let rho = xi[0].hypot(xi[1]);
            Ok(Complex64::from_polar(disk_radial(*radius, rho), -dot(xi, center)))
        }
        DomainKind::Affine { base, q, det, shift, .. } => {
            // 1̂_{QD+b}(u) = |det Q| e^{−i(u,b)} 1̂_D(Qᵀu)
            let n = xi.len();
            let qt: Vec<f64> = (0..n).map(|j| (0..n).map(|i| q[i][j] * xi[i]).sum()).collect();
            Ok(closed_form(base, &qt)? * det.abs() * Complex64::from_polar(1.0, -dot(xi, shift)))
        }
        _ => Err(Error::Unsupported("closed forms exist for rectangles, disks and their affine images".into())),
    }
}

/// `∮ e^{−i(ξ,x)} (ξ, ν) dσ` along one straight edge `a → b`.
fn edge_term(a: P2, b: P2, xi: P2) -> Complex64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let flux = xi[0] * d[1] - xi[1] * d[0];
    Complex64::from_polar(flux, -(xi[0] * a[0] + xi[1] * a[1])) * unit_phase_integral(xi[0] * d[0] + xi[1] * d[1])
}

/// Same line integral along a curved piece, with quadrature error.
fn piece_term(p: &Piece, xi: P2, tol: f64) -> Result<Integral<Complex64>> {
    let rho = xi[0].hypot(xi[1]);
    let len = p.length();
    let mut panels = ((len * rho / PI).ceil() as usize).max(4);
    if let Shape::Graph { profile, t0, t1 } = &p.shape {
        // resolve the visible oscillations of the profile's derivative as well
        let f = profile.effective_bandwidth(1e-6).min(1e6);
        panels = panels.max(((t1 - t0).abs() * f / (2.0 * PI)).ceil() as usize);
    }
    integrate_uniform(
        |s| {
            let x = p.point(s);
            let t = p.tangent(s);
            Complex64::from_polar(xi[0] * t[1] - xi[1] * t[0], -(xi[0] * x[0] + xi[1] * x[1]))
        },
        0.0,
        1.0,
        panels,
        tol,
        1 << 20,
    )
}

/// Boundary-engine transform: `(i/|ξ|²) ∮_{∂D} e^{−i(ξ,x)} (ξ, ν(x)) dσ(x)`.
///
/// Straight pieces are integrated in closed form, curved ones by quadrature to `tol`.
/// At `ξ = 0` the area is returned.
pub fn boundary_integral(d: &Domain, xi: P2, tol: f64) -> Result<Complex64> {
    let pieces = d.boundary_pieces()?;
    boundary_integral_pieces(&pieces, d.area(), xi, tol).map(|r| r.value)
}

/// Boundary-engine transform for an explicit counterclockwise chain of pieces.
pub fn boundary_integral_pieces(pieces: &[Piece], area: f64, xi: P2, tol: f64) -> Result<Integral<Complex64>> {
    crate::geometry::check_closed(pieces)?;
    let rho2 = xi[0] * xi[0] + xi[1] * xi[1];
    if rho2 == 0.0 {
        return Ok(Integral { value: Complex64::new(area, 0.0), error: 0.0, panels: 0 });
    }
    let reach = pieces
        .iter()
        .flat_map(|p| [p.point(0.0), p.point(0.5)])
        .map(|x| x[0].hypot(x[1]))
        .fold(0.0, f64::max);
    if rho2.sqrt() * reach < 1e-4 {
        // the line integral cancels to roundoff here; the first-order expansion is exact enough
        let bs = sample_pieces(pieces, reach.max(1e-300) / 4096.0)?;
        let c = centroid(&bs.points);
        return Ok(Integral {
            value: Complex64::from_polar(area, -(xi[0] * c[0] + xi[1] * c[1])),
            error: rho2 * reach * reach * area,
            panels: 0,
        });
    }
    let mut value = Complex64::new(0.0, 0.0);
    let mut error = 0.0;
    let mut panels = 0;
    let piece_tol = tol * rho2 / pieces.len() as f64;
    for p in pieces {
        match &p.shape {
            Shape::Segment { a, b } => value += edge_term(p.map.apply(*a), p.map.apply(*b), xi),
            _ => {
                let r = piece_term(p, xi, piece_tol)?;
                value += r.value;
                error += r.error;
                panels += r.panels;
            }
        }
    }
    Ok(Integral { value: value * Complex64::new(0.0, 1.0 / rho2), error: error / rho2, panels })
}

fn centroid(v: &[P2]) -> P2 {
    let a = signed_area(v);
    let mut cx = 0.0;
    let mut cy = 0.0;
    for i in 0..v.len() {
        let (p, q) = (v[i], v[(i + 1) % v.len()]);
        let cross = p[0] * q[1] - q[0] * p[1];
        cx += (p[0] + q[0]) * cross;
        cy += (p[1] + q[1]) * cross;
    }
    [cx / (6.0 * a), cy / (6.0 * a)]
}

/// Cell-center rasterization of a planar domain on a uniform grid.
#[derive(Debug, Clone)]
pub struct Raster {
    lo: P2,
    step: [f64; 2],
    shape: [usize; 2],
    /// Inclusive column runs of inside cells, per row.
    runs: Vec<Vec<(u32, u32)>>,
    inside: usize,
    straddle: usize,
}

impl Raster {
    /// `shape` cells per axis over `bx = (lo, hi)`; both counts powers of two.
    pub fn new(d: &Domain, shape: [usize; 2], bx: (P2, P2)) -> Result<Self> {
        for n in shape {
            if n < 2 || !n.is_power_of_two() || n > 1 << 14 {
                return Err(Error::arg(format!("grid size {n} must be a power of two in [2, 16384]")));
            }
        }
        let (lo, hi) = bx;
        if !(hi[0] > lo[0] && hi[1] > lo[1]) || lo.iter().chain(&hi).any(|x| !x.is_finite()) {
            return Err(Error::arg("sampling box must be finite with lo < hi"));
        }
        let (dlo, dhi) = d.bbox()?;
        let slack = 1e-12 * (hi[0] - lo[0]).max(hi[1] - lo[1]);
        if dlo[0] < lo[0] - slack || dlo[1] < lo[1] - slack || dhi[0] > hi[0] + slack || dhi[1] > hi[1] + slack {
            return Err(Error::Containment);
        }
        let step = [(hi[0] - lo[0]) / shape[0] as f64, (hi[1] - lo[1]) / shape[1] as f64];
        let runs: Vec<Vec<(u32, u32)>> = (0..shape[1])
            .into_par_iter()
            .map(|j| {
                let y = lo[1] + (j as f64 + 0.5) * step[1];
                let mut row = Vec::new();
                let mut start: Option<u32> = None;
                for i in 0..shape[0] {
                    let x = lo[0] + (i as f64 + 0.5) * step[0];
                    match (d.contains([x, y]), start) {
                        (true, None) => start = Some(i as u32),
                        (false, Some(s)) => {
                            row.push((s, i as u32 - 1));
                            start = None;
                        }
                        _ => {}
                    }
                }
                if let Some(s) = start {
                    row.push((s, shape[0] as u32 - 1));
                }
                row
            })
            .collect();
        let inside = runs.iter().flatten().map(|(a, b)| (b - a + 1) as usize).sum();
        let bs = d.sample_boundary(0.5 * step[0].min(step[1]))?;
        let mut cells: Vec<(i64, i64)> = bs
            .points
            .iter()
            .map(|p| (((p[0] - lo[0]) / step[0]).floor() as i64, ((p[1] - lo[1]) / step[1]).floor() as i64))
            .collect();
        cells.sort_unstable();
        cells.dedup();
        Ok(Self { lo, step, shape, runs, inside, straddle: cells.len() })
    }

    /// Square box around the domain with a margin, and the raster on it.
    pub fn around(d: &Domain, n: usize) -> Result<Self> {
        Self::padded(d, n, 1.125)
    }

    /// Square `n × n` raster centred on `D` whose side is `factor` times the larger bbox side;
    /// larger factors give finer frequency spacing at the cost of Nyquist range.
    pub fn padded(d: &Domain, n: usize, factor: f64) -> Result<Self> {
        if !(factor >= 1.0) || !factor.is_finite() {
            return Err(Error::arg(format!("padding factor must be at least 1, got {factor}")));
        }
        let (lo, hi) = d.bbox()?;
        let side = (hi[0] - lo[0]).max(hi[1] - lo[1]) * factor;
        let c = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
        Self::new(d, [n, n], ([c[0] - 0.5 * side, c[1] - 0.5 * side], [c[0] + 0.5 * side, c[1] + 0.5 * side]))
    }

    pub fn cell_area(&self) -> f64 {
        self.step[0] * self.step[1]
    }

    /// Cell count times cell area; the transform's value at 0.
    pub fn area(&self) -> f64 {
        self.inside as f64 * self.cell_area()
    }

    /// Largest representable frequency per axis.
    pub fn nyquist(&self) -> [f64; 2] {
        [PI / self.step[0], PI / self.step[1]]
    }

    /// Bound on `|1̂_D(ξ) − raster value|`: one cell area per boundary cell plus the midpoint-rule term.
    pub fn error_bar(&self, xi: P2) -> f64 {
        let m = (xi[0] * self.step[0]).powi(2) + (xi[1] * self.step[1]).powi(2);
        self.straddle as f64 * self.cell_area() + self.area() * m / 24.0
    }

    /// Discrete transform at an arbitrary frequency, summing each run in closed form.
    pub fn transform_at(&self, xi: P2) -> Complex64 {
        let theta = xi[0] * self.step[0];
        let reduced = theta - 2.0 * PI * (theta / (2.0 * PI)).round();
        let half = (0.5 * reduced).sin();
        let x0 = self.lo[0] + 0.5 * self.step[0];
        let mut total = Complex64::new(0.0, 0.0);
        for (j, row) in self.runs.iter().enumerate() {
            if row.is_empty() {
                continue;
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for &(a, b) in row {
                let len = (b - a + 1) as f64;
                let ratio = if half.abs() < 1e-12 { len } else { (0.5 * len * reduced).sin() / half };
                let phase = -xi[0] * (x0 + a as f64 * self.step[0]) - 0.5 * (len - 1.0) * reduced;
                acc += Complex64::from_polar(ratio, phase);
            }
            let y = self.lo[1] + (j as f64 + 0.5) * self.step[1];
            total += acc * Complex64::from_polar(1.0, -xi[1] * y);
        }
        total * self.cell_area()
    }

    /// Transform on the full frequency grid by FFT.
    pub fn spectrum(&self) -> SpectrumGrid {
        let [nx, ny] = self.shape;
        let mut data = vec![Complex64::new(0.0, 0.0); nx * ny];
        for (j, row) in self.runs.iter().enumerate() {
            for &(a, b) in row {
                for i in a..=b {
                    data[j * nx + i as usize] = Complex64::new(1.0, 0.0);
                }
            }
        }
        let mut planner = FftPlanner::new();
        let fx = planner.plan_fft_forward(nx);
        data.par_chunks_mut(nx).for_each(|row| fx.process(row));
        let fy = planner.plan_fft_forward(ny);
        let mut cols = vec![Complex64::new(0.0, 0.0); nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                cols[i * ny + j] = data[j * nx + i];
            }
        }
        cols.par_chunks_mut(ny).for_each(|col| fy.process(col));
        let du = [2.0 * PI / (nx as f64 * self.step[0]), 2.0 * PI / (ny as f64 * self.step[1])];
        let x0 = [self.lo[0] + 0.5 * self.step[0], self.lo[1] + 0.5 * self.step[1]];
        let mut values = vec![Complex64::new(0.0, 0.0); nx * ny];
        for k2 in 0..ny {
            let m2 = (k2 + ny / 2) % ny;
            let u2 = (k2 as f64 - (ny / 2) as f64) * du[1];
            for k1 in 0..nx {
                let m1 = (k1 + nx / 2) % nx;
                let u1 = (k1 as f64 - (nx / 2) as f64) * du[0];
                values[k2 * nx + k1] =
                    cols[m1 * ny + m2] * Complex64::from_polar(self.cell_area(), -(u1 * x0[0] + u2 * x0[1]));
            }
        }
        SpectrumGrid {
            layout: Layout::Cartesian { shape: self.shape, step: du },
            values,
            engine: Engine::Grid,
            convention: CONVENTION.to_string(),
            error: self.straddle as f64 * self.cell_area(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layout", rename_all = "snake_case")]
pub enum Layout {
    /// Frequencies `((k₁ − n₁/2)·step₁, (k₂ − n₂/2)·step₂)`, stored row by row in `k₂`.
    Cartesian { shape: [usize; 2], step: [f64; 2] },
    /// Rays at angles `2πa/angles` times each radius, stored ray by ray.
    Polar { angles: usize, radii: Vec<f64> },
    Points { points: Vec<Vec<f64>> },
}

/// Transform values on a frequency layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumGrid {
    pub layout: Layout,
    pub values: Vec<Complex64>,
    pub engine: Engine,
    pub convention: String,
    /// Uniform error estimate (grid engine) or largest quadrature error.
    pub error: f64,
}

impl SpectrumGrid {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn frequency(&self, i: usize) -> Vec<f64> {
        match &self.layout {
            Layout::Cartesian { shape, step } => {
                let (k1, k2) = (i % shape[0], i / shape[0]);
                vec![
                    (k1 as f64 - (shape[0] / 2) as f64) * step[0],
                    (k2 as f64 - (shape[1] / 2) as f64) * step[1],
                ]
            }
            Layout::Polar { angles, radii } => {
                let (a, r) = (i / radii.len(), i % radii.len());
                let th = 2.0 * PI * a as f64 / *angles as f64;
                vec![radii[r] * th.cos(), radii[r] * th.sin()]
            }
            Layout::Points { points } => points[i].clone(),
        }
    }

    /// Value at integer frequency indices of a Cartesian layout, centred at 0.
    pub fn at(&self, k1: i64, k2: i64) -> Option<Complex64> {
        match &self.layout {
            Layout::Cartesian { shape, .. } => {
                let i = k1 + (shape[0] / 2) as i64;
                let j = k2 + (shape[1] / 2) as i64;
                if i < 0 || j < 0 || i >= shape[0] as i64 || j >= shape[1] as i64 {
                    None
                } else {
                    Some(self.values[j as usize * shape[0] + i as usize])
                }
            }
            _ => None,
        }
    }

    /// `Σ |1̂|² Δu` over a Cartesian layout; compare with `(2π)² area`.
    pub fn parseval_sum(&self) -> Option<f64> {
        match &self.layout {
            Layout::Cartesian { step, .. } => Some(self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * step[0] * step[1]),
            _ => None,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("u1,u2,re,im,abs\n");
        for (i, v) in self.values.iter().enumerate() {
            let u = self.frequency(i);
            let u2 = u.get(1).copied().unwrap_or(0.0);
            out.push_str(&format!("{},{},{},{},{}\n", u[0], u2, v.re, v.im, v.norm()));
        }
        out
    }

    /// JSON header and little-endian `(re, im)` pairs in storage order.
    pub fn to_binary(&self) -> (serde_json::Value, Vec<u8>) {
        let header = serde_json::json!({
            "schema": "v1",
            "layout": self.layout,
            "engine": self.engine,
            "convention": self.convention,
            "count": self.values.len(),
            "dtype": "f64le complex pairs, row-major",
        });
        let mut bytes = Vec::with_capacity(self.values.len() * 16);
        for v in &self.values {
            bytes.extend_from_slice(&v.re.to_le_bytes());
            bytes.extend_from_slice(&v.im.to_le_bytes());
        }
        (header, bytes)
    }
}

/// `F_λ(t) = (e^{−iλφ(t)} − 1)/(−iλ)` on `I = (c, b)`, zero outside; `F₀ = φ`.
#[derive(Debug, Clone)]
pub struct LambdaSlice<'a> {
    pub lambda: f64,
    pub c: f64,
    pub b: f64,
    pub profile: &'a Profile,
}

impl LambdaSlice<'_> {
    pub fn eval(&self, t: f64) -> Complex64 {
        if t <= self.c || t >= self.b {
            return Complex64::new(0.0, 0.0);
        }
        let v = self.profile.value(t);
        // φ e^{−iλφ/2} sinc(λφ/2), stable as λφ → 0
        Complex64::from_polar(v * sinc(0.5 * self.lambda * v), -0.5 * self.lambda * v)
    }

    /// Values at `n` midpoints of `I`.
    pub fn sample(&self, n: usize) -> Vec<Complex64> {
        let h = (self.b - self.c) / n as f64;
        (0..n).map(|i| self.eval(self.c + (i as f64 + 0.5) * h)).collect()
    }
}

/// `1̂_G(u, λ) = ∫_I F_λ(t) e^{−iut} dt` for a special domain `G`, by composite
/// Gauss–Kronrod with panels no wider than `π/max(|u|, |λ|·max|φ′|)`.
pub fn lemma1_transform(g: &Domain, u: f64, lambda: f64, tol: f64) -> Result<Integral<Complex64>> {
    let (c, b, profile) = match &g.kind {
        DomainKind::Special { c, b, profile, .. } => (*c, *b, profile.as_ref()),
        _ => return Err(Error::Unsupported("the slice reduction needs a special domain".into())),
    };
    if !u.is_finite() || !lambda.is_finite() {
        return Err(Error::arg("frequency must be finite"));
    }
    let slice = LambdaSlice { lambda, c, b, profile };
    let len = b - c;
    let rate = u.abs().max(lambda.abs() * profile.max_abs_derivative()).max(1.0 / len);
    let mut panels = (len * rate / PI).ceil() as usize;
    // resolve the profile's own oscillations down to amplitude 1e-9
    let wiggle = profile.effective_bandwidth(1e-9);
    panels = panels.max(((len * wiggle / (4.0 * PI)).ceil() as usize).min(1 << 14)).max(4);
    integrate_uniform(|t| slice.eval(t) * Complex64::from_polar(1.0, -u * t), c, b, panels, tol, 1 << 20)
}

/// Engine settings shared by the point evaluators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineOptions {
    /// Cells per axis of the grid engine.
    pub grid: usize,
    /// Absolute quadrature tolerance of the boundary and slice engines.
    pub tol: f64,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self { grid: 1024, tol: 1e-10 }
    }
}

/// Point evaluator bound to one domain and one engine.
pub struct Evaluator {
    domain: Domain,
    engine: Engine,
    options: EngineOptions,
    raster: Option<Raster>,
    pieces: Vec<Piece>,
}

impl Evaluator {
    pub fn new(d: &Domain, engine: Engine, options: EngineOptions) -> Result<Self> {
        if !supported_engines(d).contains(&engine) {
            return Err(Error::Unsupported(format!("engine {} does not handle this domain", engine.name())));
        }
        let raster = if engine == Engine::Grid { Some(Raster::around(d, options.grid)?) } else { None };
        let pieces = if engine == Engine::Boundary { d.boundary_pieces()? } else { Vec::new() };
        Ok(Self { domain: d.clone(), engine, options, raster, pieces })
    }

    pub fn engine(&self) -> Engine {
        self.engine
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn raster(&self) -> Option<&Raster> {
        self.raster.as_ref()
    }

    pub fn eval(&self, xi: &[f64]) -> Result<Complex64> {
        let planar = || -> Result<P2> {
            if xi.len() == 2 {
                Ok([xi[0], xi[1]])
            } else {
                Err(Error::arg(format!("frequency needs 2 components, got {}", xi.len())))
            }
        };
        match self.engine {
            Engine::Closed => closed_form(&self.domain, xi),
            Engine::Boundary => {
                boundary_integral_pieces(&self.pieces, self.domain.area(), planar()?, self.options.tol).map(|r| r.value)
            }
            Engine::Grid => {
                let r = self.raster.as_ref().expect("grid engine owns a raster");
                let x = planar()?;
                let ny = r.nyquist();
                if x[0].abs() > ny[0] || x[1].abs() > ny[1] {
                    return Err(Error::OutOfRange { value: x[0].abs().max(x[1].abs()), low: 0.0, high: ny[0].min(ny[1]) });
                }
                Ok(r.transform_at(x))
            }
            Engine::Lemma1 => {
                let x = planar()?;
                lemma1_transform(&self.domain, x[0], x[1], self.options.tol).map(|r| r.value)
            }
        }
    }

    /// Stated accuracy of [`Evaluator::eval`] at `xi`.
    pub fn tolerance(&self, xi: &[f64]) -> f64 {
        let scale = self.domain.area().max(1.0);
        match self.engine {
            Engine::Closed => 1e-12 * scale,
            Engine::Boundary | Engine::Lemma1 => 10.0 * self.options.tol * scale,
            Engine::Grid => {
                let x = [xi[0], xi.get(1).copied().unwrap_or(0.0)];
                self.raster.as_ref().map_or(f64::INFINITY, |r| r.error_bar(x))
            }
        }
    }

    /// Values at explicit frequencies.
    pub fn points(&self, points: &[Vec<f64>]) -> Result<SpectrumGrid> {
        let values = points.par_iter().map(|x| self.eval(x)).collect::<Result<Vec<_>>>()?;
        let error = points.iter().map(|x| self.tolerance(x)).fold(0.0, f64::max);
        Ok(SpectrumGrid {
            layout: Layout::Points { points: points.to_vec() },
            values,
            engine: self.engine,
            convention: CONVENTION.to_string(),
            error,
        })
    }

    /// Values along `angles` equally spaced rays at the given radii.
    pub fn polar(&self, angles: usize, radii: &[f64]) -> Result<SpectrumGrid> {
        if angles == 0 || radii.is_empty() {
            return Err(Error::arg("polar layout needs at least one angle and one radius"));
        }
        let layout = Layout::Polar { angles, radii: radii.to_vec() };
        let mut probe = SpectrumGrid { layout, values: Vec::new(), engine: self.engine, convention: CONVENTION.into(), error: 0.0 };
        let freqs: Vec<Vec<f64>> = (0..angles * radii.len()).map(|i| probe.frequency(i)).collect();
        probe.values = freqs.par_iter().map(|x| self.eval(x)).collect::<Result<Vec<_>>>()?;
        probe.error = freqs.iter().map(|x| self.tolerance(x)).fold(0.0, f64::max);
        Ok(probe)
    }
}

/// Largest disagreement between every pair of engines at each frequency, relative to the allowed tolerance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossCheck {
    pub engines: Vec<Engine>,
    pub frequencies: usize,
    /// Largest `|a − b|` over frequencies and engine pairs.
    pub max_difference: f64,
    /// Largest `|a − b| / max(tol_a, tol_b)`; at most 1 when all agree.
    pub max_ratio: f64,
    pub passed: bool,
}

pub fn cross_check(d: &Domain, frequencies: &[Vec<f64>], options: EngineOptions) -> Result<CrossCheck> {
    let engines: Vec<Engine> = supported_engines(d);
    let evals: Vec<Evaluator> = engines.iter().map(|e| Evaluator::new(d, *e, options)).collect::<Result<_>>()?;
    let mut max_difference = 0.0f64;
    let mut max_ratio = 0.0f64;
    for xi in frequencies {
        let vals: Vec<(Complex64, f64)> =
            evals.iter().map(|e| Ok((e.eval(xi)?, e.tolerance(xi)))).collect::<Result<_>>()?;
        for i in 0..vals.len() {
            for j in i + 1..vals.len() {
                let diff = (vals[i].0 - vals[j].0).norm();
                max_difference = max_difference.max(diff);
                max_ratio = max_ratio.max(diff / vals[i].1.max(vals[j].1));
            }
        }
    }
    Ok(CrossCheck { engines, frequencies: frequencies.len(), max_difference, max_ratio, passed: max_ratio <= 1.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel;
    use crate::geometry::{affine_image, DomainSpec};
    use crate::profile::ProfileSpec;
    use crate::quad::{integrate, Adaptive};
    use proptest::prelude::*;

    fn square_polygon() -> Domain {
        DomainSpec::Polygon { vertices: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]] }.build().unwrap()
    }

    fn special(profile: ProfileSpec, interval: [f64; 2]) -> Domain {
        DomainSpec::Special { interval, profile }.build().unwrap()
    }

    #[test]
    fn closed_forms() {
        let sq = DomainSpec::unit_square().build().unwrap();
        assert!((closed_form(&sq, &[0.0, 0.0]).unwrap() - 1.0).norm() < 1e-15);
        assert!(closed_form(&sq, &[2.0 * PI, 0.0]).unwrap().norm() < 1e-15);
        let disk = DomainSpec::unit_disk().build().unwrap();
        assert!((closed_form(&disk, &[0.0, 0.0]).unwrap().re - PI).abs() < 1e-15);
        let v = closed_form(&disk, &[0.6, 0.8]).unwrap();
        assert!((v.re - 2.0 * PI * bessel::series(1, 1.0)).abs() < 1e-10);
        assert!((v.re - 2.764_919_374_768).abs() < 1e-10);
        let poly = DomainSpec::Polygon { vertices: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]] }.build().unwrap();
        assert!(closed_form(&poly, &[1.0, 1.0]).unwrap_err().is_engine_mismatch());
    }

    #[test]
    fn rectangle_in_three_dimensions() {
        let cube = DomainSpec::Rectangle { widths: vec![1.0, 2.0, 0.5], origin: Some(vec![1.0, 0.0, -1.0]) }.build().unwrap();
        assert!((closed_form(&cube, &[0.0; 3]).unwrap().re - 1.0).abs() < 1e-15);
        // translation only changes the phase
        let moved = closed_form(&cube, &[0.3, -1.0, 2.0]).unwrap().norm();
        let home = DomainSpec::Rectangle { widths: vec![1.0, 2.0, 0.5], origin: None }.build().unwrap();
        assert!((closed_form(&home, &[0.3, -1.0, 2.0]).unwrap().norm() - moved).abs() < 1e-15);
    }

    #[test]
    fn polygon_edges_match_closed_form() {
        let sq = DomainSpec::unit_square().build().unwrap();
        let a = boundary_integral(&square_polygon(), [3.0, 5.0], 1e-12).unwrap();
        let b = closed_form(&sq, &[3.0, 5.0]).unwrap();
        assert!((a - b).norm() < 1e-10, "{a} vs {b}");
        // tiny frequencies fall back to the first-order expansion
        let c = boundary_integral(&square_polygon(), [1e-7, 0.0], 1e-12).unwrap();
        assert!((c - closed_form(&sq, &[1e-7, 0.0]).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn inscribed_polygon_approximates_the_disk() {
        let n = 64;
        let verts: Vec<[f64; 2]> =
            (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).map(|t| [t.cos(), t.sin()]).collect();
        let poly = DomainSpec::Polygon { vertices: verts }.build().unwrap();
        let disk = DomainSpec::unit_disk().build().unwrap();
        let a = boundary_integral(&poly, [1.0, 0.0], 1e-12).unwrap();
        let b = closed_form(&disk, &[1.0, 0.0]).unwrap();
        assert!((a - b).norm() < 1e-2 && (a - b).norm() / b.norm() < 1e-2, "{a} vs {b}");
        assert!((a - b).norm() < 1e-3 * PI * 2.0);
    }

    #[test]
    fn arcs_match_the_bessel_form() {
        let disk = DomainSpec::Disk { radius: 0.7, center: [0.2, -0.1] }.build().unwrap();
        for xi in [[1.0, 0.0], [3.0, -4.0], [20.0, 7.0]] {
            let a = boundary_integral(&disk, xi, 1e-12).unwrap();
            let b = closed_form(&disk, &xi).unwrap();
            assert!((a - b).norm() < 1e-9, "{xi:?}: {a} vs {b}");
        }
    }

    #[test]
    fn reparameterized_boundary_gives_the_same_value() {
        let verts = vec![[0.0, 0.0], [2.0, 0.2], [1.5, 1.0], [0.3, 0.8]];
        let mut refined = Vec::new();
        for i in 0..verts.len() {
            let (a, b) = (verts[i], verts[(i + 1) % verts.len()]);
            refined.push(a);
            refined.push([0.3 * a[0] + 0.7 * b[0], 0.3 * a[1] + 0.7 * b[1]]);
        }
        let d1 = DomainSpec::Polygon { vertices: verts }.build().unwrap();
        let d2 = DomainSpec::Polygon { vertices: refined }.build().unwrap();
        for xi in [[1.0, 2.0], [-7.0, 0.5]] {
            let a = boundary_integral(&d1, xi, 1e-12).unwrap();
            let b = boundary_integral(&d2, xi, 1e-12).unwrap();
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn affine_transform_identity() {
        let q = vec![vec![2.0, 0.5], vec![-0.3, 0.7]];
        let ellipse = affine_image(&DomainSpec::unit_disk(), q.clone(), vec![0.4, -1.0]).unwrap().build().unwrap();
        let disk = DomainSpec::unit_disk().build().unwrap();
        let det: f64 = 2.0 * 0.7 + 0.5 * 0.3;
        for u in [[1.0, 2.0], [-3.0, 0.5], [10.0, 4.0]] {
            let qt = [q[0][0] * u[0] + q[1][0] * u[1], q[0][1] * u[0] + q[1][1] * u[1]];
            let lhs = closed_form(&ellipse, &u).unwrap().norm();
            let rhs = det * closed_form(&disk, &qt).unwrap().norm();
            assert!((lhs - rhs).abs() <= 1e-6 * rhs.max(1e-300));
            let bnd = boundary_integral(&ellipse, u, 1e-12).unwrap();
            assert!((bnd - closed_form(&ellipse, &u).unwrap()).norm() < 1e-8);
        }
    }

    #[test]
    fn grid_engine_on_the_square() {
        let sq = DomainSpec::unit_square().build().unwrap();
        let r = Raster::new(&sq, [1024, 1024], ([-0.5, -0.5], [1.5, 1.5])).unwrap();
        let g = r.spectrum();
        assert_eq!(g.at(0, 0).unwrap().re, r.area());
        assert!((r.area() - 1.0).abs() < 1e-12);
        let Layout::Cartesian { step, .. } = g.layout else { panic!() };
        let kmax = (32.0 / step[0]) as i64;
        let mut worst = 0.0f64;
        for k1 in -kmax..=kmax {
            for k2 in -kmax..=kmax {
                let u = [k1 as f64 * step[0], k2 as f64 * step[1]];
                if u[0].hypot(u[1]) <= 32.0 {
                    worst = worst.max((g.at(k1, k2).unwrap() - closed_form(&sq, &u).unwrap()).norm());
                }
            }
        }
        assert!(worst < 5e-3, "{worst}");
        // the closed-form run sums agree with the FFT
        let p = r.transform_at([3.0 * step[0], -5.0 * step[1]]);
        assert!((p - g.at(3, -5).unwrap()).norm() < 1e-10);
    }

    #[test]
    fn grid_parseval_on_the_disk() {
        let disk = DomainSpec::unit_disk().build().unwrap();
        let r = Raster::around(&disk, 1024).unwrap();
        let s = r.spectrum().parseval_sum().unwrap();
        assert!((s / (parseval_constant(2) * PI) - 1.0).abs() < 0.01, "{s}");
        assert!((parseval_constant(2) * PI - 124.025).abs() < 0.01);
    }

    #[test]
    fn grid_rejects_small_boxes() {
        let disk = DomainSpec::unit_disk().build().unwrap();
        assert_eq!(Raster::new(&disk, [64, 64], ([0.0, 0.0], [1.0, 1.0])).unwrap_err(), Error::Containment);
        assert!(Raster::new(&disk, [100, 64], ([-1.0, -1.0], [1.0, 1.0])).is_err());
    }

    #[test]
    fn slice_of_a_rectangle() {
        let (h, w) = (0.7, 1.3);
        let g = special(ProfileSpec::Constant { value: h }, [0.0, w]);
        let rect = DomainSpec::Rectangle { widths: vec![w, h], origin: None }.build().unwrap();
        for (u, l) in [(1.0, 2.0), (-4.0, 0.3), (25.0, -40.0), (0.0, 3.0), (2.0, 0.0)] {
            let a = lemma1_transform(&g, u, l, 1e-12).unwrap().value;
            let b = closed_form(&rect, &[u, l]).unwrap();
            assert!((a - b).norm() < 1e-10, "{u},{l}: {a} vs {b}");
        }
    }

    #[test]
    fn slice_of_a_triangle_matches_double_quadrature() {
        let g = special(ProfileSpec::Linear { slope: 1.0, intercept: 0.0 }, [0.0, 1.0]);
        let (u, l) = (1.0, 2.0);
        let opts = Adaptive::tol(1e-14, 1e-14);
        let oracle = integrate(
            |t| {
                integrate(|y| Complex64::from_polar(1.0, -(u * t + l * y)), 0.0, t, opts).unwrap().value
            },
            0.0,
            1.0,
            opts,
        )
        .unwrap()
        .value;
        let v = lemma1_transform(&g, u, l, 1e-12).unwrap().value;
        assert!((v - oracle).norm() < 1e-8, "{v} vs {oracle}");
    }

    #[test]
    fn slice_bound_and_zero_lambda() {
        let pr = Profile::cosine(0.5, 3.0, 1.0);
        for l in [0.0, 0.1, 5.0, -80.0] {
            let s = LambdaSlice { lambda: l, c: 0.0, b: 2.0, profile: &pr };
            for v in s.sample(200).iter().zip(0..) {
                let t = (v.1 as f64 + 0.5) * 0.01;
                let bound = pr.value(t).abs().min(if l == 0.0 { f64::INFINITY } else { 2.0 / l.abs() });
                assert!(v.0.norm() <= bound * (1.0 + 1e-12));
            }
        }
        let g = special(ProfileSpec::Cosine { amplitude: 0.5, frequency: 3.0, offset: 1.0 }, [0.0, 2.0]);
        let u = 1.7;
        let v = lemma1_transform(&g, u, 0.0, 1e-12).unwrap().value;
        let opts = Adaptive::tol(1e-14, 1e-14);
        let area_slice =
            integrate(|t| Complex64::from_polar(pr.value(t), -u * t), 0.0, 2.0, opts).unwrap().value;
        assert!((v - area_slice).norm() < 1e-11);
    }

    #[test]
    fn engines_agree_on_a_hexagon() {
        let verts = vec![[0.0, 0.0], [1.0, -0.2], [1.6, 0.5], [1.2, 1.3], [0.2, 1.1], [-0.3, 0.6]];
        let d = DomainSpec::Polygon { vertices: verts }.build().unwrap();
        let freqs: Vec<Vec<f64>> = (0..10).map(|k| vec![1.3 * k as f64 - 6.0, 0.7 * k as f64]).collect();
        let cc = cross_check(&d, &freqs, EngineOptions::default()).unwrap();
        assert_eq!(cc.engines, vec![Engine::Boundary, Engine::Grid]);
        assert!(cc.passed, "{cc:?}");
    }

    #[test]
    fn csv_and_binary_export() {
        let disk = DomainSpec::unit_disk().build().unwrap();
        let e = Evaluator::new(&disk, Engine::Closed, EngineOptions::default()).unwrap();
        let g = e.polar(4, &[0.0, 1.0, 2.0]).unwrap();
        let csv = g.to_csv();
        assert!(csv.starts_with("u1,u2,re,im,abs\n"));
        assert_eq!(csv.lines().count(), 13);
        let first: Vec<f64> = csv.lines().nth(1).unwrap().split(',').map(|x| x.parse().unwrap()).collect();
        assert!((first[2] - PI).abs() < 1e-15);
        let (h, bytes) = g.to_binary();
        assert_eq!(h["schema"], "v1");
        assert_eq!(bytes.len(), 12 * 16);
        assert!("closed".parse::<Engine>().is_ok() && "bogus".parse::<Engine>().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn hermitian_symmetry(x in -30.0f64..30.0, y in -30.0f64..30.0) {
            let verts = vec![[0.0, 0.0], [1.0, -0.2], [1.6, 0.5], [1.2, 1.3], [0.2, 1.1]];
            let d = DomainSpec::Polygon { vertices: verts }.build().unwrap();
            let a = boundary_integral(&d, [x, y], 1e-12).unwrap();
            let b = boundary_integral(&d, [-x, -y], 1e-12).unwrap();
            prop_assert!((a - b.conj()).norm() < 1e-10);
            let disk = DomainSpec::Disk { radius: 0.5, center: [0.3, 0.1] }.build().unwrap();
            let c = closed_form(&disk, &[x, y]).unwrap();
            let e = closed_form(&disk, &[-x, -y]).unwrap();
            prop_assert!((c - e.conj()).norm() < 1e-14);
        }

        #[test]
        fn rectangles_closed_vs_boundary(w in 0.1f64..3.0, h in 0.1f64..3.0, x in -20.0f64..20.0, y in -20.0f64..20.0) {
            let d = DomainSpec::Rectangle { widths: vec![w, h], origin: Some(vec![-0.4, 0.9]) }.build().unwrap();
            let a = closed_form(&d, &[x, y]).unwrap();
            let b = boundary_integral(&d, [x, y], 1e-12).unwrap();
            prop_assert!((a - b).norm() < 1e-10 * (1.0 + w * h));
        }
    }
}
