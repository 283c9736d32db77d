//! The square-with-arches domain: a square of side `2ℓ`, `ℓ = b − c`, with an
//! arch `{0 < v < h(u)}` glued outside each side, where `h(u) = φ(c + u)` on
//! the first half of the side and its mirror image on the second half.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_loglog, LineFit};
use crate::profile::Profile;

use super::curve::{min_chord_deviation, normal_modulus_multiscale, norm, sample_pieces, Affine2, Piece, P2};

#[derive(Debug, Clone)]
pub struct Assembly {
    profile: Arc<Profile>,
    c: f64,
    b: f64,
    half: f64,
    /// Start corner and unit direction of each side, counterclockwise.
    sides: [(P2, P2); 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JunctionKind {
    /// Where the arches of two adjacent sides meet at a square corner.
    Corner,
    /// Top of an arch, where the profile meets its mirror image.
    Apex,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Junction {
    pub kind: JunctionKind,
    pub side: usize,
    pub position: P2,
    /// Distance between the two pieces' end points.
    pub gap: f64,
    /// Angle between the incoming and outgoing unit tangents, radians.
    pub angle: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JunctionReport {
    pub junctions: Vec<Junction>,
    pub max_angle: f64,
    pub max_gap: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StraightnessScan {
    pub window: f64,
    pub step: f64,
    /// Smallest, over all windows, of the largest distance to the window's chord.
    pub min_deviation: f64,
    pub threshold: f64,
    pub passed: bool,
}

fn check(cond: bool, what: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Construction(what()))
    }
}

/// Validates the profile on its ramp interval and assembles the domain.
pub fn build_theorem3_domain(pr: &Profile, tol: f64) -> Result<(Assembly, JunctionReport)> {
    let (c, b) = pr
        .ramp_interval()
        .ok_or_else(|| Error::Construction("profile carries no interval [c, b]".into()))?;
    Assembly::new(Arc::new(pr.clone()), c, b, tol)
}

impl Assembly {
    /// Assembles from any profile on `[c, b]` with `φ(c) = 0`, `φ′(c) = 1`, `φ′(b) = 0`, `φ′ > 0`.
    pub fn new(profile: Arc<Profile>, c: f64, b: f64, tol: f64) -> Result<(Self, JunctionReport)> {
        check(b > c && c.is_finite() && b.is_finite(), || format!("interval ({c}, {b}) is empty"))?;
        check(tol > 0.0, || "tolerance must be positive".into())?;
        let eps = 1e-9;
        let (v0, d0, d1) = (profile.value(c), profile.derivative(c), profile.derivative(b));
        check(v0.abs() <= eps, || format!("φ(c) = {v0:e}, expected 0"))?;
        check((d0 - 1.0).abs() <= eps, || format!("φ′(c) = {d0}, expected 1"))?;
        check(d1.abs() <= eps, || format!("φ′(b) = {d1:e}, expected 0"))?;
        let n = 10_000;
        for i in 1..n {
            let t = c + (b - c) * i as f64 / n as f64;
            let d = profile.derivative(t);
            check(d > 0.0, || format!("φ′({t}) = {d:e} is not positive"))?;
            check(d <= 1.0 + eps, || format!("φ′({t}) = {d} exceeds 1; adjacent arches would overlap"))?;
        }
        let l = b - c;
        let s = 2.0 * l;
        let sides = [
            ([0.0, 0.0], [1.0, 0.0]),
            ([s, 0.0], [0.0, 1.0]),
            ([s, s], [-1.0, 0.0]),
            ([0.0, s], [0.0, -1.0]),
        ];
        let asm = Self { profile, c, b, half: l, sides };
        let report = asm.junctions(tol);
        if !report.passed {
            return Err(Error::Construction(format!(
                "junction mismatch: angle {:e}, gap {:e} (tolerance {tol:e})",
                report.max_angle, report.max_gap
            )));
        }
        Ok((asm, report))
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn square_side(&self) -> f64 {
        2.0 * self.half
    }

    fn height(&self, u: f64) -> f64 {
        if u <= self.half {
            self.profile.value(self.c + u)
        } else {
            self.profile.value(self.c + 2.0 * self.half - u)
        }
    }

    pub fn area(&self) -> f64 {
        let s = self.square_side();
        let arch = super::profile_area(&self.profile, self.c, self.b);
        s * s + 8.0 * arch
    }

    pub fn bbox(&self) -> (P2, P2) {
        let s = self.square_side();
        let h = self.profile.value(self.b).max(0.0) * (1.0 + 1e-12);
        ([-h, -h], [s + h, s + h])
    }

    pub fn contains(&self, p: P2) -> bool {
        let s = self.square_side();
        if p[0] > 0.0 && p[0] < s && p[1] > 0.0 && p[1] < s {
            return true;
        }
        for (start, d) in &self.sides {
            let n = [d[1], -d[0]];
            let rel = [p[0] - start[0], p[1] - start[1]];
            let u = rel[0] * d[0] + rel[1] * d[1];
            let v = rel[0] * n[0] + rel[1] * n[1];
            if u > 0.0 && u < s && v >= 0.0 && v < self.height(u) {
                return true;
            }
        }
        false
    }

    /// Eight graph pieces, two per side, counterclockwise.
    pub fn pieces(&self) -> Vec<Piece> {
        let mut out = Vec::with_capacity(8);
        let (c, l) = (self.c, self.half);
        for (start, d) in &self.sides {
            let n = [d[1], -d[0]];
            let rise = Affine2 {
                m: [[d[0], n[0]], [d[1], n[1]]],
                b: [start[0] - c * d[0], start[1] - c * d[1]],
            };
            let fall = Affine2 {
                m: [[-d[0], n[0]], [-d[1], n[1]]],
                b: [start[0] + (c + 2.0 * l) * d[0], start[1] + (c + 2.0 * l) * d[1]],
            };
            out.push(Piece::graph(self.profile.clone(), c, self.b, rise));
            out.push(Piece::graph(self.profile.clone(), self.b, c, fall));
        }
        out
    }

    /// Tangent and position mismatch at the four apexes and the four corners.
    pub fn junctions(&self, tol: f64) -> JunctionReport {
        let pieces = self.pieces();
        let mut junctions = Vec::with_capacity(8);
        for k in 0..8 {
            let (a, b) = (&pieces[k], &pieces[(k + 1) % 8]);
            let (ta, tb) = (a.tangent(1.0), b.tangent(0.0));
            let cross = ta[0] * tb[1] - ta[1] * tb[0];
            let dot = ta[0] * tb[0] + ta[1] * tb[1];
            let (pa, pb) = (a.point(1.0), b.point(0.0));
            junctions.push(Junction {
                kind: if k % 2 == 0 { JunctionKind::Apex } else { JunctionKind::Corner },
                side: k / 2,
                position: pa,
                gap: norm([pa[0] - pb[0], pa[1] - pb[1]]),
                angle: cross.atan2(dot).abs(),
            });
        }
        let max_angle = junctions.iter().map(|j| j.angle).fold(0.0, f64::max);
        let max_gap = junctions.iter().map(|j| j.gap).fold(0.0, f64::max);
        JunctionReport { junctions, max_angle, max_gap, tolerance: tol, passed: max_angle < tol && max_gap < tol }
    }

    /// Checks that no boundary window of arc length `window` is a straight segment.
    pub fn straightness(&self, window: f64, step: f64) -> Result<StraightnessScan> {
        let bs = sample_pieces(&self.pieces(), step)?;
        let threshold = 1e-10;
        let stride = ((window / step) as usize / 8).max(1);
        let min_deviation = min_chord_deviation(&bs, window, stride)?;
        Ok(StraightnessScan { window, step, min_deviation, threshold, passed: min_deviation > threshold })
    }
}

/// Measured modulus of the normal map of `pieces` at each `δ` and its log-log fit.
pub fn normal_modulus_fit(pieces: &[Piece], deltas: &[f64], oversample: f64) -> Result<(Vec<(f64, f64)>, LineFit)> {
    let table = normal_modulus_multiscale(pieces, deltas, oversample)?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = table.iter().cloned().unzip();
    let fit = fit_loglog(&xs, &ys)?;
    Ok((table, fit))
}
