//! Boundary pieces, arc-length sampling and the measured modulus of the normal map.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::Profile;
use crate::quad::GaussRule;

pub type P2 = [f64; 2];

pub(crate) fn sub(a: P2, b: P2) -> P2 {
    [a[0] - b[0], a[1] - b[1]]
}

pub(crate) fn norm(a: P2) -> f64 {
    a[0].hypot(a[1])
}

pub(crate) fn dist(a: P2, b: P2) -> f64 {
    norm(sub(a, b))
}

/// `x ↦ M·x + b` in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affine2 {
    pub m: [[f64; 2]; 2],
    pub b: P2,
}

impl Affine2 {
    pub const IDENTITY: Affine2 = Affine2 { m: [[1.0, 0.0], [0.0, 1.0]], b: [0.0, 0.0] };

    pub fn apply(&self, p: P2) -> P2 {
        [
            self.m[0][0] * p[0] + self.m[0][1] * p[1] + self.b[0],
            self.m[1][0] * p[0] + self.m[1][1] * p[1] + self.b[1],
        ]
    }

    pub fn linear(&self, v: P2) -> P2 {
        [self.m[0][0] * v[0] + self.m[0][1] * v[1], self.m[1][0] * v[0] + self.m[1][1] * v[1]]
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Affine2) -> Affine2 {
        let a = &self.m;
        let b = &inner.m;
        let m = [
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        ];
        Affine2 { m, b: self.apply(inner.b) }
    }
}

#[derive(Debug, Clone)]
pub enum Shape {
    Segment { a: P2, b: P2 },
    /// Counterclockwise arc from `theta0` to `theta1`.
    Arc { center: P2, radius: f64, theta0: f64, theta1: f64 },
    /// `t ↦ (t, φ(t))` for `t` running from `t0` to `t1`.
    Graph { profile: Arc<Profile>, t0: f64, t1: f64 },
}

/// One smooth piece of a boundary, parameterized by `s ∈ [0, 1]`.
#[derive(Debug, Clone)]
pub struct Piece {
    pub shape: Shape,
    pub map: Affine2,
}

impl Piece {
    pub fn segment(a: P2, b: P2) -> Self {
        Self { shape: Shape::Segment { a, b }, map: Affine2::IDENTITY }
    }

    pub fn arc(center: P2, radius: f64, theta0: f64, theta1: f64) -> Self {
        Self { shape: Shape::Arc { center, radius, theta0, theta1 }, map: Affine2::IDENTITY }
    }

    pub fn graph(profile: Arc<Profile>, t0: f64, t1: f64, map: Affine2) -> Self {
        Self { shape: Shape::Graph { profile, t0, t1 }, map }
    }

    pub fn mapped(&self, outer: &Affine2) -> Self {
        Self { shape: self.shape.clone(), map: outer.compose(&self.map) }
    }

    pub fn point(&self, s: f64) -> P2 {
        let local = match &self.shape {
            Shape::Segment { a, b } => [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])],
            Shape::Arc { center, radius, theta0, theta1 } => {
                let th = theta0 + s * (theta1 - theta0);
                [center[0] + radius * th.cos(), center[1] + radius * th.sin()]
            }
            Shape::Graph { profile, t0, t1 } => {
                let t = t0 + s * (t1 - t0);
                [t, profile.value(t)]
            }
        };
        self.map.apply(local)
    }

    /// Derivative of [`Piece::point`] with respect to `s`.
    pub fn tangent(&self, s: f64) -> P2 {
        let local = match &self.shape {
            Shape::Segment { a, b } => sub(*b, *a),
            Shape::Arc { radius, theta0, theta1, .. } => {
                let th = theta0 + s * (theta1 - theta0);
                let w = (theta1 - theta0) * radius;
                [-w * th.sin(), w * th.cos()]
            }
            Shape::Graph { profile, t0, t1 } => {
                let t = t0 + s * (t1 - t0);
                [t1 - t0, (t1 - t0) * profile.derivative(t)]
            }
        };
        self.map.linear(local)
    }

    /// Outward unit normal of a counterclockwise boundary.
    pub fn normal(&self, s: f64) -> P2 {
        let t = self.tangent(s);
        let l = norm(t);
        [t[1] / l, -t[0] / l]
    }

    pub fn length(&self) -> f64 {
        match &self.shape {
            Shape::Segment { a, b } => norm(self.map.linear(sub(*b, *a))),
            _ => {
                let rule = GaussRule::new(16);
                rule.composite(0.0, 1.0, 64, |s| norm(self.tangent(s)))
            }
        }
    }

    /// Ratio of the largest speed `|dP/ds|` to the mean speed, estimated on a grid.
    fn speed_ratio(&self) -> f64 {
        if matches!(self.shape, Shape::Segment { .. }) {
            return 1.0;
        }
        let n = 256;
        let speeds: Vec<f64> = (0..=n).map(|i| norm(self.tangent(i as f64 / n as f64))).collect();
        let mean = speeds.iter().sum::<f64>() / speeds.len() as f64;
        speeds.iter().cloned().fold(0.0, f64::max) / mean
    }
}

/// Ordered points on a closed boundary with outward unit normals.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct BoundarySampling {
    /// Cumulative chord length from the first point.
    pub arclength: Vec<f64>,
    pub points: Vec<P2>,
    pub normals: Vec<P2>,
    /// Index of the piece each point belongs to.
    pub piece: Vec<usize>,
}

impl BoundarySampling {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,x,y,nx,ny\n");
        for i in 0..self.len() {
            let (p, n) = (self.points[i], self.normals[i]);
            out.push_str(&format!("{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}\n", self.arclength[i], p[0], p[1], n[0], n[1]));
        }
        out
    }
}

/// Checks that consecutive pieces join into a single closed curve.
pub fn check_closed(pieces: &[Piece]) -> Result<()> {
    if pieces.is_empty() {
        return Err(Error::Topology("no boundary pieces".into()));
    }
    let scale = pieces.iter().map(|p| p.length()).sum::<f64>().max(1e-300);
    for i in 0..pieces.len() {
        let end = pieces[i].point(1.0);
        let next = pieces[(i + 1) % pieces.len()].point(0.0);
        if dist(end, next) > 1e-9 * scale {
            return Err(Error::Topology(format!("gap of {:e} after piece {i}", dist(end, next))));
        }
    }
    Ok(())
}

/// Samples closed boundary pieces so consecutive points are at most `step` apart along the curve.
pub fn sample_pieces(pieces: &[Piece], step: f64) -> Result<BoundarySampling> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::arg(format!("sampling step must be positive, got {step}")));
    }
    check_closed(pieces)?;
    let mut out = BoundarySampling::default();
    let mut acc = 0.0;
    let mut prev: Option<P2> = None;
    for (k, piece) in pieces.iter().enumerate() {
        let len = piece.length();
        if len == 0.0 {
            continue;
        }
        let count = ((len * piece.speed_ratio() * 1.02 / step).ceil() as usize).max(1);
        // last point of each piece is the first of the next
        for i in 0..count {
            let s = i as f64 / count as f64;
            let p = piece.point(s);
            if let Some(q) = prev {
                acc += dist(p, q);
            }
            out.arclength.push(acc);
            out.points.push(p);
            out.normals.push(piece.normal(s));
            out.piece.push(k);
            prev = Some(p);
        }
        // At a corner the end point is kept twice, once with each one-sided normal.
        let end_normal = piece.normal(1.0);
        let next_normal = pieces[(k + 1) % pieces.len()].normal(0.0);
        if dist(end_normal, next_normal) > 1e-12 {
            let p = piece.point(1.0);
            acc += dist(p, prev.unwrap());
            out.arclength.push(acc);
            out.points.push(p);
            out.normals.push(end_normal);
            out.piece.push(k);
            prev = Some(p);
        }
    }
    if out.points.len() < 3 {
        return Err(Error::DegenerateDomain("boundary has fewer than three sample points".into()));
    }
    Ok(out)
}

/// Measured `sup |ν(x) − ν(y)|` over sampled pairs with `|x − y| ≤ δ`, for each `δ` in `deltas`.
///
/// Pairs are found by spatial hashing at the largest `δ`; the result is made
/// nondecreasing in `δ` by a running maximum.
pub fn normal_modulus(bs: &BoundarySampling, deltas: &[f64]) -> Result<Vec<(f64, f64)>> {
    if deltas.is_empty() {
        return Err(Error::arg("normal_modulus needs a nonempty δ grid"));
    }
    if bs.is_empty() {
        return Err(Error::arg("normal_modulus needs a nonempty boundary sampling"));
    }
    if deltas.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
        return Err(Error::arg("δ values must be positive and finite"));
    }
    let mut order: Vec<usize> = (0..deltas.len()).collect();
    order.sort_by(|&a, &b| deltas[a].total_cmp(&deltas[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| deltas[i]).collect();
    let dmax = *sorted.last().unwrap();
    let mut best = vec![0.0f64; sorted.len()];
    let cell = dmax;
    let key = |p: P2| ((p[0] / cell).floor() as i64, (p[1] / cell).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, &p) in bs.points.iter().enumerate() {
        grid.entry(key(p)).or_default().push(i);
    }
    for (i, &p) in bs.points.iter().enumerate() {
        let (cx, cy) = key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                let Some(list) = grid.get(&(cx + dx, cy + dy)) else { continue };
                for &j in list {
                    if j <= i {
                        continue;
                    }
                    let d = dist(p, bs.points[j]);
                    if d > dmax {
                        continue;
                    }
                    let gap = dist(bs.normals[i], bs.normals[j]);
                    let k = sorted.partition_point(|x| *x < d);
                    if gap > best[k] {
                        best[k] = gap;
                    }
                }
            }
        }
    }
    for k in 1..best.len() {
        best[k] = best[k].max(best[k - 1]);
    }
    let mut out = vec![(0.0, 0.0); deltas.len()];
    for (rank, &i) in order.iter().enumerate() {
        out[i] = (deltas[i], best[rank]);
    }
    Ok(out)
}

/// [`normal_modulus`] with a fresh sampling at step `δ/oversample` for each `δ`.
pub fn normal_modulus_multiscale(pieces: &[Piece], deltas: &[f64], oversample: f64) -> Result<Vec<(f64, f64)>> {
    if deltas.is_empty() {
        return Err(Error::arg("normal_modulus needs a nonempty δ grid"));
    }
    let mut order: Vec<usize> = (0..deltas.len()).collect();
    order.sort_by(|&a, &b| deltas[a].total_cmp(&deltas[b]));
    let mut out = vec![(0.0, 0.0); deltas.len()];
    let mut running = 0.0f64;
    for &i in &order {
        let d = deltas[i];
        let bs = sample_pieces(pieces, d / oversample)?;
        let w = normal_modulus(&bs, &[d])?[0].1;
        running = running.max(w);
        out[i] = (d, running);
    }
    Ok(out)
}

/// Boundary pieces of a disk, as one counterclockwise arc.
pub fn circle_pieces(center: P2, radius: f64) -> Vec<Piece> {
    vec![Piece::arc(center, radius, 0.0, 2.0 * PI)]
}

/// Smallest over all boundary windows of arc length `window` of the largest
/// distance between the window and its chord.
///
/// A value above zero (beyond rounding) means no window is a straight segment.
pub fn min_chord_deviation(bs: &BoundarySampling, window: f64, stride: usize) -> Result<f64> {
    let n = bs.len();
    let total = *bs.arclength.last().unwrap_or(&0.0);
    if !(window > 0.0) || window >= total {
        return Err(Error::arg("window must be positive and shorter than the boundary"));
    }
    let stride = stride.max(1);
    let mut worst = f64::INFINITY;
    // cyclic arclength of index j measured from i
    let mut j = 0usize;
    let mut i = 0usize;
    while i < n {
        let start = bs.arclength[i];
        if j < i {
            j = i;
        }
        while j + 1 < n + i && cyc(bs, j + 1, total) - start <= window {
            j += 1;
        }
        let a = bs.points[i];
        let b = bs.points[j % n];
        let chord = sub(b, a);
        let l = norm(chord);
        let mut dev = 0.0f64;
        for k in i + 1..j {
            let p = sub(bs.points[k % n], a);
            let d = if l > 0.0 { (chord[0] * p[1] - chord[1] * p[0]).abs() / l } else { norm(p) };
            dev = dev.max(d);
        }
        worst = worst.min(dev);
        i += stride;
    }
    Ok(worst)
}

fn cyc(bs: &BoundarySampling, k: usize, total: f64) -> f64 {
    let n = bs.len();
    if k < n {
        bs.arclength[k]
    } else {
        // wrap past the closing segment
        let close = dist(bs.points[n - 1], bs.points[0]);
        bs.arclength[k - n] + total + close
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_normals_are_radial() {
        let bs = sample_pieces(&circle_pieces([0.0, 0.0], 1.0), 1e-2).unwrap();
        for (p, n) in bs.points.iter().zip(&bs.normals) {
            assert!((n[0] - p[0]).abs() < 1e-12 && (n[1] - p[1]).abs() < 1e-12);
            assert!((norm(*n) - 1.0).abs() < 1e-12);
        }
        for w in bs.arclength.windows(2) {
            assert!(w[1] - w[0] <= 1e-2);
        }
    }

    #[test]
    fn disk_normal_modulus_is_the_chord() {
        let bs = sample_pieces(&circle_pieces([0.0, 0.0], 1.0), 1e-4).unwrap();
        let deltas = [1e-3, 1e-2, 0.05, 0.1];
        for (d, w) in normal_modulus(&bs, &deltas).unwrap() {
            assert!((w / d - 1.0).abs() < 0.1, "{d}: {w}");
            assert!(w <= d * (1.0 + 1e-12));
        }
    }

    #[test]
    fn square_normal_gap_at_corner() {
        let v = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let pieces: Vec<Piece> = (0..4).map(|i| Piece::segment(v[i], v[(i + 1) % 4])).collect();
        let bs = sample_pieces(&pieces, 1e-2).unwrap();
        let out = normal_modulus(&bs, &[1e-3, 0.1]).unwrap();
        for (_, w) in out {
            assert!((w - 2f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn graph_normals_of_a_line() {
        let pr = Arc::new(Profile::linear(1.0, 0.0));
        let p = Piece::graph(pr, 1.0, 0.0, Affine2::IDENTITY);
        let n = p.normal(0.3);
        // traversed right to left, outward is up-left
        let r = 0.5f64.sqrt();
        assert!((n[0] + r).abs() < 1e-15 && (n[1] - r).abs() < 1e-15);
    }

    #[test]
    fn open_chain_is_a_topology_error() {
        let pieces = vec![Piece::segment([0.0, 0.0], [1.0, 0.0]), Piece::segment([1.0, 0.0], [1.0, 1.0])];
        assert!(matches!(sample_pieces(&pieces, 0.1), Err(Error::Topology(_))));
    }

    #[test]
    fn chord_deviation_flags_straight_windows() {
        let v = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let pieces: Vec<Piece> = (0..4).map(|i| Piece::segment(v[i], v[(i + 1) % 4])).collect();
        let bs = sample_pieces(&pieces, 1e-3).unwrap();
        assert!(min_chord_deviation(&bs, 0.05, 7).unwrap() < 1e-12);
        let bs = sample_pieces(&circle_pieces([0.0, 0.0], 1.0), 1e-3).unwrap();
        assert!(min_chord_deviation(&bs, 0.05, 7).unwrap() > 1e-4);
    }
}
