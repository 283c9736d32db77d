//! Simple polygons with a cell index for fast point location, and Koch prefractals.

use crate::error::{Error, Result};

use super::curve::{dist, P2};

/// A simple counterclockwise polygon.
#[derive(Debug, Clone)]
pub struct Polygon {
    vertices: Vec<P2>,
    area: f64,
    index: CellIndex,
}

impl Polygon {
    pub fn new(vertices: Vec<P2>) -> Result<Self> {
        let mut v = vertices;
        if v.len() >= 2 && v.first() == v.last() {
            v.pop();
        }
        if v.len() < 3 {
            return Err(Error::DegenerateDomain("polygon needs at least three vertices".into()));
        }
        if v.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::arg("polygon vertices must be finite"));
        }
        let area = signed_area(&v);
        if area == 0.0 {
            return Err(Error::DegenerateDomain("polygon has zero area".into()));
        }
        if area < 0.0 {
            return Err(Error::arg("polygon vertices must be listed counterclockwise"));
        }
        let index = CellIndex::build(&v);
        if let Some((i, j)) = index.first_crossing(&v) {
            return Err(Error::arg(format!("polygon is not simple: edges {i} and {j} intersect")));
        }
        Ok(Self { vertices: v, area, index })
    }

    pub fn vertices(&self) -> &[P2] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn edges(&self) -> impl Iterator<Item = (P2, P2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn bbox(&self) -> (P2, P2) {
        (self.index.lo, self.index.hi)
    }

    pub fn contains(&self, p: P2) -> bool {
        self.index.contains(&self.vertices, p)
    }

    /// Largest distance between two vertices, via the convex hull.
    pub fn diameter(&self) -> f64 {
        hull_diameter(&self.vertices)
    }
}

pub fn signed_area(v: &[P2]) -> f64 {
    let n = v.len();
    let mut s = 0.0;
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        s += a[0] * b[1] - a[1] * b[0];
    }
    0.5 * s
}

pub fn hull_diameter(points: &[P2]) -> f64 {
    let hull = convex_hull(points);
    let mut best = 0.0f64;
    for i in 0..hull.len() {
        for j in i + 1..hull.len() {
            best = best.max(dist(hull[i], hull[j]));
        }
    }
    best
}

/// Andrew's monotone chain.
pub fn convex_hull(points: &[P2]) -> Vec<P2> {
    let mut p: Vec<P2> = points.to_vec();
    p.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let cross = |o: P2, a: P2, b: P2| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut lower: Vec<P2> = Vec::new();
    for &q in &p {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], q) <= 0.0 {
            lower.pop();
        }
        lower.push(q);
    }
    let mut upper: Vec<P2> = Vec::new();
    for &q in p.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], q) <= 0.0 {
            upper.pop();
        }
        upper.push(q);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn orient(a: P2, b: P2, c: P2) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// True when closed segments `ab` and `cd` share a point.
fn segments_touch(a: P2, b: P2, c: P2, d: P2) -> bool {
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0)) && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0)) {
        return true;
    }
    let on = |p: P2, q: P2, r: P2| {
        r[0] >= p[0].min(q[0]) && r[0] <= p[0].max(q[0]) && r[1] >= p[1].min(q[1]) && r[1] <= p[1].max(q[1])
    };
    (o1 == 0.0 && on(a, b, c)) || (o2 == 0.0 && on(a, b, d)) || (o3 == 0.0 && on(c, d, a)) || (o4 == 0.0 && on(c, d, b))
}

/// Uniform grid over the bounding box; each cell lists the edges meeting it and
/// knows whether its center is inside. A query flips that status once per edge
/// crossed on the way from the cell center to the point.
#[derive(Debug, Clone)]
struct CellIndex {
    lo: P2,
    hi: P2,
    cell: f64,
    nx: usize,
    ny: usize,
    start: Vec<u32>,
    edges: Vec<u32>,
    center_inside: Vec<bool>,
}

impl CellIndex {
    fn build(v: &[P2]) -> Self {
        let n = v.len();
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        let mut perimeter = 0.0;
        for i in 0..n {
            for k in 0..2 {
                lo[k] = lo[k].min(v[i][k]);
                hi[k] = hi[k].max(v[i][k]);
            }
            perimeter += dist(v[i], v[(i + 1) % n]);
        }
        let (w, h) = (hi[0] - lo[0], hi[1] - lo[1]);
        // about two edges per occupied cell, capped at 2^22 cells
        let mean_edge = perimeter / n as f64;
        let mut cell = (2.0 * mean_edge).max((w * h / 4.0e6).sqrt()).max(w.max(h) / 4096.0);
        if cell <= 0.0 {
            cell = 1.0;
        }
        let nx = ((w / cell).ceil() as usize).max(1);
        let ny = ((h / cell).ceil() as usize).max(1);
        let mut lists: Vec<Vec<u32>> = vec![Vec::new(); nx * ny];
        let clampx = |x: f64| (((x - lo[0]) / cell).floor().max(0.0) as usize).min(nx - 1);
        let clampy = |y: f64| (((y - lo[1]) / cell).floor().max(0.0) as usize).min(ny - 1);
        for i in 0..n {
            let (a, b) = (v[i], v[(i + 1) % n]);
            // walk the cells of the edge's bounding box, keeping those the edge meets
            let (x0, x1) = (clampx(a[0].min(b[0])), clampx(a[0].max(b[0])));
            let (y0, y1) = (clampy(a[1].min(b[1])), clampy(a[1].max(b[1])));
            for cy in y0..=y1 {
                for cx in x0..=x1 {
                    let clo = [lo[0] + cx as f64 * cell, lo[1] + cy as f64 * cell];
                    if segment_meets_box(a, b, clo, cell) {
                        lists[cy * nx + cx].push(i as u32);
                    }
                }
            }
        }
        let mut start = Vec::with_capacity(nx * ny + 1);
        let mut edges = Vec::new();
        start.push(0u32);
        for l in &lists {
            edges.extend_from_slice(l);
            start.push(edges.len() as u32);
        }
        let mut idx = Self { lo, hi, cell, nx, ny, start, edges, center_inside: vec![false; nx * ny] };
        idx.center_inside = idx.classify_centers(v);
        idx
    }

    /// Inside flags of cell centers, one horizontal scanline per cell row.
    fn classify_centers(&self, v: &[P2]) -> Vec<bool> {
        let n = v.len();
        let mut rows: Vec<Vec<f64>> = vec![Vec::new(); self.ny];
        for i in 0..n {
            let (a, b) = (v[i], v[(i + 1) % n]);
            let (ylo, yhi) = (a[1].min(b[1]), a[1].max(b[1]));
            let r0 = ((ylo - self.lo[1]) / self.cell - 0.5).ceil().max(0.0) as usize;
            for (r, row) in rows.iter_mut().enumerate().skip(r0) {
                let y = self.lo[1] + (r as f64 + 0.5) * self.cell;
                if y >= yhi {
                    break;
                }
                if y < ylo {
                    continue;
                }
                // half-open rule: count edges with exactly one endpoint strictly above y
                if (a[1] > y) != (b[1] > y) {
                    row.push(a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1]));
                }
            }
        }
        let mut flags = vec![false; self.nx * self.ny];
        for (r, xs) in rows.iter_mut().enumerate() {
            xs.sort_by(|a, b| a.total_cmp(b));
            let mut k = 0;
            for c in 0..self.nx {
                let x = self.lo[0] + (c as f64 + 0.5) * self.cell;
                while k < xs.len() && xs[k] < x {
                    k += 1;
                }
                flags[r * self.nx + c] = k % 2 == 1;
            }
        }
        flags
    }

    fn contains(&self, v: &[P2], p: P2) -> bool {
        if p[0] < self.lo[0] || p[0] > self.hi[0] || p[1] < self.lo[1] || p[1] > self.hi[1] {
            return false;
        }
        let cx = (((p[0] - self.lo[0]) / self.cell) as usize).min(self.nx - 1);
        let cy = (((p[1] - self.lo[1]) / self.cell) as usize).min(self.ny - 1);
        let id = cy * self.nx + cx;
        let c = [self.lo[0] + (cx as f64 + 0.5) * self.cell, self.lo[1] + (cy as f64 + 0.5) * self.cell];
        let mut inside = self.center_inside[id];
        let n = v.len();
        for &e in &self.edges[self.start[id] as usize..self.start[id + 1] as usize] {
            let e = e as usize;
            let (a, b) = (v[e], v[(e + 1) % n]);
            if proper_cross(c, p, a, b) {
                inside = !inside;
            }
        }
        inside
    }

    /// Indices of two non-adjacent edges that touch, if any.
    fn first_crossing(&self, v: &[P2]) -> Option<(usize, usize)> {
        let n = v.len();
        for id in 0..self.nx * self.ny {
            let list = &self.edges[self.start[id] as usize..self.start[id + 1] as usize];
            for (x, &i) in list.iter().enumerate() {
                for &j in &list[x + 1..] {
                    let (i, j) = (i as usize, j as usize);
                    let adjacent = (i + 1) % n == j || (j + 1) % n == i;
                    if adjacent {
                        // neighbours may only share their common vertex
                        let (a, b, c, d) = if (i + 1) % n == j {
                            (v[i], v[j], v[j], v[(j + 1) % n])
                        } else {
                            (v[j], v[i], v[i], v[(i + 1) % n])
                        };
                        if orient(a, b, d) == 0.0 && (d[0] - c[0]) * (a[0] - b[0]) + (d[1] - c[1]) * (a[1] - b[1]) > 0.0 {
                            return Some((i.min(j), i.max(j)));
                        }
                        continue;
                    }
                    if segments_touch(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                        return Some((i.min(j), i.max(j)));
                    }
                }
            }
        }
        None
    }
}

/// Segment `pq` crosses segment `ab`, counting an endpoint of `ab` on `pq`
/// only on the side above the line (so each crossing is counted once).
fn proper_cross(p: P2, q: P2, a: P2, b: P2) -> bool {
    let o1 = orient(p, q, a);
    let o2 = orient(p, q, b);
    if (o1 > 0.0) == (o2 > 0.0) {
        return false;
    }
    let o3 = orient(a, b, p);
    let o4 = orient(a, b, q);
    (o3 > 0.0) != (o4 > 0.0)
}

fn segment_meets_box(a: P2, b: P2, lo: P2, size: f64) -> bool {
    // Liang–Barsky clipping against the closed box
    let hi = [lo[0] + size, lo[1] + size];
    let d = [b[0] - a[0], b[1] - a[1]];
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for k in 0..2 {
        if d[k] == 0.0 {
            if a[k] < lo[k] || a[k] > hi[k] {
                return false;
            }
        } else {
            let (mut u, mut w) = ((lo[k] - a[k]) / d[k], (hi[k] - a[k]) / d[k]);
            if u > w {
                std::mem::swap(&mut u, &mut w);
            }
            t0 = t0.max(u);
            t1 = t1.min(w);
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

/// Vertices of the level-`level` Koch snowflake built on an equilateral
/// triangle of side `side` with its base on the x-axis, counterclockwise.
pub fn koch_snowflake(side: f64, level: u32) -> Result<Vec<P2>> {
    if !(side > 0.0) || !side.is_finite() {
        return Err(Error::arg("Koch side must be positive"));
    }
    if level > 10 {
        return Err(Error::arg("Koch level above 10 is not supported"));
    }
    let h = side * 3f64.sqrt() / 2.0;
    let mut v: Vec<P2> = vec![[0.0, 0.0], [side, 0.0], [0.5 * side, h]];
    let (c, s) = ((-std::f64::consts::FRAC_PI_3).cos(), (-std::f64::consts::FRAC_PI_3).sin());
    for _ in 0..level {
        let n = v.len();
        let mut next = Vec::with_capacity(4 * n);
        for i in 0..n {
            let (a, b) = (v[i], v[(i + 1) % n]);
            let d = [(b[0] - a[0]) / 3.0, (b[1] - a[1]) / 3.0];
            let p1 = [a[0] + d[0], a[1] + d[1]];
            let p3 = [a[0] + 2.0 * d[0], a[1] + 2.0 * d[1]];
            // clockwise turn puts the bump outside a counterclockwise polygon
            let peak = [p1[0] + c * d[0] - s * d[1], p1[1] + s * d[0] + c * d[1]];
            next.extend_from_slice(&[a, p1, peak, p3]);
        }
        v = next;
    }
    Ok(v)
}
