//! Areas of `δ`-neighborhoods of boundaries by grid counting, and the box-counting
//! (Minkowski) dimension read off their decay.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{fit_loglog, LineFit};

use super::curve::{sample_pieces, P2};
use super::{Domain, DomainKind};

/// Closed polyline approximating `∂D` finely enough for a `δ`-tube.
fn boundary_segments(d: &Domain, delta: f64) -> Result<Vec<(P2, P2)>> {
    if let DomainKind::Polygon(p) = &d.kind {
        return Ok(p.edges().collect());
    }
    let bs = sample_pieces(&d.boundary_pieces()?, delta / 8.0)?;
    let n = bs.len();
    Ok((0..n).map(|i| (bs.points[i], bs.points[(i + 1) % n])).collect())
}

/// `x`-interval where the horizontal line at height `y` meets the capsule of radius `r` around `ab`.
fn capsule_row(a: P2, b: P2, r: f64, y: f64) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for c in [a, b] {
        let dy = y - c[1];
        if dy.abs() <= r {
            let w = (r * r - dy * dy).sqrt();
            lo = lo.min(c[0] - w);
            hi = hi.max(c[0] + w);
        }
    }
    let d = [b[0] - a[0], b[1] - a[1]];
    let len = d[0].hypot(d[1]);
    if len > 0.0 {
        let u = [d[0] / len, d[1] / len];
        let nrm = [-u[1], u[0]];
        // 0 ≤ (p − a)·u ≤ len and |(p − a)·n| ≤ r along p = (x, y)
        let mut xlo = f64::NEG_INFINITY;
        let mut xhi = f64::INFINITY;
        let mut ok = true;
        for (dir, min, max) in [(u, 0.0, len), (nrm, -r, r)] {
            let offset = (y - a[1]) * dir[1] - a[0] * dir[0];
            if dir[0].abs() < 1e-300 {
                if offset < min || offset > max {
                    ok = false;
                }
            } else {
                let (mut p, mut q) = ((min - offset) / dir[0], (max - offset) / dir[0]);
                if p > q {
                    std::mem::swap(&mut p, &mut q);
                }
                xlo = xlo.max(p);
                xhi = xhi.min(q);
            }
        }
        if ok && xlo <= xhi {
            lo = lo.min(xlo);
            hi = hi.max(xhi);
        }
    }
    (lo <= hi).then_some((lo, hi))
}

/// Area of the `δ`-neighborhood of a closed polyline, counting grid cells of
/// side `cell` whose centers lie within `δ` of some segment.
pub fn polyline_neighborhood_area(segments: &[(P2, P2)], delta: f64, cell: f64) -> Result<f64> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::arg(format!("δ must be positive, got {delta}")));
    }
    if !(cell > 0.0) || cell > delta / 4.0 {
        return Err(Error::Resolution { cell, limit: delta / 4.0 });
    }
    if segments.is_empty() {
        return Err(Error::arg("empty boundary"));
    }
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    let mut xmin = f64::INFINITY;
    for (a, b) in segments {
        ymin = ymin.min(a[1]).min(b[1]);
        ymax = ymax.max(a[1]).max(b[1]);
        xmin = xmin.min(a[0]).min(b[0]);
    }
    let y0 = ((ymin - delta) / cell).floor() * cell;
    let x0 = ((xmin - delta) / cell).floor() * cell;
    let rows = (((ymax + delta - y0) / cell).ceil() as usize) + 1;
    if rows > 50_000_000 {
        return Err(Error::Resolution { cell, limit: (ymax - ymin + 2.0 * delta) / 5e7 });
    }
    let mut spans: Vec<Vec<(i64, i64)>> = vec![Vec::new(); rows];
    for &(a, b) in segments {
        let (lo, hi) = (a[1].min(b[1]) - delta, a[1].max(b[1]) + delta);
        let r0 = ((lo - y0) / cell - 0.5).ceil().max(0.0) as usize;
        let r1 = (((hi - y0) / cell - 0.5).floor() as usize).min(rows - 1);
        for (r, row) in spans.iter_mut().enumerate().take(r1 + 1).skip(r0) {
            let y = y0 + (r as f64 + 0.5) * cell;
            if let Some((xl, xh)) = capsule_row(a, b, delta, y) {
                // cells whose centers x0 + (i + 1/2)·cell fall in [xl, xh]
                let i0 = ((xl - x0) / cell - 0.5).ceil() as i64;
                let i1 = ((xh - x0) / cell - 0.5).floor() as i64;
                if i0 <= i1 {
                    row.push((i0, i1));
                }
            }
        }
    }
    let mut count: u64 = 0;
    for row in &mut spans {
        if row.is_empty() {
            continue;
        }
        row.sort_unstable();
        let (mut s, mut e) = row[0];
        for &(a, b) in row.iter().skip(1) {
            if a > e + 1 {
                count += (e - s + 1) as u64;
                s = a;
                e = b;
            } else {
                e = e.max(b);
            }
        }
        count += (e - s + 1) as u64;
    }
    Ok(count as f64 * cell * cell)
}

/// Area of the `δ`-neighborhood of `∂D` on a grid of cell side `cell ≤ δ/4`.
pub fn neighborhood_area(d: &Domain, delta: f64, cell: f64) -> Result<f64> {
    if !(cell > 0.0) || cell > delta / 4.0 {
        return Err(Error::Resolution { cell, limit: delta / 4.0 });
    }
    polyline_neighborhood_area(&boundary_segments(d, delta)?, delta, cell)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MinkowskiFit {
    pub deltas: Vec<f64>,
    pub areas: Vec<f64>,
    pub fit: LineFit,
    /// `2 − slope` before clamping.
    pub raw_dimension: f64,
    /// Clamped to `[1, 2]`.
    pub dimension: f64,
}

/// Box-counting dimension of `∂D` from the slope of `log |(∂D)_δ|` against `log δ`.
///
/// Each area uses cells of side `δ/cells_per_delta`; `deltas` must span at least three decades.
pub fn minkowski_dimension(d: &Domain, deltas: &[f64], cells_per_delta: f64) -> Result<MinkowskiFit> {
    let usable: Vec<f64> = deltas.iter().cloned().filter(|x| *x > 0.0 && x.is_finite()).collect();
    if usable.len() < 3 {
        return Err(Error::InsufficientData(format!("{} usable δ values, need 3", usable.len())));
    }
    let lo = usable.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = usable.iter().cloned().fold(0.0, f64::max);
    if hi / lo < 1e3 * (1.0 - 1e-9) {
        return Err(Error::InsufficientData(format!("δ range spans {:.2} decades, need 3", (hi / lo).log10())));
    }
    if !(cells_per_delta >= 4.0) {
        return Err(Error::Resolution { cell: 1.0 / cells_per_delta, limit: 0.25 });
    }
    let segments = if let DomainKind::Polygon(p) = &d.kind {
        p.edges().collect()
    } else {
        boundary_segments(d, lo)?
    };
    let mut areas = Vec::with_capacity(usable.len());
    for &delta in &usable {
        areas.push(polyline_neighborhood_area(&segments, delta, delta / cells_per_delta)?);
    }
    let fit = fit_loglog(&usable, &areas)?;
    let raw = 2.0 - fit.slope;
    Ok(MinkowskiFit { deltas: usable, areas, fit, raw_dimension: raw, dimension: raw.clamp(1.0, 2.0) })
}
