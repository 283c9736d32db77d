//! Monte Carlo measure of `(D − t) Δ D`.
//!
//! A point `x` lies in the symmetric difference only if the segment from `x`
//! to `x + t` crosses `∂D`, so samples are drawn from the grid cells within
//! `|t|` of the boundary (cells of side `H ≥ 2|t|` that meet the boundary,
//! dilated by one cell) whenever that region is smaller than the bounding box.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::curve::{sample_pieces, P2};
use super::Domain;

/// Samples per independent random stream.
const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymDiff {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
    /// True when the value was computed without sampling.
    pub exact: bool,
}

/// Boundary cells keyed by dyadic scale.
type CellCache = Mutex<HashMap<i32, Arc<Vec<(i64, i64)>>>>;

/// Reusable sampler for one domain; caches the boundary cells per scale.
pub struct SymDiffSampler {
    domain: Domain,
    area: f64,
    bbox: (P2, P2),
    diameter: f64,
    cells: CellCache,
}

impl SymDiffSampler {
    pub fn new(domain: &Domain) -> Result<Self> {
        if domain.dim() != 2 {
            return Err(Error::Unsupported("symmetric differences are sampled for planar domains only".into()));
        }
        Ok(Self {
            bbox: domain.bbox()?,
            area: domain.area(),
            diameter: domain.diameter(),
            domain: domain.clone(),
            cells: Mutex::new(HashMap::new()),
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Cells of side `2^level` within one cell of the boundary, sorted.
    fn boundary_cells(&self, level: i32) -> Result<Arc<Vec<(i64, i64)>>> {
        if let Some(c) = self.cells.lock().unwrap().get(&level) {
            return Ok(c.clone());
        }
        let h = 2f64.powi(level);
        let bs = sample_pieces(&self.domain.boundary_pieces()?, h / 4.0)?;
        let mut cells: Vec<(i64, i64)> = Vec::with_capacity(bs.len() * 9);
        for p in &bs.points {
            let (i, j) = ((p[0] / h).floor() as i64, (p[1] / h).floor() as i64);
            for di in -1..=1 {
                for dj in -1..=1 {
                    cells.push((i + di, j + dj));
                }
            }
        }
        cells.sort_unstable();
        cells.dedup();
        let cells = Arc::new(cells);
        self.cells.lock().unwrap().insert(level, cells.clone());
        Ok(cells)
    }

    /// Estimate of `|(D − t) Δ D|` from `budget` samples.
    pub fn measure(&self, t: P2, budget: usize, seed: u64) -> Result<SymDiff> {
        if !t[0].is_finite() || !t[1].is_finite() {
            return Err(Error::arg("shift must be finite"));
        }
        if budget < 10_000 {
            return Err(Error::arg(format!("Monte Carlo budget must be at least 10^4, got {budget}")));
        }
        let len = t[0].hypot(t[1]);
        if len == 0.0 {
            return Ok(SymDiff { value: 0.0, std_error: 0.0, samples: 0, exact: true });
        }
        let (lo, hi) = self.bbox;
        let disjoint = t[0].abs() >= hi[0] - lo[0] || t[1].abs() >= hi[1] - lo[1];
        if disjoint || len >= self.diameter {
            return Ok(SymDiff { value: 2.0 * self.area, std_error: 0.0, samples: 0, exact: true });
        }
        // union of the boxes of D and D − t
        let ulo = [lo[0].min(lo[0] - t[0]), lo[1].min(lo[1] - t[1])];
        let uhi = [hi[0].max(hi[0] - t[0]), hi[1].max(hi[1] - t[1])];
        let box_area = (uhi[0] - ulo[0]) * (uhi[1] - ulo[1]);
        let level = (2.0 * len).log2().ceil() as i32;
        let h = 2f64.powi(level);
        let cells = self.boundary_cells(level)?;
        let tube_area = cells.len() as f64 * h * h;
        let region = if tube_area < box_area { Region::Cells(&cells, h) } else { Region::Box(ulo, uhi) };
        let region_area = tube_area.min(box_area);
        let chunks = budget.div_ceil(CHUNK);
        let hits: Vec<usize> = (0..chunks)
            .into_par_iter()
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(k as u64);
                let n = if k + 1 == chunks { budget - k * CHUNK } else { CHUNK };
                let mut count = 0usize;
                for _ in 0..n {
                    let x = region.sample(&mut rng);
                    if self.domain.contains(x) != self.domain.contains([x[0] + t[0], x[1] + t[1]]) {
                        count += 1;
                    }
                }
                count
            })
            .collect();
        let total: usize = hits.iter().sum();
        let p = total as f64 / budget as f64;
        Ok(SymDiff {
            value: p * region_area,
            std_error: region_area * (p * (1.0 - p) / budget as f64).sqrt(),
            samples: budget,
            exact: false,
        })
    }
}

enum Region<'a> {
    Cells(&'a [(i64, i64)], f64),
    Box(P2, P2),
}

impl Region<'_> {
    fn sample(&self, rng: &mut ChaCha8Rng) -> P2 {
        match self {
            Region::Cells(cells, h) => {
                let (i, j) = cells[rng.gen_range(0..cells.len())];
                [(i as f64 + rng.gen::<f64>()) * h, (j as f64 + rng.gen::<f64>()) * h]
            }
            Region::Box(lo, hi) => {
                [lo[0] + (hi[0] - lo[0]) * rng.gen::<f64>(), lo[1] + (hi[1] - lo[1]) * rng.gen::<f64>()]
            }
        }
    }
}

/// Monte Carlo estimate of `|(D − t) Δ D|` with its standard error.
pub fn symmetric_difference_measure(d: &Domain, t: P2, budget: usize, seed: u64) -> Result<SymDiff> {
    SymDiffSampler::new(d)?.measure(t, budget, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainSpec;
    use std::f64::consts::PI;

    #[test]
    fn disk_lens_oracle() {
        let d = DomainSpec::unit_disk().build().unwrap();
        let r = symmetric_difference_measure(&d, [0.6, 0.8], 200_000, 42).unwrap();
        let lens = 2.0 * (0.5f64).acos() - 0.5 * 3f64.sqrt();
        let exact = 2.0 * (PI - lens);
        assert!((exact - 3.8264).abs() < 1e-4);
        assert!((r.value - exact).abs() < 4.0 * r.std_error + 1e-3, "{r:?} vs {exact}");
    }

    #[test]
    fn trivial_shifts() {
        let d = DomainSpec::unit_disk().build().unwrap();
        assert_eq!(symmetric_difference_measure(&d, [0.0, 0.0], 10_000, 1).unwrap().value, 0.0);
        let far = symmetric_difference_measure(&d, [2.5, 0.0], 10_000, 1).unwrap();
        assert!(far.exact && (far.value - 2.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn small_shift_square_and_reproducibility() {
        let d = DomainSpec::unit_square().build().unwrap();
        let t = [0.01, -0.003];
        let a = symmetric_difference_measure(&d, t, 100_000, 7).unwrap();
        let b = symmetric_difference_measure(&d, t, 100_000, 7).unwrap();
        assert_eq!(a, b);
        let exact = 2.0 * (0.01 + 0.003 - 0.01 * 0.003);
        assert!((a.value - exact).abs() < 4.0 * a.std_error, "{a:?} vs {exact}");
        assert!(a.std_error < 0.02 * exact);
    }

    #[test]
    fn rejects_small_budgets() {
        let d = DomainSpec::unit_square().build().unwrap();
        assert!(symmetric_difference_measure(&d, [0.1, 0.0], 100, 1).is_err());
    }
}
