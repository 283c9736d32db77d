//! Domains in the plane (and rectangles in any dimension): description,
//! membership, boundary pieces and the geometric measurements built on them.

mod assembly;
mod curve;
mod montecarlo;
mod polygon;
mod tube;

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moduli::ModulusSpec;
use crate::profile::{Profile, ProfileSpec, DEFAULT_RAMP_DEPTH};
use crate::quad::{integrate, Adaptive};

pub use assembly::{build_theorem3_domain, normal_modulus_fit, Assembly, Junction, JunctionKind, JunctionReport, StraightnessScan};
pub use curve::{
    check_closed, circle_pieces, min_chord_deviation, normal_modulus, normal_modulus_multiscale, sample_pieces,
    Affine2, BoundarySampling, Piece, Shape, P2,
};
pub use montecarlo::{symmetric_difference_measure, SymDiff, SymDiffSampler};
pub use polygon::{convex_hull, koch_snowflake, signed_area, Polygon};
pub use tube::{minkowski_dimension, neighborhood_area, MinkowskiFit};

/// Tagged description of a domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    /// `origin + [0, w_1] × … × [0, w_n]`.
    Rectangle {
        widths: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        origin: Option<Vec<f64>>,
    },
    Disk {
        #[serde(default = "one")]
        radius: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    /// Vertices listed counterclockwise.
    Polygon { vertices: Vec<[f64; 2]> },
    /// Koch snowflake prefractal on a triangle of side `side`.
    Koch {
        #[serde(default = "one")]
        side: f64,
        level: u32,
    },
    /// `{(t, y) : c < t < b, 0 < y < φ(t)}`.
    Special { interval: [f64; 2], profile: ProfileSpec },
    /// `{Q x + shift : x ∈ base}`.
    Affine {
        base: Box<DomainSpec>,
        matrix: Vec<Vec<f64>>,
        #[serde(default)]
        shift: Vec<f64>,
    },
    /// Square of side `2(b − c)` with a mirrored arch of the surrogate profile glued to each side.
    Assembled {
        modulus: ModulusSpec,
        eta: f64,
        #[serde(default = "unit_interval")]
        interval: [f64; 2],
        #[serde(default = "ramp_depth")]
        depth: u32,
    },
}

fn one() -> f64 {
    1.0
}

fn unit_interval() -> [f64; 2] {
    [0.0, 1.0]
}

fn ramp_depth() -> u32 {
    DEFAULT_RAMP_DEPTH
}

impl DomainSpec {
    pub fn unit_square() -> Self {
        DomainSpec::Rectangle { widths: vec![1.0, 1.0], origin: None }
    }

    pub fn unit_disk() -> Self {
        DomainSpec::Disk { radius: 1.0, center: [0.0, 0.0] }
    }

    pub fn build(&self) -> Result<Domain> {
        let kind = match self {
            DomainSpec::Rectangle { widths, origin } => {
                if widths.len() < 2 {
                    return Err(Error::arg("rectangle needs at least two widths"));
                }
                if widths.iter().any(|w| !w.is_finite() || *w < 0.0) {
                    return Err(Error::arg("rectangle widths must be finite and nonnegative"));
                }
                if widths.contains(&0.0) {
                    return Err(Error::DegenerateDomain("rectangle has a zero width".into()));
                }
                let origin = origin.clone().unwrap_or_else(|| vec![0.0; widths.len()]);
                if origin.len() != widths.len() || origin.iter().any(|x| !x.is_finite()) {
                    return Err(Error::arg("rectangle origin must match the dimension and be finite"));
                }
                DomainKind::Rectangle { origin, widths: widths.clone() }
            }
            DomainSpec::Disk { radius, center } => {
                if !radius.is_finite() || *radius < 0.0 || !center.iter().all(|x| x.is_finite()) {
                    return Err(Error::arg("disk needs a finite nonnegative radius and finite center"));
                }
                if *radius == 0.0 {
                    return Err(Error::DegenerateDomain("disk of radius zero".into()));
                }
                DomainKind::Disk { center: *center, radius: *radius }
            }
            DomainSpec::Polygon { vertices } => DomainKind::Polygon(Arc::new(Polygon::new(vertices.clone())?)),
            DomainSpec::Koch { side, level } => {
                DomainKind::Polygon(Arc::new(Polygon::new(koch_snowflake(*side, *level)?)?))
            }
            DomainSpec::Special { interval, profile } => {
                let pr = Arc::new(profile.build()?);
                special_kind(interval[0], interval[1], pr)?
            }
            DomainSpec::Affine { base, matrix, shift } => {
                let base = base.build()?;
                affine_kind(base, matrix.clone(), shift.clone())?
            }
            DomainSpec::Assembled { modulus, eta, interval, depth } => {
                let m = modulus.build()?;
                let pr = crate::profile::surrogate_profile(&m, (interval[0], interval[1]), *eta, *depth)?;
                let (asm, _) = build_theorem3_domain(&pr, 1e-6)?;
                DomainKind::Assembled(Arc::new(asm))
            }
        };
        Ok(Domain { kind, spec: Some(self.clone()) })
    }
}

#[derive(Debug, Clone)]
pub enum DomainKind {
    Rectangle { origin: Vec<f64>, widths: Vec<f64> },
    Disk { center: P2, radius: f64 },
    Polygon(Arc<Polygon>),
    Special { c: f64, b: f64, profile: Arc<Profile>, top: f64 },
    Affine { base: Box<Domain>, q: Vec<Vec<f64>>, qinv: Vec<Vec<f64>>, det: f64, shift: Vec<f64> },
    Assembled(Arc<Assembly>),
}

/// A validated domain.
#[derive(Debug, Clone)]
pub struct Domain {
    pub kind: DomainKind,
    spec: Option<DomainSpec>,
}

fn special_kind(c: f64, b: f64, profile: Arc<Profile>) -> Result<DomainKind> {
    if !(b > c) || !c.is_finite() || !b.is_finite() {
        return Err(Error::arg(format!("special domain interval needs c < b, got ({c}, {b})")));
    }
    let n = 2048;
    let mut top = 0.0f64;
    for i in 0..=n {
        let t = c + (b - c) * i as f64 / n as f64;
        let v = profile.value(t);
        if !v.is_finite() {
            return Err(Error::arg(format!("profile is not finite at t = {t}")));
        }
        if i > 0 && i < n && !(v > 0.0) {
            return Err(Error::DegenerateDomain(format!("profile is not positive at t = {t}")));
        }
        top = top.max(v);
    }
    // margin for the largest possible overshoot between grid points
    top += profile.max_abs_derivative() * (b - c) / n as f64;
    Ok(DomainKind::Special { c, b, profile, top })
}

fn affine_kind(base: Domain, q: Vec<Vec<f64>>, shift: Vec<f64>) -> Result<DomainKind> {
    let n = base.dim();
    if q.len() != n || q.iter().any(|r| r.len() != n) {
        return Err(Error::arg(format!("affine matrix must be {n}×{n}")));
    }
    if q.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::arg("affine matrix must be finite"));
    }
    let shift = if shift.is_empty() { vec![0.0; n] } else { shift };
    if shift.len() != n || shift.iter().any(|x| !x.is_finite()) {
        return Err(Error::arg(format!("affine shift must have {n} finite entries")));
    }
    let (qinv, det) = invert(&q).ok_or_else(|| Error::arg("affine matrix is singular"))?;
    Ok(DomainKind::Affine { base: Box::new(base), q, qinv, det, shift })
}

/// Gauss–Jordan inverse with partial pivoting; `None` when singular.
pub(crate) fn invert(a: &[Vec<f64>]) -> Option<(Vec<Vec<f64>>, f64)> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut inv: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut det = 1.0;
    let scale = a.iter().flatten().fold(0.0f64, |s, x| s.max(x.abs()));
    if scale == 0.0 {
        return None;
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() <= 1e-14 * scale {
            return None;
        }
        if piv != col {
            m.swap(piv, col);
            inv.swap(piv, col);
            det = -det;
        }
        let p = m[col][col];
        det *= p;
        for j in 0..n {
            m[col][j] /= p;
            inv[col][j] /= p;
        }
        for i in 0..n {
            if i != col {
                let f = m[i][col];
                if f != 0.0 {
                    for j in 0..n {
                        m[i][j] -= f * m[col][j];
                        inv[i][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    Some((inv, det))
}

impl Domain {
    pub fn spec(&self) -> Option<&DomainSpec> {
        self.spec.as_ref()
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            DomainKind::Rectangle { widths, .. } => widths.len(),
            DomainKind::Affine { base, .. } => base.dim(),
            _ => 2,
        }
    }

    /// True when the domain is built from the surrogate profile, whose integrability is exploratory.
    pub fn is_surrogate(&self) -> bool {
        match &self.kind {
            DomainKind::Assembled(_) => true,
            DomainKind::Special { profile, .. } => profile.modulus().is_some(),
            DomainKind::Affine { base, .. } => base.is_surrogate(),
            _ => false,
        }
    }

    pub fn area(&self) -> f64 {
        match &self.kind {
            DomainKind::Rectangle { widths, .. } => widths.iter().product(),
            DomainKind::Disk { radius, .. } => PI * radius * radius,
            DomainKind::Polygon(p) => p.area(),
            DomainKind::Special { c, b, profile, .. } => profile_area(profile, *c, *b),
            DomainKind::Affine { base, det, .. } => det.abs() * base.area(),
            DomainKind::Assembled(a) => a.area(),
        }
    }

    fn require_planar(&self) -> Result<()> {
        if self.dim() == 2 {
            Ok(())
        } else {
            Err(Error::Unsupported(format!("operation needs a planar domain, this one has dimension {}", self.dim())))
        }
    }

    /// Axis-aligned box containing the closure of the domain.
    pub fn bbox(&self) -> Result<(P2, P2)> {
        self.require_planar()?;
        Ok(match &self.kind {
            DomainKind::Rectangle { origin, widths } => {
                ([origin[0], origin[1]], [origin[0] + widths[0], origin[1] + widths[1]])
            }
            DomainKind::Disk { center, radius } => {
                ([center[0] - radius, center[1] - radius], [center[0] + radius, center[1] + radius])
            }
            DomainKind::Polygon(p) => p.bbox(),
            DomainKind::Special { c, b, top, profile } => {
                let bottom = profile.value(*c).min(profile.value(*b)).min(0.0);
                ([*c, bottom], [*b, *top])
            }
            DomainKind::Affine { base, q, shift, .. } => {
                let (lo, hi) = base.bbox()?;
                let mut out_lo = [f64::INFINITY; 2];
                let mut out_hi = [f64::NEG_INFINITY; 2];
                for corner in [[lo[0], lo[1]], [hi[0], lo[1]], [lo[0], hi[1]], [hi[0], hi[1]]] {
                    for k in 0..2 {
                        let v = q[k][0] * corner[0] + q[k][1] * corner[1] + shift[k];
                        out_lo[k] = out_lo[k].min(v);
                        out_hi[k] = out_hi[k].max(v);
                    }
                }
                (out_lo, out_hi)
            }
            DomainKind::Assembled(a) => a.bbox(),
        })
    }

    /// Membership of a point of the plane (boundary points may go either way).
    pub fn contains(&self, p: P2) -> bool {
        match &self.kind {
            DomainKind::Rectangle { origin, widths } => {
                widths.len() == 2
                    && p[0] > origin[0]
                    && p[0] < origin[0] + widths[0]
                    && p[1] > origin[1]
                    && p[1] < origin[1] + widths[1]
            }
            DomainKind::Disk { center, radius } => {
                let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
                dx * dx + dy * dy < radius * radius
            }
            DomainKind::Polygon(poly) => poly.contains(p),
            DomainKind::Special { c, b, profile, .. } => {
                p[0] > *c && p[0] < *b && p[1] > 0.0 && p[1] < profile.value(p[0])
            }
            DomainKind::Affine { base, qinv, shift, .. } => {
                if qinv.len() != 2 {
                    return false;
                }
                let d = [p[0] - shift[0], p[1] - shift[1]];
                base.contains([qinv[0][0] * d[0] + qinv[0][1] * d[1], qinv[1][0] * d[0] + qinv[1][1] * d[1]])
            }
            DomainKind::Assembled(a) => a.contains(p),
        }
    }

    /// Counterclockwise boundary pieces of a planar domain.
    pub fn boundary_pieces(&self) -> Result<Vec<Piece>> {
        self.require_planar()?;
        Ok(match &self.kind {
            DomainKind::Rectangle { origin, widths } => {
                let (x0, y0, x1, y1) = (origin[0], origin[1], origin[0] + widths[0], origin[1] + widths[1]);
                let v = [[x0, y0], [x1, y0], [x1, y1], [x0, y1]];
                (0..4).map(|i| Piece::segment(v[i], v[(i + 1) % 4])).collect()
            }
            DomainKind::Disk { center, radius } => circle_pieces(*center, *radius),
            DomainKind::Polygon(p) => p.edges().map(|(a, b)| Piece::segment(a, b)).collect(),
            DomainKind::Special { c, b, profile, .. } => {
                let (c, b) = (*c, *b);
                let (hb, hc) = (profile.value(b), profile.value(c));
                let mut out = vec![Piece::segment([c, 0.0], [b, 0.0])];
                if hb != 0.0 {
                    out.push(Piece::segment([b, 0.0], [b, hb]));
                }
                out.push(Piece::graph(profile.clone(), b, c, Affine2::IDENTITY));
                if hc != 0.0 {
                    out.push(Piece::segment([c, hc], [c, 0.0]));
                }
                out
            }
            DomainKind::Affine { base, q, det, shift, .. } => {
                let map = Affine2 { m: [[q[0][0], q[0][1]], [q[1][0], q[1][1]]], b: [shift[0], shift[1]] };
                let mut pieces: Vec<Piece> = base.boundary_pieces()?.iter().map(|p| p.mapped(&map)).collect();
                if *det < 0.0 {
                    // a reflection reverses orientation; run every piece backwards
                    pieces.reverse();
                    for p in &mut pieces {
                        *p = reverse_piece(p);
                    }
                }
                pieces
            }
            DomainKind::Assembled(a) => a.pieces(),
        })
    }

    pub fn sample_boundary(&self, step: f64) -> Result<BoundarySampling> {
        sample_pieces(&self.boundary_pieces()?, step)
    }

    /// Largest distance between two points of the domain.
    pub fn diameter(&self) -> f64 {
        match &self.kind {
            DomainKind::Rectangle { widths, .. } => widths.iter().map(|w| w * w).sum::<f64>().sqrt(),
            DomainKind::Disk { radius, .. } => 2.0 * radius,
            DomainKind::Polygon(p) => p.diameter(),
            _ => match self.boundary_pieces().and_then(|p| sample_pieces(&p, 1e-3 * self.bbox_diag())) {
                Ok(bs) => polygon::hull_diameter(&bs.points) * (1.0 + 1e-6),
                Err(_) => self.bbox_diag(),
            },
        }
    }

    fn bbox_diag(&self) -> f64 {
        match self.bbox() {
            Ok((lo, hi)) => (hi[0] - lo[0]).hypot(hi[1] - lo[1]),
            Err(_) => f64::INFINITY,
        }
    }
}

fn reverse_piece(p: &Piece) -> Piece {
    let shape = match &p.shape {
        Shape::Segment { a, b } => Shape::Segment { a: *b, b: *a },
        Shape::Arc { center, radius, theta0, theta1 } => {
            Shape::Arc { center: *center, radius: *radius, theta0: *theta1, theta1: *theta0 }
        }
        Shape::Graph { profile, t0, t1 } => Shape::Graph { profile: profile.clone(), t0: *t1, t1: *t0 },
    };
    Piece { shape, map: p.map }
}

fn profile_area(pr: &Profile, c: f64, b: f64) -> f64 {
    let panels = ((pr.effective_bandwidth(1e-14) * (b - c) / PI).ceil() as usize).clamp(1, 1 << 16);
    let opts = Adaptive::tol(1e-13, 1e-13).panels(panels);
    match integrate(|t| pr.value(t), c, b, opts) {
        Ok(r) => r.value,
        Err(_) => crate::quad::GaussRule::new(20).composite(c, b, panels * 4, |t| pr.value(t)),
    }
}

/// Wraps `d` as its image under `x ↦ Q x + b`.
pub fn affine_image(d: &DomainSpec, q: Vec<Vec<f64>>, b: Vec<f64>) -> Result<DomainSpec> {
    let spec = DomainSpec::Affine { base: Box::new(d.clone()), matrix: q, shift: b };
    spec.build()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let text = r#"{"shape":"special","interval":[0,1],"profile":{"kind":"linear","slope":1}}"#;
        let spec: DomainSpec = serde_json::from_str(text).unwrap();
        let d = spec.build().unwrap();
        assert!((d.area() - 0.5).abs() < 1e-13);
        let back: DomainSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
        let disk: DomainSpec = serde_json::from_str(r#"{"shape":"disk","radius":1.0}"#).unwrap();
        assert_eq!(disk, DomainSpec::unit_disk());
    }

    #[test]
    fn special_normals() {
        let flat = DomainSpec::Special { interval: [0.0, 1.0], profile: ProfileSpec::Constant { value: 1.0 } };
        let bs = flat.build().unwrap().sample_boundary(0.01).unwrap();
        for (p, n) in bs.points.iter().zip(&bs.normals) {
            if p[1] == 1.0 && p[0] > 0.0 && p[0] < 1.0 {
                assert!(n[0].abs() < 1e-15 && (n[1] - 1.0).abs() < 1e-15);
            }
        }
        let tri = DomainSpec::Special { interval: [0.0, 1.0], profile: ProfileSpec::Linear { slope: 1.0, intercept: 0.0 } };
        let d = tri.build().unwrap();
        let pieces = d.boundary_pieces().unwrap();
        let r = 0.5f64.sqrt();
        let graph = pieces.iter().find(|p| matches!(p.shape, Shape::Graph { .. })).unwrap();
        let n = graph.normal(0.5);
        assert!((n[0] + r).abs() < 1e-15 && (n[1] - r).abs() < 1e-15);
    }

    #[test]
    fn affine_rejects_singular_and_keeps_orientation() {
        assert!(affine_image(&DomainSpec::unit_disk(), vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![]).is_err());
        let refl = affine_image(&DomainSpec::unit_square(), vec![vec![-1.0, 0.0], vec![0.0, 1.0]], vec![]).unwrap();
        let d = refl.build().unwrap();
        assert!((d.area() - 1.0).abs() < 1e-15);
        let pieces = d.boundary_pieces().unwrap();
        let verts: Vec<P2> = pieces.iter().map(|p| p.point(0.0)).collect();
        assert!(signed_area(&verts) > 0.0);
        assert!(d.contains([-0.5, 0.5]) && !d.contains([0.5, 0.5]));
    }

    #[test]
    fn degenerate_domains_are_rejected() {
        let zero = DomainSpec::Rectangle { widths: vec![1.0, 0.0], origin: None };
        assert!(matches!(zero.build(), Err(Error::DegenerateDomain(_))));
        let disk = DomainSpec::Disk { radius: 0.0, center: [0.0, 0.0] };
        assert!(matches!(disk.build(), Err(Error::DegenerateDomain(_))));
    }

    #[test]
    fn diameters() {
        assert_eq!(DomainSpec::unit_disk().build().unwrap().diameter(), 2.0);
        let sq = DomainSpec::unit_square().build().unwrap();
        assert!((sq.diameter() - 2f64.sqrt()).abs() < 1e-15);
        let tri = DomainSpec::Special { interval: [0.0, 1.0], profile: ProfileSpec::Linear { slope: 1.0, intercept: 0.0 } };
        assert!((tri.build().unwrap().diameter() - 2f64.sqrt()).abs() < 1e-5);
    }
}
