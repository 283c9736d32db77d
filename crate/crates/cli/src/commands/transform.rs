use std::f64::consts::PI;

use clap::Args;
use indicatrix::spectra::{cross_check, supported_engines, Engine, EngineOptions, Evaluator, Layout, SpectrumGrid};
use serde::Serialize;
use serde_json::json;

use super::{config, load_domain, params, OutDir, Run};
use crate::failure::Failure;
use crate::output::{Artifacts, DEFAULT_ANGULAR, DEFAULT_GRID};
use crate::parse;

/// Half-width, in frequency steps, of the CSV window written for a full grid spectrum.
const CSV_WINDOW: i64 = 64;
/// Frequencies of the engine cross-check: a golden-angle spiral inside `|ξ| ≤ CHECK_RADIUS`.
const CHECK_POINTS: usize = 50;
const CHECK_RADIUS: f64 = 32.0;

#[derive(Args, Serialize)]
pub struct TransformArgs {
    /// Domain JSON file, or inline JSON.
    #[arg(long)]
    #[serde(skip)]
    domain: String,
    /// closed | boundary | grid | lemma1; defaults to the most accurate engine available.
    #[arg(long)]
    engine: Option<String>,
    /// Cells per axis of the grid engine.
    #[arg(long, default_value_t = DEFAULT_GRID)]
    grid: usize,
    /// Absolute quadrature tolerance of the boundary and lemma1 engines.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Radii `a..b` of a polar layout.
    #[arg(long)]
    radial: Option<String>,
    /// Number of equally spaced radii in the polar layout.
    #[arg(long, default_value_t = 65)]
    radii: usize,
    /// Rays of the polar layout.
    #[arg(long, default_value_t = DEFAULT_ANGULAR)]
    angles: usize,
    /// Explicit frequency `u1,u2`; repeatable.
    #[arg(long)]
    xi: Vec<String>,
    /// First frequency component of a single point (with --lambda).
    #[arg(long, allow_negative_numbers = true)]
    u: Option<f64>,
    /// Second frequency component of a single point (with --u).
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    /// Skip the comparison between engines.
    #[arg(long)]
    no_cross_check: bool,
    #[command(flatten)]
    #[serde(skip)]
    out: OutDir,
}

fn spiral() -> Vec<Vec<f64>> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..CHECK_POINTS)
        .map(|i| {
            let r = CHECK_RADIUS * ((i as f64 + 0.5) / CHECK_POINTS as f64).sqrt();
            let th = golden * i as f64;
            vec![r * th.cos(), r * th.sin()]
        })
        .collect()
}

/// The centred `|k| ≤ CSV_WINDOW` block of a Cartesian spectrum.
fn window(g: &SpectrumGrid) -> SpectrumGrid {
    let Layout::Cartesian { step, .. } = g.layout else { return g.clone() };
    let mut points = Vec::new();
    let mut values = Vec::new();
    for k2 in -CSV_WINDOW..=CSV_WINDOW {
        for k1 in -CSV_WINDOW..=CSV_WINDOW {
            if let Some(v) = g.at(k1, k2) {
                points.push(vec![k1 as f64 * step[0], k2 as f64 * step[1]]);
                values.push(v);
            }
        }
    }
    SpectrumGrid { layout: Layout::Points { points }, values, engine: g.engine, convention: g.convention.clone(), error: g.error }
}

pub fn run(a: TransformArgs) -> Result<Run, Failure> {
    let (d, raw) = load_domain(&a.domain)?;
    let supported = supported_engines(&d);
    let engine: Engine = match &a.engine {
        Some(name) => name.parse()?,
        None => *supported.first().ok_or_else(|| Failure::Mismatch("no engine handles this domain".into()))?,
    };
    if a.grid < 8 || a.grid > 1 << 14 {
        return Err(Failure::config(format!("grid must lie in [8, 16384], got {}", a.grid)));
    }
    if !(a.tol > 0.0) {
        return Err(Failure::config(format!("tolerance must be positive, got {}", a.tol)));
    }
    let opts = EngineOptions { grid: a.grid, tol: a.tol };
    let ev = Evaluator::new(&d, engine, opts)?;

    let mut p = params(&a);
    p["engine"] = json!(engine.name());
    let mut arts = Artifacts::new(config("transform", p, json!({ "domain": raw })));

    let spectrum = if !a.xi.is_empty() {
        let pts: Vec<Vec<f64>> = a.xi.iter().map(|s| parse::pair(s).map(|x| x.to_vec())).collect::<Result<_, _>>()?;
        ev.points(&pts)?
    } else if a.u.is_some() || a.lambda.is_some() {
        match (a.u, a.lambda) {
            (Some(u), Some(l)) if u.is_finite() && l.is_finite() => ev.points(&[vec![u, l]])?,
            _ => return Err(Failure::config("--u and --lambda must be given together and be finite")),
        }
    } else if let Some(r) = &a.radial {
        ev.polar(a.angles, &radii(parse::real_range(r)?, a.radii)?)?
    } else if engine == Engine::Grid {
        ev.raster().expect("grid engine owns a raster").spectrum()
    } else {
        ev.polar(a.angles, &radii((0.0, 64.0), a.radii)?)?
    };

    if matches!(spectrum.layout, Layout::Cartesian { .. }) {
        let (header, bytes) = spectrum.to_binary();
        arts.raw("spectrum.bin", bytes);
        arts.set("binary", header);
        arts.set("parseval_sum", spectrum.parseval_sum());
        arts.set("csv_window", CSV_WINDOW);
        arts.csv("spectrum.csv", &window(&spectrum).to_csv());
    } else {
        arts.csv("spectrum.csv", &spectrum.to_csv());
    }
    arts.set("engine", engine.name());
    arts.set("supported_engines", supported.iter().map(|e| e.name()).collect::<Vec<_>>());
    arts.set("area", d.area());
    arts.set("surrogate", d.is_surrogate());
    arts.set("points", spectrum.len());
    arts.set("error_bound", spectrum.error);
    arts.set("convention", &spectrum.convention);
    if spectrum.len() == 1 {
        let v = spectrum.values[0];
        arts.set("value", json!({ "xi": spectrum.frequency(0), "re": v.re, "im": v.im, "abs": v.norm() }));
    }

    let mut check = None;
    if supported.len() >= 2 && !a.no_cross_check {
        let cc = cross_check(&d, &spiral(), opts)?;
        if !cc.passed {
            check = Some(Failure::Mismatch(format!(
                "engines disagree: max difference {:e} is {:.3} times the stated tolerance",
                cc.max_difference, cc.max_ratio
            )));
        }
        arts.set("cross_check", json!({ "radius": CHECK_RADIUS, "result": cc }));
    }
    Ok(Run { artifacts: arts, out: a.out.out, check })
}

fn radii((lo, hi): (f64, f64), count: usize) -> Result<Vec<f64>, Failure> {
    if lo < 0.0 || count == 0 || (count == 1 && hi > lo) {
        return Err(Failure::config(format!("radial range {lo}..{hi} with {count} radii is not usable")));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect())
}
