use clap::Args;
use indicatrix::geometry::{build_theorem3_domain, normal_modulus_fit, sample_pieces};
use indicatrix::profile::surrogate_profile;
use indicatrix::{DomainSpec, ModulusSpec};
use serde::Serialize;
use serde_json::{json, Value};

use super::{config, params, OutDir, Run};
use crate::failure::Failure;
use crate::output::Artifacts;
use crate::parse;

/// Largest accepted gap between the fitted normal-modulus exponent and the configured α.
const EXPONENT_TOLERANCE: f64 = 0.05;

#[derive(Args, Serialize)]
pub struct ConstructArgs {
    /// Modulus JSON file, or inline JSON; overrides --alpha.
    #[arg(long)]
    #[serde(skip)]
    modulus: Option<String>,
    /// Exponent of the power modulus δ^α.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Wiggle amplitude, below 1/2.
    #[arg(long, default_value_t = 0.25)]
    eta: f64,
    /// Ramp interval `c,b`.
    #[arg(long, default_value = "0,1")]
    interval: String,
    /// Lacunary terms of the wiggle.
    #[arg(long, default_value_t = 24)]
    depth: u32,
    /// Junction tolerance on gaps and tangent angles.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Arc-length window of the straightness scan.
    #[arg(long, default_value_t = 0.05)]
    window: f64,
    /// Sampling step of the straightness scan and of the SVG path.
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
    /// δ ladder of the normal-modulus fit as `lo,hi,count`.
    #[arg(long, default_value = "1e-5,1e-2,7")]
    deltas: String,
    /// Boundary samples per δ in the normal-modulus fit.
    #[arg(long, default_value_t = 4.0)]
    oversample: f64,
    #[command(flatten)]
    #[serde(skip)]
    out: OutDir,
}

fn svg(path: &str, header: &str, lo: [f64; 2], hi: [f64; 2]) -> String {
    let pad = 0.05 * (hi[0] - lo[0]).max(hi[1] - lo[1]);
    format!(
        "<!-- {header} -->\n<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\">\n<path fill=\"none\" stroke=\"black\" stroke-width=\"{}\" d=\"{path}\"/>\n</svg>\n",
        lo[0] - pad,
        lo[1] - pad,
        hi[0] - lo[0] + 2.0 * pad,
        hi[1] - lo[1] + 2.0 * pad,
        pad / 25.0
    )
}

pub fn run(a: ConstructArgs) -> Result<Run, Failure> {
    let (spec, raw): (ModulusSpec, Value) = match &a.modulus {
        Some(arg) => parse::input(arg, "modulus")?,
        None => {
            let s = ModulusSpec::power(a.alpha);
            let raw = serde_json::to_value(&s).expect("modulus serializes");
            (s, raw)
        }
    };
    let m = spec.build()?;
    let [c, b] = parse::pair(&a.interval)?;
    let deltas = parse::ladder(&a.deltas)?;
    for (name, v) in [("tol", a.tol), ("window", a.window), ("step", a.step), ("oversample", a.oversample)] {
        if !(v > 0.0) {
            return Err(Failure::config(format!("--{name} must be positive, got {v}")));
        }
    }
    if a.step > a.window / 8.0 {
        return Err(Failure::config("--step must be at most an eighth of --window"));
    }
    let pr = surrogate_profile(&m, (c, b), a.eta, a.depth)?;
    let (asm, junctions) = build_theorem3_domain(&pr, a.tol)?;
    let straight = asm.straightness(a.window, a.step)?;
    let pieces = asm.pieces();
    let (table, fit) = normal_modulus_fit(&pieces, &deltas, a.oversample)?;
    let expected = m.power_exponent();
    let exponent_ok = expected.map(|al| (fit.slope - al).abs() <= EXPONENT_TOLERANCE);

    let domain = DomainSpec::Assembled { modulus: spec, eta: a.eta, interval: [c, b], depth: a.depth };
    let cfg = config("construct", params(&a), json!({ "modulus": raw }));
    let header = format!("schema={} command=construct config_hash={}", crate::output::SCHEMA, cfg.hash());
    let mut arts = Artifacts::new(cfg);
    arts.json("domain.json", serde_json::to_value(&domain).expect("domain serializes"));

    let bs = sample_pieces(&pieces, a.step)?;
    let mut path = String::new();
    for (i, q) in bs.points.iter().enumerate() {
        path.push_str(&format!("{}{:.9} {:.9} ", if i == 0 { "M" } else { "L" }, q[0], q[1]));
    }
    path.push('Z');
    let (lo, hi) = asm.bbox();
    arts.raw("boundary.svg", svg(&path, &header, lo, hi).into_bytes());

    let mut csv = String::from("delta,modulus\n");
    for (d, w) in &table {
        csv.push_str(&format!("{d:e},{w:.12e}\n"));
    }
    arts.csv("normal_modulus.csv", &csv);
    arts.set("area", asm.area());
    arts.set("square_side", asm.square_side());
    arts.set("junctions", &junctions);
    arts.set("straightness", &straight);
    arts.set("normal_modulus", json!({ "fit": fit, "expected_exponent": expected, "tolerance": EXPONENT_TOLERANCE, "passed": exponent_ok }));

    let mut failed = Vec::new();
    if !junctions.passed {
        failed.push(format!("junction mismatch {:e}", junctions.max_angle.max(junctions.max_gap)));
    }
    if !straight.passed {
        failed.push(format!("a boundary window of length {} is straight", a.window));
    }
    if exponent_ok == Some(false) {
        failed.push(format!("normal-modulus exponent {:.4} differs from {:.4}", fit.slope, expected.unwrap_or(f64::NAN)));
    }
    let check = (!failed.is_empty()).then(|| Failure::Numeric(failed.join("; ")));
    Ok(Run { artifacts: arts, out: a.out.out, check })
}
