use clap::Args;
use indicatrix::integrability::{
    critical_exponent_estimate, dyadic_energies, membership_verdict, EnergyEngine, EnergyOptions, MAX_LEVEL,
};
use serde::Serialize;
use serde_json::{json, Value};

use super::{config, exponents, load_domain, params, OutDir, Run};
use crate::failure::Failure;
use crate::output::{Artifacts, DEFAULT_ANGULAR, DEFAULT_GRID};
use crate::parse;

#[derive(Args, Serialize)]
pub struct LpScanArgs {
    /// Domain JSON file, or inline JSON.
    #[arg(long)]
    #[serde(skip)]
    domain: String,
    /// Exponents in (1, 2].
    #[arg(long, default_value = "1.1,1.2,1.3,4/3,1.4,1.5,1.75,2")]
    p: String,
    /// Dyadic levels `j0..j1`.
    #[arg(long, default_value = "4..12")]
    levels: String,
    #[arg(long, default_value_t = DEFAULT_ANGULAR)]
    angular: usize,
    #[arg(long, default_value_t = DEFAULT_GRID)]
    grid: usize,
    /// radial | separable | polar | grid; defaults to the most accurate one available.
    #[arg(long)]
    engine: Option<String>,
    /// Also bisect the slope root on `lo,hi`.
    #[arg(long)]
    bracket: Option<String>,
    #[command(flatten)]
    #[serde(skip)]
    out: OutDir,
}

fn energy_engine(name: &str) -> Result<EnergyEngine, Failure> {
    serde_json::from_value(Value::String(name.into()))
        .map_err(|_| Failure::config(format!("unknown energy engine {name:?}; use radial, separable, polar or grid")))
}

/// Linear interpolation of the first sign change of the slope from positive to non-positive.
fn crossing(slopes: &[(f64, f64)]) -> Option<f64> {
    slopes.windows(2).find(|w| w[0].1 > 0.0 && w[1].1 <= 0.0).map(|w| {
        let ((p0, b0), (p1, b1)) = (w[0], w[1]);
        p0 + (p1 - p0) * b0 / (b0 - b1)
    })
}

pub fn run(a: LpScanArgs) -> Result<Run, Failure> {
    let (d, raw) = load_domain(&a.domain)?;
    let mut ps = exponents(&a.p, 1.0, 2.0)?;
    ps.sort_by(f64::total_cmp);
    ps.dedup();
    let (j0, j1) = parse::int_range(&a.levels)?;
    if j0 < 0 || j1 > MAX_LEVEL as i64 {
        return Err(Failure::config(format!("levels must lie in 0..{MAX_LEVEL}")));
    }
    let levels = (j0 as i32, j1 as i32);
    let engine = a.engine.as_deref().map(energy_engine).transpose()?;
    let opts = EnergyOptions { angular: a.angular, engine, grid: a.grid };
    let bracket = a.bracket.as_deref().map(parse::pair).transpose()?;

    let mut csv = String::from("p,j,S_j,err,sup,usable\n");
    let mut rows = Vec::new();
    let mut slopes = Vec::new();
    let mut used_engine = None;
    let mut surrogate = false;
    for &p in &ps {
        let rep = dyadic_energies(&d, p, levels, &opts)?;
        used_engine = Some(rep.engine);
        surrogate |= rep.surrogate;
        for l in &rep.levels {
            csv.push_str(&format!("{p},{},{},{},{},{}\n", l.j, l.energy, l.error, l.sup, l.usable));
        }
        let verdict = match membership_verdict(&rep) {
            Ok(v) => json!(v),
            Err(e) => json!({ "p": p, "error": e.to_string() }),
        };
        if let Some(s) = rep.slope() {
            slopes.push((p, s));
        }
        rows.push(json!({ "p": p, "slope": rep.slope(), "fit": rep.fit, "usable_levels": rep.usable_levels(), "verdict": verdict }));
    }

    let mut pr = params(&a);
    pr["engine"] = json!(used_engine);
    let mut arts = Artifacts::new(config("lp-scan", pr, json!({ "domain": raw })));
    arts.csv("energies.csv", &csv);
    arts.set("engine", used_engine);
    arts.set("surrogate", surrogate);
    arts.set("exploratory", surrogate);
    arts.set("verdicts", rows);
    arts.set("slope_crossing", crossing(&slopes));
    if let Some([lo, hi]) = bracket {
        let v = match critical_exponent_estimate(&d, (lo, hi), levels, &opts) {
            Ok(c) => json!(c),
            Err(e) if e.is_numeric() => json!({ "error": e.to_string() }),
            Err(e) => return Err(e.into()),
        };
        arts.set("critical_exponent", v);
    }
    Ok(Run { artifacts: arts, out: a.out.out, check: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_interpolates_the_sign_change() {
        let c = crossing(&[(1.2, 0.2), (1.3, 0.1), (1.4, -0.1)]).unwrap();
        assert!((c - 1.35).abs() < 1e-12);
        assert!(crossing(&[(1.2, -0.2), (1.3, -0.3)]).is_none());
    }
}
