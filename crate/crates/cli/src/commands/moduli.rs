use clap::Args;
use indicatrix::moduli::{
    critical_exponent_power, duality_identity, regularize_modulus, theorem2_divergence, theta_tail, DivergenceTest,
};
use indicatrix::{ChiMap, Modulus, ModulusSpec};
use serde::Serialize;
use serde_json::{json, Value};

use super::{config, params, OutDir, Run};
use crate::failure::Failure;
use crate::output::Artifacts;
use crate::parse;

/// Dyadic steps of the doubling table below the cap.
const DOUBLING_STEPS: i32 = 20;

#[derive(Args, Serialize)]
pub struct ModuliArgs {
    /// Modulus JSON file, or inline JSON; overrides --alpha.
    #[arg(long)]
    #[serde(skip)]
    modulus: Option<String>,
    /// Exponent of the power modulus δ^α.
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Ambient dimension.
    #[arg(long, default_value_t = 2)]
    n: u32,
    /// Exponents in (1, 2).
    #[arg(long, default_value = "1.1,1.2,1.3,4/3,1.4,1.5,1.6,1.7,1.8,1.9")]
    p: String,
    /// Lower cutoff of the duality identity.
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    /// Upper limits of the Θ_p tail as `lo,hi,count`.
    #[arg(long, default_value = "10,1e4,7")]
    theta: String,
    /// Largest accepted relative residual of the duality identity.
    #[arg(long, default_value_t = 1e-6)]
    residual_tol: f64,
    #[command(flatten)]
    #[serde(skip)]
    out: OutDir,
}

/// Bisects the divergence flip between a divergent `lo` and a convergent `hi`.
fn bisect_flip(m: &Modulus, n: u32, mut lo: f64, mut hi: f64) -> Result<f64, Failure> {
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        if theorem2_divergence(m, n, mid)?.divergent {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn run(a: ModuliArgs) -> Result<Run, Failure> {
    let (spec, raw): (ModulusSpec, Value) = match &a.modulus {
        Some(arg) => parse::input(arg, "modulus")?,
        None => {
            let s = ModulusSpec::power(a.alpha);
            let raw = serde_json::to_value(&s).expect("modulus serializes");
            (s, raw)
        }
    };
    let m = spec.build()?;
    if a.n < 2 {
        return Err(Failure::config("dimension n must be at least 2"));
    }
    let mut ps = parse::list(&a.p)?;
    if let Some(p) = ps.iter().find(|p| !(**p > 1.0 && **p < 2.0)) {
        return Err(Failure::config(format!("p = {p} lies outside (1, 2)")));
    }
    ps.sort_by(f64::total_cmp);
    ps.dedup();
    if !(a.eps > 0.0 && a.eps < 1.0) {
        return Err(Failure::config(format!("ε must lie in (0, 1), got {}", a.eps)));
    }
    let uppers = parse::ladder(&a.theta)?;
    let chi = ChiMap::new(m.clone());

    let mut table = String::from("p,J_coarse,J_fine,divergent,method,identity_residual\n");
    let mut tests: Vec<(f64, DivergenceTest)> = Vec::new();
    let mut worst = 0.0f64;
    for &p in &ps {
        let t = theorem2_divergence(&m, a.n, p)?;
        let id = duality_identity(&chi, a.n, p, a.eps)?;
        worst = worst.max(id.residual);
        let method = serde_json::to_value(t.method).expect("method serializes");
        table.push_str(&format!(
            "{p},{:.12e},{:.12e},{},{},{:.3e}\n",
            t.j_coarse,
            t.j_fine,
            t.divergent,
            method.as_str().unwrap_or_default(),
            id.residual
        ));
        tests.push((p, t));
    }

    let mut theta = String::from("p,upper,tail,majorant\n");
    for &p in &ps {
        for t in theta_tail(&chi, p, &uppers)? {
            theta.push_str(&format!("{p},{:e},{:.12e},{:.12e}\n", t.upper, t.value, t.majorant));
        }
    }

    let reg = regularize_modulus(&m);
    let mut doubling = String::from("delta,omega,omega_star,ratio\n");
    let mut max_ratio = 0.0f64;
    for k in 1..=DOUBLING_STEPS {
        let d = m.cap() * 2f64.powi(-k);
        let (w, ws, ws2) = (m.eval(d)?, reg.eval(d)?, reg.eval(2.0 * d)?);
        let ratio = ws2 / ws;
        max_ratio = max_ratio.max(ratio);
        doubling.push_str(&format!("{d:e},{w:.12e},{ws:.12e},{ratio:.12}\n"));
    }

    let flip = match tests.windows(2).find(|w| w[0].1.divergent && !w[1].1.divergent) {
        Some(w) => Some(bisect_flip(&m, a.n, w[0].0, w[1].0)?),
        None => None,
    };

    let mut arts = Artifacts::new(config("moduli", params(&a), json!({ "modulus": raw })));
    arts.csv("moduli.csv", &table);
    arts.csv("theta.csv", &theta);
    arts.csv("doubling.csv", &doubling);
    arts.set("divergence_flip", flip);
    arts.set("critical_exponent_power", m.power_exponent().map(|al| critical_exponent_power(a.n, al)));
    arts.set("max_identity_residual", worst);
    arts.set("max_doubling_ratio", max_ratio);
    let check = (worst > a.residual_tol).then(|| {
        Failure::Numeric(format!("duality identity residual {worst:e} exceeds {:e}", a.residual_tol))
    });
    Ok(Run { artifacts: arts, out: a.out.out, check })
}
