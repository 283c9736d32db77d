use clap::Args;
use indicatrix::apnorms::{growth_fit, lemma1_integrand_scan};
use indicatrix::{Modulus, ModulusSpec, Profile, ProfileSpec};
use serde::Serialize;
use serde_json::{json, Value};

use super::{config, params, OutDir, Run};
use crate::failure::Failure;
use crate::output::Artifacts;
use crate::parse;

#[derive(Args, Serialize)]
pub struct ApnormArgs {
    /// Periodic profile JSON file, or inline JSON; defaults to cos t.
    #[arg(long)]
    #[serde(skip)]
    profile: Option<String>,
    /// Modulus of φ′ for the comparison exponents; defaults to the profile's own (δ for cos t).
    #[arg(long)]
    #[serde(skip)]
    modulus: Option<String>,
    /// Exponents in [1, 2].
    #[arg(long, default_value = "4/3,2")]
    p: String,
    /// λ ladder as `lo,hi,count`.
    #[arg(long, default_value = "10,1000,17")]
    lambdas: String,
    /// Also scan the integrand |λ|^-p ‖e^{iλφ} − 1‖^p of the line norm.
    #[arg(long)]
    lemma1: bool,
    #[command(flatten)]
    #[serde(skip)]
    out: OutDir,
}

pub fn run(a: ApnormArgs) -> Result<Run, Failure> {
    let (phi, profile_raw): (Profile, Value) = match &a.profile {
        Some(arg) => {
            let (spec, raw): (ProfileSpec, Value) = parse::input(arg, "profile")?;
            (spec.build()?, raw)
        }
        None => {
            let p = Profile::cosine(1.0, 1.0, 0.0);
            let raw = serde_json::to_value(p.spec()).expect("profile serializes");
            (p, raw)
        }
    };
    let (modulus, modulus_raw): (Option<Modulus>, Value) = match &a.modulus {
        Some(arg) => {
            let (spec, raw): (ModulusSpec, Value) = parse::input(arg, "modulus")?;
            (Some(spec.build()?), raw)
        }
        // cos has a Lipschitz derivative
        None if phi.modulus().is_none() && matches!(phi.spec(), Some(ProfileSpec::Cosine { .. })) => {
            (Some(Modulus::power(1.0)?), serde_json::to_value(ModulusSpec::power(1.0)).expect("modulus serializes"))
        }
        None => (None, Value::Null),
    };
    let ps = parse::list(&a.p)?;
    if let Some(p) = ps.iter().find(|p| !(1.0..=2.0).contains(*p)) {
        return Err(Failure::config(format!("p = {p} lies outside [1, 2]")));
    }
    let lambdas = parse::ladder(&a.lambdas)?;

    let mut norms = String::from("lambda,norm,p\n");
    let mut curves = Vec::new();
    for &p in &ps {
        let c = growth_fit(&phi, p, &lambdas, modulus.as_ref())?;
        norms.push_str(c.to_csv().split_once('\n').map_or("", |(_, rows)| rows));
        curves.push(json!({
            "p": p, "slope": c.slope(), "slope_se": c.fit.slope_se, "fitted": c.fitted,
            "bound_exponent": c.bound_exponent, "theta_exponent": c.theta_exponent,
        }));
    }

    let inputs = json!({ "profile": profile_raw, "modulus": modulus_raw });
    let mut arts = Artifacts::new(config("apnorm", params(&a), inputs));
    arts.csv("norms.csv", &norms);
    arts.set("curves", curves);
    arts.set("exploratory", !matches!(phi.spec(), Some(ProfileSpec::Cosine { .. })));
    if a.lemma1 {
        let mut rows = String::from("p,lambda,integrand\n");
        let mut scans = Vec::new();
        for &p in ps.iter().filter(|p| **p > 1.0) {
            let s = lemma1_integrand_scan(&phi, p, &lambdas)?;
            for (l, v) in &s.rows {
                rows.push_str(&format!("{p},{l},{v:.12e}\n"));
            }
            scans.push(json!({
                "p": p, "exponent": s.exponent, "exponent_se": s.exponent_se, "band": s.band,
                "truncated": s.truncated, "verdict": s.verdict,
            }));
        }
        arts.csv("lemma1.csv", &rows);
        arts.set("lemma1", scans);
    }
    Ok(Run { artifacts: arts, out: a.out.out, check: None })
}
