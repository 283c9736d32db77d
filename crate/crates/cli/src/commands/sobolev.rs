use clap::Args;
use indicatrix::sobolev::{sobolev_membership_sweep, SobolevOptions};
use serde::Serialize;
use serde_json::json;

use super::{config, load_domain, params, OutDir, Run};
use crate::failure::Failure;
use crate::output::{Artifacts, DEFAULT_SEED};
use crate::parse;

#[derive(Args, Serialize)]
pub struct SobolevArgs {
    /// Domain JSON file, or inline JSON.
    #[arg(long)]
    #[serde(skip)]
    domain: String,
    /// Smoothness indices in (0, 1).
    #[arg(long, default_value = "0.25,0.3,0.35,0.4,0.45,0.5,0.55,0.6,0.65,0.7,0.75")]
    s: String,
    /// Monte Carlo samples per shift.
    #[arg(long, default_value_t = 100_000)]
    budget: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Angles on [0, π) per radius.
    #[arg(long, default_value_t = 16)]
    angles: usize,
    /// Inner cutoffs 2^-k for k in `k0..k1`.
    #[arg(long, default_value = "4..12")]
    ladder: String,
    #[command(flatten)]
    #[serde(skip)]
    out: OutDir,
}

pub fn run(a: SobolevArgs) -> Result<Run, Failure> {
    let (d, raw) = load_domain(&a.domain)?;
    let s = parse::list(&a.s)?;
    let (k0, k1) = parse::int_range(&a.ladder)?;
    if k0 < 0 || k1 > 30 {
        return Err(Failure::config(format!("ladder {k0}..{k1} must lie in 0..30")));
    }
    let opts = SobolevOptions { budget: a.budget, seed: a.seed, angles: a.angles, ladder: (k0 as u32, k1 as u32) };
    let rep = sobolev_membership_sweep(&d, &s, &opts)?;

    let mut arts = Artifacts::new(config("sobolev", params(&a), json!({ "domain": raw })));
    arts.csv("sobolev.csv", &rep.to_csv());
    let mut integrand = String::from("r,circle,circle_se\n0,0,0\n");
    for n in rep.sigma.shells.iter().flat_map(|sh| &sh.nodes) {
        integrand.push_str(&format!("{:.12e},{:.12e},{:.6e}\n", n.r, n.circle, n.circle_se));
    }
    arts.csv("integrand.csv", &integrand);
    arts.set("threshold", rep.threshold);
    arts.set("kappa_fit", rep.kappa_fit);
    arts.set("area", rep.area);
    arts.set("outer", rep.outer);
    arts.set("surrogate", d.is_surrogate());
    let classes: Vec<_> = rep
        .classes
        .iter()
        .map(|c| {
            json!({
                "s": c.s, "kappa": c.kappa, "kappa_se": c.kappa_se, "divergent": c.divergent,
                "log_growth": c.log_growth, "last_three_spread": c.last_three_spread, "norm": c.norm,
            })
        })
        .collect();
    arts.set("classes", classes);
    Ok(Run { artifacts: arts, out: a.out.out, check: None })
}
