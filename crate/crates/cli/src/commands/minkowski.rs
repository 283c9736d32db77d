use clap::Args;
use indicatrix::geometry::minkowski_dimension;
use indicatrix::sobolev::remark1_bound;
use serde::Serialize;
use serde_json::json;

use super::{config, load_domain, params, OutDir, Run};
use crate::failure::Failure;
use crate::output::Artifacts;
use crate::parse;

#[derive(Args, Serialize)]
pub struct MinkowskiArgs {
    /// Domain JSON file, or inline JSON.
    #[arg(long)]
    #[serde(skip)]
    domain: String,
    /// Neighbourhood radii as `lo,hi,count`, spanning at least three decades.
    #[arg(long, default_value = "1e-4,1e-1,7")]
    deltas: String,
    /// Raster cells per δ.
    #[arg(long, default_value_t = 8.0)]
    cells: f64,
    #[command(flatten)]
    #[serde(skip)]
    out: OutDir,
}

pub fn run(a: MinkowskiArgs) -> Result<Run, Failure> {
    let (d, raw) = load_domain(&a.domain)?;
    let deltas = parse::ladder(&a.deltas)?;
    if !(a.cells >= 1.0 && a.cells <= 64.0) {
        return Err(Failure::config(format!("cells per δ must lie in [1, 64], got {}", a.cells)));
    }
    let fit = minkowski_dimension(&d, &deltas, a.cells)?;
    let n = d.dim();

    let mut arts = Artifacts::new(config("minkowski", params(&a), json!({ "domain": raw })));
    let mut csv = String::from("delta,area\n");
    for (x, y) in fit.deltas.iter().zip(&fit.areas) {
        csv.push_str(&format!("{x:e},{y:.12e}\n"));
    }
    arts.csv("minkowski.csv", &csv);
    arts.set("dimension", fit.dimension);
    arts.set("raw_dimension", fit.raw_dimension);
    arts.set("fit", fit.fit);
    // Sobolev index below which the indicator is known to lie in H^s.
    arts.set("sobolev_bound", (n as f64 - fit.dimension) / 2.0);
    arts.set("integrability_bound", remark1_bound(fit.dimension, n).ok());
    Ok(Run { artifacts: arts, out: a.out.out, check: None })
}
