mod apnorm;
mod construct;
mod lp_scan;
mod minkowski;
mod moduli;
mod sobolev;
mod transform;

use std::path::PathBuf;

use clap::{Args, Subcommand};
use indicatrix::{Domain, DomainSpec};
use serde::Serialize;
use serde_json::{json, Value};

use crate::failure::Failure;
use crate::output::{Artifacts, RunConfig, SCHEMA};
use crate::parse;

#[derive(Subcommand)]
pub enum Command {
    /// Evaluate the transform of a domain's indicator with one engine.
    Transform(transform::TransformArgs),
    /// Dyadic shell energies of |1̂_D|^p and integrability verdicts.
    LpScan(lp_scan::LpScanArgs),
    /// Sobolev–Slobodeckij seminorm sweep over s.
    Sobolev(sobolev::SobolevArgs),
    /// Box-counting dimension of the boundary.
    Minkowski(minkowski::MinkowskiArgs),
    /// Divergence integrals of a modulus of continuity and their duality identity.
    Moduli(moduli::ModuliArgs),
    /// Growth of the A_p norms of exp(iλφ).
    Apnorm(apnorm::ApnormArgs),
    /// Assemble the square-with-arches domain and check its boundary.
    Construct(construct::ConstructArgs),
}

#[derive(Args, Clone, Debug)]
pub struct OutDir {
    /// Directory receiving the artifacts.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

/// Artifacts of one run plus a check that failed after they were produced.
pub struct Run {
    pub artifacts: Artifacts,
    pub out: PathBuf,
    pub check: Option<Failure>,
}

pub fn run(cmd: Command) -> Result<String, Failure> {
    let r = match cmd {
        Command::Transform(a) => transform::run(a)?,
        Command::LpScan(a) => lp_scan::run(a)?,
        Command::Sobolev(a) => sobolev::run(a)?,
        Command::Minkowski(a) => minkowski::run(a)?,
        Command::Moduli(a) => moduli::run(a)?,
        Command::Apnorm(a) => apnorm::run(a)?,
        Command::Construct(a) => construct::run(a)?,
    };
    let hash = r.artifacts.config().hash();
    let command = r.artifacts.config().command;
    let written = r.artifacts.write(&r.out)?;
    if let Some(f) = r.check {
        return Err(f);
    }
    let files: Vec<String> =
        written.iter().filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned())).collect();
    Ok(json!({ "schema": SCHEMA, "command": command, "config_hash": hash, "files": files }).to_string())
}

/// Resolved parameters as JSON, for the config hash.
fn params(args: &impl Serialize) -> Value {
    serde_json::to_value(args).expect("arguments serialize")
}

fn config(command: &'static str, params: Value, inputs: Value) -> RunConfig {
    RunConfig { command, params, inputs }
}

fn load_domain(arg: &str) -> Result<(Domain, Value), Failure> {
    let (spec, raw): (DomainSpec, Value) = parse::input(arg, "domain")?;
    Ok((spec.build()?, raw))
}

/// Parses a `p` list and checks every entry against `(low, high]`.
fn exponents(s: &str, low: f64, high: f64) -> Result<Vec<f64>, Failure> {
    let ps = parse::list(s)?;
    if let Some(p) = ps.iter().find(|p| !(**p > low && **p <= high)) {
        return Err(Failure::config(format!("p = {p} lies outside ({low}, {high}]")));
    }
    Ok(ps)
}
