use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const DISK: &str = r#"{"shape":"disk","radius":1}"#;
const SQUARE: &str = r#"{"shape":"rectangle","widths":[1,1]}"#;
const SPECIAL: &str = r#"{"shape":"special","interval":[0,1],"profile":{"kind":"cosine","amplitude":0.3,"offset":1}}"#;

fn indicatrix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_indicatrix")).args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all: Vec<&str> = args.to_vec();
    let out = dir.to_str().unwrap();
    all.extend(["--out", out]);
    indicatrix(&all)
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

/// Data rows of a CSV artifact, without the `#` preamble and the column line.
fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn error_report(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).expect("stderr carries a JSON report")
}

fn assert_same_tree(a: &Path, b: &Path) {
    let mut names: Vec<_> = fs::read_dir(a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(!names.is_empty());
    for n in names {
        assert_eq!(fs::read(a.join(&n)).unwrap(), fs::read(b.join(&n)).unwrap(), "{n:?} differs");
    }
}

#[test]
fn disk_radial_spectrum_starts_at_the_area() {
    let t = TempDir::new().unwrap();
    let o = run_in(t.path(), &["transform", "--domain", DISK, "--engine", "closed", "--radial", "0..64"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let first = &rows(&t.path().join("spectrum.csv"))[0];
    assert_eq!((first[0].as_str(), first[1].as_str()), ("0", "0"));
    assert!((first[2].parse::<f64>().unwrap() - std::f64::consts::PI).abs() < 1e-12);
    let s = summary(t.path());
    assert_eq!(s["schema"], "v1");
    assert_eq!(s["defaults"]["grid"], 1024);
    assert_eq!(s["defaults"]["angular"], 512);
    assert_eq!(s["defaults"]["seed"], 42);
    assert_eq!(s["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(s["summary"]["cross_check"]["result"]["passed"], true);
    let csv = fs::read_to_string(t.path().join("spectrum.csv")).unwrap();
    assert!(csv.starts_with(&format!("# schema=v1 command=transform config_hash={}", s["config_hash"].as_str().unwrap())));
}

#[test]
fn square_grid_agrees_with_closed_form() {
    let t = TempDir::new().unwrap();
    let o = run_in(t.path(), &["transform", "--domain", SQUARE, "--engine", "grid", "--grid", "1024"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(t.path());
    let cc = &s["summary"]["cross_check"]["result"];
    assert_eq!(cc["engines"][0], "closed");
    assert!(cc["max_difference"].as_f64().unwrap() < 5e-3, "{cc}");
    assert_eq!(fs::metadata(t.path().join("spectrum.bin")).unwrap().len(), 1024 * 1024 * 16);
    assert_eq!(s["summary"]["binary"]["count"], 1024 * 1024);
}

#[test]
fn single_lemma1_value_matches_the_boundary_engine() {
    let t = TempDir::new().unwrap();
    let o = run_in(t.path(), &["transform", "--domain", SPECIAL, "--engine", "lemma1", "--u", "1", "--lambda", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = &summary(t.path())["summary"]["value"];
    let t2 = TempDir::new().unwrap();
    let o = run_in(t2.path(), &["transform", "--domain", SPECIAL, "--engine", "boundary", "--xi", "1,2", "--no-cross-check"]);
    assert!(o.status.success());
    let w = &summary(t2.path())["summary"]["value"];
    let d = (v["re"].as_f64().unwrap() - w["re"].as_f64().unwrap()).hypot(v["im"].as_f64().unwrap() - w["im"].as_f64().unwrap());
    assert!(d < 1e-8, "{v} vs {w}");
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let args = ["sobolev", "--domain", SQUARE, "--s", "0.3,0.5,0.7", "--budget", "20000"];
    let oa = run_in(a.path(), &args);
    let ob = run_in(b.path(), &args);
    assert!(oa.status.success(), "{}", String::from_utf8_lossy(&oa.stderr));
    assert_eq!(oa.stdout, ob.stdout);
    assert_same_tree(a.path(), b.path());
    let first = &rows(&a.path().join("integrand.csv"))[0];
    assert_eq!(first, &["0", "0", "0"]);

    let args = ["transform", "--domain", DISK, "--engine", "boundary", "--radial", "0..8", "--radii", "5", "--angles", "8"];
    let (c, d) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    assert!(run_in(c.path(), &args).status.success());
    assert!(run_in(d.path(), &args).status.success());
    assert_same_tree(c.path(), d.path());
}

#[test]
fn config_hash_follows_content_not_paths() {
    let t = TempDir::new().unwrap();
    let file = t.path().join("disk.json");
    fs::write(&file, DISK).unwrap();
    let (a, b) = (t.path().join("a"), t.path().join("b"));
    assert!(run_in(&a, &["minkowski", "--domain", file.to_str().unwrap(), "--deltas", "1e-3,1,4"]).status.success());
    assert!(run_in(&b, &["minkowski", "--domain", DISK, "--deltas", "1e-3,1,4"]).status.success());
    assert_eq!(summary(&a)["config_hash"], summary(&b)["config_hash"]);
    let c = t.path().join("c");
    assert!(run_in(&c, &["minkowski", "--domain", DISK, "--deltas", "1e-3,1,5"]).status.success());
    assert_ne!(summary(&a)["config_hash"], summary(&c)["config_hash"]);
    let dim = summary(&a)["summary"]["dimension"].as_f64().unwrap();
    assert!((dim - 1.0).abs() < 0.05, "{dim}");
}

#[test]
fn disk_lp_scan_crosses_at_four_thirds() {
    let t = TempDir::new().unwrap();
    let o = run_in(t.path(), &["lp-scan", "--domain", DISK, "--p", "1.2,1.3,1.4,1.5,2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(t.path())["summary"].clone();
    let c = s["slope_crossing"].as_f64().unwrap();
    assert!((c - 4.0 / 3.0).abs() < 0.05, "{c}");
    assert_eq!(s["engine"], "radial");
    assert_eq!(s["surrogate"], false);
    let v: Vec<&str> = s["verdicts"].as_array().unwrap().iter().map(|r| r["verdict"]["verdict"].as_str().unwrap()).collect();
    assert_eq!(v, ["diverges", "diverges", "converges", "converges", "converges"]);
    assert_eq!(rows(&t.path().join("energies.csv")).len(), 5 * 9);
}

#[test]
fn square_lp_scan_converges_and_special_is_flagged() {
    let t = TempDir::new().unwrap();
    assert!(run_in(t.path(), &["lp-scan", "--domain", SQUARE, "--p", "1.5,1.9"]).status.success());
    let s = summary(t.path())["summary"].clone();
    for r in s["verdicts"].as_array().unwrap() {
        assert_eq!(r["verdict"]["verdict"], "converges", "{r}");
    }
    let surrogate = r#"{"shape":"special","interval":[0,1],"profile":{"kind":"surrogate","modulus":{"kind":"power","alpha":0.5},"eta":0.25}}"#;
    let u = TempDir::new().unwrap();
    let o = run_in(u.path(), &["lp-scan", "--domain", surrogate, "--p", "1.5", "--levels", "2..6", "--engine", "grid", "--grid", "256"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(summary(u.path())["summary"]["exploratory"], true);
}

#[test]
fn moduli_flip_and_identity() {
    let t = TempDir::new().unwrap();
    let o = run_in(t.path(), &["moduli", "--alpha", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(t.path())["summary"].clone();
    assert!((s["divergence_flip"].as_f64().unwrap() - 4.0 / 3.0).abs() < 1e-3);
    assert!(s["max_identity_residual"].as_f64().unwrap() < 1e-6);
    assert!(s["max_doubling_ratio"].as_f64().unwrap() < 2.0);
    let table = rows(&t.path().join("moduli.csv"));
    assert!(table.iter().all(|r| r[3] == (r[0].parse::<f64>().unwrap() <= 4.0 / 3.0 + 1e-12).to_string()));
}

#[test]
fn cosine_norm_growth() {
    let t = TempDir::new().unwrap();
    let o = run_in(t.path(), &["apnorm", "--p", "4/3,2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let curves = summary(t.path())["summary"]["curves"].clone();
    assert!((curves[0]["slope"].as_f64().unwrap() - 0.25).abs() < 0.03, "{curves}");
    assert!(curves[1]["slope"].as_f64().unwrap().abs() < 1e-6);
    assert_eq!(rows(&t.path().join("norms.csv")).len(), 34);
}

#[test]
fn construct_writes_a_loadable_domain() {
    let t = TempDir::new().unwrap();
    let o = run_in(t.path(), &["construct", "--alpha", "0.5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(t.path())["summary"].clone();
    assert_eq!(s["junctions"]["junctions"].as_array().unwrap().len(), 8);
    assert!(s["junctions"]["max_angle"].as_f64().unwrap() < 1e-6);
    assert_eq!(s["straightness"]["passed"], true);
    assert_eq!(s["normal_modulus"]["passed"], true);
    let svg = fs::read_to_string(t.path().join("boundary.svg")).unwrap();
    assert!(svg.starts_with("<!-- schema=v1 command=construct"));
    assert!(svg.contains("d=\"M") && svg.contains(" Z\""));
    // the written domain feeds straight back in
    let domain = t.path().join("domain.json");
    let u = TempDir::new().unwrap();
    let o = run_in(u.path(), &["minkowski", "--domain", domain.to_str().unwrap(), "--deltas", "1e-3,1,4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn exit_codes() {
    let t = TempDir::new().unwrap();
    let dir = t.path();
    let cases: &[(&[&str], i32)] = &[
        (&["transform", "--domain", "{not json"], 2),
        (&["transform", "--domain", r#"{"shape":"disk","radius":-1}"#], 2),
        (&["transform", "--domain", r#"{"shape":"blob"}"#], 2),
        (&["transform", "--domain", "/no/such/file.json"], 2),
        (&["transform", "--domain", DISK, "--engine", "warp"], 2),
        (&["transform", "--domain", DISK, "--grid", "many"], 2),
        (&["transform", "--domain", DISK, "--radial", "5..1"], 2),
        (&["transform", "--domain", DISK, "--u", "1"], 2),
        (&["transform", "--domain", SPECIAL, "--engine", "closed"], 3),
        (&["transform", "--domain", DISK, "--engine", "lemma1"], 3),
        (&["lp-scan", "--domain", DISK, "--p", "2.5"], 2),
        (&["lp-scan", "--domain", DISK, "--levels", "a..b"], 2),
        (&["lp-scan", "--domain", DISK, "--levels", "3..5"], 0),
        (&["sobolev", "--domain", DISK, "--s", "1.5"], 2),
        (&["sobolev", "--domain", DISK, "--budget", "10"], 2),
        (&["minkowski", "--domain", DISK, "--deltas", "1e-2,1e-1,4"], 4),
        (&["moduli", "--p", "1/0"], 2),
        (&["moduli", "--modulus", r#"{"kind":"power","alpha":-1}"#], 2),
        (&["apnorm", "--profile", r#"{"kind":"linear","slope":1}"#], 3),
        (&["apnorm", "--lambdas", "10,20,4"], 4),
        (&["construct", "--eta", "0.7"], 2),
        (&["bogus"], 2),
        (&[], 2),
    ];
    for (args, code) in cases {
        let o = run_in(dir, args);
        assert_eq!(o.status.code(), Some(*code), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        if *code != 0 {
            let r = error_report(&o);
            assert_eq!(r["schema"], "v1");
            assert_eq!(r["error"]["code"], *code);
        }
    }
    assert!(indicatrix(&["--help"]).status.success());
    assert!(indicatrix(&["--version"]).status.success());
}

#[test]
fn thread_cap_is_validated() {
    let t = TempDir::new().unwrap();
    let out = t.path().to_str().unwrap();
    let run = |v: &str| {
        Command::new(env!("CARGO_BIN_EXE_indicatrix"))
            .env("INDICATRIX_THREADS", v)
            .args(["moduli", "--out", out])
            .output()
            .unwrap()
    };
    assert_eq!(run("0").status.code(), Some(2));
    assert_eq!(run("two").status.code(), Some(2));
    assert!(run("2").status.success());
}
