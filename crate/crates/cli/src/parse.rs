//! Parsers for the compact list and range arguments.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::Value;

use crate::failure::Failure;
use crate::output::SCHEMA;

/// A finite number, also accepting fractions such as `4/3`.
pub fn number(s: &str) -> Result<f64, Failure> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let (a, b) = (plain(a)?, plain(b)?);
            if b == 0.0 {
                return Err(Failure::config(format!("zero denominator in {s:?}")));
            }
            a / b
        }
        None => plain(s)?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Failure::config(format!("{s:?} is not finite")))
    }
}

fn plain(s: &str) -> Result<f64, Failure> {
    s.trim().parse::<f64>().map_err(|_| Failure::config(format!("{s:?} is not a number")))
}

/// Comma-separated numbers.
pub fn list(s: &str) -> Result<Vec<f64>, Failure> {
    let out: Vec<f64> = s.split(',').filter(|t| !t.trim().is_empty()).map(number).collect::<Result<_, _>>()?;
    if out.is_empty() {
        return Err(Failure::config("empty list"));
    }
    Ok(out)
}

/// Exactly two comma-separated numbers.
pub fn pair(s: &str) -> Result<[f64; 2], Failure> {
    match list(s)?.as_slice() {
        [a, b] => Ok([*a, *b]),
        _ => Err(Failure::config(format!("{s:?} must hold two numbers"))),
    }
}

/// Inclusive integer range `a..b`.
pub fn int_range(s: &str) -> Result<(i64, i64), Failure> {
    let (a, b) = s.split_once("..").ok_or_else(|| Failure::config(format!("{s:?} is not a range a..b")))?;
    let parse = |t: &str| t.trim().parse::<i64>().map_err(|_| Failure::config(format!("{t:?} is not an integer")));
    let (a, b) = (parse(a)?, parse(b)?);
    if a > b {
        return Err(Failure::config(format!("empty range {s:?}")));
    }
    Ok((a, b))
}

/// Real range `a..b`.
pub fn real_range(s: &str) -> Result<(f64, f64), Failure> {
    let (a, b) = s.split_once("..").ok_or_else(|| Failure::config(format!("{s:?} is not a range a..b")))?;
    let (a, b) = (number(a)?, number(b)?);
    if a > b {
        return Err(Failure::config(format!("empty range {s:?}")));
    }
    Ok((a, b))
}

/// `lo,hi,count` as a geometric ladder.
pub fn ladder(s: &str) -> Result<Vec<f64>, Failure> {
    match list(s)?.as_slice() {
        [lo, hi, n] if *lo > 0.0 && hi > lo && *n >= 2.0 && n.fract() == 0.0 && *n <= 1e6 => {
            Ok(indicatrix::fit::geometric_ladder(*lo, *hi, *n as usize))
        }
        _ => Err(Failure::config(format!("{s:?} must be lo,hi,count with 0 < lo < hi and count ≥ 2"))),
    }
}

/// Decodes a JSON input given either inline (starting with `{`) or as a file path.
///
/// Artifacts written by this tool are accepted too: a document with a `schema` field must be `v1`,
/// and its `data` member, when present, is the payload. Returns the payload for hashing as well.
pub fn input<T: DeserializeOwned>(arg: &str, what: &str) -> Result<(T, Value), Failure> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        let path = Path::new(arg);
        fs::read_to_string(path).map_err(|e| Failure::config(format!("cannot read {what} {}: {e}", path.display())))?
    };
    let mut raw: Value = serde_json::from_str(&text).map_err(|e| Failure::config(format!("{what} is not JSON: {e}")))?;
    if let Some(obj) = raw.as_object_mut() {
        if let Some(schema) = obj.remove("schema") {
            if schema != SCHEMA {
                return Err(Failure::config(format!("{what} has schema {schema}, expected {SCHEMA:?}")));
            }
            if let Some(data) = obj.remove("data") {
                raw = data;
            }
        }
    }
    let parsed =
        serde_json::from_value(raw.clone()).map_err(|e| Failure::config(format!("{what} does not match the schema: {e}")))?;
    Ok((parsed, raw))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_and_lists() {
        assert_eq!(number("4/3").unwrap(), 4.0 / 3.0);
        assert_eq!(number(" 1e-3 ").unwrap(), 1e-3);
        assert!(number("1/0").is_err());
        assert!(number("abc").is_err());
        assert!(number("inf").is_err());
        assert_eq!(list("1.1, 1.5,2").unwrap(), vec![1.1, 1.5, 2.0]);
        assert!(list("").is_err());
        assert_eq!(pair("1,2").unwrap(), [1.0, 2.0]);
        assert!(pair("1,2,3").is_err());
    }

    #[test]
    fn ranges_and_ladders() {
        assert_eq!(int_range("3..12").unwrap(), (3, 12));
        assert!(int_range("5..2").is_err());
        assert!(int_range("3-12").is_err());
        assert_eq!(real_range("0..64").unwrap(), (0.0, 64.0));
        let l = ladder("10,1000,3").unwrap();
        assert!((l[1] - 100.0).abs() < 1e-9);
        assert!(ladder("10,1,3").is_err());
        assert!(ladder("1,10,2.5").is_err());
    }

    #[test]
    fn inputs_inline_and_wrapped() {
        let (v, _): (Vec<f64>, _) = input(r#"{"schema":"v1","data":[1,2]}"#, "test").unwrap();
        assert_eq!(v, vec![1.0, 2.0]);
        let (m, raw): (indicatrix::ModulusSpec, _) = input(r#"{"kind":"power","alpha":0.5}"#, "modulus").unwrap();
        assert_eq!(m, indicatrix::ModulusSpec::Power { alpha: 0.5, cap: 1.0, doubling: false });
        assert_eq!(raw["alpha"], 0.5);
        assert!(input::<indicatrix::ModulusSpec>(r#"{"schema":"v2","kind":"power","alpha":1}"#, "m").is_err());
        assert!(input::<indicatrix::ModulusSpec>("/no/such/file.json", "m").is_err());
        assert!(input::<indicatrix::ModulusSpec>(r#"{"kind":"power""#, "m").is_err());
    }
}
