//! Parameter files.
//!
//! A flat `key = value` text file with the keys `n`, `a`, `m`, `d` and
//! `beta`; `a` and `beta` are comma separated lists. Numbers are exact
//! fractions (`2/3`), integers or decimals (`0.5`, `-1.25e-1`); decimals are
//! read exactly, never through a binary float. `#` starts a comment.
//!
//! ```text
//! # Table 1
//! n    = 3
//! a    = 1/3, 1/3, 1/3
//! m    = 3
//! d    = 1/2
//! beta = 0, 2/3, 1
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};
use thiserror::Error;

use crate::selfsim::{validate, InvalidParams, RawParams, SelfSimilarParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("missing key `{0}`")]
    MissingKey(&'static str),
    #[error("line {line}: `{text}` is not a number")]
    BadNumber { line: usize, text: String },
    #[error("line {line}: `{text}` is not a positive integer")]
    BadInteger { line: usize, text: String },
    #[error("{0}")]
    Invalid(#[from] InvalidParams),
}

const KEYS: [&str; 5] = ["n", "a", "m", "d", "beta"];

pub fn load(path: &Path) -> Result<SelfSimilarParams<BigRational>, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.display().to_string(), reason: e.to_string() })?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<SelfSimilarParams<BigRational>, ConfigError> {
    validate(parse_raw(text)?).map_err(ConfigError::from)
}

/// Parse without checking the parameter invariants.
pub fn parse_raw(text: &str) -> Result<RawParams<BigRational>, ConfigError> {
    let mut entries: BTreeMap<&'static str, (usize, String)> = BTreeMap::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or(ConfigError::Syntax { line })?;
        let key = key.trim();
        let known =
            KEYS.iter().find(|k| **k == key).ok_or_else(|| ConfigError::UnknownKey { line, key: key.to_string() })?;
        if entries.insert(known, (line, value.trim().to_string())).is_some() {
            return Err(ConfigError::DuplicateKey { line, key: key.to_string() });
        }
    }
    let get = |key: &'static str| entries.get(key).ok_or(ConfigError::MissingKey(key));

    let integer = |key: &'static str| -> Result<usize, ConfigError> {
        let (line, v) = get(key)?;
        v.parse::<usize>().map_err(|_| ConfigError::BadInteger { line: *line, text: v.clone() })
    };
    let number =
        |line: usize, v: &str| parse_number(v).ok_or_else(|| ConfigError::BadNumber { line, text: v.to_string() });
    let list = |key: &'static str| -> Result<Vec<BigRational>, ConfigError> {
        let (line, v) = get(key)?;
        v.split(',').map(|s| number(*line, s.trim())).collect()
    };

    let n = integer("n")?;
    let m = integer("m")?;
    let (dl, dv) = get("d")?;
    let d = number(*dl, dv)?;
    Ok(RawParams { n, a: list("a")?, m, d, beta: list("beta")? })
}

/// Exact value of `p/q`, an integer or a decimal with optional exponent.
pub fn parse_number(text: &str) -> Option<BigRational> {
    let text = text.trim();
    if let Some((p, q)) = text.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(i) => (&text[..i], text[i + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let all: BigInt = format!("0{int_part}{frac_part}").parse().ok()?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    let factor =
        if scale >= 0 { Pow::pow(ten, scale as u32) } else { BigRational::one() / Pow::pow(ten, (-scale) as u32) };
    let v = BigRational::from_integer(all) * factor;
    Some(if negative { -v } else { v })
}

/// Render parameters in the file format (exact fractions).
pub fn render(params: &SelfSimilarParams<BigRational>) -> String {
    let join = |v: &[BigRational]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
    format!(
        "n = {}\na = {}\nm = {}\nd = {}\nbeta = {}\n",
        params.n(),
        join(params.a()),
        params.m(),
        params.d(),
        join(params.beta())
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selfsim::ParamViolation;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    const TABLE1: &str = "# Table 1\nn = 3\na = 1/3, 1/3, 1/3\nm = 3\nd = 1/2   # contraction\nbeta = 0, 2/3, 1\n";

    #[test]
    fn parses_table1() {
        let p = parse(TABLE1).unwrap();
        assert_eq!(p.n(), 3);
        assert_eq!(p.a(), &[q(1, 3), q(1, 3), q(1, 3)]);
        assert_eq!(p.d(), &q(1, 2));
        assert_eq!(p.beta()[1], q(2, 3));
        assert_eq!(parse(&render(&p)).unwrap(), p);
    }

    #[test]
    fn numbers_are_exact() {
        assert_eq!(parse_number("0.1"), Some(q(1, 10)));
        assert_eq!(parse_number("-1.25e-1"), Some(q(-1, 8)));
        assert_eq!(parse_number("2.5E2"), Some(q(250, 1)));
        assert_eq!(parse_number(".5"), Some(q(1, 2)));
        assert_eq!(parse_number("-4/6"), Some(q(-2, 3)));
        assert_eq!(parse_number("7"), Some(q(7, 1)));
        for bad in ["", "1/0", "abc", "1.2.3", "--1", "1e", "."] {
            assert_eq!(parse_number(bad), None, "{bad}");
        }
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        let t = format!("{TABLE1}tol = 3\n");
        assert!(matches!(parse(&t), Err(ConfigError::UnknownKey { line: 7, .. })));
        let t = format!("{TABLE1}n = 3\n");
        assert!(matches!(parse(&t), Err(ConfigError::DuplicateKey { .. })));
        assert!(matches!(parse("n = 3\n"), Err(ConfigError::MissingKey(_))));
        assert!(matches!(parse("n 3\n"), Err(ConfigError::Syntax { line: 1 })));
    }

    #[test]
    fn invariants_checked() {
        let t = "n = 2\na = 1/2, 1/2\nm = 1\nd = 2.5\nbeta = 0, 1\n";
        match parse(t) {
            Err(ConfigError::Invalid(InvalidParams(v))) => {
                assert!(matches!(v[0], ParamViolation::ContractionViolated { .. }))
            }
            other => panic!("{other:?}"),
        }
    }
}
