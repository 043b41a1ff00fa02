//! Exact rational scalars and their text form.
//!
//! Every coordinate in this crate is a `Rat`. The text form is `p/q` in
//! lowest terms (or a bare integer); decimals are deliberately rejected so
//! that files round-trip byte-exactly.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use std::str::FromStr;

use crate::error::{Error, Result};

pub type Rat = BigRational;

/// Shorthand for small literals in code and tests.
pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from(BigInt::from(n))
}

pub fn zero() -> Rat {
    Rat::zero()
}

pub fn one() -> Rat {
    Rat::one()
}

pub fn two() -> Rat {
    rat_int(2)
}

pub fn half() -> Rat {
    rat(1, 2)
}

pub fn abs(x: &Rat) -> Rat {
    x.abs()
}

pub fn min(a: Rat, b: Rat) -> Rat {
    if a <= b {
        a
    } else {
        b
    }
}

pub fn max(a: Rat, b: Rat) -> Rat {
    if a >= b {
        a
    } else {
        b
    }
}

/// Parse `p/q` or a bare integer. Whitespace is not tolerated inside the
/// token; callers split fields first.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty rational token".into()));
    }
    if s.contains('.') {
        return Err(Error::Parse(format!(
            "decimal notation not accepted: {s:?} (use p/q)"
        )));
    }
    match s.split_once('/') {
        None => {
            let n = BigInt::from_str(s)
                .map_err(|e| Error::Parse(format!("bad integer {s:?}: {e}")))?;
            Ok(Rat::from(n))
        }
        Some((ns, ds)) => {
            let n = BigInt::from_str(ns)
                .map_err(|e| Error::Parse(format!("bad numerator {ns:?}: {e}")))?;
            let d = BigInt::from_str(ds)
                .map_err(|e| Error::Parse(format!("bad denominator {ds:?}: {e}")))?;
            if d.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            Ok(Rat::new(n, d))
        }
    }
}

/// Canonical text form: lowest terms, bare integer when the denominator is 1.
/// `BigRational`'s own `Display` already does this; the wrapper exists so the
/// crate has a single named serialization point.
pub fn format_rat(x: &Rat) -> String {
    x.to_string()
}

/// Decimal rendering for plots only — never parsed back.
pub fn to_f64(x: &Rat) -> f64 {
    let n = x.numer();
    let d = x.denom();
    // Split into quotient and remainder so huge rationals keep precision.
    let q = n / d;
    let r = n - &q * d;
    let qf: f64 = q.to_string().parse().unwrap_or(f64::NAN);
    let rf: f64 = r.to_string().parse().unwrap_or(f64::NAN);
    let df: f64 = d.to_string().parse().unwrap_or(f64::NAN);
    qf + rf / df
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_reduces() {
        assert_eq!(parse_rat("2/4").unwrap(), rat(1, 2));
        assert_eq!(parse_rat("-3/6").unwrap(), rat(-1, 2));
        assert_eq!(parse_rat("3/-6").unwrap(), rat(-1, 2));
        assert_eq!(parse_rat("7").unwrap(), rat_int(7));
        assert_eq!(parse_rat(" 5/8 ").unwrap(), rat(5, 8));
    }

    #[test]
    fn rejects_bad_tokens() {
        assert!(parse_rat("0.5").is_err());
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("").is_err());
        assert!(parse_rat("a/b").is_err());
    }

    #[test]
    fn formats_lowest_terms() {
        assert_eq!(format_rat(&rat(2, 4)), "1/2");
        assert_eq!(format_rat(&rat(-2, 4)), "-1/2");
        assert_eq!(format_rat(&rat_int(3)), "3");
        assert_eq!(format_rat(&rat(0, 5)), "0");
    }

    #[test]
    fn f64_rendering_is_close() {
        assert!((to_f64(&rat(1, 3)) - 1.0 / 3.0).abs() < 1e-12);
        assert!((to_f64(&rat(-7, 2)) + 3.5).abs() < 1e-12);
    }
}
