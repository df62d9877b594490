//! Exact rational coefficients and their canonical text form.
//!
//! All model weights are kept as exact rationals until a solver or export
//! boundary asks for floats. The canonical text form writes a plain decimal
//! whenever the denominator is of the form 2^a·5^b ("-1", "0.5", "3.25") and
//! falls back to "p/q" otherwise ("1/3"). Parsing accepts integers, decimals,
//! and fractions, so renders round-trip.

use num_rational::Rational64;
use num_traits::{Signed, Zero};
use thiserror::Error;

/// Exact rational coefficient used throughout the model pipeline.
pub type Coeff = Rational64;

/// Shorthand for an integer-valued coefficient.
pub fn coeff(n: i64) -> Coeff {
    Coeff::from_integer(n)
}

/// Shorthand for a fraction `n/d`.
pub fn ratio(n: i64, d: i64) -> Coeff {
    Coeff::new(n, d)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CoeffParseError {
    #[error("empty coefficient string")]
    Empty,
    #[error("invalid coefficient `{0}`")]
    Invalid(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

/// Render a coefficient in canonical form.
///
/// Integers render bare, power-of-(2,5) denominators render as exact
/// decimals, everything else renders as `p/q`.
pub fn render(c: &Coeff) -> String {
    let numer = *c.numer();
    let denom = *c.denom();
    if denom == 1 {
        return numer.to_string();
    }
    if let Some(exp) = decimal_exponent(denom) {
        // n/d with d = 2^a·5^b: scale to an integer over 10^exp.
        let scale = pow10_i128(exp) / denom as i128;
        let scaled = numer as i128 * scale;
        let sign = if scaled < 0 { "-" } else { "" };
        let digits = scaled.unsigned_abs().to_string();
        let digits = if digits.len() <= exp as usize {
            format!("{}{}", "0".repeat(exp as usize + 1 - digits.len()), digits)
        } else {
            digits
        };
        let split = digits.len() - exp as usize;
        let (int_part, frac_part) = digits.split_at(split);
        let frac_part = frac_part.trim_end_matches('0');
        if frac_part.is_empty() {
            format!("{sign}{int_part}")
        } else {
            format!("{sign}{int_part}.{frac_part}")
        }
    } else {
        format!("{numer}/{denom}")
    }
}

/// Parse a coefficient from any accepted text form.
pub fn parse(text: &str) -> Result<Coeff, CoeffParseError> {
    let s = text.trim();
    if s.is_empty() {
        return Err(CoeffParseError::Empty);
    }
    if let Some((numer, denom)) = s.split_once('/') {
        let n: i64 = numer
            .trim()
            .parse()
            .map_err(|_| CoeffParseError::Invalid(text.to_string()))?;
        let d: i64 = denom
            .trim()
            .parse()
            .map_err(|_| CoeffParseError::Invalid(text.to_string()))?;
        if d == 0 {
            return Err(CoeffParseError::ZeroDenominator(text.to_string()));
        }
        return Ok(Coeff::new(n, d));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        let negative = int_part.trim_start().starts_with('-');
        let int: i64 = if int_part == "-" || int_part.is_empty() {
            0
        } else {
            int_part
                .parse()
                .map_err(|_| CoeffParseError::Invalid(text.to_string()))?
        };
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(CoeffParseError::Invalid(text.to_string()));
        }
        if frac_part.len() > 18 {
            return Err(CoeffParseError::Invalid(text.to_string()));
        }
        let frac: i64 = frac_part
            .parse()
            .map_err(|_| CoeffParseError::Invalid(text.to_string()))?;
        let denom = 10_i64.pow(frac_part.len() as u32);
        let frac = Coeff::new(frac, denom);
        let int = Coeff::from_integer(int.abs());
        let value = int + frac;
        return Ok(if negative { -value } else { value });
    }
    s.parse::<i64>()
        .map(Coeff::from_integer)
        .map_err(|_| CoeffParseError::Invalid(text.to_string()))
}

/// Convert to f64 for solver and float-export boundaries.
pub fn to_f64(c: &Coeff) -> f64 {
    *c.numer() as f64 / *c.denom() as f64
}

/// Smallest `e` with `10^e` divisible by `denom`, when one exists.
fn decimal_exponent(denom: i64) -> Option<u32> {
    let mut d = denom;
    let mut twos = 0u32;
    let mut fives = 0u32;
    while d % 2 == 0 {
        d /= 2;
        twos += 1;
    }
    while d % 5 == 0 {
        d /= 5;
        fives += 1;
    }
    (d == 1).then_some(twos.max(fives))
}

fn pow10_i128(exp: u32) -> i128 {
    10_i128.pow(exp)
}

/// Serde adapters for `Coeff` fields, writing the canonical text form.
pub mod serde_coeff {
    use super::{parse, render, Coeff};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(c: &Coeff, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&render(c))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Coeff, D::Error> {
        let text = String::deserialize(de)?;
        parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Serde adapters for `Vec<Vec<Coeff>>` fields (matrices).
pub mod serde_coeff_matrix {
    use super::{parse, render, Coeff};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &[Vec<Coeff>], ser: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<String>> = m
            .iter()
            .map(|row| row.iter().map(render).collect())
            .collect();
        serde::Serialize::serialize(&rows, ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<Vec<Coeff>>, D::Error> {
        let rows: Vec<Vec<String>> = Vec::deserialize(de)?;
        rows.into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|t| parse(&t).map_err(serde::de::Error::custom))
                    .collect()
            })
            .collect()
    }
}

/// Serde adapters for `Option<Coeff>` fields.
pub mod serde_opt_coeff {
    use super::{parse, render, Coeff};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(c: &Option<Coeff>, ser: S) -> Result<S::Ok, S::Error> {
        match c {
            Some(c) => ser.serialize_some(&render(c)),
            None => ser.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Option<Coeff>, D::Error> {
        let text: Option<String> = Option::deserialize(de)?;
        match text {
            Some(t) => parse(&t).map(Some).map_err(serde::de::Error::custom),
            None => Ok(None),
        }
    }
}

/// Parse a coefficient out of a JSON value (string, integer, or float).
///
/// Floats go through their shortest decimal text, so a value written by the
/// float exporter reads back as the decimal that was printed.
pub fn from_json(value: &serde_json::Value) -> Result<Coeff, CoeffParseError> {
    match value {
        serde_json::Value::String(s) => parse(s),
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(Coeff::from_integer(i))
            } else if let Some(f) = n.as_f64() {
                parse(&format!("{f}"))
            } else {
                Err(CoeffParseError::Invalid(n.to_string()))
            }
        }
        other => Err(CoeffParseError::Invalid(other.to_string())),
    }
}

/// True when every prime factor of the denominator divides 10.
pub fn is_decimal_exact(c: &Coeff) -> bool {
    decimal_exponent(*c.denom()).is_some()
}

pub fn is_zero(c: &Coeff) -> bool {
    c.is_zero()
}

pub fn abs(c: &Coeff) -> Coeff {
    c.abs()
}
