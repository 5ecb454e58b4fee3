//! Exact rational scalars and their canonical `num/den` text form.

use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Exact rational used for every probability, payoff and gap.
pub type Q = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed rational `{0}` (expected `num/den`)")]
pub struct ParseRationalError(pub String);

pub fn q(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn qi(value: i64) -> Q {
    Q::from_integer(BigInt::from(value))
}

pub fn zero() -> Q {
    Q::zero()
}

pub fn one() -> Q {
    Q::one()
}

/// Formats as `num/den` in lowest terms; integers keep the `/1`.
pub fn format_q(value: &Q) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

/// Parses `num/den`. A bare integer is accepted as shorthand for `num/1`.
pub fn parse_q(text: &str) -> Result<Q, ParseRationalError> {
    let err = || ParseRationalError(text.to_string());
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n, d),
        None => (text, "1"),
    };
    let num = BigInt::from_str(num).map_err(|_| err())?;
    let den = BigInt::from_str(den).map_err(|_| err())?;
    if den.is_zero() {
        return Err(err());
    }
    Ok(Q::new(num, den))
}

/// Lossy conversion for human-facing summaries only.
pub fn to_f64(value: &Q) -> f64 {
    use num_traits::ToPrimitive;
    value.to_f64().unwrap_or(f64::NAN)
}

pub fn max_q<'a>(values: impl IntoIterator<Item = &'a Q>) -> Option<Q> {
    values.into_iter().max().cloned()
}

pub fn min_q<'a>(values: impl IntoIterator<Item = &'a Q>) -> Option<Q> {
    values.into_iter().min().cloned()
}

pub fn abs_q(value: &Q) -> Q {
    value.abs()
}

pub fn serde_q<S: serde::Serializer>(value: &Q, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_q(value))
}

pub fn deserialize_q<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Q, D::Error> {
    let text: String = serde::Deserialize::deserialize(d)?;
    parse_q(&text).map_err(serde::de::Error::custom)
}

/// `serde(with = "crate::rational::qser")` for fields holding a single rational.
pub mod qser {
    pub use super::deserialize_q as deserialize;
    pub use super::serde_q as serialize;
}

/// `serde(with = ...)` for `Vec<Q>`.
pub mod qvec {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(values: &[Q], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(values.iter().map(format_q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Q>, D::Error> {
        let raw: Vec<String> = Vec::deserialize(d)?;
        raw.iter()
            .map(|t| parse_q(t).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// `serde(with = ...)` for `[Q; 2]` pairs.
pub mod qpair {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(values: &[Q; 2], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(values.iter().map(format_q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[Q; 2], D::Error> {
        let raw: [String; 2] = Deserialize::deserialize(d)?;
        Ok([
            parse_q(&raw[0]).map_err(serde::de::Error::custom)?,
            parse_q(&raw[1]).map_err(serde::de::Error::custom)?,
        ])
    }
}
