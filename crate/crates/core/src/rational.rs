//! Exact rational quantities and their canonical string form.
//!
//! Every amount in the library is a [`Rational`]: an arbitrary-precision
//! fraction kept in lowest terms with a positive denominator. On the wire an
//! amount is either an integer string (`"8"`) or a `"p/q"` string (`"2/3"`).
//! Parsing accepts any non-zero denominator and reduces; formatting always
//! emits the canonical reduced form, so `"4/6"` round-trips as `"2/3"`.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serializer};

/// Exact rational number used for every claim, capacity, and award.
pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RationalParseError {
    #[error("empty rational string")]
    Empty,
    #[error("malformed rational {0:?}: expected an integer or p/q")]
    Malformed(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
}

/// Builds `numer/denom` from machine integers. Panics on a zero denominator.
pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

fn parse_integer(s: &str, whole: &str) -> Result<BigInt, RationalParseError> {
    let digits = s.strip_prefix('-').unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(RationalParseError::Malformed(whole.to_owned()));
    }
    s.parse::<BigInt>().map_err(|_| RationalParseError::Malformed(whole.to_owned()))
}

/// Parses `"n"` or `"p/q"` (optionally negative numerator) into a reduced rational.
pub fn parse_rational(s: &str) -> Result<Rational, RationalParseError> {
    if s.is_empty() {
        return Err(RationalParseError::Empty);
    }
    match s.split_once('/') {
        None => Ok(Rational::from_integer(parse_integer(s, s)?)),
        Some((p, q)) => {
            let numer = parse_integer(p, s)?;
            if q.starts_with('-') {
                return Err(RationalParseError::Malformed(s.to_owned()));
            }
            let denom = parse_integer(q, s)?;
            if denom.is_zero() {
                return Err(RationalParseError::ZeroDenominator(s.to_owned()));
            }
            Ok(Rational::new(numer, denom))
        }
    }
}

/// Canonical string: `"n"` for integers, `"p/q"` otherwise.
pub fn format_rational(value: &Rational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Display adapter so call sites can write `{}` without allocating first.
pub struct Exact<'a>(pub &'a Rational);

impl fmt::Display for Exact<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(self.0))
    }
}

/// `serde(with = ...)` adapter storing a [`Rational`] as its canonical string.
pub mod as_string {
    use super::*;

    pub fn serialize<S: Serializer>(value: &Rational, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&format_rational(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Rational, D::Error> {
        let raw = String::deserialize(deserializer)?;
        parse_rational(&raw).map_err(serde::de::Error::custom)
    }
}

/// `serde(with = ...)` adapter for `Vec<(String, Rational)>` as an ordered
/// JSON object of exact rational strings. Duplicate keys are rejected.
pub mod ordered_map {
    use super::*;
    use serde::de::{MapAccess, Visitor};
    use serde::ser::SerializeMap;

    pub fn serialize<S: Serializer>(
        entries: &[(String, Rational)],
        serializer: S,
    ) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(entries.len()))?;
        for (k, v) in entries {
            map.serialize_entry(k, &format_rational(v))?;
        }
        map.end()
    }

    struct Entries;

    impl<'de> Visitor<'de> for Entries {
        type Value = Vec<(String, Rational)>;

        fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            f.write_str("a map from id to exact rational string")
        }

        fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
            let mut out: Vec<(String, Rational)> = Vec::new();
            while let Some((k, raw)) = map.next_entry::<String, String>()? {
                if out.iter().any(|(seen, _)| *seen == k) {
                    return Err(serde::de::Error::custom(format!("duplicate key {k:?}")));
                }
                out.push((k, parse_rational(&raw).map_err(serde::de::Error::custom)?));
            }
            Ok(out)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> Result<Vec<(String, Rational)>, D::Error> {
        deserializer.deserialize_map(Entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_integers_and_fractions() {
        assert_eq!(parse_rational("8").unwrap(), int(8));
        assert_eq!(parse_rational("-3/4").unwrap(), ratio(-3, 4));
        assert_eq!(parse_rational("4/6").unwrap(), parse_rational("2/3").unwrap());
        assert_eq!(
            parse_rational("123456789012345678901234567890/2").unwrap().numer().to_string(),
            "61728394506172839450617283945"
        );
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "1.5", "1/", "/2", "a", "1/-2", "1//2", " 1", "1e3", "--1"] {
            assert!(parse_rational(bad).is_err(), "{bad:?} should fail");
        }
        assert_eq!(parse_rational("3/0"), Err(RationalParseError::ZeroDenominator("3/0".into())));
    }

    #[test]
    fn formats_canonically() {
        assert_eq!(format_rational(&ratio(4, 6)), "2/3");
        assert_eq!(format_rational(&ratio(10, 5)), "2");
        assert_eq!(format_rational(&ratio(-1, 3)), "-1/3");
        assert_eq!(format_rational(&int(0)), "0");
    }
}
