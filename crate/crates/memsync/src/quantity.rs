//! Numbers with optional time or frequency unit suffixes.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Physical dimension carried by a suffix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Time,
    Frequency,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dimension::Time => "time",
            Dimension::Frequency => "frequency",
        })
    }
}

/// A parsed value in SI units. `dimension` is `None` for a bare number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity {
    pub value: f64,
    pub dimension: Option<Dimension>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuantityError {
    #[error("`{0}` is not a number")]
    Number(String),
    #[error("unknown unit `{unit}` in `{text}`")]
    Unit { text: String, unit: String },
    #[error("expected a {expected} in `{text}`, found a {found}")]
    Dimension {
        text: String,
        expected: Dimension,
        found: Dimension,
    },
}

const SUFFIXES: [(&str, f64, Dimension); 9] = [
    ("ps", 1e-12, Dimension::Time),
    ("ns", 1e-9, Dimension::Time),
    ("us", 1e-6, Dimension::Time),
    ("ms", 1e-3, Dimension::Time),
    ("s", 1.0, Dimension::Time),
    ("Hz", 1.0, Dimension::Frequency),
    ("kHz", 1e3, Dimension::Frequency),
    ("MHz", 1e6, Dimension::Frequency),
    ("GHz", 1e9, Dimension::Frequency),
];

/// Parses `"1.7ns"`, `"86 ns"`, `"28.82MHz"` or a bare `"1e-3"`.
pub fn parse_quantity(text: &str) -> Result<Quantity, QuantityError> {
    let trimmed = text.trim();
    // the number ends where the first letter that cannot belong to a float starts
    let split = trimmed
        .char_indices()
        .find(|&(i, c)| c.is_ascii_alphabetic() && !is_exponent(trimmed, i))
        .map_or(trimmed.len(), |(i, _)| i);
    let (num, unit) = trimmed.split_at(split);
    let num = num.trim_end();
    let bad = if num.is_empty() { trimmed } else { num };
    let value: f64 = num.parse().map_err(|_| QuantityError::Number(bad.to_string()))?;
    if unit.is_empty() {
        return Ok(Quantity { value, dimension: None });
    }
    let (_, scale, dim) = SUFFIXES
        .iter()
        .find(|(s, _, _)| *s == unit)
        .ok_or_else(|| QuantityError::Unit {
            text: text.to_string(),
            unit: unit.to_string(),
        })?;
    Ok(Quantity {
        value: value * scale,
        dimension: Some(*dim),
    })
}

/// `e`/`E` at `i` followed by a digit or sign is part of the float.
fn is_exponent(s: &str, i: usize) -> bool {
    let b = s.as_bytes();
    matches!(b[i], b'e' | b'E')
        && i > 0
        && matches!(b.get(i + 1), Some(c) if c.is_ascii_digit() || *c == b'-' || *c == b'+')
}

/// Parses a value that must be a time (or a bare number of seconds).
pub fn parse_seconds(text: &str) -> Result<f64, QuantityError> {
    expect(text, Dimension::Time)
}

/// Parses a value that must be a frequency (or a bare number of hertz).
pub fn parse_hertz(text: &str) -> Result<f64, QuantityError> {
    expect(text, Dimension::Frequency)
}

fn expect(text: &str, expected: Dimension) -> Result<f64, QuantityError> {
    let q = parse_quantity(text)?;
    match q.dimension {
        Some(found) if found != expected => Err(QuantityError::Dimension {
            text: text.to_string(),
            expected,
            found,
        }),
        _ => Ok(q.value),
    }
}

impl FromStr for Quantity {
    type Err = QuantityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_quantity(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        ((a - b) / b).abs() < 1e-15
    }

    #[test]
    fn suffixes() {
        assert!(close(parse_seconds("1.7ns").unwrap(), 1.7e-9));
        assert!(close(parse_hertz("28.82MHz").unwrap(), 2.882e7));
        assert!(close(parse_seconds("86 ns").unwrap(), 8.6e-8));
        assert!(close(parse_seconds("20ps").unwrap(), 2e-11));
        assert!(close(parse_seconds("3us").unwrap(), 3e-6));
        assert!(close(parse_hertz("5 GHz").unwrap(), 5e9));
        assert!(close(parse_hertz("1.22e0MHz").unwrap(), 1.22e6));
        assert_eq!(parse_seconds("2s").unwrap(), 2.0);
    }

    #[test]
    fn bare_numbers_keep_exponent() {
        let q = parse_quantity("1e-3").unwrap();
        assert_eq!(
            q,
            Quantity {
                value: 1e-3,
                dimension: None
            }
        );
        assert_eq!(parse_quantity(" 2.5E+2 ").unwrap().value, 250.0);
    }

    #[test]
    fn errors_name_the_token() {
        assert_eq!(
            parse_quantity("3 fortnights"),
            Err(QuantityError::Unit {
                text: "3 fortnights".into(),
                unit: "fortnights".into()
            })
        );
        assert_eq!(parse_quantity("abc"), Err(QuantityError::Number("abc".into())));
        assert_eq!(parse_quantity("1.2.3ns"), Err(QuantityError::Number("1.2.3".into())));
        assert!(matches!(parse_seconds("3MHz"), Err(QuantityError::Dimension { .. })));
        assert!(matches!(parse_quantity("5 NS"), Err(QuantityError::Unit { .. })));
    }
}
